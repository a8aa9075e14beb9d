#include "easz/mask.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include "easz/error.hpp"
#include "easz/rng.hpp"

namespace easz {

EraseMask::EraseMask(std::size_t rows, std::size_t cols, bool value)
    : rows_(rows), cols_(cols), bits_(rows * cols, value ? 1 : 0) {}

std::size_t EraseMask::kept_in_row(std::size_t r) const {
  auto first = bits_.begin() + static_cast<std::ptrdiff_t>(r * cols_);
  return static_cast<std::size_t>(std::count(first, first + static_cast<std::ptrdiff_t>(cols_), 1));
}

std::size_t EraseMask::kept_count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::vector<std::size_t> EraseMask::erased_columns(std::size_t r) const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < cols_; ++c) {
    if (!kept(r, c)) out.push_back(c);
  }
  return out;
}

std::vector<std::size_t> EraseMask::kept_positions() const {
  std::vector<std::size_t> out;
  out.reserve(bits_.size());
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> EraseMask::erased_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (!bits_[i]) out.push_back(i);
  }
  return out;
}

namespace {

using Row = std::vector<std::size_t>;  // erased columns in the order they were drawn

std::size_t dist(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

bool far_from_all(std::size_t c, const Row& others, std::size_t delta) {
  return std::all_of(others.begin(), others.end(), [&](std::size_t s) { return dist(c, s) > delta; });
}

bool candidate_ok(std::size_t c, const Row& row, const Row& prev, const SamplerParams& p) {
  if (std::find(row.begin(), row.end(), c) != row.end()) return false;
  if (p.scope == ConstraintScope::all_previous) {
    return far_from_all(c, row, p.intra_delta) && far_from_all(c, prev, p.inter_delta);
  }
  if (!row.empty() && dist(c, row.back()) <= p.intra_delta) return false;
  if (!prev.empty() && dist(c, prev.back()) <= p.inter_delta) return false;
  return true;
}

// Leftmost greedy selection of T columns compatible with `row` under the
// all-previous constraints. Greedy is optimal for maximizing the number of
// picks with a minimum spacing, so nullopt means no partner exists.
std::optional<Row> greedy_partner(const Row& row, const SamplerParams& p) {
  Row out;
  for (std::size_t c = 0; c < p.cols && out.size() < p.samples_per_row; ++c) {
    if (!far_from_all(c, row, p.inter_delta)) continue;
    if (!out.empty() && c - out.back() <= p.intra_delta) continue;
    out.push_back(c);
  }
  if (out.size() < p.samples_per_row) return std::nullopt;
  return out;
}

// Searches for two rows that are each intra-valid and mutually inter-valid.
// Scans columns left to right; each column is empty, in row A, or in row B.
// Only the distance to the latest pick of each row matters, capped at `cap`.
std::optional<Row> compatible_pair_witness(const SamplerParams& p) {
  const std::size_t T = p.samples_per_row;
  if (2 * T > p.cols) return std::nullopt;
  const std::size_t cap = std::max(p.intra_delta, p.inter_delta) + 1;

  struct State {
    std::size_t na, nb, ga, gb;
  };
  auto encode = [&](const State& s) {
    return ((static_cast<std::uint64_t>(s.na) * (T + 1) + s.nb) * (cap + 1) + s.ga) * (cap + 1) + s.gb;
  };
  struct Link {
    std::uint64_t parent;
    State state;
    std::uint8_t action;  // 0 empty, 1 row A, 2 row B
  };

  std::vector<std::unordered_map<std::uint64_t, Link>> layers(p.cols + 1);
  const State start{0, 0, cap, cap};
  layers[0].emplace(encode(start), Link{0, start, 0});

  for (std::size_t c = 0; c < p.cols; ++c) {
    auto& next = layers[c + 1];
    for (const auto& [key, link] : layers[c]) {
      const State& s = link.state;
      auto push = [&](State n, std::uint8_t action) { next.try_emplace(encode(n), Link{key, n, action}); };
      push({s.na, s.nb, std::min(s.ga + 1, cap), std::min(s.gb + 1, cap)}, 0);
      if (s.na < T && s.ga > p.intra_delta && s.gb > p.inter_delta) {
        push({s.na + 1, s.nb, 1, std::min(s.gb + 1, cap)}, 1);
      }
      if (s.nb < T && s.gb > p.intra_delta && s.ga > p.inter_delta) {
        push({s.na, s.nb + 1, std::min(s.ga + 1, cap), 1}, 2);
      }
    }
  }

  for (const auto& [key, link] : layers[p.cols]) {
    if (link.state.na != T || link.state.nb != T) continue;
    Row a;
    std::uint64_t k = key;
    for (std::size_t c = p.cols; c > 0; --c) {
      const Link& l = layers[c].at(k);
      if (l.action == 1) a.push_back(c - 1);
      k = l.parent;
    }
    std::reverse(a.begin(), a.end());
    return a;
  }
  return std::nullopt;
}

void check_basic(const SamplerParams& p) {
  if (p.rows == 0 || p.cols == 0) throw ParameterError("sampler grid must be non-empty");
  if (p.samples_per_row == 0) throw ParameterError("samples per row (T) must be at least 1");
  if (p.samples_per_row > p.cols) {
    throw ParameterError("samples per row (T=" + std::to_string(p.samples_per_row) + ") exceeds columns (" +
                         std::to_string(p.cols) + ")");
  }
  if (p.samples_per_row * (p.intra_delta + 1) > p.cols) {
    throw ParameterError("infeasible: T * (delta + 1) = " + std::to_string(p.samples_per_row * (p.intra_delta + 1)) +
                         " exceeds columns (" + std::to_string(p.cols) + ")");
  }
  if (p.inter_delta >= p.cols) throw ParameterError("inter-row Delta must be smaller than the column count");
  if (p.max_attempts == 0) throw ParameterError("max_attempts must be positive");
}

constexpr std::size_t kRowRounds = 8;

// Completes `row` by repeatedly taking the admissible column farthest from all
// samples of this row and the previous row (ties go to the smallest column).
bool farthest_point_fill(Row& row, const Row& prev, const SamplerParams& p) {
  while (row.size() < p.samples_per_row) {
    std::size_t best = p.cols;
    std::size_t best_score = 0;
    for (std::size_t c = 0; c < p.cols; ++c) {
      if (!candidate_ok(c, row, prev, p)) continue;
      std::size_t score = std::numeric_limits<std::size_t>::max();
      for (auto s : row) score = std::min(score, dist(c, s));
      for (auto s : prev) score = std::min(score, dist(c, s));
      if (best == p.cols || score > best_score) {
        best = c;
        best_score = score;
      }
    }
    if (best == p.cols) return false;
    row.push_back(best);
  }
  return true;
}

}  // namespace

bool params_feasible(const SamplerParams& p) {
  try {
    validate_params(p);
    return true;
  } catch (const ParameterError&) {
    return false;
  }
}

void validate_params(const SamplerParams& p) {
  check_basic(p);
  if (!compatible_pair_witness(p)) {
    throw ParameterError("infeasible: no two rows of " + std::to_string(p.samples_per_row) +
                         " samples satisfy delta=" + std::to_string(p.intra_delta) +
                         " and Delta=" + std::to_string(p.inter_delta) + " against each other");
  }
}

EraseMask generate_row_mask(const SamplerParams& p) {
  check_basic(p);
  const auto witness = compatible_pair_witness(p);
  if (!witness) throw ParameterError("infeasible sampler parameters");

  SplitMix64 rng(p.seed);
  EraseMask mask(p.rows, p.cols, true);
  Row prev;
  for (std::size_t i = 0; i < p.rows; ++i) {
    std::optional<Row> accepted;
    for (std::size_t round = 0; round < kRowRounds && !accepted; ++round) {
      Row row;
      bool complete = true;
      for (std::size_t t = 0; t < p.samples_per_row && complete; ++t) {
        bool placed = false;
        for (std::size_t a = 0; a < p.max_attempts; ++a) {
          const auto c = static_cast<std::size_t>(rng.below(p.cols));
          if (candidate_ok(c, row, prev, p)) {
            row.push_back(c);
            placed = true;
            break;
          }
        }
        if (!placed) complete = farthest_point_fill(row, prev, p) && row.size() == p.samples_per_row;
      }
      // A row is only kept if some row can still follow it. Compatibility is
      // symmetric, so once a row and its partner are both valid every later row
      // stays satisfiable. The second lookup matters for last_sample scope,
      // where an accepted row need not be valid under the stricter constraints.
      if (complete && row.size() == p.samples_per_row) {
        if (auto partner = greedy_partner(row, p); partner && greedy_partner(*partner, p)) accepted = row;
      }
    }
    if (!accepted) accepted = i == 0 ? *witness : *greedy_partner(prev, p);
    for (auto c : *accepted) mask.set(i, c, false);
    prev = *accepted;
  }
  mask.set_params(p);
  return mask;
}

EraseMask generate_random_mask(std::size_t rows, std::size_t cols, std::size_t erased, std::uint64_t seed) {
  const std::size_t cells = rows * cols;
  if (erased > cells) {
    throw ParameterError("cannot erase " + std::to_string(erased) + " of " + std::to_string(cells) + " cells");
  }
  std::vector<std::size_t> order(cells);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < erased; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(cells - i));
    std::swap(order[i], order[j]);
  }
  EraseMask mask(rows, cols, true);
  for (std::size_t i = 0; i < erased; ++i) mask.set(order[i] / cols, order[i] % cols, false);
  return mask;
}

std::vector<std::uint8_t> pack_mask(const EraseMask& m) {
  std::vector<std::uint8_t> out(packed_mask_bytes(m.rows(), m.cols()), 0);
  for (std::size_t i = 0; i < m.cells(); ++i) {
    if (m.kept(i)) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  }
  return out;
}

EraseMask unpack_mask(std::span<const std::uint8_t> bytes, std::size_t rows, std::size_t cols) {
  const std::size_t cells = rows * cols;
  if (bytes.size() != packed_mask_bytes(rows, cols)) {
    throw FormatError("packed mask has " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(packed_mask_bytes(rows, cols)));
  }
  EraseMask m(rows, cols, false);
  for (std::size_t i = 0; i < cells; ++i) {
    if (bytes[i / 8] & (0x80u >> (i % 8))) m.set(i / cols, i % cols, true);
  }
  for (std::size_t i = cells; i < bytes.size() * 8; ++i) {
    if (bytes[i / 8] & (0x80u >> (i % 8))) throw FormatError("packed mask has non-zero padding bits");
  }
  return m;
}

bool satisfies_constraints(const EraseMask& m, const SamplerParams& p) {
  if (m.rows() != p.rows || m.cols() != p.cols) return false;
  std::vector<std::size_t> prev;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.erased_columns(r);
    if (row.size() != p.samples_per_row) return false;
    for (std::size_t a = 0; a < row.size(); ++a) {
      for (std::size_t b = a + 1; b < row.size(); ++b) {
        if (dist(row[a], row[b]) <= p.intra_delta) return false;
      }
      for (auto q : prev) {
        if (dist(row[a], q) <= p.inter_delta) return false;
      }
    }
    prev = std::move(row);
  }
  return true;
}

}  // namespace easz

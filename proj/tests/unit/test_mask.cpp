#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <set>

#include "easz/error.hpp"
#include "easz/mask.hpp"
#include "easz/rng.hpp"

using namespace easz;

namespace {

// Independent check: scan every pair of erased cells in each row and against
// the previous row.
::testing::AssertionResult honours(const EraseMask& m, const SamplerParams& p) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::vector<long> cols;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (!m.kept(r, c)) cols.push_back(static_cast<long>(c));
    }
    if (cols.size() != p.samples_per_row) {
      return ::testing::AssertionFailure() << "row " << r << " erases " << cols.size();
    }
    for (std::size_t i = 0; i < cols.size(); ++i) {
      for (std::size_t j = i + 1; j < cols.size(); ++j) {
        if (std::labs(cols[i] - cols[j]) <= static_cast<long>(p.intra_delta)) {
          return ::testing::AssertionFailure() << "row " << r << " intra " << cols[i] << "," << cols[j];
        }
      }
    }
    if (r == 0) continue;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (m.kept(r - 1, c)) continue;
      for (long x : cols) {
        if (std::labs(x - static_cast<long>(c)) <= static_cast<long>(p.inter_delta)) {
          return ::testing::AssertionFailure() << "rows " << r - 1 << "/" << r << " inter " << c << "," << x;
        }
      }
    }
  }
  return ::testing::AssertionSuccess();
}

}  // namespace

TEST(SplitMix, KnownSequence) {
  // Reference values of SplitMix64 seeded with 0.
  SplitMix64 g(0);
  EXPECT_EQ(g.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(g.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(g.next(), 0x06C45D188009454FULL);
}

TEST(SplitMix, BelowStaysInRange) {
  SplitMix64 g(5);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 7000; ++i) ++hist[g.below(7)];
  for (int h : hist) EXPECT_GT(h, 800);
}

TEST(SamplerParams, Validation) {
  EXPECT_NO_THROW(validate_params({8, 8, 2, 1, 1, 0}));
  EXPECT_THROW(validate_params({8, 8, 4, 2, 1, 0}), ParameterError);
  EXPECT_THROW(validate_params({8, 8, 0, 1, 1, 0}), ParameterError);
  EXPECT_THROW(validate_params({8, 8, 9, 0, 0, 0}), ParameterError);
  EXPECT_THROW(validate_params({8, 8, 1, 1, 8, 0}), ParameterError);
  EXPECT_FALSE(params_feasible({8, 8, 4, 2, 1, 0}));
}

TEST(RowSampler, ExampleMaskHonoursConstraints) {
  const SamplerParams p{8, 8, 2, 1, 1, 42};
  const auto m = generate_row_mask(p);
  EXPECT_EQ(m.erased_count(), 16u);
  EXPECT_TRUE(honours(m, p));
  EXPECT_TRUE(satisfies_constraints(m, p));
  EXPECT_EQ(m.params(), p);
}

TEST(RowSampler, DiagonalLimit) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SamplerParams p{8, 8, 1, 7, 1, seed};
    const auto m = generate_row_mask(p);
    for (std::size_t r = 0; r < 8; ++r) ASSERT_EQ(m.kept_in_row(r), 7u);
    ASSERT_TRUE(honours(m, p));
  }
}

TEST(RowSampler, DeterministicPerSeed) {
  const SamplerParams p{32, 32, 8, 2, 1, 99};
  EXPECT_EQ(generate_row_mask(p), generate_row_mask(p));
  auto q = p;
  q.seed = 100;
  EXPECT_NE(generate_row_mask(p), generate_row_mask(q));
}

TEST(RowSampler, RandomFeasibleParamsProperty) {
  std::mt19937_64 rng(2024);
  int checked = 0;
  while (checked < 300) {
    SamplerParams p;
    p.rows = 1 + rng() % 24;
    p.cols = 2 + rng() % 31;
    p.samples_per_row = 1 + rng() % p.cols;
    p.intra_delta = rng() % 4;
    p.inter_delta = rng() % 4;
    p.seed = rng();
    if (!params_feasible(p)) continue;
    const auto m = generate_row_mask(p);
    ASSERT_TRUE(honours(m, p)) << p.rows << "x" << p.cols << " T=" << p.samples_per_row << " d=" << p.intra_delta
                               << " D=" << p.inter_delta;
    ASSERT_EQ(m.erased_count(), p.rows * p.samples_per_row);
    ++checked;
  }
}

TEST(RowSampler, TightParamsStillTerminate) {
  // Barely feasible: T * (delta + 1) == cols.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SamplerParams p{16, 12, 4, 2, 0, seed};
    ASSERT_TRUE(params_feasible(p));
    ASSERT_TRUE(honours(generate_row_mask(p), p));
  }
}

TEST(RowSampler, LastSampleScope) {
  SamplerParams p{16, 16, 3, 2, 2, 5};
  p.scope = ConstraintScope::last_sample;
  const auto m = generate_row_mask(p);
  for (std::size_t r = 0; r < 16; ++r) EXPECT_EQ(m.kept_in_row(r), 13u);
}

TEST(RandomMask, ExactCounts) {
  EXPECT_EQ(generate_random_mask(4, 4, 4, 7).erased_count(), 4u);
  EXPECT_EQ(generate_random_mask(4, 4, 0, 7), EraseMask(4, 4, true));
  EXPECT_EQ(generate_random_mask(4, 4, 16, 7), EraseMask(4, 4, false));
  EXPECT_THROW(generate_random_mask(4, 4, 17, 7), ParameterError);
  EXPECT_EQ(generate_random_mask(9, 9, 20, 3), generate_random_mask(9, 9, 20, 3));
}

TEST(RandomMask, RoughlyUniform) {
  std::vector<int> hits(16, 0);
  for (std::uint64_t s = 0; s < 4000; ++s) {
    for (auto pos : generate_random_mask(4, 4, 4, s).erased_positions()) ++hits[pos];
  }
  for (int h : hits) EXPECT_NEAR(h, 1000, 150);
}

TEST(PackMask, Sizes) {
  EXPECT_EQ(pack_mask(EraseMask(32, 32)).size(), 128u);
  EXPECT_EQ(pack_mask(EraseMask(64, 64)).size(), 512u);
  EXPECT_EQ(pack_mask(EraseMask(3, 3)).size(), 2u);
}

TEST(PackMask, MostSignificantBitFirst) {
  EraseMask m(3, 3, false);
  m.set(0, 0, true);
  m.set(2, 2, true);
  const auto bytes = pack_mask(m);
  EXPECT_EQ(bytes[0], 0x80);
  EXPECT_EQ(bytes[1], 0x80);
}

TEST(PackMask, RoundTripAndRejects) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto m = generate_random_mask(7, 9, s % 63, s);
    ASSERT_EQ(unpack_mask(pack_mask(m), 7, 9), m);
  }
  auto bytes = pack_mask(EraseMask(3, 3));
  EXPECT_THROW(unpack_mask(bytes, 5, 5), FormatError);
  bytes[1] |= 0x01;  // padding bit
  EXPECT_THROW(unpack_mask(bytes, 3, 3), FormatError);
}

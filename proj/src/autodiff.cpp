#include "easz/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "easz/error.hpp"

namespace easz::ad {

Tensor::Tensor(Shape s, std::vector<double> v, bool needs_grad)
    : shape(s), values(std::move(v)), requires_grad(needs_grad) {
  if (values.size() != shape.size()) {
    throw DimensionError("tensor " + shape.str() + " given " + std::to_string(values.size()) + " values");
  }
  if (requires_grad) grad.assign(values.size(), 0.0);
}

const Shape& Var::shape() const { return graph_->node(id_).shape; }
std::span<const double> Var::value() const { return graph_->node(id_).values; }
std::span<const double> Var::grad() const { return graph_->node(id_).grad; }
double Var::scalar() const {
  if (shape().size() != 1) throw DimensionError("scalar() on " + shape().str());
  return value()[0];
}

Var Graph::constant(Shape s, std::vector<double> values) {
  nodes_.push_back({Tensor(s, std::move(values), false), nullptr});
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::parameter(Shape s, std::vector<double> values) {
  nodes_.push_back({Tensor(s, std::move(values), true), nullptr});
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::emit(Shape s, std::vector<double> values, std::initializer_list<Var> inputs, BackwardFn fn) {
  return emit(s, std::move(values), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Graph::emit(Shape s, std::vector<double> values, std::span<const Var> inputs, BackwardFn fn) {
  const bool needs = std::any_of(inputs.begin(), inputs.end(), [this](Var v) { return node(v.id()).requires_grad; });
  nodes_.push_back({Tensor(s, std::move(values), needs), needs ? std::move(fn) : nullptr});
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Graph::backward(Var root) {
  if (&root.graph() != this) throw DimensionError("backward root belongs to another graph");
  auto& r = node(root.id());
  if (r.shape.size() != 1) throw DimensionError("backward root must be 1x1, got " + r.shape.str());
  if (!r.requires_grad) return;
  r.grad[0] += 1.0;
  for (std::int64_t id = root.id(); id >= 0; --id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.backward) n.backward(*this, static_cast<std::uint32_t>(id));
  }
}

namespace {

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + a.str() + " and " + b.str());
}

void same_graph(Var a, Var b) {
  if (&a.graph() != &b.graph()) throw DimensionError("operands belong to different graphs");
}

// acc[m x n] += a[m x k] * b[k x n]
void gemm_nn(const double* a, const double* b, double* acc, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = acc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
}

// acc[m x k] += g[m x n] * b[k x n]^T
void gemm_nt(const double* g, const double* b, double* acc, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
      acc[i * k + p] += s;
    }
  }
}

// acc[k x n] += a[m x k]^T * g[m x n]
void gemm_tn(const double* a, const double* g, double* acc, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      double* arow = acc + p * n;
      for (std::size_t j = 0; j < n; ++j) arow[j] += av * grow[j];
    }
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  same_graph(a, b);
  const Shape sa = a.shape(), sb = b.shape();
  if (sa.cols != sb.rows) mismatch("matmul", sa, sb);
  std::vector<double> out(sa.rows * sb.cols, 0.0);
  gemm_nn(a.value().data(), b.value().data(), out.data(), sa.rows, sa.cols, sb.cols);
  const auto ia = a.id(), ib = b.id();
  return a.graph().emit({sa.rows, sb.cols}, std::move(out), {a, b}, [ia, ib, sa, sb](Graph& g, std::uint32_t self) {
    const auto& dy = g.node(self).grad;
    auto& na = g.node(ia);
    auto& nb = g.node(ib);
    if (na.requires_grad) gemm_nt(dy.data(), nb.values.data(), na.grad.data(), sa.rows, sa.cols, sb.cols);
    if (nb.requires_grad) gemm_tn(na.values.data(), dy.data(), nb.grad.data(), sa.rows, sa.cols, sb.cols);
  });
}

Var transpose(Var a) {
  const Shape s = a.shape();
  std::vector<double> out(s.size());
  auto v = a.value();
  for (std::size_t i = 0; i < s.rows; ++i) {
    for (std::size_t j = 0; j < s.cols; ++j) out[j * s.rows + i] = v[i * s.cols + j];
  }
  const auto ia = a.id();
  return a.graph().emit({s.cols, s.rows}, std::move(out), {a}, [ia, s](Graph& g, std::uint32_t self) {
    const auto& dy = g.node(self).grad;
    auto& da = g.node(ia).grad;
    for (std::size_t i = 0; i < s.rows; ++i) {
      for (std::size_t j = 0; j < s.cols; ++j) da[i * s.cols + j] += dy[j * s.rows + i];
    }
  });
}

Var add(Var a, Var b) {
  same_graph(a, b);
  if (a.shape() != b.shape()) mismatch("add", a.shape(), b.shape());
  auto va = a.value(), vb = b.value();
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  const auto ia = a.id(), ib = b.id();
  return a.graph().emit(a.shape(), std::move(out), {a, b}, [ia, ib](Graph& g, std::uint32_t self) {
    const auto& dy = g.node(self).grad;
    for (auto id : {ia, ib}) {
      auto& n = g.node(id);
      if (!n.requires_grad) continue;
      for (std::size_t i = 0; i < dy.size(); ++i) n.grad[i] += dy[i];
    }
  });
}

Var scale(Var a, double s) {
  auto va = a.value();
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * s;
  const auto ia = a.id();
  return a.graph().emit(a.shape(), std::move(out), {a}, [ia, s](Graph& g, std::uint32_t self) {
    const auto& dy = g.node(self).grad;
    auto& da = g.node(ia).grad;
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * s;
  });
}

Var mul(Var a, Var b) {
  same_graph(a, b);
  if (a.shape() != b.shape()) mismatch("mul", a.shape(), b.shape());
  auto va = a.value(), vb = b.value();
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  const auto ia = a.id(), ib = b.id();
  return a.graph().emit(a.shape(), std::move(out), {a, b}, [ia, ib](Graph& g, std::uint32_t self) {
    const auto& dy = g.node(self).grad;
    auto& na = g.node(ia);
    auto& nb = g.node(ib);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      if (na.requires_grad) na.grad[i] += dy[i] * nb.values[i];
      if (nb.requires_grad) nb.grad[i] += dy[i] * na.values[i];
    }
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value()) s += v;
  const auto ia = a.id();
  return a.graph().emit({1, 1}, {s}, {a}, [ia](Graph& g, std::uint32_t self) {
    const double dy = g.node(self).grad[0];
    for (auto& d : g.node(ia).grad) d += dy;
  });
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  if (axis != 0 && axis != 1) throw DimensionError("concat axis must be 0 or 1");
  Graph& graph = parts.front().graph();
  const Shape first = parts.front().shape();
  Shape out_shape = first;
  if (axis == 0) out_shape.rows = 0; else out_shape.cols = 0;
  for (const auto& p : parts) {
    same_graph(parts.front(), p);
    const Shape s = p.shape();
    if (axis == 0 && s.cols != first.cols) mismatch("concat rows", first, s);
    if (axis == 1 && s.rows != first.rows) mismatch("concat cols", first, s);
    (axis == 0 ? out_shape.rows : out_shape.cols) += axis == 0 ? s.rows : s.cols;
  }
  std::vector<double> out(out_shape.size());
  std::vector<std::uint32_t> ids;
  std::vector<Shape> shapes;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const Shape s = p.shape();
    auto v = p.value();
    for (std::size_t i = 0; i < s.rows; ++i) {
      for (std::size_t j = 0; j < s.cols; ++j) {
        const std::size_t dst = axis == 0 ? (offset + i) * out_shape.cols + j : i * out_shape.cols + offset + j;
        out[dst] = v[i * s.cols + j];
      }
    }
    offset += axis == 0 ? s.rows : s.cols;
    ids.push_back(p.id());
    shapes.push_back(s);
  }
  return graph.emit(out_shape, std::move(out), parts,
                    [ids, shapes, axis, out_shape](Graph& g, std::uint32_t self) {
                      const auto& dy = g.node(self).grad;
                      std::size_t off = 0;
                      for (std::size_t k = 0; k < ids.size(); ++k) {
                        auto& n = g.node(ids[k]);
                        const Shape s = shapes[k];
                        if (n.requires_grad) {
                          for (std::size_t i = 0; i < s.rows; ++i) {
                            for (std::size_t j = 0; j < s.cols; ++j) {
                              const std::size_t src =
                                  axis == 0 ? (off + i) * out_shape.cols + j : i * out_shape.cols + off + j;
                              n.grad[i * s.cols + j] += dy[src];
                            }
                          }
                        }
                        off += axis == 0 ? s.rows : s.cols;
                      }
                    });
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  const Shape s = a.shape();
  if (start + count > s.cols) {
    throw DimensionError("slice_cols [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") out of range for " + s.str());
  }
  auto v = a.value();
  std::vector<double> out(s.rows * count);
  for (std::size_t i = 0; i < s.rows; ++i) {
    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(i * s.cols + start), count,
                out.begin() + static_cast<std::ptrdiff_t>(i * count));
  }
  const auto ia = a.id();
  return a.graph().emit({s.rows, count}, std::move(out), {a}, [ia, s, start, count](Graph& g, std::uint32_t self) {
    const auto& dy = g.node(self).grad;
    auto& da = g.node(ia).grad;
    for (std::size_t i = 0; i < s.rows; ++i) {
      for (std::size_t j = 0; j < count; ++j) da[i * s.cols + start + j] += dy[i * count + j];
    }
  });
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
  const Shape s = a.shape();
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  for (auto r : idx) {
    if (r >= s.rows) throw DimensionError("gather_rows index " + std::to_string(r) + " out of range for " + s.str());
  }
  auto v = a.value();
  std::vector<double> out(idx.size() * s.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(idx[i] * s.cols), s.cols,
                out.begin() + static_cast<std::ptrdiff_t>(i * s.cols));
  }
  const auto ia = a.id();
  const Shape out_shape{idx.size(), s.cols};
  return a.graph().emit(out_shape, std::move(out), {a},
                        [ia, s, idx = std::move(idx)](Graph& g, std::uint32_t self) {
                          const auto& dy = g.node(self).grad;
                          auto& da = g.node(ia).grad;
                          for (std::size_t i = 0; i < idx.size(); ++i) {
                            for (std::size_t j = 0; j < s.cols; ++j) da[idx[i] * s.cols + j] += dy[i * s.cols + j];
                          }
                        });
}

Var scatter_rows(Var a, std::span<const std::size_t> rows, std::size_t total_rows) {
  const Shape s = a.shape();
  if (rows.size() != s.rows) {
    throw DimensionError("scatter_rows given " + std::to_string(rows.size()) + " indices for " + s.str());
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  for (auto r : idx) {
    if (r >= total_rows) {
      throw DimensionError("scatter_rows index " + std::to_string(r) + " out of range for " +
                           std::to_string(total_rows) + " rows");
    }
  }
  auto v = a.value();
  std::vector<double> out(total_rows * s.cols, 0.0);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = 0; j < s.cols; ++j) out[idx[i] * s.cols + j] += v[i * s.cols + j];
  }
  const auto ia = a.id();
  return a.graph().emit({total_rows, s.cols}, std::move(out), {a},
                        [ia, s, idx = std::move(idx)](Graph& g, std::uint32_t self) {
                          const auto& dy = g.node(self).grad;
                          auto& da = g.node(ia).grad;
                          for (std::size_t i = 0; i < idx.size(); ++i) {
                            for (std::size_t j = 0; j < s.cols; ++j) da[i * s.cols + j] += dy[idx[i] * s.cols + j];
                          }
                        });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  same_graph(x, gamma);
  same_graph(x, beta);
  const Shape s = x.shape();
  const Shape affine{1, s.cols};
  if (gamma.shape() != affine) mismatch("layer_norm gamma", s, gamma.shape());
  if (beta.shape() != affine) mismatch("layer_norm beta", s, beta.shape());

  auto xv = x.value(), gv = gamma.value(), bv = beta.value();
  auto xhat = std::make_shared<std::vector<double>>(s.size());
  auto inv_std = std::make_shared<std::vector<double>>(s.rows);
  std::vector<double> out(s.size());
  const double n = static_cast<double>(s.cols);
  for (std::size_t i = 0; i < s.rows; ++i) {
    const double* row = xv.data() + i * s.cols;
    double mean = 0.0;
    for (std::size_t j = 0; j < s.cols; ++j) mean += row[j];
    mean /= n;
    double var = 0.0;
    for (std::size_t j = 0; j < s.cols; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = inv;
    for (std::size_t j = 0; j < s.cols; ++j) {
      const double h = (row[j] - mean) * inv;
      (*xhat)[i * s.cols + j] = h;
      out[i * s.cols + j] = h * gv[j] + bv[j];
    }
  }
  const auto ix = x.id(), ig = gamma.id(), ib = beta.id();
  return x.graph().emit(s, std::move(out), {x, gamma, beta},
                        [ix, ig, ib, s, xhat, inv_std](Graph& g, std::uint32_t self) {
                          const auto& dy = g.node(self).grad;
                          auto& nx = g.node(ix);
                          auto& ng = g.node(ig);
                          auto& nb = g.node(ib);
                          const double n = static_cast<double>(s.cols);
                          std::vector<double> dh(s.cols);
                          for (std::size_t i = 0; i < s.rows; ++i) {
                            const double* h = xhat->data() + i * s.cols;
                            const double* d = dy.data() + i * s.cols;
                            if (ng.requires_grad) for (std::size_t j = 0; j < s.cols; ++j) ng.grad[j] += d[j] * h[j];
                            if (nb.requires_grad) for (std::size_t j = 0; j < s.cols; ++j) nb.grad[j] += d[j];
                            if (!nx.requires_grad) continue;
                            double sum_dh = 0.0, sum_dh_h = 0.0;
                            for (std::size_t j = 0; j < s.cols; ++j) {
                              dh[j] = d[j] * ng.values[j];
                              sum_dh += dh[j];
                              sum_dh_h += dh[j] * h[j];
                            }
                            const double inv = (*inv_std)[i];
                            for (std::size_t j = 0; j < s.cols; ++j) {
                              nx.grad[i * s.cols + j] += inv / n * (n * dh[j] - sum_dh - h[j] * sum_dh_h);
                            }
                          }
                        });
}

Var softmax_lastdim(Var a) {
  const Shape s = a.shape();
  auto v = a.value();
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.rows; ++i) {
    const double* row = v.data() + i * s.cols;
    double* o = out.data() + i * s.cols;
    const double mx = *std::max_element(row, row + s.cols);
    double z = 0.0;
    for (std::size_t j = 0; j < s.cols; ++j) {
      o[j] = std::exp(row[j] - mx);
      z += o[j];
    }
    for (std::size_t j = 0; j < s.cols; ++j) o[j] /= z;
  }
  const auto ia = a.id();
  return a.graph().emit(s, std::move(out), {a}, [ia, s](Graph& g, std::uint32_t self) {
    const auto& y = g.node(self).values;
    const auto& dy = g.node(self).grad;
    auto& da = g.node(ia).grad;
    for (std::size_t i = 0; i < s.rows; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < s.cols; ++j) dot += dy[i * s.cols + j] * y[i * s.cols + j];
      for (std::size_t j = 0; j < s.cols; ++j) {
        da[i * s.cols + j] += y[i * s.cols + j] * (dy[i * s.cols + j] - dot);
      }
    }
  });
}

Var gelu(Var a) {
  auto v = a.value();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = 0.5 * v[i] * (1.0 + std::erf(v[i] / std::numbers::sqrt2));
  const auto ia = a.id();
  return a.graph().emit(a.shape(), std::move(out), {a}, [ia](Graph& g, std::uint32_t self) {
    const auto& dy = g.node(self).grad;
    auto& n = g.node(ia);
    const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    for (std::size_t i = 0; i < dy.size(); ++i) {
      const double x = n.values[i];
      const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
      n.grad[i] += dy[i] * (cdf + x * pdf);
    }
  });
}

Var linear(Var x, Var w, Var bias) {
  same_graph(x, w);
  same_graph(x, bias);
  const Shape sx = x.shape(), sw = w.shape();
  if (sx.cols != sw.rows) mismatch("linear", sx, sw);
  if (bias.shape() != Shape{1, sw.cols}) mismatch("linear bias", sw, bias.shape());
  std::vector<double> out(sx.rows * sw.cols);
  auto bv = bias.value();
  for (std::size_t i = 0; i < sx.rows; ++i) std::copy(bv.begin(), bv.end(), out.begin() + static_cast<std::ptrdiff_t>(i * sw.cols));
  gemm_nn(x.value().data(), w.value().data(), out.data(), sx.rows, sx.cols, sw.cols);
  const auto ix = x.id(), iw = w.id(), ib = bias.id();
  return x.graph().emit({sx.rows, sw.cols}, std::move(out), {x, w, bias},
                        [ix, iw, ib, sx, sw](Graph& g, std::uint32_t self) {
                          const auto& dy = g.node(self).grad;
                          auto& nx = g.node(ix);
                          auto& nw = g.node(iw);
                          auto& nb = g.node(ib);
                          if (nx.requires_grad) gemm_nt(dy.data(), nw.values.data(), nx.grad.data(), sx.rows, sx.cols, sw.cols);
                          if (nw.requires_grad) gemm_tn(nx.values.data(), dy.data(), nw.grad.data(), sx.rows, sx.cols, sw.cols);
                          if (nb.requires_grad) {
                            for (std::size_t i = 0; i < sx.rows; ++i) {
                              for (std::size_t j = 0; j < sw.cols; ++j) nb.grad[j] += dy[i * sw.cols + j];
                            }
                          }
                        });
}

Var mean_abs_error(Var a, Var b) {
  same_graph(a, b);
  if (a.shape() != b.shape()) mismatch("mean_abs_error", a.shape(), b.shape());
  auto va = a.value(), vb = b.value();
  if (va.empty()) throw DimensionError("mean_abs_error of empty tensors");
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += std::abs(va[i] - vb[i]);
  const double n = static_cast<double>(va.size());
  const auto ia = a.id(), ib = b.id();
  return a.graph().emit({1, 1}, {s / n}, {a, b}, [ia, ib, n](Graph& g, std::uint32_t self) {
    const double dy = g.node(self).grad[0] / n;
    auto& na = g.node(ia);
    auto& nb = g.node(ib);
    for (std::size_t i = 0; i < na.values.size(); ++i) {
      const double diff = na.values[i] - nb.values[i];
      const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      if (na.requires_grad) na.grad[i] += dy * sign;
      if (nb.requires_grad) nb.grad[i] -= dy * sign;
    }
  });
}

namespace {

double evaluate(const MultiFn& f, const std::vector<Tensor>& inputs) {
  Graph g;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.push_back(g.constant(t));
  const double v = f(g, vars).scalar();
  if (!std::isfinite(v)) throw NumericError("grad_check: function value is not finite");
  return v;
}

}  // namespace

double grad_check(const MultiFn& f, const std::vector<Tensor>& inputs, double eps, double floor) {
  Graph g;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(g.parameter(t.shape, t.values));
  Var y = f(g, vars);
  if (!std::isfinite(y.scalar())) throw NumericError("grad_check: function value is not finite");
  g.backward(y);

  double worst = 0.0;
  std::vector<Tensor> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto analytic = vars[k].grad();
    for (std::size_t i = 0; i < inputs[k].values.size(); ++i) {
      const double orig = inputs[k].values[i];
      probe[k].values[i] = orig + eps;
      const double up = evaluate(f, probe);
      probe[k].values[i] = orig - eps;
      const double down = evaluate(f, probe);
      probe[k].values[i] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[i];
      if (!std::isfinite(a)) throw NumericError("grad_check: analytic gradient is not finite");
      const double rel = std::abs(a - numeric) / std::max(floor, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

double grad_check(const ScalarFn& f, const Tensor& x, double eps, double floor) {
  return grad_check([&](Graph& g, std::span<const Var> v) { return f(g, v[0]); }, std::vector<Tensor>{x}, eps, floor);
}

void optimizer_step(std::span<std::vector<double>> params, std::span<const std::vector<double>> grads,
                    OptimizerState& state) {
  if (params.size() != grads.size()) throw TrainingError("optimizer: parameter and gradient counts differ");
  for (std::size_t k = 0; k < grads.size(); ++k) {
    if (grads[k].size() != params[k].size()) throw TrainingError("optimizer: gradient shape mismatch");
    for (double v : grads[k]) {
      if (!std::isfinite(v)) throw TrainingError("optimizer: non-finite gradient in tensor " + std::to_string(k));
    }
  }
  if (state.first_moment.size() != params.size()) {
    state.first_moment.clear();
    state.second_moment.clear();
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double lr = state.learning_rate;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (m.size() != p.size()) throw TrainingError("optimizer: moment shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = grads[k][i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] = p[i] - lr * state.weight_decay * p[i] - lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

}  // namespace easz::ad

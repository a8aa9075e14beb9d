#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

// Minimal reverse-mode differentiation over dense row-major matrices. Only the
// operations the reconstruction transformer needs are provided; there is no
// broadcasting beyond the row-vector bias of `linear` and the affine terms of
// `layer_norm`.
namespace easz::ad {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  std::string str() const { return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]"; }
  bool operator==(const Shape&) const = default;
};

struct Tensor {
  Shape shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<double> grad;  // same size as values when requires_grad

  Tensor() = default;
  Tensor(Shape s, std::vector<double> v, bool needs_grad = false);
  static Tensor zeros(Shape s, bool needs_grad = false) { return Tensor(s, std::vector<double>(s.size(), 0.0), needs_grad); }
};

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* g, std::uint32_t id) : graph_(g), id_(id) {}

  Graph& graph() const { return *graph_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Shape& shape() const;
  std::span<const double> value() const;
  std::span<const double> grad() const;
  double scalar() const;

 private:
  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Shape s, std::vector<double> values);
  Var constant(const Tensor& t) { return constant(t.shape, t.values); }
  Var parameter(Shape s, std::vector<double> values);
  Var parameter(const Tensor& t) { return parameter(t.shape, t.values); }
  Var input(const Tensor& t) { return t.requires_grad ? parameter(t) : constant(t); }

  // Seeds d(root)/d(root) = 1 and accumulates gradients into every node that
  // requires them. `root` must be 1x1.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

  // Internal node construction used by the operations.
  using BackwardFn = std::function<void(Graph&, std::uint32_t self)>;
  Var emit(Shape s, std::vector<double> values, std::initializer_list<Var> inputs, BackwardFn fn);
  Var emit(Shape s, std::vector<double> values, std::span<const Var> inputs, BackwardFn fn);
  Tensor& node(std::uint32_t id) { return nodes_[id].tensor; }
  const Tensor& node(std::uint32_t id) const { return nodes_[id].tensor; }

 private:
  struct Node {
    Tensor tensor;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// C = A * B.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var scale(Var a, double s);
// Elementwise product of equally shaped tensors.
Var mul(Var a, Var b);
// Sum of every element, 1x1.
Var sum(Var a);
// axis 0 stacks rows, axis 1 stacks columns.
Var concat(std::span<const Var> parts, int axis);
Var slice_cols(Var a, std::size_t start, std::size_t count);
Var gather_rows(Var a, std::span<const std::size_t> rows);
// Output has `total_rows` rows; row rows[i] receives input row i, others are 0.
Var scatter_rows(Var a, std::span<const std::size_t> rows, std::size_t total_rows);
// Row-wise normalization over the last dimension with affine gamma/beta (1 x cols).
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var softmax_lastdim(Var a);
// Exact GELU, x * Phi(x).
Var gelu(Var a);
// x * W + bias, bias broadcast over rows.
Var linear(Var x, Var w, Var bias);
// mean |a - b|, 1x1. The subgradient at a == b is 0.
Var mean_abs_error(Var a, Var b);

// Central-difference comparison of analytic and numeric gradients over every
// coordinate of every input. Returns the largest
//   |analytic - numeric| / max(floor, |analytic| + |numeric|).
// Coordinates whose true gradient is zero only pass when `floor` sits above
// the finite-difference noise. Throws NumericError on non-finite values.
using MultiFn = std::function<Var(Graph&, std::span<const Var>)>;
using ScalarFn = std::function<Var(Graph&, Var)>;
double grad_check(const MultiFn& f, const std::vector<Tensor>& inputs, double eps = 1e-6, double floor = 1e-8);
double grad_check(const ScalarFn& f, const Tensor& x, double eps = 1e-6, double floor = 1e-8);

// Decoupled weight decay adaptive-moment optimizer state.
struct OptimizerState {
  double learning_rate = 2.8e-4;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// p <- p - lr*wd*p - lr * mhat / (sqrt(vhat) + eps), with bias-corrected moments.
// Moments are allocated on first use. Throws TrainingError on non-finite grads.
void optimizer_step(std::span<std::vector<double>> params, std::span<const std::vector<double>> grads,
                    OptimizerState& state);

}  // namespace easz::ad

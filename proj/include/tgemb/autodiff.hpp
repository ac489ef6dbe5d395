#pragma once

#include <Eigen/Dense>
#include <functional>
#include <initializer_list>
#include <memory>
#include <unordered_map>
#include <span>
#include <string>
#include <vector>

#include "tgemb/errors.hpp"
#include "tgemb/rng.hpp"

// Reverse-mode differentiation over dense rank-<=2 double arrays. Values are
// Eigen matrices; row vectors are 1xN. A Tape records operations whose inputs
// are tracked; untracked tensors behave as constants and record nothing, so
// the same model code runs in both training and no-grad modes.

namespace tgemb::ad {

using Matrix = Eigen::MatrixXd;

// A named trainable array. Gradients accumulate across backward passes until
// zero_grad().
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

// Non-owning, ordered collection of parameters; the unit the optimizer and
// checkpoint code iterate over.
class ParameterSet {
 public:
  void add(Parameter& p) { items_.push_back(&p); }
  void add(const ParameterSet& other) {
    items_.insert(items_.end(), other.items_.begin(), other.items_.end());
  }

  std::size_t size() const { return items_.size(); }
  Parameter& operator[](std::size_t i) { return *items_[i]; }
  const Parameter& operator[](std::size_t i) const { return *items_[i]; }

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  void zero_grad() {
    for (auto* p : items_) p->zero_grad();
  }

  Parameter* find(const std::string& name) {
    for (auto* p : items_)
      if (p->name == name) return p;
    return nullptr;
  }

 private:
  std::vector<Parameter*> items_;
};

class Tape;

// Handle to a dense value, optionally tracked on a tape.
class Tensor {
 public:
  Tensor() = default;
  /* implicit */ Tensor(Matrix v) : value_(std::make_shared<const Matrix>(std::move(v))) {}

  static Tensor scalar(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return Tensor(std::move(m));
  }

  bool defined() const { return value_ != nullptr; }
  const Matrix& value() const { return *value_; }
  Eigen::Index rows() const { return value_->rows(); }
  Eigen::Index cols() const { return value_->cols(); }
  bool tracked() const { return node_ >= 0; }

  // 1x1 tensors only.
  double item() const;

 private:
  friend class Tape;
  friend Tensor matmul(const Tensor&, const Tensor&);
  friend Tensor add(const Tensor&, const Tensor&);
  friend Tensor sub(const Tensor&, const Tensor&);
  friend Tensor hadamard(const Tensor&, const Tensor&);
  friend Tensor scale(const Tensor&, double);
  friend Tensor concat_cols(std::span<const Tensor>);
  friend Tensor stack_rows(std::span<const Tensor>);
  friend Tensor sigmoid(const Tensor&);
  friend Tensor tanh(const Tensor&);
  friend Tensor relu(const Tensor&);
  friend Tensor log(const Tensor&);
  friend Tensor clamp(const Tensor&, double, double);
  friend Tensor row_softmax(const Tensor&);
  friend Tensor slice(const Tensor&, Eigen::Index, Eigen::Index, Eigen::Index, Eigen::Index);
  friend Tensor transpose(const Tensor&);
  friend Tensor reduce_sum(const Tensor&);
  friend Tensor custom_unary(const Tensor&, Matrix, std::function<Matrix(const Matrix&)>);

  std::shared_ptr<const Matrix> value_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

// Records tracked operations; backward() runs the reverse sweep in reverse
// creation order (a valid reverse topological order, since parents always
// precede children) and deposits leaf gradients into the watched Parameters.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Register a parameter as a differentiable leaf of this tape.
  Tensor watch(Parameter& p);

  // Accumulate d(loss)/d(param) into every watched parameter's grad.
  // `loss` must be a tracked 1x1 tensor. By default the graph is freed;
  // keep_graph=true retains it so later losses on the same tape can be
  // differentiated too (used by the cross-batch BPTT mode).
  void backward(const Tensor& loss, bool keep_graph = false);

  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix grad;  // upstream gradient; empty until the node is reached
    std::function<void(const Matrix&, Tape&)> pull;
    Parameter* param = nullptr;
  };

  std::vector<Node> nodes_;

  Tensor emplace(Matrix value, std::function<void(const Matrix&, Tape&)> pull,
                 Parameter* param = nullptr);
  void accumulate(int node, const Matrix& g);

  friend Tensor matmul(const Tensor&, const Tensor&);
  friend Tensor add(const Tensor&, const Tensor&);
  friend Tensor sub(const Tensor&, const Tensor&);
  friend Tensor hadamard(const Tensor&, const Tensor&);
  friend Tensor scale(const Tensor&, double);
  friend Tensor concat_cols(std::span<const Tensor>);
  friend Tensor stack_rows(std::span<const Tensor>);
  friend Tensor sigmoid(const Tensor&);
  friend Tensor tanh(const Tensor&);
  friend Tensor relu(const Tensor&);
  friend Tensor log(const Tensor&);
  friend Tensor clamp(const Tensor&, double, double);
  friend Tensor row_softmax(const Tensor&);
  friend Tensor slice(const Tensor&, Eigen::Index, Eigen::Index, Eigen::Index, Eigen::Index);
  friend Tensor transpose(const Tensor&);
  friend Tensor reduce_sum(const Tensor&);
  friend Tensor custom_unary(const Tensor&, Matrix, std::function<Matrix(const Matrix&)>);
};

// Tensor handles for a parameter set, either watched on a tape (training) or
// frozen constants (no-grad evaluation); the same forward code serves both.
class ParamView {
 public:
  ParamView() = default;

  static ParamView watched(ParameterSet& set, Tape& tape) {
    ParamView v;
    for (auto* p : set) v.map_.emplace(p, tape.watch(*p));
    return v;
  }

  static ParamView frozen(const ParameterSet& set) {
    ParamView v;
    for (const auto* p : set) v.map_.emplace(p, Tensor(p->value));
    return v;
  }

  const Tensor& operator[](const Parameter& p) const {
    const auto it = map_.find(&p);
    if (it == map_.end())
      throw NumericError("parameter '" + p.name + "' is not part of this view");
    return it->second;
  }

 private:
  std::unordered_map<const Parameter*, Tensor> map_;
};

// ---- forward primitives -------------------------------------------------

// Records `value` as a function of `parent` with a hand-written
// vector-Jacobian product; used by ops with structured Jacobians (e.g. the
// sinusoidal time encoding). Constant parent yields a constant result.
Tensor custom_unary(const Tensor& parent, Matrix value,
                    std::function<Matrix(const Matrix&)> vjp);

Tensor matmul(const Tensor& a, const Tensor& b);

// add/sub accept equal shapes, or broadcast a 1xN row over an MxN operand.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_cols(std::initializer_list<Tensor> parts);
Tensor stack_rows(std::span<const Tensor> parts);
Tensor stack_rows(std::initializer_list<Tensor> parts);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor log(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor row_softmax(const Tensor& a);
Tensor slice(const Tensor& a, Eigen::Index row0, Eigen::Index nrows,
             Eigen::Index col0, Eigen::Index ncols);
Tensor transpose(const Tensor& a);
Tensor reduce_sum(const Tensor& a);

// x*W + b
inline Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add(matmul(x, w), b);
}

// Uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)] weight initialization; biases
// are zeroed by the callers that want that.
void init_uniform(Parameter& p, Eigen::Index fan_in, Rng& rng);

std::string shape_str(const Matrix& m);

}  // namespace tgemb::ad

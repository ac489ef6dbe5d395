#include "tgemb/autodiff.hpp"

#include <cmath>
#include <utility>

namespace tgemb::ad {

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw NumericError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

}  // namespace

std::string shape_str(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1)
    throw NumericError("item: tensor is not scalar, shape " + shape_str(value()));
  return value()(0, 0);
}

Tensor Tape::emplace(Matrix value, std::function<void(const Matrix&, Tape&)> pull,
                     Parameter* param) {
  Node n;
  n.pull = std::move(pull);
  n.param = param;
  nodes_.push_back(std::move(n));
  Tensor t(std::move(value));
  t.tape_ = this;
  t.node_ = static_cast<int>(nodes_.size()) - 1;
  return t;
}

Tensor Tape::watch(Parameter& p) {
  return emplace(p.value, nullptr, &p);
}

Tensor custom_unary(const Tensor& parent, Matrix value,
                    std::function<Matrix(const Matrix&)> vjp) {
  if (!parent.tracked()) return Tensor(std::move(value));
  const int pid = parent.node_;
  return parent.tape_->emplace(std::move(value),
                               [pid, vjp = std::move(vjp)](const Matrix& g, Tape& t) {
                                 t.accumulate(pid, vjp(g));
                               });
}

void Tape::accumulate(int node, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

void Tape::backward(const Tensor& loss, bool keep_graph) {
  if (!loss.tracked() || loss.tape_ != this)
    throw NumericError("backward: loss is not recorded on this tape");
  if (loss.rows() != 1 || loss.cols() != 1)
    throw NumericError("backward: loss must be scalar, got " + shape_str(loss.value()));

  accumulate(loss.node_, Matrix::Ones(1, 1));
  for (int i = loss.node_; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.size() == 0) continue;
    if (n.param != nullptr)
      n.param->grad += n.grad;
    else if (n.pull)
      n.pull(n.grad, *this);
    n.grad.resize(0, 0);
  }
  if (!keep_graph) clear();
}

void Tape::clear() { nodes_.clear(); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value());
  Matrix y = a.value() * b.value();
  if (!a.tracked() && !b.tracked()) return Tensor(std::move(y));
  Tape* tape = a.tracked() ? a.tape_ : b.tape_;
  if (a.tracked() && b.tracked() && a.tape_ != b.tape_)
    throw NumericError("matmul: operands recorded on different tapes");
  const int pa = a.tracked() ? a.node_ : -1;
  const int pb = b.tracked() ? b.node_ : -1;
  auto va = a.value_, vb = b.value_;
  return tape->emplace(std::move(y), [pa, pb, va, vb](const Matrix& g, Tape& t) {
    if (pa >= 0) t.accumulate(pa, g * vb->transpose());
    if (pb >= 0) t.accumulate(pb, va->transpose() * g);
  });
}

namespace {

enum class AddMode { Full, BroadcastRow };

AddMode add_mode(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return AddMode::Full;
  if (b.rows() == 1 && b.cols() == a.cols()) return AddMode::BroadcastRow;
  shape_error(op, a, b);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const AddMode mode = add_mode("add", a.value(), b.value());
  Matrix y = (mode == AddMode::Full)
                 ? Matrix(a.value() + b.value())
                 : Matrix(a.value().rowwise() + b.value().row(0));
  if (!a.tracked() && !b.tracked()) return Tensor(std::move(y));
  Tape* tape = a.tracked() ? a.tape_ : b.tape_;
  if (a.tracked() && b.tracked() && a.tape_ != b.tape_)
    throw NumericError("add: operands recorded on different tapes");
  const int pa = a.tracked() ? a.node_ : -1;
  const int pb = b.tracked() ? b.node_ : -1;
  return tape->emplace(std::move(y), [pa, pb, mode](const Matrix& g, Tape& t) {
    if (pa >= 0) t.accumulate(pa, g);
    if (pb >= 0)
      t.accumulate(pb, mode == AddMode::Full ? g : Matrix(g.colwise().sum()));
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const AddMode mode = add_mode("sub", a.value(), b.value());
  Matrix y = (mode == AddMode::Full)
                 ? Matrix(a.value() - b.value())
                 : Matrix(a.value().rowwise() - b.value().row(0));
  if (!a.tracked() && !b.tracked()) return Tensor(std::move(y));
  Tape* tape = a.tracked() ? a.tape_ : b.tape_;
  if (a.tracked() && b.tracked() && a.tape_ != b.tape_)
    throw NumericError("sub: operands recorded on different tapes");
  const int pa = a.tracked() ? a.node_ : -1;
  const int pb = b.tracked() ? b.node_ : -1;
  return tape->emplace(std::move(y), [pa, pb, mode](const Matrix& g, Tape& t) {
    if (pa >= 0) t.accumulate(pa, g);
    if (pb >= 0)
      t.accumulate(pb, mode == AddMode::Full ? Matrix(-g) : Matrix(-g.colwise().sum()));
  });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shape_error("hadamard", a.value(), b.value());
  Matrix y = a.value().cwiseProduct(b.value());
  if (!a.tracked() && !b.tracked()) return Tensor(std::move(y));
  Tape* tape = a.tracked() ? a.tape_ : b.tape_;
  if (a.tracked() && b.tracked() && a.tape_ != b.tape_)
    throw NumericError("hadamard: operands recorded on different tapes");
  const int pa = a.tracked() ? a.node_ : -1;
  const int pb = b.tracked() ? b.node_ : -1;
  auto va = a.value_, vb = b.value_;
  return tape->emplace(std::move(y), [pa, pb, va, vb](const Matrix& g, Tape& t) {
    if (pa >= 0) t.accumulate(pa, g.cwiseProduct(*vb));
    if (pb >= 0) t.accumulate(pb, g.cwiseProduct(*va));
  });
}

Tensor scale(const Tensor& a, double s) {
  Matrix y = s * a.value();
  if (!a.tracked()) return Tensor(std::move(y));
  const int pa = a.node_;
  return a.tape_->emplace(std::move(y), [pa, s](const Matrix& g, Tape& t) {
    t.accumulate(pa, Matrix(s * g));
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw NumericError("concat_cols: no operands");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  Tape* tape = nullptr;
  for (const Tensor& p : parts) {
    if (p.rows() != rows) shape_error("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
    if (p.tracked()) {
      if (tape && tape != p.tape_)
        throw NumericError("concat_cols: operands recorded on different tapes");
      tape = p.tape_;
    }
  }
  Matrix y(rows, cols);
  Eigen::Index at = 0;
  std::vector<std::pair<int, Eigen::Index>> segs;  // (parent node, width)
  segs.reserve(parts.size());
  for (const Tensor& p : parts) {
    y.middleCols(at, p.cols()) = p.value();
    segs.emplace_back(p.tracked() ? p.node_ : -1, p.cols());
    at += p.cols();
  }
  if (tape == nullptr) return Tensor(std::move(y));
  return tape->emplace(std::move(y), [segs = std::move(segs)](const Matrix& g, Tape& t) {
    Eigen::Index at = 0;
    for (const auto& [node, width] : segs) {
      if (node >= 0) t.accumulate(node, g.middleCols(at, width));
      at += width;
    }
  });
}

Tensor concat_cols(std::initializer_list<Tensor> parts) {
  std::vector<Tensor> v(parts);
  return concat_cols(std::span<const Tensor>(v));
}

Tensor stack_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw NumericError("stack_rows: no operands");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  Tape* tape = nullptr;
  for (const Tensor& p : parts) {
    if (p.cols() != cols) shape_error("stack_rows", parts[0].value(), p.value());
    rows += p.rows();
    if (p.tracked()) {
      if (tape && tape != p.tape_)
        throw NumericError("stack_rows: operands recorded on different tapes");
      tape = p.tape_;
    }
  }
  Matrix y(rows, cols);
  Eigen::Index at = 0;
  std::vector<std::pair<int, Eigen::Index>> segs;  // (parent node, height)
  segs.reserve(parts.size());
  for (const Tensor& p : parts) {
    y.middleRows(at, p.rows()) = p.value();
    segs.emplace_back(p.tracked() ? p.node_ : -1, p.rows());
    at += p.rows();
  }
  if (tape == nullptr) return Tensor(std::move(y));
  return tape->emplace(std::move(y), [segs = std::move(segs)](const Matrix& g, Tape& t) {
    Eigen::Index at = 0;
    for (const auto& [node, height] : segs) {
      if (node >= 0) t.accumulate(node, g.middleRows(at, height));
      at += height;
    }
  });
}

Tensor stack_rows(std::initializer_list<Tensor> parts) {
  std::vector<Tensor> v(parts);
  return stack_rows(std::span<const Tensor>(v));
}

Tensor sigmoid(const Tensor& a) {
  Matrix y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  if (!a.tracked()) return Tensor(std::move(y));
  Tensor out = a.tape_->emplace(std::move(y), nullptr);
  const int pa = a.node_;
  auto vy = out.value_;
  a.tape_->nodes_.back().pull = [pa, vy](const Matrix& g, Tape& t) {
    t.accumulate(pa, (g.array() * vy->array() * (1.0 - vy->array())).matrix());
  };
  return out;
}

Tensor tanh(const Tensor& a) {
  Matrix y = a.value().array().tanh().matrix();
  if (!a.tracked()) return Tensor(std::move(y));
  Tensor out = a.tape_->emplace(std::move(y), nullptr);
  const int pa = a.node_;
  auto vy = out.value_;
  a.tape_->nodes_.back().pull = [pa, vy](const Matrix& g, Tape& t) {
    t.accumulate(pa, (g.array() * (1.0 - vy->array().square())).matrix());
  };
  return out;
}

Tensor relu(const Tensor& a) {
  Matrix y = a.value().cwiseMax(0.0);
  if (!a.tracked()) return Tensor(std::move(y));
  const int pa = a.node_;
  auto va = a.value_;
  return a.tape_->emplace(std::move(y), [pa, va](const Matrix& g, Tape& t) {
    t.accumulate(pa, (g.array() * (va->array() > 0.0).cast<double>()).matrix());
  });
}

Tensor log(const Tensor& a) {
  Matrix y = a.value().array().log().matrix();
  if (!a.tracked()) return Tensor(std::move(y));
  const int pa = a.node_;
  auto va = a.value_;
  return a.tape_->emplace(std::move(y), [pa, va](const Matrix& g, Tape& t) {
    t.accumulate(pa, (g.array() / va->array()).matrix());
  });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  Matrix y = a.value().cwiseMax(lo).cwiseMin(hi);
  if (!a.tracked()) return Tensor(std::move(y));
  const int pa = a.node_;
  auto va = a.value_;
  return a.tape_->emplace(std::move(y), [pa, va, lo, hi](const Matrix& g, Tape& t) {
    const auto inside = (va->array() > lo && va->array() < hi).cast<double>();
    t.accumulate(pa, (g.array() * inside).matrix());
  });
}

Tensor row_softmax(const Tensor& a) {
  Matrix y(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const auto row = a.value().row(r).array();
    const Eigen::ArrayXd e = (row - row.maxCoeff()).exp();
    y.row(r) = (e / e.sum()).matrix();
  }
  if (!a.tracked()) return Tensor(std::move(y));
  Tensor out = a.tape_->emplace(std::move(y), nullptr);
  const int pa = a.node_;
  auto vy = out.value_;
  a.tape_->nodes_.back().pull = [pa, vy](const Matrix& g, Tape& t) {
    Matrix gx(g.rows(), g.cols());
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const auto yr = vy->row(r).array();
      const auto gr = g.row(r).array();
      const double dot = (gr * yr).sum();
      gx.row(r) = (yr * (gr - dot)).matrix();
    }
    t.accumulate(pa, gx);
  };
  return out;
}

Tensor slice(const Tensor& a, Eigen::Index row0, Eigen::Index nrows,
             Eigen::Index col0, Eigen::Index ncols) {
  if (row0 < 0 || col0 < 0 || row0 + nrows > a.rows() || col0 + ncols > a.cols())
    throw NumericError("slice: block out of range for " + shape_str(a.value()));
  Matrix y = a.value().block(row0, col0, nrows, ncols);
  if (!a.tracked()) return Tensor(std::move(y));
  const int pa = a.node_;
  const Eigen::Index ar = a.rows(), ac = a.cols();
  return a.tape_->emplace(std::move(y), [=](const Matrix& g, Tape& t) {
    Matrix gx = Matrix::Zero(ar, ac);
    gx.block(row0, col0, nrows, ncols) = g;
    t.accumulate(pa, gx);
  });
}

Tensor transpose(const Tensor& a) {
  Matrix y = a.value().transpose();
  if (!a.tracked()) return Tensor(std::move(y));
  const int pa = a.node_;
  return a.tape_->emplace(std::move(y), [pa](const Matrix& g, Tape& t) {
    t.accumulate(pa, g.transpose());
  });
}

Tensor reduce_sum(const Tensor& a) {
  Matrix y(1, 1);
  y(0, 0) = a.value().sum();
  if (!a.tracked()) return Tensor(std::move(y));
  const int pa = a.node_;
  const Eigen::Index ar = a.rows(), ac = a.cols();
  return a.tape_->emplace(std::move(y), [pa, ar, ac](const Matrix& g, Tape& t) {
    t.accumulate(pa, Matrix::Constant(ar, ac, g(0, 0)));
  });
}

void init_uniform(Parameter& p, Eigen::Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index r = 0; r < p.value.rows(); ++r)
    for (Eigen::Index c = 0; c < p.value.cols(); ++c)
      p.value(r, c) = rng.uniform(-bound, bound);
}

}  // namespace tgemb::ad

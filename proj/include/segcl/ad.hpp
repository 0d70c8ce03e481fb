#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "segcl/core.hpp"

namespace segcl::ad {

/// Reverse-mode tape over dense matrices. Build a computation by chaining
/// ops, call backward() on a 1x1 root, then read grad() of any node.
/// Nodes are created in topological order, so one reverse sweep suffices.
template <typename Scalar>
class Tape {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  Var input(Matrix value) { return make(std::move(value), {}); }

  const Matrix& value(Var v) const { return node(v).value; }
  const Matrix& grad(Var v) const { return node(v).grad; }

  Var matmul(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.cols() != B.rows()) throw shape_error("matmul", A, B);
    Var out = make(A * B, {});
    node(out).backprop = [this, a, b, out] {
      const Matrix& g = node(out).grad;
      node(a).grad.noalias() += g * node(b).value.transpose();
      node(b).grad.noalias() += node(a).value.transpose() * g;
    };
    return out;
  }

  Var add(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.rows() != B.rows() || A.cols() != B.cols()) throw shape_error("add", A, B);
    Var out = make(A + B, {});
    node(out).backprop = [this, a, b, out] {
      node(a).grad += node(out).grad;
      node(b).grad += node(out).grad;
    };
    return out;
  }

  Var sub(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.rows() != B.rows() || A.cols() != B.cols()) throw shape_error("sub", A, B);
    Var out = make(A - B, {});
    node(out).backprop = [this, a, b, out] {
      node(a).grad += node(out).grad;
      node(b).grad -= node(out).grad;
    };
    return out;
  }

  /// a: n x d, row: 1 x d, result row i = a_i + row.
  Var add_row(Var a, Var row) {
    const Matrix& A = value(a);
    const Matrix& R = value(row);
    if (R.rows() != 1 || R.cols() != A.cols()) throw shape_error("add_row", A, R);
    Var out = make(A.rowwise() + R.row(0), {});
    node(out).backprop = [this, a, row, out] {
      const Matrix& g = node(out).grad;
      node(a).grad += g;
      node(row).grad += g.colwise().sum();
    };
    return out;
  }

  /// a: n x d, row: 1 x d, result row i = a_i - row.
  Var sub_row(Var a, Var row) {
    const Matrix& A = value(a);
    const Matrix& R = value(row);
    if (R.rows() != 1 || R.cols() != A.cols()) throw shape_error("sub_row", A, R);
    Var out = make(A.rowwise() - R.row(0), {});
    node(out).backprop = [this, a, row, out] {
      const Matrix& g = node(out).grad;
      node(a).grad += g;
      node(row).grad -= g.colwise().sum();
    };
    return out;
  }

  Var scale(Var a, Scalar c) {
    Var out = make(value(a) * c, {});
    node(out).backprop = [this, a, out, c] { node(a).grad += node(out).grad * c; };
    return out;
  }

  Var add_scalar(Var a, Scalar c) {
    Var out = make((value(a).array() + c).matrix(), {});
    node(out).backprop = [this, a, out] { node(a).grad += node(out).grad; };
    return out;
  }

  Var cwise_mul_const(Var a, Matrix m) {
    const Matrix& A = value(a);
    if (A.rows() != m.rows() || A.cols() != m.cols()) throw shape_error("cwise_mul_const", A, m);
    Var out = make(A.cwiseProduct(m), {});
    node(out).backprop = [this, a, out, m = std::move(m)] {
      node(a).grad += node(out).grad.cwiseProduct(m);
    };
    return out;
  }

  /// m * a with m constant; the left factor receives no gradient.
  Var left_mul_const(Matrix m, Var a) {
    const Matrix& A = value(a);
    if (m.cols() != A.rows()) throw shape_error("left_mul_const", m, A);
    Var out = make(m * A, {});
    node(out).backprop = [this, a, out, m = std::move(m)] {
      node(a).grad.noalias() += m.transpose() * node(out).grad;
    };
    return out;
  }

  /// diag(s) * a with s constant.
  Var scale_rows_const(Var a, Vector s) {
    const Matrix& A = value(a);
    if (s.size() != A.rows()) throw shape_error("scale_rows_const", A, Matrix(s));
    Var out = make(s.asDiagonal() * A, {});
    node(out).backprop = [this, a, out, s = std::move(s)] {
      node(a).grad += s.asDiagonal() * node(out).grad;
    };
    return out;
  }

  /// Result row i = a row idx[i]; duplicate indices accumulate on backward.
  Var gather_rows(Var a, std::vector<int> idx) {
    const Matrix& A = value(a);
    Matrix out_value(static_cast<Eigen::Index>(idx.size()), A.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] < 0 || idx[i] >= A.rows()) {
        throw ShapeError("gather_rows: index " + std::to_string(idx[i]) + " out of range");
      }
      out_value.row(static_cast<Eigen::Index>(i)) = A.row(idx[i]);
    }
    Var out = make(std::move(out_value), {});
    node(out).backprop = [this, a, out, idx = std::move(idx)] {
      const Matrix& g = node(out).grad;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        node(a).grad.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
      }
    };
    return out;
  }

  Var concat_cols(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.rows() != B.rows()) throw shape_error("concat_cols", A, B);
    Matrix out_value(A.rows(), A.cols() + B.cols());
    out_value << A, B;
    Var out = make(std::move(out_value), {});
    node(out).backprop = [this, a, b, out] {
      const Matrix& g = node(out).grad;
      const Eigen::Index ca = node(a).value.cols();
      node(a).grad += g.leftCols(ca);
      node(b).grad += g.rightCols(g.cols() - ca);
    };
    return out;
  }

  Var sigmoid(Var a) {
    Matrix y = (Scalar(1) / (Scalar(1) + (-value(a).array()).exp())).matrix();
    Var out = make(std::move(y), {});
    node(out).backprop = [this, a, out] {
      const Matrix& yv = node(out).value;
      node(a).grad.array() +=
          node(out).grad.array() * yv.array() * (Scalar(1) - yv.array());
    };
    return out;
  }

  Var leaky_relu(Var a, Scalar slope) {
    const Matrix& A = value(a);
    Matrix y = A.unaryExpr([slope](Scalar x) { return x > Scalar(0) ? x : slope * x; });
    Var out = make(std::move(y), {});
    node(out).backprop = [this, a, out, slope] {
      node(a).grad.array() +=
          node(out).grad.array() *
          node(a).value.array().unaryExpr(
              [slope](Scalar x) { return x > Scalar(0) ? Scalar(1) : slope; });
    };
    return out;
  }

  Var relu(Var a) { return leaky_relu(a, Scalar(0)); }

  Var square(Var a) {
    Var out = make(value(a).cwiseProduct(value(a)), {});
    node(out).backprop = [this, a, out] {
      node(a).grad.array() += Scalar(2) * node(a).value.array() * node(out).grad.array();
    };
    return out;
  }

  /// n x d -> n x 1.
  Var row_sum(Var a) {
    Var out = make(Matrix(value(a).rowwise().sum()), {});
    node(out).backprop = [this, a, out] {
      node(a).grad += node(out).grad.col(0) *
                      Matrix::Ones(1, node(a).value.cols());
    };
    return out;
  }

  /// n x d -> 1 x d.
  Var col_mean(Var a) {
    const Scalar inv = Scalar(1) / static_cast<Scalar>(value(a).rows());
    Var out = make(Matrix(value(a).colwise().mean()), {});
    node(out).backprop = [this, a, out, inv] {
      node(a).grad += Matrix::Ones(node(a).value.rows(), 1) * (node(out).grad * inv);
    };
    return out;
  }

  /// n x d -> 1 x 1. Divides like Eigen's mean() so plain-path reductions
  /// that end in .mean() stay bitwise comparable.
  Var mean_all(Var a) {
    const Matrix& A = value(a);
    const Scalar inv = Scalar(1) / static_cast<Scalar>(A.rows() * A.cols());
    Matrix m(1, 1);
    m(0, 0) = A.sum() / static_cast<Scalar>(A.rows() * A.cols());
    Var out = make(std::move(m), {});
    node(out).backprop = [this, a, out, inv] {
      node(a).grad.array() += node(out).grad(0, 0) * inv;
    };
    return out;
  }

  /// Seeds grad(root) = 1 and sweeps the tape once in reverse. All other
  /// gradients are reset first, so repeated calls do not mix.
  void backward(Var root) {
    Node& r = node(root);
    if (r.value.rows() != 1 || r.value.cols() != 1) {
      throw ShapeError("backward: root must be 1x1");
    }
    for (Node& n : nodes_) n.grad.setZero(n.value.rows(), n.value.cols());
    r.grad(0, 0) = Scalar(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      if (it->backprop) it->backprop();
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void()> backprop;
  };

  Node& node(Var v) { return nodes_[check(v)]; }
  const Node& node(Var v) const { return nodes_[check(v)]; }

  std::size_t check(Var v) const {
    if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size()) {
      throw Error("tape: invalid variable handle");
    }
    return static_cast<std::size_t>(v.id);
  }

  Var make(Matrix value, std::function<void()> backprop) {
    Node n;
    n.value = std::move(value);
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  static ShapeError shape_error(const char* op, const Matrix& a, const Matrix& b) {
    return ShapeError(std::string(op) + ": incompatible shapes " +
                      std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " and " +
                      std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }

  std::vector<Node> nodes_;
};

using TapeD = Tape<double>;

}  // namespace segcl::ad

#pragma once

#include <utility>
#include <vector>

#include "ddrm/matrix.hpp"

namespace ddrm {

double stable_sigmoid(double x);
// log(sigmoid(x)) computed without overflow for large |x|.
double stable_log_sigmoid(double x);

// Reverse-mode gradient tape over matrix-valued nodes, restricted to the
// closed operation family the denoiser and backend losses are built
// from. Nodes are appended in evaluation order, so creation order is a
// topological order and backward() is a single reverse sweep.
//
// The primitive set is fixed by the API; there is no way to record an
// unsupported operation.
class Tape {
 public:
  struct Var {
    int id = -1;
  };

  // Leaf that gradients are not read from (frozen embeddings, encodings).
  Var input(DenseMatrix value);
  // Leaf whose gradient the caller reads after backward().
  Var param(DenseMatrix value);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  // sum_k coeff_k * term_k over same-shaped matrices.
  Var weighted_sum(const std::vector<std::pair<double, Var>>& terms);
  // Stack column vectors into one column vector.
  Var concat(const std::vector<Var>& parts);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var log_sigmoid(Var a);
  Var squared_norm(Var a);  // 1x1 result
  Var dot(Var a, Var b);    // 1x1 result

  const DenseMatrix& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const;

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients into every node.
  // loss must be 1x1. May be called once per tape.
  void backward(Var loss);
  const DenseMatrix& grad(Var v) const { return nodes_[v.id].grad; }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op {
    kLeaf,
    kMatmul,
    kAdd,
    kWeightedSum,
    kConcat,
    kTanh,
    kSigmoid,
    kLogSigmoid,
    kSquaredNorm,
    kDot,
  };

  struct Node {
    Op op;
    DenseMatrix value;
    DenseMatrix grad;
    std::vector<int> inputs;
    std::vector<double> coeffs;  // weighted_sum only
  };

  Var push(Op op, DenseMatrix value, std::vector<int> inputs,
           std::vector<double> coeffs = {});
  void backprop_node(const Node& n);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace ddrm

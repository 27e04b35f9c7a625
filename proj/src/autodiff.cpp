#include "ddrm/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace ddrm {

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_log_sigmoid(double x) {
  // log sigmoid(x) = min(x, 0) - log1p(exp(-|x|))
  return std::min(x, 0.0) - std::log1p(std::exp(-std::fabs(x)));
}

Tape::Var Tape::push(Op op, DenseMatrix value, std::vector<int> inputs,
                     std::vector<double> coeffs) {
  Node n;
  n.op = op;
  n.grad = DenseMatrix(value.rows(), value.cols());
  n.value = std::move(value);
  n.inputs = std::move(inputs);
  n.coeffs = std::move(coeffs);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Var Tape::input(DenseMatrix value) {
  return push(Op::kLeaf, std::move(value), {});
}

Tape::Var Tape::param(DenseMatrix value) {
  return push(Op::kLeaf, std::move(value), {});
}

Tape::Var Tape::matmul(Var a, Var b) {
  const DenseMatrix& av = nodes_[a.id].value;
  const DenseMatrix& bv = nodes_[b.id].value;
  return push(Op::kMatmul, ddrm::matmul(av, bv), {a.id, b.id});
}

Tape::Var Tape::add(Var a, Var b) {
  return push(Op::kAdd, ddrm::add(nodes_[a.id].value, nodes_[b.id].value),
              {a.id, b.id});
}

Tape::Var Tape::weighted_sum(
    const std::vector<std::pair<double, Var>>& terms) {
  if (terms.empty()) throw std::invalid_argument("weighted_sum: no terms");
  const DenseMatrix& first = nodes_[terms[0].second.id].value;
  DenseMatrix out(first.rows(), first.cols());
  std::vector<int> ids;
  std::vector<double> cs;
  for (const auto& [c, v] : terms) {
    const DenseMatrix& m = nodes_[v.id].value;
    if (!m.same_shape(out)) {
      throw std::invalid_argument("weighted_sum: shape mismatch");
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * m[i];
    ids.push_back(v.id);
    cs.push_back(c);
  }
  return push(Op::kWeightedSum, std::move(out), std::move(ids), std::move(cs));
}

Tape::Var Tape::concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  std::size_t total = 0;
  std::vector<int> ids;
  for (Var v : parts) {
    const DenseMatrix& m = nodes_[v.id].value;
    if (m.cols() != 1) throw std::invalid_argument("concat: column vectors only");
    total += m.rows();
    ids.push_back(v.id);
  }
  DenseMatrix out(total, 1);
  std::size_t at = 0;
  for (Var v : parts) {
    const DenseMatrix& m = nodes_[v.id].value;
    for (std::size_t i = 0; i < m.rows(); ++i) out[at++] = m[i];
  }
  return push(Op::kConcat, std::move(out), std::move(ids));
}

Tape::Var Tape::tanh(Var a) {
  DenseMatrix out = nodes_[a.id].value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  return push(Op::kTanh, std::move(out), {a.id});
}

Tape::Var Tape::sigmoid(Var a) {
  DenseMatrix out = nodes_[a.id].value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(out[i]);
  return push(Op::kSigmoid, std::move(out), {a.id});
}

Tape::Var Tape::log_sigmoid(Var a) {
  DenseMatrix out = nodes_[a.id].value;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = stable_log_sigmoid(out[i]);
  return push(Op::kLogSigmoid, std::move(out), {a.id});
}

Tape::Var Tape::squared_norm(Var a) {
  DenseMatrix out(1, 1);
  out[0] = ddrm::squared_norm(nodes_[a.id].value);
  return push(Op::kSquaredNorm, std::move(out), {a.id});
}

Tape::Var Tape::dot(Var a, Var b) {
  DenseMatrix out(1, 1);
  out[0] = ddrm::dot(nodes_[a.id].value, nodes_[b.id].value);
  return push(Op::kDot, std::move(out), {a.id, b.id});
}

double Tape::scalar(Var v) const {
  const DenseMatrix& m = nodes_[v.id].value;
  if (m.size() != 1) throw std::invalid_argument("scalar: node is not 1x1");
  return m[0];
}

void Tape::backprop_node(const Node& n) {
  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kMatmul: {
      Node& a = nodes_[n.inputs[0]];
      Node& b = nodes_[n.inputs[1]];
      // dA += G * B^T, dB += A^T * G
      const DenseMatrix da = ddrm::matmul(n.grad, transpose(b.value));
      const DenseMatrix db = ddrm::matmul(transpose(a.value), n.grad);
      for (std::size_t i = 0; i < da.size(); ++i) a.grad[i] += da[i];
      for (std::size_t i = 0; i < db.size(); ++i) b.grad[i] += db[i];
      break;
    }
    case Op::kAdd: {
      Node& a = nodes_[n.inputs[0]];
      Node& b = nodes_[n.inputs[1]];
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        a.grad[i] += n.grad[i];
        b.grad[i] += n.grad[i];
      }
      break;
    }
    case Op::kWeightedSum: {
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        Node& a = nodes_[n.inputs[k]];
        const double c = n.coeffs[k];
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          a.grad[i] += c * n.grad[i];
      }
      break;
    }
    case Op::kConcat: {
      std::size_t at = 0;
      for (int id : n.inputs) {
        Node& a = nodes_[id];
        for (std::size_t i = 0; i < a.value.rows(); ++i)
          a.grad[i] += n.grad[at++];
      }
      break;
    }
    case Op::kTanh: {
      Node& a = nodes_[n.inputs[0]];
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        const double y = n.value[i];
        a.grad[i] += n.grad[i] * (1.0 - y * y);
      }
      break;
    }
    case Op::kSigmoid: {
      Node& a = nodes_[n.inputs[0]];
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        const double y = n.value[i];
        a.grad[i] += n.grad[i] * y * (1.0 - y);
      }
      break;
    }
    case Op::kLogSigmoid: {
      Node& a = nodes_[n.inputs[0]];
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        // d/dx log sigmoid(x) = sigmoid(-x)
        a.grad[i] += n.grad[i] * stable_sigmoid(-a.value[i]);
      }
      break;
    }
    case Op::kSquaredNorm: {
      Node& a = nodes_[n.inputs[0]];
      const double g = n.grad[0];
      for (std::size_t i = 0; i < a.value.size(); ++i)
        a.grad[i] += 2.0 * g * a.value[i];
      break;
    }
    case Op::kDot: {
      Node& a = nodes_[n.inputs[0]];
      Node& b = nodes_[n.inputs[1]];
      const double g = n.grad[0];
      for (std::size_t i = 0; i < a.value.size(); ++i) {
        a.grad[i] += g * b.value[i];
        b.grad[i] += g * a.value[i];
      }
      break;
    }
  }
}

void Tape::backward(Var loss) {
  if (backward_done_) throw std::logic_error("Tape::backward called twice");
  backward_done_ = true;
  Node& top = nodes_[loss.id];
  if (top.value.size() != 1) {
    throw std::invalid_argument("backward: loss must be 1x1");
  }
  top.grad[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) backprop_node(nodes_[i]);
}

}  // namespace ddrm

#include "ddrm/denoiser.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "ddrm/binio.hpp"

namespace ddrm {

DenseMatrix encode_step(std::size_t t, std::size_t dim) {
  if (dim % 2 != 0) {
    throw std::invalid_argument("encode_step: dim must be even");
  }
  DenseMatrix enc(dim, 1);
  for (std::size_t k = 0; k < dim / 2; ++k) {
    const double freq =
        std::pow(10000.0, 2.0 * double(k) / double(dim));
    enc[2 * k] = std::sin(double(t) / freq);
    enc[2 * k + 1] = std::cos(double(t) / freq);
  }
  return enc;
}

DenseMatrix forward_to_t_with_eps(const DenseMatrix& x0, std::size_t t,
                                  const NoiseSchedule& sch,
                                  const DenseMatrix& eps) {
  if (t < 1 || t > sch.steps()) {
    throw std::invalid_argument("forward_to_t: t out of 1..T");
  }
  if (!x0.same_shape(eps)) {
    throw std::invalid_argument("forward_to_t: eps shape mismatch");
  }
  const double a = std::sqrt(sch.alpha_bar(t));
  const double b = std::sqrt(sch.one_minus_alpha_bar(t));
  DenseMatrix out = x0;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a * out[i] + b * eps[i];
  return out;
}

DenseMatrix forward_to_t(const DenseMatrix& x0, std::size_t t,
                         const NoiseSchedule& sch, Rng& rng) {
  DenseMatrix eps(x0.rows(), x0.cols());
  for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = rng.next_normal();
  return forward_to_t_with_eps(x0, t, sch, eps);
}

// Near-identity initialization on the noisy-embedding channel: the
// first layer passes x through a small tanh gain that the output layer
// undoes, so an untrained denoiser starts as identity-plus-correction
// and training only has to learn the correction. Requires
// hidden_width >= dim; narrower nets fall back to plain random init.
Mlp Mlp::make(std::size_t dim, std::size_t hidden_width,
              std::size_t hidden_layers, Rng& rng) {
  if (hidden_layers < 1) {
    throw std::invalid_argument("Mlp: need at least one hidden layer");
  }
  constexpr double kPassGain = 0.3;
  const bool identity_path = hidden_width >= dim;
  Mlp mlp;
  std::size_t in = 3 * dim;
  for (std::size_t l = 0; l < hidden_layers + 1; ++l) {
    const bool last = l == hidden_layers;
    const std::size_t out = last ? dim : hidden_width;
    DenseMatrix w(out, in);
    const double sd =
        (identity_path ? 0.03 : 1.0) / std::sqrt(double(in));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = sd * rng.next_normal();
    if (identity_path) {
      for (std::size_t r = 0; r < dim; ++r) {
        if (l == 0) {
          w(r, r) = kPassGain;  // squash into tanh's linear range
        } else if (last) {
          w(r, r) = 1.0 / kPassGain;
        } else {
          w(r, r) = 1.0;
        }
      }
    }
    mlp.weights.push_back(std::move(w));
    mlp.biases.emplace_back(out, 1);
    in = out;
  }
  return mlp;
}

DenseMatrix Mlp::forward(const DenseMatrix& input) const {
  DenseMatrix h = input;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = add(matmul(weights[l], h), biases[l]);
    if (l + 1 < weights.size()) {
      for (std::size_t i = 0; i < h.size(); ++i) h[i] = std::tanh(h[i]);
    }
  }
  return h;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

bool Mlp::all_finite() const {
  for (const auto& w : weights)
    if (!w.all_finite()) return false;
  for (const auto& b : biases)
    if (!b.all_finite()) return false;
  return true;
}

MlpVars mlp_params_on_tape(Tape& tape, const Mlp& mlp) {
  MlpVars vars;
  for (const auto& w : mlp.weights) vars.weights.push_back(tape.param(w));
  for (const auto& b : mlp.biases) vars.biases.push_back(tape.param(b));
  return vars;
}

Tape::Var mlp_forward_on_tape(Tape& tape, const MlpVars& vars,
                              Tape::Var input) {
  Tape::Var h = input;
  const std::size_t layers = vars.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    h = tape.add(tape.matmul(vars.weights[l], h), vars.biases[l]);
    if (l + 1 < layers) h = tape.tanh(h);
  }
  return h;
}

DenoiserParams DenoiserParams::make(std::size_t dim, std::size_t hidden_width,
                                    std::size_t hidden_layers, Rng& rng) {
  DenoiserParams p;
  p.dim = dim;
  p.hidden_width = hidden_width;
  p.hidden_layers = hidden_layers;
  p.user_mlp = Mlp::make(dim, hidden_width, hidden_layers, rng);
  p.item_mlp = Mlp::make(dim, hidden_width, hidden_layers, rng);
  return p;
}

DenseMatrix reconstruct(const DiffusionState& state,
                        const DenseMatrix& condition,
                        const DenoiserParams& params, DenoiserRole role) {
  const std::size_t d = params.dim;
  if (state.embedding.rows() != d || condition.rows() != d ||
      state.embedding.cols() != 1 || condition.cols() != 1) {
    throw std::invalid_argument("reconstruct: dimension mismatch");
  }
  const DenseMatrix enc = encode_step(state.step, d);
  DenseMatrix input(3 * d, 1);
  for (std::size_t i = 0; i < d; ++i) {
    input[i] = state.embedding[i];
    input[d + i] = condition[i];
    input[2 * d + i] = enc[i];
  }
  return params.mlp(role).forward(input);
}

DiffusionState reverse_step(const DiffusionState& state,
                            const DenseMatrix& tilde_e0,
                            const NoiseSchedule& sch, Rng& rng,
                            bool stochastic) {
  const std::size_t t = state.step;
  if (t < 1 || t > sch.steps()) {
    throw std::invalid_argument("reverse_step: step out of 1..T");
  }
  if (!state.embedding.same_shape(tilde_e0)) {
    throw std::invalid_argument("reverse_step: tilde_e0 shape mismatch");
  }
  const auto [c_xt, c_x0] = sch.reverse_mean_coeffs(t);
  DiffusionState out;
  out.step = t - 1;
  out.embedding = DenseMatrix(state.embedding.rows(), 1);
  for (std::size_t i = 0; i < out.embedding.size(); ++i) {
    out.embedding[i] = c_xt * state.embedding[i] + c_x0 * tilde_e0[i];
  }
  if (stochastic && t > 1) {
    const double sd = std::sqrt(sch.posterior_variance(t));
    for (std::size_t i = 0; i < out.embedding.size(); ++i) {
      out.embedding[i] += sd * rng.next_normal();
    }
  }
  return out;
}

void save_denoiser(const DenoiserParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write("DDRMDNZ1", 8);
  binio::write_u32(out, static_cast<std::uint32_t>(params.dim));
  binio::write_u32(out, static_cast<std::uint32_t>(params.hidden_width));
  binio::write_u32(out,
                   static_cast<std::uint32_t>(params.hidden_layers + 1));
  auto emit = [&](const Mlp& mlp) {
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
      for (std::size_t i = 0; i < mlp.weights[l].size(); ++i)
        binio::write_f32(out, static_cast<float>(mlp.weights[l][i]));
      for (std::size_t i = 0; i < mlp.biases[l].size(); ++i)
        binio::write_f32(out, static_cast<float>(mlp.biases[l][i]));
    }
  };
  emit(params.user_mlp);
  emit(params.item_mlp);
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

DenoiserParams load_denoiser(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  binio::expect_magic(in, "DDRMDNZ1", path);
  const std::uint32_t d = binio::read_u32(in);
  const std::uint32_t hidden = binio::read_u32(in);
  const std::uint32_t n_layers = binio::read_u32(in);
  if (n_layers < 1) throw std::runtime_error("denoiser checkpoint: bad layer count");
  DenoiserParams p;
  p.dim = d;
  p.hidden_width = hidden;
  p.hidden_layers = n_layers - 1;
  auto read_mlp = [&]() {
    Mlp mlp;
    std::size_t in_w = 3 * std::size_t(d);
    for (std::uint32_t l = 0; l < n_layers; ++l) {
      const std::size_t out_w = (l + 1 == n_layers) ? d : hidden;
      DenseMatrix w(out_w, in_w);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = binio::read_f32(in);
      DenseMatrix b(out_w, 1);
      for (std::size_t i = 0; i < b.size(); ++i) b[i] = binio::read_f32(in);
      w.ensure_finite("load_denoiser");
      mlp.weights.push_back(std::move(w));
      mlp.biases.push_back(std::move(b));
      in_w = out_w;
    }
    return mlp;
  };
  p.user_mlp = read_mlp();
  p.item_mlp = read_mlp();
  return p;
}

}  // namespace ddrm

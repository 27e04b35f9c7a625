#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddrm/autodiff.hpp"
#include "ddrm/matrix.hpp"
#include "ddrm/rng.hpp"
#include "ddrm/schedule.hpp"

namespace ddrm {

// Sinusoidal step encoding: component pair k is
// (sin(t / 10000^{2k/dim}), cos(t / 10000^{2k/dim})). dim must be even.
DenseMatrix encode_step(std::size_t t, std::size_t dim);

// Closed-form forward noising to step t:
//   sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps.
DenseMatrix forward_to_t(const DenseMatrix& x0, std::size_t t,
                         const NoiseSchedule& sch, Rng& rng);
DenseMatrix forward_to_t_with_eps(const DenseMatrix& x0, std::size_t t,
                                  const NoiseSchedule& sch,
                                  const DenseMatrix& eps);

// Plain MLP: input 3d (noisy embedding, condition, step encoding),
// configurable hidden layers with tanh, linear output of width d.
struct Mlp {
  std::vector<DenseMatrix> weights;  // layer l: out_l x in_l
  std::vector<DenseMatrix> biases;   // layer l: out_l x 1

  static Mlp make(std::size_t dim, std::size_t hidden_width,
                  std::size_t hidden_layers, Rng& rng);

  DenseMatrix forward(const DenseMatrix& input) const;

  std::size_t parameter_count() const;
  bool all_finite() const;
};

// Tape handles for one MLP's parameters, for gradient-based training.
struct MlpVars {
  std::vector<Tape::Var> weights;
  std::vector<Tape::Var> biases;
};
MlpVars mlp_params_on_tape(Tape& tape, const Mlp& mlp);
Tape::Var mlp_forward_on_tape(Tape& tape, const MlpVars& vars,
                              Tape::Var input);

enum class DenoiserRole { kUser, kItem };

// theta (user module) and psi (item module); identical architecture.
struct DenoiserParams {
  std::size_t dim = 0;
  std::size_t hidden_width = 0;
  std::size_t hidden_layers = 1;
  Mlp user_mlp;  // theta
  Mlp item_mlp;  // psi

  static DenoiserParams make(std::size_t dim, std::size_t hidden_width,
                             std::size_t hidden_layers, Rng& rng);
  const Mlp& mlp(DenoiserRole role) const {
    return role == DenoiserRole::kUser ? user_mlp : item_mlp;
  }
};

struct DiffusionState {
  DenseMatrix embedding;
  std::size_t step = 0;
};

// Predicted clean embedding from the role's reconstruction MLP fed with
// concat(noisy embedding, condition, step encoding).
DenseMatrix reconstruct(const DiffusionState& state,
                        const DenseMatrix& condition,
                        const DenoiserParams& params, DenoiserRole role);

// One posterior-parameterized reverse step t -> t-1. Deterministic
// (mean-only) unless stochastic, which adds N(0, posterior_variance_t I)
// noise for t > 1. The t = 1 step is always deterministic and returns
// tilde_e0 exactly.
DiffusionState reverse_step(const DiffusionState& state,
                            const DenseMatrix& tilde_e0,
                            const NoiseSchedule& sch, Rng& rng,
                            bool stochastic);

// Checkpoint format: magic "DDRMDNZ1", three u32 LE (dim, hidden width,
// affine layer count per MLP), then theta's layers then psi's layers,
// each as weight matrix then bias, f32 LE row-major.
void save_denoiser(const DenoiserParams& params, const std::string& path);
DenoiserParams load_denoiser(const std::string& path);

}  // namespace ddrm

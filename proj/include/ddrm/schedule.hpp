#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace ddrm {

enum class ScheduleKind { kLinearVariance, kLinear, kCosine, kBinomial };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);

struct ScheduleConfig {
  std::size_t steps = 20;     // T
  double noise_scale = 1e-3;  // s
  double alpha_min = 1e-4;
  double alpha_max = 1e-2;
  ScheduleKind kind = ScheduleKind::kLinearVariance;
};

// Precomputed beta_t / alpha_t / alpha_bar_t / posterior-variance
// sequences for t = 1..T, with the alpha_bar_0 := 1 convention at
// index 0 so the final reverse step is deterministic.
//
// linear_variance ramps the total variance directly:
//   1 - alpha_bar_t = s * [a_min + (t-1)/(T-1) * (a_max - a_min)]
// (T = 1 collapses to the a_min endpoint). The alternative kinds ramp
// beta_t instead: linear reuses the same ramp for beta, cosine uses the
// squared-cosine alpha_bar profile, binomial uses beta_t = 1/(T-t+1).
// Alternative kinds clip alpha_bar against a geometric floor ending at
// 1e-5 so alpha_bar_T stays positive and strictly decreasing.
class NoiseSchedule {
 public:
  static NoiseSchedule build(const ScheduleConfig& cfg);

  std::size_t steps() const { return steps_; }
  const ScheduleConfig& config() const { return cfg_; }

  // Accessors accept t in 1..T (alpha_bar additionally accepts 0).
  double beta(std::size_t t) const { return beta_.at(t); }
  double alpha(std::size_t t) const { return alpha_.at(t); }
  double alpha_bar(std::size_t t) const { return alpha_bar_.at(t); }
  // Kept alongside alpha_bar to avoid 1 - alpha_bar cancellation at the
  // tiny noise levels this model runs at.
  double one_minus_alpha_bar(std::size_t t) const { return total_var_.at(t); }
  double posterior_variance(std::size_t t) const { return post_var_.at(t); }

  // Coefficients of x_t and of the predicted x_0 in the reverse mean.
  std::pair<double, double> reverse_mean_coeffs(std::size_t t) const;

 private:
  std::size_t steps_ = 0;
  ScheduleConfig cfg_;
  std::vector<double> beta_;       // [0] unused
  std::vector<double> alpha_;      // [0] unused
  std::vector<double> alpha_bar_;  // [0] = 1
  std::vector<double> total_var_;  // 1 - alpha_bar, [0] = 0
  std::vector<double> post_var_;   // beta~, [0] unused, [1] = 0
};

}  // namespace ddrm

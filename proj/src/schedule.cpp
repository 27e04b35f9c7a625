#include "ddrm/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace ddrm {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAlphaBarFloorAtT = 1e-5;
constexpr double kBetaClip = 0.999;

}  // namespace

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "linear_variance") return ScheduleKind::kLinearVariance;
  if (s == "linear") return ScheduleKind::kLinear;
  if (s == "cosine") return ScheduleKind::kCosine;
  if (s == "binomial") return ScheduleKind::kBinomial;
  throw std::invalid_argument("unknown schedule kind: " + s);
}

std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::kLinearVariance: return "linear_variance";
    case ScheduleKind::kLinear: return "linear";
    case ScheduleKind::kCosine: return "cosine";
    case ScheduleKind::kBinomial: return "binomial";
  }
  return "?";
}

NoiseSchedule NoiseSchedule::build(const ScheduleConfig& cfg) {
  const std::size_t T = cfg.steps;
  if (T < 1) throw std::invalid_argument("schedule: T must be >= 1");
  if (!(cfg.alpha_min > 0.0) || !(cfg.alpha_min < cfg.alpha_max)) {
    throw std::invalid_argument("schedule: need 0 < alpha_min < alpha_max");
  }
  if (!(cfg.noise_scale > 0.0) || !(cfg.noise_scale < 1.0)) {
    throw std::invalid_argument("schedule: need 0 < s < 1");
  }

  NoiseSchedule sch;
  sch.steps_ = T;
  sch.cfg_ = cfg;
  sch.beta_.assign(T + 1, 0.0);
  sch.alpha_.assign(T + 1, 0.0);
  sch.alpha_bar_.assign(T + 1, 1.0);
  sch.total_var_.assign(T + 1, 0.0);
  sch.post_var_.assign(T + 1, 0.0);

  auto ramp = [&](std::size_t t) {
    // (t-1)/(T-1) defined as 0 when T = 1.
    const double frac = (T == 1) ? 0.0 : double(t - 1) / double(T - 1);
    return cfg.alpha_min + frac * (cfg.alpha_max - cfg.alpha_min);
  };

  if (cfg.kind == ScheduleKind::kLinearVariance) {
    for (std::size_t t = 1; t <= T; ++t) {
      const double x = cfg.noise_scale * ramp(t);  // 1 - alpha_bar_t
      sch.total_var_[t] = x;
      sch.alpha_bar_[t] = 1.0 - x;
    }
  } else {
    // Build a beta sequence, then accumulate. total_var uses the
    // recurrence x_t = x_{t-1} + beta_t * (1 - x_{t-1}) to stay exact
    // when the betas are tiny.
    std::vector<double> beta(T + 1, 0.0);
    if (cfg.kind == ScheduleKind::kLinear) {
      for (std::size_t t = 1; t <= T; ++t)
        beta[t] = cfg.noise_scale * ramp(t);
    } else if (cfg.kind == ScheduleKind::kCosine) {
      auto f = [&](double u) {
        const double c = std::cos((u + 0.008) / 1.008 * kPi / 2.0);
        return c * c;
      };
      const double f0 = f(0.0);
      double prev = 1.0;
      for (std::size_t t = 1; t <= T; ++t) {
        const double ab = f(double(t) / double(T)) / f0;
        beta[t] = std::min(1.0 - ab / prev, kBetaClip);
        prev = ab;
      }
    } else {  // kBinomial
      for (std::size_t t = 1; t <= T; ++t)
        beta[t] = std::min(1.0 / double(T - t + 1), kBetaClip);
    }
    for (std::size_t t = 1; t <= T; ++t) {
      const double ab = sch.alpha_bar_[t - 1] * (1.0 - beta[t]);
      // Geometric floor hitting kAlphaBarFloorAtT at t = T; the max of
      // two strictly decreasing sequences stays strictly decreasing.
      const double floor_t =
          std::exp(std::log(kAlphaBarFloorAtT) * double(t) / double(T));
      sch.alpha_bar_[t] = std::max(ab, floor_t);
      if (sch.alpha_bar_[t] == ab) {
        sch.total_var_[t] =
            sch.total_var_[t - 1] + beta[t] * (1.0 - sch.total_var_[t - 1]);
      } else {
        sch.total_var_[t] = 1.0 - sch.alpha_bar_[t];
      }
    }
  }

  for (std::size_t t = 1; t <= T; ++t) {
    const double x = sch.total_var_[t];
    const double x_prev = sch.total_var_[t - 1];
    if (!(x > 0.0) || !(x < 1.0) || !(x > x_prev)) {
      throw std::invalid_argument(
          "schedule: parameters give a non-monotone or out-of-range "
          "alpha_bar sequence at t=" + std::to_string(t));
    }
    // beta_t = 1 - alpha_bar_t / alpha_bar_{t-1} without cancellation.
    sch.beta_[t] = (x - x_prev) / (1.0 - x_prev);
    sch.alpha_[t] = 1.0 - sch.beta_[t];
    if (!(sch.alpha_[t] > 0.0) || !(sch.alpha_[t] < 1.0)) {
      throw std::invalid_argument("schedule: alpha_t out of (0,1) at t=" +
                                  std::to_string(t));
    }
    sch.post_var_[t] = (t == 1) ? 0.0 : sch.beta_[t] * x_prev / x;
  }
  return sch;
}

std::pair<double, double> NoiseSchedule::reverse_mean_coeffs(
    std::size_t t) const {
  if (t < 1 || t > steps_) {
    throw std::invalid_argument("reverse_mean_coeffs: t out of range");
  }
  const double x = total_var_[t];
  const double x_prev = total_var_[t - 1];
  const double c_xt = std::sqrt(alpha_[t]) * x_prev / x;
  const double c_x0 = std::sqrt(alpha_bar_[t - 1]) * beta_[t] / x;
  return {c_xt, c_x0};
}

}  // namespace ddrm

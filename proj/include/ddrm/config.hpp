#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddrm/backend.hpp"
#include "ddrm/inference.hpp"
#include "ddrm/schedule.hpp"
#include "ddrm/training.hpp"

namespace ddrm {

// Config or usage problems map to exit status 2 at the CLI boundary.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NoiseSetting { kNone, kNatural, kRandom };

enum class SweepAxis {
  kNoiseRatio,
  kDiffusionSteps,
  kLambda,
  kGamma,
  kNoiseScale,
};
SweepAxis sweep_axis_from_string(const std::string& s);
std::string to_string(SweepAxis axis);

// Flat key-value run configuration; see docs/README for the key list.
struct RunConfig {
  std::string dataset_path;   // 4-field TSV
  std::string manifest_path;  // pre-split 6-field TSV (takes precedence)
  std::string out_dir = "out";
  std::uint64_t seed = 1;

  NoiseSetting noise = NoiseSetting::kNone;
  double noise_ratio = 0.2;

  BackendConfig backend;
  TrainConfig train;
  InferenceConfig infer;
  std::vector<std::size_t> eval_ks = {10, 20};

  SweepAxis sweep_axis = SweepAxis::kNoiseRatio;
  std::vector<double> sweep_values = {0.0, 0.2, 0.4, 0.6};
  std::vector<std::uint64_t> sweep_seeds = {1, 2, 3, 4, 5};
  std::size_t sweep_infer_repeats = 1;

  // Canonical sorted key=value serialization of the effective config.
  std::string canonical() const;
  // FNV-1a hash of canonical(), as 16 hex digits.
  std::string fingerprint() const;
};

// Parses `key = value` lines ('#' comments). Unknown keys are errors.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text,
                            const std::string& origin);
// Applies a single key=value override.
void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value);

// Loads the configured dataset view: manifest verbatim, or raw TSV
// split chronologically with the configured noise applied (random
// noise draws from sub-stream "noise" of the run seed).
InteractionDataset load_dataset_for_run(const RunConfig& cfg);

}  // namespace ddrm

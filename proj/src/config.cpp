#include "ddrm/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ddrm {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': bad number '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': bad integer '" + v + "'");
  }
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("config key '" + key + "': bad flag '" + v + "'");
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& v, const std::string& key,
                          F item_parser) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (!part.empty()) out.push_back(item_parser(part, key));
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

}  // namespace

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "noise_ratio") return SweepAxis::kNoiseRatio;
  if (s == "diffusion_steps") return SweepAxis::kDiffusionSteps;
  if (s == "lambda") return SweepAxis::kLambda;
  if (s == "gamma") return SweepAxis::kGamma;
  if (s == "noise_scale") return SweepAxis::kNoiseScale;
  throw ConfigError("unknown sweep axis: " + s);
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kNoiseRatio: return "noise_ratio";
    case SweepAxis::kDiffusionSteps: return "diffusion_steps";
    case SweepAxis::kLambda: return "lambda";
    case SweepAxis::kGamma: return "gamma";
    case SweepAxis::kNoiseScale: return "noise_scale";
  }
  return "?";
}

void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value) {
  if (key == "dataset") {
    cfg.dataset_path = value;
  } else if (key == "manifest") {
    cfg.manifest_path = value;
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else if (key == "seed") {
    cfg.seed = to_u64(value, key);
  } else if (key == "noise") {
    if (value == "none") {
      cfg.noise = NoiseSetting::kNone;
    } else if (value == "natural") {
      cfg.noise = NoiseSetting::kNatural;
    } else if (value == "random") {
      cfg.noise = NoiseSetting::kRandom;
    } else {
      throw ConfigError("config key 'noise': expected none|natural|random");
    }
  } else if (key == "noise_ratio") {
    cfg.noise_ratio = to_double(value, key);
  } else if (key == "backend") {
    if (value == "mf_bpr") {
      cfg.backend.kind = BackendKind::kMfBpr;
    } else if (value == "light_graph") {
      cfg.backend.kind = BackendKind::kLightGraph;
    } else {
      throw ConfigError("config key 'backend': expected mf_bpr|light_graph");
    }
  } else if (key == "backend_dim") {
    cfg.backend.dim = to_u64(value, key);
  } else if (key == "backend_lr") {
    cfg.backend.learning_rate = to_double(value, key);
  } else if (key == "backend_l2") {
    cfg.backend.l2 = to_double(value, key);
  } else if (key == "backend_epochs") {
    cfg.backend.epochs = to_u64(value, key);
  } else if (key == "backend_batch") {
    cfg.backend.batch_size = to_u64(value, key);
  } else if (key == "backend_layers") {
    cfg.backend.propagation_layers = to_u64(value, key);
  } else if (key == "train_lr") {
    cfg.train.learning_rate = to_double(value, key);
  } else if (key == "train_epochs") {
    cfg.train.epochs = to_u64(value, key);
  } else if (key == "train_batch") {
    cfg.train.batch_size = to_u64(value, key);
  } else if (key == "train_lambda") {
    cfg.train.lambda = to_double(value, key);
  } else if (key == "train_gamma") {
    cfg.train.gamma = to_double(value, key);
  } else if (key == "train_reweight") {
    cfg.train.use_reweight = to_bool(value, key);
  } else if (key == "train_patience") {
    cfg.train.patience = to_u64(value, key);
  } else if (key == "train_hidden_width") {
    cfg.train.hidden_width = to_u64(value, key);
  } else if (key == "train_hidden_layers") {
    cfg.train.hidden_layers = to_u64(value, key);
  } else if (key == "steps") {
    cfg.train.schedule.steps = to_u64(value, key);
  } else if (key == "noise_scale") {
    cfg.train.schedule.noise_scale = to_double(value, key);
  } else if (key == "alpha_min") {
    cfg.train.schedule.alpha_min = to_double(value, key);
  } else if (key == "alpha_max") {
    cfg.train.schedule.alpha_max = to_double(value, key);
  } else if (key == "schedule") {
    try {
      cfg.train.schedule.kind = schedule_kind_from_string(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "eval_ks") {
    cfg.eval_ks = parse_list<std::size_t>(
        value, key,
        [](const std::string& v, const std::string& k) {
          return static_cast<std::size_t>(to_u64(v, k));
        });
  } else if (key == "infer_start") {
    if (value == "average") {
      cfg.infer.start = InferenceStart::kAverage;
    } else if (value == "pure_noise") {
      cfg.infer.start = InferenceStart::kPureNoise;
    } else {
      throw ConfigError("config key 'infer_start': expected average|pure_noise");
    }
  } else if (key == "infer_stochastic") {
    cfg.infer.stochastic = to_bool(value, key);
  } else if (key == "sweep_axis") {
    cfg.sweep_axis = sweep_axis_from_string(value);
  } else if (key == "sweep_values") {
    cfg.sweep_values = parse_list<double>(value, key, to_double);
  } else if (key == "sweep_seeds") {
    cfg.sweep_seeds = parse_list<std::uint64_t>(value, key, to_u64);
  } else if (key == "sweep_infer_repeats") {
    cfg.sweep_infer_repeats = to_u64(value, key);
  } else {
    throw ConfigError("unknown config key: " + key);
  }
}

RunConfig parse_config_text(const std::string& text,
                            const std::string& origin) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + " line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    apply_override(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string RunConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["dataset"] = dataset_path;
  kv["manifest"] = manifest_path;
  kv["seed"] = std::to_string(seed);
  kv["noise"] = noise == NoiseSetting::kNone
                    ? "none"
                    : (noise == NoiseSetting::kNatural ? "natural" : "random");
  kv["noise_ratio"] = fmt_double(noise_ratio);
  kv["backend"] =
      backend.kind == BackendKind::kMfBpr ? "mf_bpr" : "light_graph";
  kv["backend_dim"] = std::to_string(backend.dim);
  kv["backend_lr"] = fmt_double(backend.learning_rate);
  kv["backend_l2"] = fmt_double(backend.l2);
  kv["backend_epochs"] = std::to_string(backend.epochs);
  kv["backend_batch"] = std::to_string(backend.batch_size);
  kv["backend_layers"] = std::to_string(backend.propagation_layers);
  kv["train_lr"] = fmt_double(train.learning_rate);
  kv["train_epochs"] = std::to_string(train.epochs);
  kv["train_batch"] = std::to_string(train.batch_size);
  kv["train_lambda"] = fmt_double(train.lambda);
  kv["train_gamma"] = fmt_double(train.gamma);
  kv["train_reweight"] = train.use_reweight ? "1" : "0";
  kv["train_patience"] = std::to_string(train.patience);
  kv["train_hidden_width"] = std::to_string(train.hidden_width);
  kv["train_hidden_layers"] = std::to_string(train.hidden_layers);
  kv["steps"] = std::to_string(train.schedule.steps);
  kv["noise_scale"] = fmt_double(train.schedule.noise_scale);
  kv["alpha_min"] = fmt_double(train.schedule.alpha_min);
  kv["alpha_max"] = fmt_double(train.schedule.alpha_max);
  kv["schedule"] = to_string(train.schedule.kind);
  {
    std::string s;
    for (auto k : eval_ks) s += (s.empty() ? "" : ",") + std::to_string(k);
    kv["eval_ks"] = s;
  }
  kv["infer_start"] =
      infer.start == InferenceStart::kAverage ? "average" : "pure_noise";
  kv["infer_stochastic"] = infer.stochastic ? "1" : "0";
  kv["sweep_axis"] = to_string(sweep_axis);
  {
    std::string s;
    for (auto v : sweep_values) s += (s.empty() ? "" : ",") + fmt_double(v);
    kv["sweep_values"] = s;
  }
  {
    std::string s;
    for (auto v : sweep_seeds) s += (s.empty() ? "" : ",") + std::to_string(v);
    kv["sweep_seeds"] = s;
  }
  kv["sweep_infer_repeats"] = std::to_string(sweep_infer_repeats);

  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::string RunConfig::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

InteractionDataset load_dataset_for_run(const RunConfig& cfg) {
  if (!cfg.manifest_path.empty()) {
    if (!std::filesystem::exists(cfg.manifest_path)) {
      throw ConfigError("manifest path does not exist: " + cfg.manifest_path);
    }
    return load_manifest(cfg.manifest_path);
  }
  if (cfg.dataset_path.empty()) {
    throw ConfigError("config needs either 'dataset' or 'manifest'");
  }
  if (!std::filesystem::exists(cfg.dataset_path)) {
    throw ConfigError("dataset path does not exist: " + cfg.dataset_path);
  }
  InteractionDataset ds = load_interactions(cfg.dataset_path);
  chronological_split(ds);
  if (cfg.noise == NoiseSetting::kNatural) {
    apply_natural_noise(ds);
  } else if (cfg.noise == NoiseSetting::kRandom) {
    Rng rng = derive_rng(cfg.seed, "noise");
    apply_random_noise(ds, cfg.noise_ratio, rng);
  }
  return ds;
}

}  // namespace ddrm

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddrm/commands.hpp"

namespace {

struct CliArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  bool seed_set = false;
  std::uint64_t seed = 0;
};

ddrm::RunConfig build_config(const CliArgs& args) {
  ddrm::RunConfig cfg;
  if (!args.config_path.empty()) {
    cfg = ddrm::parse_config_file(args.config_path);
  }
  for (const auto& kv : args.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ddrm::ConfigError("--set expects key=value, got '" + kv + "'");
    }
    ddrm::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.seed_set) cfg.seed = args.seed;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Denoising diffusion recommender pipeline"};
  app.require_subcommand(1);

  CliArgs args;
  app.add_option("--config", args.config_path, "Key-value config file");
  app.add_option("--out", args.out_dir, "Output directory override");
  auto* seed_opt = app.add_option("--seed", args.seed, "Top-level seed");
  app.add_option("--set", args.overrides,
                 "Config override key=value (repeatable)");

  auto* pretrain = app.add_subcommand(
      "pretrain", "Train backend embeddings and write the checkpoint");
  auto* train = app.add_subcommand(
      "train", "Train the denoiser against a frozen embedding checkpoint");
  auto* evaluate = app.add_subcommand(
      "evaluate", "Rank, write recommendations and metric reports");
  auto* sweep =
      app.add_subcommand("sweep", "Run a hyper-parameter or noise sweep");
  auto* inject = app.add_subcommand(
      "inject-noise", "Write the noisy split manifest for the config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  args.seed_set = seed_opt->count() > 0;

  try {
    const ddrm::RunConfig cfg = build_config(args);
    if (pretrain->parsed()) {
      ddrm::cmd_pretrain(cfg);
    } else if (train->parsed()) {
      ddrm::cmd_train(cfg);
    } else if (evaluate->parsed()) {
      ddrm::cmd_evaluate(cfg);
    } else if (sweep->parsed()) {
      ddrm::cmd_sweep(cfg);
    } else if (inject->parsed()) {
      ddrm::cmd_inject_noise(cfg);
    }
  } catch (const ddrm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "ddrm/commands.hpp"
#include "support/fixtures.hpp"

using namespace ddrm;
using test::TempDir;

namespace {

struct CmdResult {
  int exit_code;
  std::string output;
};

CmdResult run_cli(const TempDir& dir, const std::string& args) {
  const std::string log = dir.file("cli_output.txt");
  const std::string cmd =
      std::string(DDRM_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int rc = std::system(cmd.c_str());
  CmdResult res;
  res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  res.output = test::read_file(log);
  return res;
}

// Small planted dataset + config sized so CLI runs stay fast.
std::string write_fixture(const TempDir& dir, const std::string& out_sub) {
  const auto recs = test::planted_two_block_records(40, 30, 7);
  test::write_records_tsv(recs, dir.file("data.tsv"));
  const std::string cfg_path = dir.file("run.cfg");
  std::ofstream cfg(cfg_path);
  cfg << "dataset = " << dir.file("data.tsv") << "\n"
      << "out_dir = " << dir.file(out_sub) << "\n"
      << "seed = 3\n"
      << "backend_dim = 8\n"
      << "backend_epochs = 20\n"
      << "backend_batch = 64\n"
      << "train_epochs = 3\n"
      << "train_batch = 32\n"
      << "train_patience = 0\n"
      << "steps = 5\n";
  return cfg_path;
}

}  // namespace

TEST_CASE("pretrain writes a checkpoint whose header matches the dataset") {
  TempDir dir("cli_pre");
  const std::string cfg = write_fixture(dir, "out");
  const CmdResult r = run_cli(dir, "--config " + cfg + " pretrain");
  CHECK(r.exit_code == 0);

  const std::string bytes =
      test::read_file(dir.file("out/embeddings.ckpt"));
  REQUIRE(bytes.size() > 20);
  CHECK(bytes.substr(0, 8) == "DDRMEMB1");
  CHECK(std::uint8_t(bytes[8]) == 40);   // users
  CHECK(std::uint8_t(bytes[12]) == 30);  // items
  CHECK(std::uint8_t(bytes[16]) == 8);   // dim
  CHECK(test::read_file(dir.file("out/pretrain_log.csv")).find("epoch,loss") !=
        std::string::npos);
}

TEST_CASE("missing dataset path exits with status 2 naming the path") {
  TempDir dir("cli_missing");
  const std::string cfg_path = dir.file("bad.cfg");
  {
    std::ofstream cfg(cfg_path);
    cfg << "dataset = " << dir.file("nope.tsv") << "\n";
  }
  const CmdResult r = run_cli(dir, "--config " + cfg_path + " pretrain");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("nope.tsv") != std::string::npos);
}

TEST_CASE("usage errors exit with status 2") {
  TempDir dir("cli_usage");
  CHECK(run_cli(dir, "frobnicate").exit_code == 2);
  CHECK(run_cli(dir, "").exit_code == 2);
  CHECK(run_cli(dir, "--help").exit_code == 0);
  const std::string cfg = write_fixture(dir, "out");
  CHECK(run_cli(dir, "--config " + cfg + " --set sweep_axis=bogus sweep")
            .exit_code == 2);
  CHECK(run_cli(dir, "--config " + cfg + " --set no_such_key=1 pretrain")
            .exit_code == 2);
}

TEST_CASE("pretrain reruns are byte-identical for the same seed") {
  TempDir dir("cli_det");
  const std::string cfg = write_fixture(dir, "out_a");
  CHECK(run_cli(dir, "--config " + cfg + " pretrain").exit_code == 0);
  CHECK(run_cli(dir, "--config " + cfg + " --out " + dir.file("out_b") +
                         " pretrain")
            .exit_code == 0);
  CHECK(test::read_file(dir.file("out_a/embeddings.ckpt")) ==
        test::read_file(dir.file("out_b/embeddings.ckpt")));
  CHECK(test::read_file(dir.file("out_a/pretrain_log.csv")) ==
        test::read_file(dir.file("out_b/pretrain_log.csv")));
}

TEST_CASE("train validates checkpoint dimensions before training") {
  TempDir dir("cli_dim");
  const std::string cfg = write_fixture(dir, "out");
  REQUIRE(run_cli(dir, "--config " + cfg + " pretrain").exit_code == 0);
  const CmdResult r =
      run_cli(dir, "--config " + cfg + " --set backend_dim=16 train");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("does not match") != std::string::npos);
}

TEST_CASE("train with zero epochs writes the initialization checkpoint") {
  TempDir dir("cli_init");
  const std::string cfg = write_fixture(dir, "out");
  REQUIRE(run_cli(dir, "--config " + cfg + " pretrain").exit_code == 0);
  // The initialization depends only on the seed, not the learning rate.
  CHECK(run_cli(dir, "--config " + cfg +
                         " --set train_epochs=0 --set train_lr=0.5 train")
            .exit_code == 0);
  const std::string a = test::read_file(dir.file("out/denoiser.ckpt"));
  CHECK(run_cli(dir, "--config " + cfg +
                         " --set train_epochs=0 --set train_lr=0.001 train")
            .exit_code == 0);
  const std::string b = test::read_file(dir.file("out/denoiser.ckpt"));
  CHECK(a == b);
  CHECK(a.substr(0, 8) == "DDRMDNZ1");
}

TEST_CASE("train log carries one row per epoch") {
  TempDir dir("cli_log");
  const std::string cfg = write_fixture(dir, "out");
  REQUIRE(run_cli(dir, "--config " + cfg + " pretrain").exit_code == 0);
  REQUIRE(run_cli(dir, "--config " + cfg + " train").exit_code == 0);
  const std::string log = test::read_file(dir.file("out/train_log.csv"));
  std::stringstream ss(log);
  std::string line;
  std::size_t rows = 0;
  bool header_seen = false;
  while (std::getline(ss, line)) {
    if (line.rfind("#", 0) == 0) continue;
    if (line.rfind("epoch,", 0) == 0) {
      header_seen = true;
      CHECK(line == "epoch,l_re,l_bpr,mean_w,recall20_valid,seconds");
      continue;
    }
    if (!line.empty()) ++rows;
  }
  CHECK(header_seen);
  CHECK(rows == 3);  // train_epochs in the fixture config
}

TEST_CASE("evaluate is deterministic and honors the pure-noise flag") {
  TempDir dir("cli_eval");
  const std::string cfg = write_fixture(dir, "out");
  REQUIRE(run_cli(dir, "--config " + cfg + " pretrain").exit_code == 0);
  REQUIRE(run_cli(dir, "--config " + cfg + " train").exit_code == 0);

  REQUIRE(run_cli(dir, "--config " + cfg + " evaluate").exit_code == 0);
  const std::string rec_a = test::read_file(dir.file("out/recommendations.csv"));
  const std::string met_a = test::read_file(dir.file("out/metrics.csv"));
  REQUIRE(run_cli(dir, "--config " + cfg + " evaluate").exit_code == 0);
  CHECK(test::read_file(dir.file("out/recommendations.csv")) == rec_a);
  CHECK(test::read_file(dir.file("out/metrics.csv")) == met_a);
  CHECK(rec_a.find("user_id,rank,item_id,score") != std::string::npos);
  CHECK(met_a.find("metric,k,value,n_users,config_hash") != std::string::npos);

  // pure-noise inference routes through a different start point
  REQUIRE(run_cli(dir, "--config " + cfg +
                           " --set infer_start=pure_noise evaluate")
              .exit_code == 0);
  CHECK(test::read_file(dir.file("out/recommendations.csv")) != rec_a);
}

TEST_CASE("evaluate without checkpoints is a config error") {
  TempDir dir("cli_nockpt");
  const std::string cfg = write_fixture(dir, "out");
  CHECK(run_cli(dir, "--config " + cfg + " evaluate").exit_code == 2);
  REQUIRE(run_cli(dir, "--config " + cfg + " pretrain").exit_code == 0);
  CHECK(run_cli(dir, "--config " + cfg + " evaluate").exit_code == 2);
}

TEST_CASE("sweep emits one row per value, seed and model") {
  TempDir dir("cli_sweep");
  const std::string cfg = write_fixture(dir, "out");
  const CmdResult r = run_cli(
      dir, "--config " + cfg +
               " --set sweep_axis=diffusion_steps --set sweep_values=2,4,6"
               " --set sweep_seeds=1,2 --set backend_epochs=5"
               " --set train_epochs=1 sweep");
  CHECK(r.exit_code == 0);
  const std::string csv = test::read_file(dir.file("out/sweep.csv"));
  std::stringstream ss(csv);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(ss, line)) {
    if (line.rfind("#", 0) == 0 || line.rfind("axis,", 0) == 0 ||
        line.empty())
      continue;
    ++rows;
  }
  CHECK(rows == 3 * 2 * 2);  // values x seeds x {backend, ddrm}
}

TEST_CASE("lambda sweep accepts the grid values") {
  TempDir dir("cli_lambda");
  const std::string cfg = write_fixture(dir, "out");
  const CmdResult r = run_cli(
      dir, "--config " + cfg +
               " --set sweep_axis=lambda"
               " --set sweep_values=0.1,0.2,0.3,0.4,0.5,0.6"
               " --set sweep_seeds=1 --set backend_epochs=5"
               " --set train_epochs=1 sweep");
  CHECK(r.exit_code == 0);
}

TEST_CASE("inject-noise writes a manifest that reloads identically") {
  TempDir dir("cli_inject");
  const std::string cfg = write_fixture(dir, "out");
  const CmdResult r = run_cli(
      dir, "--config " + cfg +
               " --set noise=random --set noise_ratio=0.3 inject-noise");
  CHECK(r.exit_code == 0);

  // The manifest is a valid dataset view for the pipeline.
  const CmdResult pre = run_cli(
      dir, "--config " + cfg + " --set manifest=" + dir.file("out/manifest.tsv") +
               " --out " + dir.file("out_m") + " pretrain");
  CHECK(pre.exit_code == 0);

  const InteractionDataset direct = [&] {
    RunConfig rc = parse_config_file(cfg);
    rc.noise = NoiseSetting::kRandom;
    rc.noise_ratio = 0.3;
    return load_dataset_for_run(rc);
  }();
  const InteractionDataset via_manifest =
      load_manifest(dir.file("out/manifest.tsv"));
  CHECK(via_manifest.train.size() == direct.train.size());
  CHECK(via_manifest.valid.size() == direct.valid.size());
  CHECK(via_manifest.test.size() == direct.test.size());
}

TEST_CASE("every csv carries the config fingerprint header") {
  TempDir dir("cli_fp");
  const std::string cfg_path = write_fixture(dir, "out");
  REQUIRE(run_cli(dir, "--config " + cfg_path + " pretrain").exit_code == 0);
  REQUIRE(run_cli(dir, "--config " + cfg_path + " train").exit_code == 0);
  REQUIRE(run_cli(dir, "--config " + cfg_path + " evaluate").exit_code == 0);
  const RunConfig rc = parse_config_file(cfg_path);
  const std::string want = "# config_hash=" + rc.fingerprint() + " seed=3";
  for (const char* f :
       {"out/pretrain_log.csv", "out/train_log.csv", "out/metrics.csv",
        "out/metrics_backend.csv", "out/recommendations.csv"}) {
    const std::string body = test::read_file(dir.file(f));
    CHECK(body.rfind(want, 0) == 0);
  }
}

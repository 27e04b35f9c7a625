#include "ddrm/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ddrm/experiment.hpp"

namespace ddrm {

namespace {

namespace fs = std::filesystem;

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string out_path(const RunConfig& cfg, const char* file) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / file).string();
}

std::ofstream open_csv(const RunConfig& cfg, const char* file) {
  const std::string path = out_path(cfg, file);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# config_hash=" << cfg.fingerprint() << " seed=" << cfg.seed
      << "\n";
  return out;
}

InteractionDataset load_and_report(const RunConfig& cfg) {
  InteractionDataset ds = load_dataset_for_run(cfg);
  std::cout << "dataset: " << ds.num_users << " users, " << ds.num_items
            << " items | train " << ds.train.size() << ", valid "
            << ds.valid.size() << ", test " << ds.test.size() << "\n";
  if (!ds.users_without_train.empty()) {
    std::cerr << "note: " << ds.users_without_train.size()
              << " user(s) have no training positives and are skipped in "
                 "evaluation\n";
  }
  return ds;
}

EmbeddingTable load_table_checked(const RunConfig& cfg,
                                  const InteractionDataset& ds) {
  const std::string path = out_path(cfg, kEmbeddingCheckpointFile);
  if (!fs::exists(path)) {
    throw ConfigError("embedding checkpoint not found: " + path);
  }
  EmbeddingTable table = load_embeddings(path);
  if (table.num_users() != ds.num_users ||
      table.num_items() != ds.num_items) {
    throw ConfigError(
        "embedding checkpoint shape (" + std::to_string(table.num_users()) +
        "x" + std::to_string(table.num_items()) +
        ") does not match dataset (" + std::to_string(ds.num_users) + "x" +
        std::to_string(ds.num_items) + ")");
  }
  if (table.dim() != cfg.backend.dim) {
    throw ConfigError("embedding checkpoint dim " +
                      std::to_string(table.dim()) +
                      " does not match configured backend_dim " +
                      std::to_string(cfg.backend.dim));
  }
  return table;
}

void print_report(const std::string& name, const MetricReport& rep) {
  std::cout << name << " (" << rep.n_users << " users)\n";
  for (std::size_t i = 0; i < rep.ks.size(); ++i) {
    std::cout << "  recall@" << rep.ks[i] << " = " << fmt_g(rep.mean_recall[i])
              << "   ndcg@" << rep.ks[i] << " = " << fmt_g(rep.mean_ndcg[i])
              << "\n";
  }
}

void write_metrics_csv(const RunConfig& cfg, const char* file,
                       const MetricReport& rep) {
  std::ofstream out = open_csv(cfg, file);
  out << "metric,k,value,n_users,config_hash\n";
  for (std::size_t i = 0; i < rep.ks.size(); ++i) {
    out << "recall," << rep.ks[i] << ',' << fmt_g(rep.mean_recall[i]) << ','
        << rep.n_users << ',' << cfg.fingerprint() << "\n";
  }
  for (std::size_t i = 0; i < rep.ks.size(); ++i) {
    out << "ndcg," << rep.ks[i] << ',' << fmt_g(rep.mean_ndcg[i]) << ','
        << rep.n_users << ',' << cfg.fingerprint() << "\n";
  }
}

}  // namespace

void cmd_pretrain(const RunConfig& cfg) {
  if (cfg.backend.kind == BackendKind::kLightGraph &&
      cfg.backend.propagation_layers < 1) {
    throw ConfigError("light_graph backend needs backend_layers >= 1");
  }
  const InteractionDataset ds = load_and_report(cfg);
  Rng rng = derive_rng(cfg.seed, "backend");
  const PretrainResult result = pretrain(ds, cfg.backend, rng);
  save_embeddings(result.table, out_path(cfg, kEmbeddingCheckpointFile));

  std::ofstream log = open_csv(cfg, kPretrainLogFile);
  log << "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
    log << e << ',' << fmt_g(result.loss_trace[e]) << "\n";
  }

  auto write_map = [&](const char* file,
                       const std::vector<std::int64_t>& ids) {
    std::ofstream out(out_path(cfg, file));
    out << "# dense_id\toriginal_id\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
      out << i << '\t' << ids[i] << '\n';
  };
  write_map("user_map.tsv", ds.user_ids);
  write_map("item_map.tsv", ds.item_ids);

  std::cout << "pretrained " << ds.num_users << "x" << ds.num_items
            << " embeddings (d=" << cfg.backend.dim << ") -> "
            << out_path(cfg, kEmbeddingCheckpointFile) << "\n";
  if (!result.loss_trace.empty()) {
    std::cout << "final epoch loss: " << fmt_g(result.loss_trace.back())
              << "\n";
  }
}

void cmd_train(const RunConfig& cfg) {
  const InteractionDataset ds = load_and_report(cfg);
  const EmbeddingTable table = load_table_checked(cfg, ds);
  const TrainResult result =
      train(ds, table, cfg.train, derive_seed(cfg.seed, "ddrm"));
  save_denoiser(result.params, out_path(cfg, kDenoiserCheckpointFile));

  std::ofstream log = open_csv(cfg, kTrainLogFile);
  log << "epoch,l_re,l_bpr,mean_w,recall20_valid,seconds\n";
  for (const auto& r : result.trace) {
    log << r.epoch << ',' << fmt_g(r.mean_l_re) << ',' << fmt_g(r.mean_l_bpr)
        << ',' << fmt_g(r.mean_w) << ',' << fmt_g(r.valid_recall20) << ','
        << fmt_g(r.seconds) << "\n";
  }

  std::cout << "trained denoiser for " << result.trace.size()
            << " epoch(s) -> " << out_path(cfg, kDenoiserCheckpointFile)
            << "\n";
  if (!result.trace.empty()) {
    std::cout << "last valid recall@20: "
              << fmt_g(result.trace.back().valid_recall20) << "\n";
  }
}

void cmd_evaluate(const RunConfig& cfg) {
  const InteractionDataset ds = load_and_report(cfg);
  const EmbeddingTable table = load_table_checked(cfg, ds);
  const std::string dnz_path = out_path(cfg, kDenoiserCheckpointFile);
  if (!fs::exists(dnz_path)) {
    throw ConfigError("denoiser checkpoint not found: " + dnz_path);
  }
  const DenoiserParams params = load_denoiser(dnz_path);
  if (params.dim != table.dim()) {
    throw ConfigError("denoiser dim " + std::to_string(params.dim) +
                      " does not match embedding dim " +
                      std::to_string(table.dim()));
  }
  const NoiseSchedule sch = NoiseSchedule::build(cfg.train.schedule);
  const std::string fp = cfg.fingerprint();
  const std::uint64_t eval_seed = derive_seed(cfg.seed, "eval");

  const MetricReport backend_rep =
      evaluate(ds, DotProductScorer(table), cfg.eval_ks, fp);
  const DiffusionScorer scorer(ds, table, params, sch, cfg.infer, eval_seed);
  const MetricReport ddrm_rep = evaluate(ds, scorer, cfg.eval_ks, fp);

  // Recommendations from the same per-user generation streams the
  // scorer uses.
  const std::size_t k_max =
      *std::max_element(cfg.eval_ks.begin(), cfg.eval_ks.end());
  std::ofstream rec = open_csv(cfg, kRecommendationsFile);
  rec << "user_id,rank,item_id,score\n";
  std::size_t skipped_cold = 0;
  std::size_t truncated = 0;
  for (std::uint32_t u = 0; u < ds.num_users; ++u) {
    if (ds.train_positives[u].empty()) {
      ++skipped_cold;
      continue;
    }
    Rng rng = derive_rng(eval_seed, "infer/user=" + std::to_string(u));
    const DenseMatrix gen =
        generate_ideal_item(u, ds, table, params, sch, cfg.infer, rng);
    const RankedList ranked =
        round_to_items(gen, table, ds.trainvalid_positives[u], k_max);
    if (ranked.truncated) ++truncated;
    for (std::size_t r = 0; r < ranked.items.size(); ++r) {
      rec << ds.user_ids[u] << ',' << (r + 1) << ','
          << ds.item_ids[ranked.items[r]] << ',' << fmt_g(ranked.scores[r])
          << "\n";
    }
  }
  if (skipped_cold > 0) {
    std::cerr << "note: skipped " << skipped_cold
              << " cold user(s) with no training positives\n";
  }
  if (truncated > 0) {
    std::cerr << "note: " << truncated
              << " user(s) had fewer candidates than K\n";
  }

  write_metrics_csv(cfg, kMetricsFile, ddrm_rep);
  write_metrics_csv(cfg, kBackendMetricsFile, backend_rep);
  print_report("backend", backend_rep);
  print_report("ddrm", ddrm_rep);
}

void cmd_sweep(const RunConfig& cfg) {
  const std::vector<SweepRow> rows = run_sweep(cfg);
  std::ofstream out = open_csv(cfg, kSweepFile);
  out << "axis,value,seed,model,recall10,recall20,ndcg10,ndcg20,n_users,"
         "train_seconds,infer_seconds\n";
  for (const auto& r : rows) {
    out << r.axis << ',' << fmt_g(r.value) << ',' << r.seed << ',' << r.model
        << ',' << fmt_g(r.recall10) << ',' << fmt_g(r.recall20) << ','
        << fmt_g(r.ndcg10) << ',' << fmt_g(r.ndcg20) << ',' << r.n_users
        << ',' << fmt_g(r.train_seconds) << ',' << fmt_g(r.infer_seconds)
        << "\n";
  }
  std::cout << "sweep over " << to_string(cfg.sweep_axis) << ": "
            << rows.size() << " rows -> " << out_path(cfg, kSweepFile)
            << "\n";
  for (const auto& r : rows) {
    std::cout << "  " << r.axis << "=" << fmt_g(r.value) << " seed=" << r.seed
              << " " << r.model << " recall@20=" << fmt_g(r.recall20) << "\n";
  }
}

void cmd_inject_noise(const RunConfig& cfg) {
  if (cfg.noise == NoiseSetting::kNone) {
    std::cerr << "note: noise=none, manifest carries the clean split\n";
  }
  const InteractionDataset ds = load_and_report(cfg);
  const std::string path = out_path(cfg, kManifestFile);
  {
    std::ofstream head(path);
    head << "# config_hash=" << cfg.fingerprint() << " seed=" << cfg.seed
         << "\n";
  }
  // Append the manifest body after the fingerprint line.
  {
    const std::string tmp = path + ".body";
    write_manifest(ds, tmp);
    std::ifstream body(tmp, std::ios::binary);
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << body.rdbuf();
    body.close();
    fs::remove(tmp);
  }
  std::size_t train_noise = 0, valid_noise = 0;
  for (const auto& x : ds.train) train_noise += x.noise ? 1 : 0;
  for (const auto& x : ds.valid) valid_noise += x.noise ? 1 : 0;
  std::cout << "manifest -> " << path << " (train noise " << train_noise
            << ", valid noise " << valid_noise << ")\n";
}

}  // namespace ddrm

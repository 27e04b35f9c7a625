#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddrm/config.hpp"
#include "ddrm/inference.hpp"
#include "ddrm/training.hpp"

namespace ddrm {

// One full pretrain -> train -> evaluate cycle on an already-noised
// dataset view. All sub-streams derive from `seed`.
struct PipelineResult {
  EmbeddingTable table;
  TrainResult train;
  MetricReport backend_report;
  MetricReport ddrm_report;
  double pretrain_seconds = 0.0;
  double train_seconds = 0.0;
  double infer_seconds = 0.0;  // ddrm evaluation, repeats folded in
};

PipelineResult run_pipeline(const InteractionDataset& ds, const RunConfig& cfg,
                            std::uint64_t seed);

struct SweepRow {
  std::string axis;
  double value = 0.0;
  std::uint64_t seed = 0;
  std::string model;  // backend | ddrm
  double recall10 = 0.0, recall20 = 0.0;
  double ndcg10 = 0.0, ndcg20 = 0.0;
  std::size_t n_users = 0;
  double train_seconds = 0.0;
  double infer_seconds = 0.0;
};

// One full cycle per (axis value, seed); two rows per cycle (backend
// and ddrm). The noise_ratio axis re-injects noise per point; other
// axes keep the configured noise setting and vary the named knob.
std::vector<SweepRow> run_sweep(const RunConfig& cfg);

}  // namespace ddrm

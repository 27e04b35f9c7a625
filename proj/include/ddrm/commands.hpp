#pragma once

#include "ddrm/config.hpp"

namespace ddrm {

// Artifact filenames inside the configured output directory.
constexpr const char* kEmbeddingCheckpointFile = "embeddings.ckpt";
constexpr const char* kDenoiserCheckpointFile = "denoiser.ckpt";
constexpr const char* kPretrainLogFile = "pretrain_log.csv";
constexpr const char* kTrainLogFile = "train_log.csv";
constexpr const char* kRecommendationsFile = "recommendations.csv";
constexpr const char* kMetricsFile = "metrics.csv";
constexpr const char* kBackendMetricsFile = "metrics_backend.csv";
constexpr const char* kSweepFile = "sweep.csv";
constexpr const char* kManifestFile = "manifest.tsv";

// Throwing command bodies; the CLI maps ConfigError to exit status 2
// and other failures to 1.
void cmd_pretrain(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_sweep(const RunConfig& cfg);
void cmd_inject_noise(const RunConfig& cfg);

}  // namespace ddrm

#include "ddrm/training.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "ddrm/inference.hpp"

namespace ddrm {

namespace {

DenseMatrix concat3(const DenseMatrix& a, const DenseMatrix& b,
                    const DenseMatrix& c) {
  DenseMatrix out(a.rows() + b.rows() + c.rows(), 1);
  std::size_t at = 0;
  for (std::size_t i = 0; i < a.rows(); ++i) out[at++] = a[i];
  for (std::size_t i = 0; i < b.rows(); ++i) out[at++] = b[i];
  for (std::size_t i = 0; i < c.rows(); ++i) out[at++] = c[i];
  return out;
}

double reweight(double score, double gamma, bool use_reweight) {
  if (!use_reweight) return 1.0;
  return std::pow(stable_sigmoid(score), gamma);
}

}  // namespace

LossInstance make_loss_instance(const Triplet& triplet,
                                const EmbeddingTable& table,
                                const NoiseSchedule& sch, Rng& rng) {
  LossInstance inst;
  inst.e_u = table.user_row(triplet.user);
  inst.e_i = table.item_row(triplet.pos_item);
  inst.e_j = table.item_row(triplet.neg_item);
  inst.t = 1 + rng.next_below(sch.steps());
  const std::size_t d = table.dim();
  inst.eps_u = DenseMatrix(d, 1);
  inst.eps_i = DenseMatrix(d, 1);
  for (std::size_t c = 0; c < d; ++c) inst.eps_u[c] = rng.next_normal();
  for (std::size_t c = 0; c < d; ++c) inst.eps_i[c] = rng.next_normal();
  return inst;
}

double reconstruction_loss(const LossInstance& inst,
                           const DenoiserParams& params,
                           const NoiseSchedule& sch) {
  const DenseMatrix e_t_u =
      forward_to_t_with_eps(inst.e_u, inst.t, sch, inst.eps_u);
  const DenseMatrix e_t_i =
      forward_to_t_with_eps(inst.e_i, inst.t, sch, inst.eps_i);
  const DenseMatrix rec_u = reconstruct({e_t_u, inst.t}, inst.e_i, params,
                                        DenoiserRole::kUser);
  const DenseMatrix rec_i = reconstruct({e_t_i, inst.t}, inst.e_u, params,
                                        DenoiserRole::kItem);
  return (squared_norm(sub(inst.e_u, rec_u)) +
          squared_norm(sub(inst.e_i, rec_i))) /
         2.0;
}

LossBreakdown combined_loss(const LossInstance& inst,
                            const DenoiserParams& params,
                            const NoiseSchedule& sch, double lambda,
                            double gamma, bool use_reweight) {
  const DenseMatrix e_t_u =
      forward_to_t_with_eps(inst.e_u, inst.t, sch, inst.eps_u);
  const DenseMatrix e_t_i =
      forward_to_t_with_eps(inst.e_i, inst.t, sch, inst.eps_i);
  const DenseMatrix rec_u = reconstruct({e_t_u, inst.t}, inst.e_i, params,
                                        DenoiserRole::kUser);
  const DenseMatrix rec_i = reconstruct({e_t_i, inst.t}, inst.e_u, params,
                                        DenoiserRole::kItem);
  LossBreakdown out;
  out.l_re = (squared_norm(sub(inst.e_u, rec_u)) +
              squared_norm(sub(inst.e_i, rec_i))) /
             2.0;
  out.l_bpr = bpr_loss(rec_u, rec_i, inst.e_j);
  out.weight = reweight(dot(rec_u, rec_i), gamma, use_reweight);
  out.total = out.weight * (lambda * out.l_bpr + (1.0 - lambda) * out.l_re);
  return out;
}

DenoiserVars denoiser_params_on_tape(Tape& tape,
                                     const DenoiserParams& params) {
  return DenoiserVars{mlp_params_on_tape(tape, params.user_mlp),
                      mlp_params_on_tape(tape, params.item_mlp)};
}

Tape::Var build_combined_loss(Tape& tape, const DenoiserVars& vars,
                              const LossInstance& inst,
                              const NoiseSchedule& sch, double lambda,
                              double gamma, bool use_reweight,
                              LossBreakdown* breakdown) {
  const std::size_t d = inst.e_u.rows();
  const DenseMatrix enc = encode_step(inst.t, d);
  const DenseMatrix e_t_u =
      forward_to_t_with_eps(inst.e_u, inst.t, sch, inst.eps_u);
  const DenseMatrix e_t_i =
      forward_to_t_with_eps(inst.e_i, inst.t, sch, inst.eps_i);

  // Everything except theta/psi is constant on the tape.
  const Tape::Var in_u = tape.input(concat3(e_t_u, inst.e_i, enc));
  const Tape::Var in_i = tape.input(concat3(e_t_i, inst.e_u, enc));
  const Tape::Var e_u = tape.input(inst.e_u);
  const Tape::Var e_i = tape.input(inst.e_i);
  const Tape::Var e_j = tape.input(inst.e_j);

  const Tape::Var rec_u = mlp_forward_on_tape(tape, vars.user, in_u);
  const Tape::Var rec_i = mlp_forward_on_tape(tape, vars.item, in_i);

  const Tape::Var err_u = tape.weighted_sum({{1.0, e_u}, {-1.0, rec_u}});
  const Tape::Var err_i = tape.weighted_sum({{1.0, e_i}, {-1.0, rec_i}});
  const Tape::Var l_re = tape.weighted_sum(
      {{0.5, tape.squared_norm(err_u)}, {0.5, tape.squared_norm(err_i)}});

  const Tape::Var diff = tape.weighted_sum({{1.0, rec_i}, {-1.0, e_j}});
  const Tape::Var margin = tape.dot(rec_u, diff);
  const Tape::Var l_bpr =
      tape.weighted_sum({{-1.0, tape.log_sigmoid(margin)}});

  // The cleaning weight is a constant coefficient: no gradient flows
  // through it.
  const double score = dot(tape.value(rec_u), tape.value(rec_i));
  const double w = reweight(score, gamma, use_reweight);

  if (breakdown != nullptr) {
    breakdown->l_re = tape.scalar(l_re);
    breakdown->l_bpr = tape.scalar(l_bpr);
    breakdown->weight = w;
    breakdown->total = w * (lambda * breakdown->l_bpr +
                            (1.0 - lambda) * breakdown->l_re);
  }
  return tape.weighted_sum(
      {{w * lambda, l_bpr}, {w * (1.0 - lambda), l_re}});
}

namespace {

void apply_sgd(Mlp& mlp, const MlpVars& vars, const Tape& tape, double step) {
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    const DenseMatrix& gw = tape.grad(vars.weights[l]);
    for (std::size_t i = 0; i < gw.size(); ++i)
      mlp.weights[l][i] -= step * gw[i];
    const DenseMatrix& gb = tape.grad(vars.biases[l]);
    for (std::size_t i = 0; i < gb.size(); ++i)
      mlp.biases[l][i] -= step * gb[i];
  }
}

}  // namespace

TrainResult train(const InteractionDataset& ds, const EmbeddingTable& table,
                  const TrainConfig& cfg, std::uint64_t seed) {
  if (cfg.lambda < 0.0 || cfg.lambda > 1.0) {
    throw std::invalid_argument("train: lambda must lie in [0,1]");
  }
  if (cfg.gamma < 0.0) {
    throw std::invalid_argument("train: gamma must be >= 0");
  }
  const std::size_t d = table.dim();
  const std::size_t hidden = cfg.hidden_width == 0 ? d : cfg.hidden_width;
  const NoiseSchedule sch = NoiseSchedule::build(cfg.schedule);

  Rng init_rng = derive_rng(seed, "ddrm/init");
  Rng sample_rng = derive_rng(seed, "ddrm/sample");
  const std::uint64_t valid_seed = derive_seed(seed, "ddrm/valid");

  TrainResult result;
  result.schedule = sch;
  result.params =
      DenoiserParams::make(d, hidden, cfg.hidden_layers, init_rng);

  const std::size_t batches_per_epoch =
      ds.train.empty()
          ? 0
          : (ds.train.size() + cfg.batch_size - 1) / cfg.batch_size;
  if (cfg.epochs > 0 && batches_per_epoch == 0) {
    throw std::runtime_error("train: empty training split");
  }

  DenoiserParams best = result.params;
  double best_recall = -1.0;
  std::size_t since_improved = 0;
  bool have_validation = false;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double sum_re = 0.0, sum_bpr = 0.0, sum_w = 0.0;
    std::size_t count = 0;
    bool nan_abort = false;

    for (std::size_t b = 0; b < batches_per_epoch && !nan_abort; ++b) {
      // Sampling failures must propagate; only the numeric section
      // below takes the divergence-abort path.
      std::vector<LossInstance> batch;
      batch.reserve(cfg.batch_size);
      for (std::size_t k = 0; k < cfg.batch_size; ++k) {
        batch.push_back(make_loss_instance(sample_triplet(ds, sample_rng),
                                           table, sch, sample_rng));
      }
      // A diverging step can surface either as a non-finite batch loss
      // or as a finiteness throw inside the tape math; both take the
      // last-good-checkpoint abort path.
      try {
        Tape tape;
        const DenoiserVars vars =
            denoiser_params_on_tape(tape, result.params);
        std::vector<std::pair<double, Tape::Var>> terms;
        terms.reserve(cfg.batch_size);
        double batch_total = 0.0;
        for (const LossInstance& inst : batch) {
          LossBreakdown parts;
          const Tape::Var loss =
              build_combined_loss(tape, vars, inst, sch, cfg.lambda,
                                  cfg.gamma, cfg.use_reweight, &parts);
          terms.emplace_back(1.0 / double(cfg.batch_size), loss);
          sum_re += parts.l_re;
          sum_bpr += parts.l_bpr;
          sum_w += parts.weight;
          batch_total += parts.total;
          ++count;
        }
        if (!std::isfinite(batch_total)) {
          throw std::runtime_error("non-finite batch loss");
        }
        const Tape::Var batch_loss = tape.weighted_sum(terms);
        tape.backward(batch_loss);
        apply_sgd(result.params.user_mlp, vars.user, tape,
                  cfg.learning_rate);
        apply_sgd(result.params.item_mlp, vars.item, tape,
                  cfg.learning_rate);
        if (!result.params.user_mlp.all_finite() ||
            !result.params.item_mlp.all_finite()) {
          throw std::runtime_error("non-finite parameters after update");
        }
      } catch (const std::runtime_error& e) {
        std::cerr << "train: " << e.what() << " at epoch " << epoch
                  << ", reverting to last validated parameters\n";
        result.aborted_on_nan = true;
        nan_abort = true;
      }
    }
    if (result.aborted_on_nan) break;

    // Validation Recall@20 with the valid split as relevance targets.
    const DiffusionScorer scorer(ds, table, result.params, sch,
                                 InferenceConfig{}, valid_seed);
    const MetricReport valid_report =
        evaluate(ds, scorer, {20}, "", /*valid_as_relevant=*/true);
    const double recall = valid_report.n_users == 0
                              ? 0.0
                              : valid_report.mean_recall[0];
    have_validation = valid_report.n_users > 0;

    TrainStepRecord rec;
    rec.epoch = epoch;
    rec.mean_l_re = count ? sum_re / double(count) : 0.0;
    rec.mean_l_bpr = count ? sum_bpr / double(count) : 0.0;
    rec.mean_w = count ? sum_w / double(count) : 0.0;
    rec.valid_recall20 = recall;
    rec.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    result.trace.push_back(rec);

    if (recall > best_recall) {
      best_recall = recall;
      best = result.params;
      since_improved = 0;
    } else {
      ++since_improved;
    }
    if (cfg.patience > 0 && have_validation && since_improved >= cfg.patience) {
      break;
    }
  }

  if (result.aborted_on_nan ||
      (cfg.patience > 0 && have_validation && cfg.epochs > 0)) {
    result.params = best;
  }
  return result;
}

}  // namespace ddrm

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "idon/networks.hpp"
#include "idon/operator.hpp"
#include "idon/problems.hpp"

namespace idon::train {

/// Include flags and multipliers for the five loss terms
/// (labeled forward/inverse, boundary, residual, unlabeled inverse).
struct LossWeights {
  bool use_forward = true;
  bool use_inverse = true;
  bool use_bc = true;
  bool use_residual = true;
  bool use_unlabeled_inverse = true;
  double forward = 1.0;
  double inverse = 1.0;
  double bc = 1.0;
  double residual = 1.0;
  double unlabeled_inverse = 1.0;
};

struct TrainConfig {
  int iterations = 10000;
  int batch_unlabeled = 100;
  int labeled_per_batch = 10;
  double lr0 = 1e-3;
  double decay_rate = 0.9;
  int decay_every = 1000;
  std::uint64_t seed = 0;
  double eps_lsq = 1e-6;
  bool detach_trunk_in_inverse_losses = false;
  int n_res = 200;  // interior collocation points, drawn once per run
  int n_bc = 0;     // boundary points (problems with a BC loss)
  bool resample_collocation = false;  // re-draw collocation points per batch
  int log_every = 100;
  int snapshot_every = 500;  // divergence-retry granularity
};

/// lr0 * decay_rate^floor(iter / decay_every) * scale; the power is an
/// iterated product so lr(decay_every) == decay_rate * lr0 exactly.
double lr_at(const TrainConfig& cfg, int iter, double lr_scale = 1.0);

struct AdamState {
  Vec m;
  Vec v;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One ADAM update in place; `iter` is the 0-based step index (bias
/// correction uses iter + 1). Throws NonFiniteGradient on NaN/Inf gradients.
void adam_step(Vec& params, const Vec& grads, AdamState& state, int iter, double lr,
               const AdamConfig& acfg = {});

struct LossBreakdown {
  double total = 0.0;
  double forward = 0.0;
  double inverse = 0.0;
  double bc = 0.0;
  double residual = 0.0;
  double unlabeled_inverse = 0.0;
};

/// Everything entering one optimization step.
struct BatchData {
  Mat u_labeled;    // n_l x D (0 rows: no labeled terms)
  Mat s_labeled;    // n_l x K
  Mat u_unlabeled;  // n_b x D
  Mat obs_coords;   // K x cdim
  Mat colloc;       // P x cdim
  prob::CollocationData colloc_data;  // rows match u_unlabeled
  Mat bc_coords;    // Q x cdim (0 rows: no BC term)
};

struct LossVars {
  ad::Tape::Var total = -1;
  LossBreakdown values;
};

/// Builds the combined semi-supervised loss on the tape: labeled forward and
/// inverse terms, boundary and interior residual terms, and the unlabeled
/// round-trip term. This is the single training evaluation path; the scalar
/// helpers below are independent re-computations used for validation.
LossVars build_loss(ad::Tape& tape, const nets::TapeDeepONet& net, const BatchData& batch,
                    const LossWeights& weights, const prob::ResidualOperator& rop,
                    double eps_lsq, bool detach_trunk);

// ---- plain scalar losses (independent of the tape path) ---------------------

double loss_labeled_forward(const nets::DeepONetParams& params, const Mat& u, const Mat& s,
                            const op::TrunkMatrix& ym);
double loss_labeled_inverse(const nets::DeepONetParams& params, const Mat& u, const Mat& s,
                            const op::TrunkMatrix& ym, double eps);
double loss_unlabeled_inverse(const nets::DeepONetParams& params, const Mat& u,
                              const op::TrunkMatrix& ym, double eps);
double loss_bc(const nets::DeepONetParams& params, const Mat& u, const Mat& bc_coords,
               const prob::ResidualOperator& rop);
double loss_residual(const nets::DeepONetParams& params, const Mat& u, const Mat& colloc,
                     const prob::CollocationData& data, const prob::ResidualOperator& rop);

/// Pointwise prediction with directional derivatives (Jet2 propagation,
/// constraint folded in); feeds the plain residual/BC losses and tests.
prob::PointPrediction predict_point(const nets::MlpParams& trunk, const Vec& b, const Vec& xi,
                                    const prob::ResidualOperator& rop);

struct LossHistoryRow {
  int iter = 0;
  LossBreakdown loss;
  double lr = 0.0;
};

/// CSV: iter,loss_total,loss_lf,loss_li,loss_bc,loss_res,loss_ui,lr
void write_loss_history_csv(const std::string& path, const std::vector<LossHistoryRow>& rows);

struct TrainResult {
  nets::DeepONetParams params;
  AdamState adam;
  std::vector<LossHistoryRow> history;
  int next_iter = 0;
  double lr_scale = 1.0;
  bool diverged = false;
};

/// ADAM training over the semi-supervised loss. Deterministic per
/// (config, seed): batch order, collocation and boundary points all come from
/// derived seeded streams recomputable at any iteration, so resuming from a
/// checkpoint continues the exact run. On a non-finite loss/gradient the run
/// rolls back to the last snapshot once with the learning rate halved; a
/// second failure stops training with `diverged` set and the last finite
/// parameters returned.
TrainResult train(const prob::OperatorDataset& data, const prob::ResidualOperator& rop,
                  const nets::DeepONetSpec& spec, const TrainConfig& cfg,
                  const LossWeights& weights, const nets::DeepONetParams* resume_params = nullptr,
                  const AdamState* resume_adam = nullptr, int start_iter = 0,
                  double lr_scale = 1.0,
                  const std::function<void(const LossHistoryRow&)>& on_log = nullptr);

}  // namespace idon::train

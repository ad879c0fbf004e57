#include "idon/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "idon/errors.hpp"
#include "idon/rng.hpp"

namespace idon::train {

double lr_at(const TrainConfig& cfg, int iter, double lr_scale) {
  const int k = iter / cfg.decay_every;
  double f = 1.0;
  for (int i = 0; i < k; ++i) f *= cfg.decay_rate;
  return cfg.lr0 * f * lr_scale;
}

void adam_step(Vec& params, const Vec& grads, AdamState& state, int iter, double lr,
               const AdamConfig& acfg) {
  if (!linalg::all_finite(grads))
    throw NonFiniteGradient("adam_step: gradient has non-finite components");
  const std::size_t n = params.size();
  if (state.m.size() != n) state.m.assign(n, 0.0);
  if (state.v.size() != n) state.v.assign(n, 0.0);
  const double t = iter + 1.0;
  const double corr1 = 1.0 - std::pow(acfg.beta1, t);
  const double corr2 = 1.0 - std::pow(acfg.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = acfg.beta1 * state.m[i] + (1.0 - acfg.beta1) * grads[i];
    state.v[i] = acfg.beta2 * state.v[i] + (1.0 - acfg.beta2) * grads[i] * grads[i];
    const double mh = state.m[i] / corr1;
    const double vh = state.v[i] / corr2;
    params[i] -= lr * mh / (std::sqrt(vh) + acfg.eps);
  }
}

namespace {

using Var = ad::Tape::Var;

Var mean_sq(ad::Tape& tape, Var x, double denom) {
  return tape.affine(tape.sum(tape.mul(x, x)), 1.0 / denom, 0.0);
}

/// Trunk values at coords with the hard-constraint factor multiplied into
/// each row when the problem carries one.
Var effective_trunk(ad::Tape& tape, const nets::TapeMlp& trunk, const Mat& coords,
                    const prob::ResidualOperator& rop) {
  Var y = nets::trunk_forward(tape, trunk, coords);
  const auto constraint = rop.constraint_fn();
  if (!constraint) return y;
  const Mat& yv = tape.val(y);
  Mat f(yv.rows, yv.cols);
  for (int i = 0; i < yv.rows; ++i) {
    const Vec xi(coords.row(i), coords.row(i) + coords.cols);
    const double fi = constraint(xi);
    for (int j = 0; j < yv.cols; ++j) f(i, j) = fi;
  }
  return tape.mul(tape.constant(std::move(f)), y);
}

}  // namespace

LossVars build_loss(ad::Tape& tape, const nets::TapeDeepONet& net, const BatchData& batch,
                    const LossWeights& weights, const prob::ResidualOperator& rop,
                    double eps_lsq, bool detach_trunk) {
  const int n_l = batch.u_labeled.rows;
  const int n_b = batch.u_unlabeled.rows;

  LossVars out;
  std::vector<std::pair<Var, double>> terms;

  const bool need_obs_trunk =
      (weights.use_forward && n_l > 0) || (weights.use_inverse && n_l > 0) ||
      (weights.use_unlabeled_inverse && n_b > 0);
  Var y_eff = -1, y_inv = -1;
  if (need_obs_trunk) {
    y_eff = effective_trunk(tape, net.trunk, batch.obs_coords, rop);
    y_inv = detach_trunk ? tape.detach(y_eff) : y_eff;
  }

  Var b_unlabeled = -1;
  if (n_b > 0 && (weights.use_residual || weights.use_bc || weights.use_unlabeled_inverse))
    b_unlabeled = nets::branch_forward(tape, net, tape.constant(batch.u_unlabeled));

  if (weights.use_forward && n_l > 0) {
    Var b_l = nets::branch_forward(tape, net, tape.constant(batch.u_labeled));
    Var s_pred = tape.matmul(b_l, y_eff, false, true);
    Var diff = tape.sub(tape.constant(batch.s_labeled), s_pred);
    Var lf = mean_sq(tape, diff, n_l);
    out.values.forward = tape.val(lf)(0, 0);
    terms.emplace_back(lf, weights.forward);
  }

  if (weights.use_inverse && n_l > 0) {
    Var b_star = tape.solve_lsq(y_inv, tape.constant(batch.s_labeled), eps_lsq);
    Var u_pred = nets::branch_inverse(tape, net, b_star);
    Var diff = tape.sub(tape.constant(batch.u_labeled), u_pred);
    Var li = mean_sq(tape, diff, n_l);
    out.values.inverse = tape.val(li)(0, 0);
    terms.emplace_back(li, weights.inverse);
  }

  if (weights.use_bc && n_b > 0 && batch.bc_coords.rows > 0) {
    Var y_bc = effective_trunk(tape, net.trunk, batch.bc_coords, rop);
    Var s_bc = tape.matmul(b_unlabeled, y_bc, false, true);
    // Zero-valued boundary/initial conditions: residual is the prediction.
    Var lbc = mean_sq(tape, s_bc, static_cast<double>(n_b) * batch.bc_coords.rows);
    out.values.bc = tape.val(lbc)(0, 0);
    terms.emplace_back(lbc, weights.bc);
  }

  if (weights.use_residual && n_b > 0 && batch.colloc.rows > 0) {
    const auto requests = rop.jet_requests();
    nets::TrunkJets jets = nets::trunk_forward_jets(tape, net.trunk, batch.colloc, requests);
    jets = rop.apply_constraint(tape, jets, batch.colloc, requests);
    Var r = rop.interior_residual(tape, b_unlabeled, jets, batch.colloc_data);
    Var lres = mean_sq(tape, r, static_cast<double>(n_b) * batch.colloc.rows);
    out.values.residual = tape.val(lres)(0, 0);
    terms.emplace_back(lres, weights.residual);
  }

  if (weights.use_unlabeled_inverse && n_b > 0) {
    Var s_fwd = tape.matmul(b_unlabeled, y_eff, false, true);
    Var b_star = tape.solve_lsq(y_inv, s_fwd, eps_lsq);
    Var u_pred = nets::branch_inverse(tape, net, b_star);
    Var diff = tape.sub(tape.constant(batch.u_unlabeled), u_pred);
    Var lui = mean_sq(tape, diff, n_b);
    out.values.unlabeled_inverse = tape.val(lui)(0, 0);
    terms.emplace_back(lui, weights.unlabeled_inverse);
  }

  if (terms.empty()) {
    out.total = tape.constant(Mat(1, 1));
    return out;
  }
  Var total = tape.affine(terms[0].first, terms[0].second, 0.0);
  for (std::size_t i = 1; i < terms.size(); ++i)
    total = tape.add(total, tape.affine(terms[i].first, terms[i].second, 0.0));
  out.total = total;
  out.values.total = tape.val(total)(0, 0);
  return out;
}

// ---- plain scalar losses -----------------------------------------------------

double loss_labeled_forward(const nets::DeepONetParams& params, const Mat& u, const Mat& s,
                            const op::TrunkMatrix& ym) {
  double acc = 0.0;
  for (int i = 0; i < u.rows; ++i) {
    const Vec ui(u.row(i), u.row(i) + u.cols);
    const Vec pred = op::forward_map(params, ui, ym);
    for (int k = 0; k < s.cols; ++k) {
      const double d = s(i, k) - pred[k];
      acc += d * d;
    }
  }
  return acc / u.rows;
}

double loss_labeled_inverse(const nets::DeepONetParams& params, const Mat& u, const Mat& s,
                            const op::TrunkMatrix& ym, double eps) {
  double acc = 0.0;
  for (int i = 0; i < u.rows; ++i) {
    const Vec si(s.row(i), s.row(i) + s.cols);
    const Vec pred = op::inverse_map(params, si, ym, eps);
    for (int j = 0; j < u.cols; ++j) {
      const double d = u(i, j) - pred[j];
      acc += d * d;
    }
  }
  return acc / u.rows;
}

double loss_unlabeled_inverse(const nets::DeepONetParams& params, const Mat& u,
                              const op::TrunkMatrix& ym, double eps) {
  double acc = 0.0;
  for (int i = 0; i < u.rows; ++i) {
    const Vec ui(u.row(i), u.row(i) + u.cols);
    const Vec round = op::inverse_map(params, op::forward_map(params, ui, ym), ym, eps);
    for (int j = 0; j < u.cols; ++j) {
      const double d = ui[j] - round[j];
      acc += d * d;
    }
  }
  return acc / u.rows;
}

prob::PointPrediction predict_point(const nets::MlpParams& trunk, const Vec& b, const Vec& xi,
                                    const prob::ResidualOperator& rop) {
  prob::PointPrediction pred;
  const bool constrained = rop.spec().has_hard_constraint();
  for (const nets::JetRequest& req : rop.jet_requests()) {
    Vec dir(xi.size(), 0.0);
    dir[req.axis] = 1.0;
    const auto jets = nets::trunk_eval_jet2(trunk, xi, dir);
    ad::Jet2 acc;
    for (std::size_t j = 0; j < jets.size(); ++j) acc = acc + b[j] * jets[j];
    if (constrained) acc = prob::darcy_constraint_jet(xi, req.axis) * acc;
    pred.s = acc.v;
    pred.d1[req.axis] = acc.d1;
    pred.d2[req.axis] = acc.d2;
  }
  return pred;
}

double loss_residual(const nets::DeepONetParams& params, const Mat& u, const Mat& colloc,
                     const prob::CollocationData& data, const prob::ResidualOperator& rop) {
  double acc = 0.0;
  for (int i = 0; i < u.rows; ++i) {
    const Vec ui(u.row(i), u.row(i) + u.cols);
    const Vec b = nets::branch_forward(params.branch, ui).b;
    for (int l = 0; l < colloc.rows; ++l) {
      const Vec xi(colloc.row(l), colloc.row(l) + colloc.cols);
      prob::PointInput in;
      in.u = data.u(i, l);
      if (data.du1.size() != 0) {
        in.du1 = data.du1(i, l);
        in.du2 = data.du2(i, l);
      }
      const double r = rop.interior_at(in, predict_point(params.trunk, b, xi, rop));
      acc += r * r;
    }
  }
  return acc / (static_cast<double>(u.rows) * colloc.rows);
}

double loss_bc(const nets::DeepONetParams& params, const Mat& u, const Mat& bc_coords,
               const prob::ResidualOperator& rop) {
  const auto constraint = rop.constraint_fn();
  double acc = 0.0;
  for (int i = 0; i < u.rows; ++i) {
    const Vec ui(u.row(i), u.row(i) + u.cols);
    const Vec b = nets::branch_forward(params.branch, ui).b;
    for (int q = 0; q < bc_coords.rows; ++q) {
      const Vec xi(bc_coords.row(q), bc_coords.row(q) + bc_coords.cols);
      prob::PointPrediction pred;
      pred.s = op::predict_at_b(params.trunk, b, xi, constraint);
      const double r = rop.boundary_at(pred);
      acc += r * r;
    }
  }
  return acc / (static_cast<double>(u.rows) * bc_coords.rows);
}

void write_loss_history_csv(const std::string& path, const std::vector<LossHistoryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path);
  out << "iter,loss_total,loss_lf,loss_li,loss_bc,loss_res,loss_ui,lr\n";
  char buf[256];
  for (const LossHistoryRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iter,
                  r.loss.total, r.loss.forward, r.loss.inverse, r.loss.bc, r.loss.residual,
                  r.loss.unlabeled_inverse, r.lr);
    out << buf;
  }
}

// ---- training loop -----------------------------------------------------------

namespace {

/// Epoch-shuffled index stream; fully recomputable from (seed_tag, position),
/// which is what makes checkpoint resume continue the exact run.
class BatchCycler {
 public:
  BatchCycler(int n, int batch, std::uint64_t seed_tag)
      : n_(n), batch_(std::min(batch, n)), seed_(seed_tag) {
    reshuffle();
  }

  std::vector<int> next() {
    if (n_ == 0 || batch_ == 0) return {};
    if (cursor_ + batch_ > n_) {
      ++epoch_;
      reshuffle();
      cursor_ = 0;
    }
    std::vector<int> idx(perm_.begin() + cursor_, perm_.begin() + cursor_ + batch_);
    cursor_ += batch_;
    return idx;
  }

  void skip(int steps) {
    for (int i = 0; i < steps; ++i) {
      if (n_ == 0 || batch_ == 0) return;
      if (cursor_ + batch_ > n_) {
        ++epoch_;
        reshuffle();
        cursor_ = 0;
      }
      cursor_ += batch_;
    }
  }

 private:
  void reshuffle() {
    perm_.resize(n_);
    for (int i = 0; i < n_; ++i) perm_[i] = i;
    Rng rng(Rng::derive(seed_, static_cast<std::uint64_t>(epoch_)));
    for (int i = n_ - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_index(i + 1));
      std::swap(perm_[i], perm_[j]);
    }
  }

  int n_, batch_;
  std::uint64_t seed_;
  int epoch_ = 0;
  int cursor_ = 0;
  std::vector<int> perm_;
};

Mat take_rows(const Mat& m, const std::vector<int>& idx) {
  Mat out(static_cast<int>(idx.size()), m.cols);
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::copy(m.row(idx[i]), m.row(idx[i]) + m.cols, out.row(i));
  return out;
}

constexpr std::uint64_t kCollocStreamTag = 0xC011C011ull;
constexpr std::uint64_t kBoundaryStreamTag = 0xB0B0B0B0ull;
constexpr std::uint64_t kUnlabeledShuffleTag = 0x51ull;
constexpr std::uint64_t kLabeledShuffleTag = 0x52ull;

}  // namespace

TrainResult train(const prob::OperatorDataset& data, const prob::ResidualOperator& rop,
                  const nets::DeepONetSpec& spec, const TrainConfig& cfg,
                  const LossWeights& weights, const nets::DeepONetParams* resume_params,
                  const AdamState* resume_adam, int start_iter, double lr_scale,
                  const std::function<void(const LossHistoryRow&)>& on_log) {
  TrainResult res;
  res.params = resume_params ? *resume_params : nets::init_params(spec, cfg.seed);
  if (resume_adam) res.adam = *resume_adam;
  res.lr_scale = lr_scale;

  const int n_u = data.n_unlabeled();
  const int n_l = data.n_labeled();
  int labeled_per_batch = std::min(cfg.labeled_per_batch, n_l);
  // The antiderivative initial condition is anchored only through labeled
  // pairs; keep at least one per batch whenever labeled data exist.
  if (data.problem == prob::Problem::kAntiderivative && n_l > 0 && labeled_per_batch < 1)
    labeled_per_batch = 1;

  // Per-run point sets from derived streams.
  Rng colloc_rng(Rng::derive(cfg.seed, kCollocStreamTag));
  Mat colloc = rop.sample_interior(cfg.n_res, colloc_rng);
  Rng bc_rng(Rng::derive(cfg.seed, kBoundaryStreamTag));
  const Mat bc_coords =
      (cfg.n_bc > 0 && rop.spec().has_bc_loss()) ? rop.sample_boundary(cfg.n_bc, bc_rng) : Mat(0, rop.spec().coord_dim());

  prob::CollocationData colloc_all;
  if (weights.use_residual && n_u > 0 && cfg.n_res > 0 && !cfg.resample_collocation)
    colloc_all = rop.collocation_inputs(data, /*labeled=*/false, colloc);

  BatchCycler unlabeled_cycler(n_u, cfg.batch_unlabeled, Rng::derive(cfg.seed, kUnlabeledShuffleTag));
  BatchCycler labeled_cycler(n_l, labeled_per_batch, Rng::derive(cfg.seed, kLabeledShuffleTag));
  unlabeled_cycler.skip(start_iter);
  labeled_cycler.skip(start_iter);

  // Divergence-retry snapshot.
  Vec flat = nets::flatten(res.params);
  struct Snapshot {
    Vec flat;
    AdamState adam;
    int iter;
  } snap{flat, res.adam, start_iter};
  bool retried = false;

  nets::DeepONetParams grads = res.params;  // shape template

  int iter = start_iter;
  const int end_iter = start_iter + cfg.iterations;
  while (iter < end_iter) {
    if (cfg.snapshot_every > 0 && (iter - start_iter) % cfg.snapshot_every == 0)
      snap = {flat, res.adam, iter};

    BatchData batch;
    batch.obs_coords = data.obs_coords;
    const auto u_idx = unlabeled_cycler.next();
    batch.u_unlabeled = take_rows(data.inputs_unlabeled, u_idx);
    const auto l_idx = labeled_cycler.next();
    batch.u_labeled = take_rows(data.inputs_labeled, l_idx);
    batch.s_labeled = take_rows(data.outputs_labeled, l_idx);
    batch.bc_coords = bc_coords;
    if (cfg.resample_collocation) {
      Rng rng(Rng::derive(cfg.seed, kCollocStreamTag + 1 + iter));
      colloc = rop.sample_interior(cfg.n_res, rng);
    }
    batch.colloc = colloc;
    if (weights.use_residual && !u_idx.empty() && colloc.rows > 0) {
      if (cfg.resample_collocation) {
        // Fresh points each batch: evaluate inputs for the batch rows only.
        prob::OperatorDataset view;
        view.problem = data.problem;
        view.sensors = data.sensors;
        view.inputs_unlabeled = batch.u_unlabeled;
        if (data.fine_unlabeled.size() != 0)
          view.fine_unlabeled = take_rows(data.fine_unlabeled, u_idx);
        batch.colloc_data = rop.collocation_inputs(view, false, colloc);
      } else {
        prob::CollocationData sliced;
        sliced.u = take_rows(colloc_all.u, u_idx);
        if (colloc_all.du1.size() != 0) {
          sliced.du1 = take_rows(colloc_all.du1, u_idx);
          sliced.du2 = take_rows(colloc_all.du2, u_idx);
        }
        batch.colloc_data = std::move(sliced);
      }
    }

    bool failed = false;
    LossBreakdown values;
    try {
      ad::Tape tape;
      nets::TapeDeepONet net = nets::register_params(tape, res.params);
      LossVars loss = build_loss(tape, net, batch, weights, rop, cfg.eps_lsq,
                                 cfg.detach_trunk_in_inverse_losses);
      values = loss.values;
      if (!std::isfinite(values.total))
        throw NonFiniteGradient("train: non-finite loss at iteration " + std::to_string(iter));
      tape.backward(loss.total);
      nets::read_grads(tape, net, grads);
      const Vec flat_grads = nets::flatten(grads);
      adam_step(flat, flat_grads, res.adam, iter, lr_at(cfg, iter, res.lr_scale));
      nets::unflatten(flat, res.params);
    } catch (const NonFiniteGradient&) {
      failed = true;
    } catch (const SingularSystem&) {
      failed = true;
    }

    if (failed) {
      // Halve the rate once and retry from the last snapshot; a second
      // failure ends the run with the last finite state.
      flat = snap.flat;
      res.adam = snap.adam;
      nets::unflatten(flat, res.params);
      if (retried) {
        res.diverged = true;
        res.next_iter = snap.iter;
        return res;
      }
      retried = true;
      res.lr_scale *= 0.5;
      iter = snap.iter;
      unlabeled_cycler = BatchCycler(n_u, cfg.batch_unlabeled,
                                     Rng::derive(cfg.seed, kUnlabeledShuffleTag));
      labeled_cycler = BatchCycler(n_l, labeled_per_batch, Rng::derive(cfg.seed, kLabeledShuffleTag));
      unlabeled_cycler.skip(iter);
      labeled_cycler.skip(iter);
      continue;
    }

    if (iter % cfg.log_every == 0) {
      LossHistoryRow row{iter, values, lr_at(cfg, iter, res.lr_scale)};
      res.history.push_back(row);
      if (on_log) on_log(row);
    }
    ++iter;
  }

  res.next_iter = end_iter;
  return res;
}

}  // namespace idon::train

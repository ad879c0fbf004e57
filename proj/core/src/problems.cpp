#include <cassert>
#include <cmath>

#include "idon/errors.hpp"
#include "idon/problems.hpp"

namespace idon::prob {

ProblemSpec ProblemSpec::standard(Problem tag) {
  ProblemSpec s;
  s.tag = tag;
  return s;
}

double darcy_constraint(const Vec& xi) {
  return xi[0] * (1.0 - xi[0]) * xi[1] * (1.0 - xi[1]);
}

ad::Jet2 darcy_constraint_jet(const Vec& xi, int axis) {
  const ad::Jet2 x1(xi[0], axis == 0 ? 1.0 : 0.0, 0.0);
  const ad::Jet2 x2(xi[1], axis == 1 ? 1.0 : 0.0, 0.0);
  return (x1 * (1.0 - x1)) * (x2 * (1.0 - x2));
}

Mat ResidualOperator::sample_interior(int n, Rng& rng) const {
  const int cdim = spec_.coord_dim();
  Mat pts(n, cdim);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < cdim; ++c) pts(i, c) = rng.uniform();
  return pts;
}

Mat ResidualOperator::sample_boundary(int n, Rng& rng) const {
  (void)n;
  (void)rng;
  return Mat(0, spec_.coord_dim());
}

std::function<double(const Vec&)> ResidualOperator::constraint_fn() const {
  if (!spec_.has_hard_constraint()) return nullptr;
  return [](const Vec& xi) { return darcy_constraint(xi); };
}

nets::TrunkJets ResidualOperator::apply_constraint(ad::Tape& tape, const nets::TrunkJets& jets,
                                                   const Mat& coords,
                                                   const std::vector<nets::JetRequest>& requests) const {
  if (!spec_.has_hard_constraint()) return jets;
  const int p = coords.rows;
  const int d = tape.val(jets.value).cols;

  auto broadcast = [&](const Vec& per_point) {
    Mat m(p, d);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = per_point[i];
    return tape.constant(std::move(m));
  };

  Vec f0(p);
  for (int i = 0; i < p; ++i) {
    const Vec xi(coords.row(i), coords.row(i) + coords.cols);
    f0[i] = darcy_constraint(xi);
  }
  const auto vf0 = broadcast(f0);

  nets::TrunkJets out;
  out.value = tape.mul(vf0, jets.value);
  for (std::size_t s = 0; s < jets.streams.size(); ++s) {
    const auto& in = jets.streams[s];
    Vec f1(p), f2(p);
    for (int i = 0; i < p; ++i) {
      const Vec xi(coords.row(i), coords.row(i) + coords.cols);
      const ad::Jet2 j = darcy_constraint_jet(xi, requests[s].axis);
      f1[i] = j.d1;
      f2[i] = j.d2;
    }
    const auto vf1 = broadcast(f1);
    nets::JetStreamVars eff;
    eff.axis = in.axis;
    // (f t)' = f' t + f t'
    eff.d1 = tape.add(tape.mul(vf1, jets.value), tape.mul(vf0, in.d1));
    if (requests[s].second) {
      const auto vf2 = broadcast(f2);
      // (f t)'' = f'' t + 2 f' t' + f t''
      eff.d2 = tape.add(tape.add(tape.mul(vf2, jets.value),
                                 tape.affine(tape.mul(vf1, in.d1), 2.0, 0.0)),
                        tape.mul(vf0, in.d2));
    }
    out.streams.push_back(eff);
  }
  return out;
}

namespace {

Mat interp_rows_1d(const Mat& inputs, const Vec& sensor_x, const Mat& colloc, int x_axis) {
  // Per-sample linear interpolation of sensor values to collocation abscissae.
  const int n = inputs.rows, p = colloc.rows;
  Mat out(n, p);
  for (int i = 0; i < n; ++i) {
    const Vec row(inputs.row(i), inputs.row(i) + inputs.cols);
    for (int l = 0; l < p; ++l) out(i, l) = interp_linear(sensor_x, row, colloc(l, x_axis));
  }
  return out;
}

class AntiderivativeResidual final : public ResidualOperator {
 public:
  using ResidualOperator::ResidualOperator;

  std::vector<nets::JetRequest> jet_requests() const override { return {{0, false}}; }

  double interior_at(const PointInput& in, const PointPrediction& pred) const override {
    return pred.d1[0] - in.u;
  }

  ad::Tape::Var interior_residual(ad::Tape& tape, ad::Tape::Var b, const nets::TrunkJets& jets,
                                  const CollocationData& data) const override {
    const auto ds = tape.matmul(b, jets.streams[0].d1, false, true);
    return tape.sub(ds, tape.constant(data.u));
  }

  CollocationData collocation_inputs(const OperatorDataset& ds, bool labeled,
                                     const Mat& colloc) const override {
    const Mat& inputs = labeled ? ds.inputs_labeled : ds.inputs_unlabeled;
    Vec xs(ds.sensors.a);
    CollocationData out;
    out.u = interp_rows_1d(inputs, xs, colloc, 0);
    return out;
  }
};

class ReactionDiffusionResidual final : public ResidualOperator {
 public:
  using ResidualOperator::ResidualOperator;

  // axis 0 = x (needs d2), axis 1 = t (first derivative only)
  std::vector<nets::JetRequest> jet_requests() const override {
    return {{0, true}, {1, false}};
  }

  double interior_at(const PointInput& in, const PointPrediction& pred) const override {
    return pred.d1[1] - spec_.rd_diffusion * pred.d2[0] - spec_.rd_reaction * pred.s * pred.s -
           in.u;
  }

  ad::Tape::Var interior_residual(ad::Tape& tape, ad::Tape::Var b, const nets::TrunkJets& jets,
                                  const CollocationData& data) const override {
    const auto s0 = tape.matmul(b, jets.value, false, true);
    const auto sxx = tape.matmul(b, jets.streams[0].d2, false, true);
    const auto st = tape.matmul(b, jets.streams[1].d1, false, true);
    const auto reaction = tape.affine(tape.mul(s0, s0), spec_.rd_reaction, 0.0);
    return tape.sub(tape.sub(st, tape.affine(sxx, spec_.rd_diffusion, 0.0)),
                    tape.add(reaction, tape.constant(data.u)));
  }

  CollocationData collocation_inputs(const OperatorDataset& ds, bool labeled,
                                     const Mat& colloc) const override {
    const Mat& inputs = labeled ? ds.inputs_labeled : ds.inputs_unlabeled;
    Vec xs(ds.sensors.a);
    CollocationData out;
    out.u = interp_rows_1d(inputs, xs, colloc, 0);  // u depends on x only
    return out;
  }

  Mat sample_boundary(int n, Rng& rng) const override {
    // Three zero-value segments of the space-time domain: x = 0, x = 1, t = 0.
    Mat pts(n, 2);
    for (int i = 0; i < n; ++i) {
      const int seg = i % 3;
      const double a = rng.uniform();
      if (seg == 0) {
        pts(i, 0) = 0.0;
        pts(i, 1) = a;
      } else if (seg == 1) {
        pts(i, 0) = 1.0;
        pts(i, 1) = a;
      } else {
        pts(i, 0) = a;
        pts(i, 1) = 0.0;
      }
    }
    return pts;
  }
};

class DarcyResidual : public ResidualOperator {
 public:
  using ResidualOperator::ResidualOperator;

  std::vector<nets::JetRequest> jet_requests() const override {
    return {{0, true}, {1, true}};
  }

  // Expanded product rule: u lap(s) + grad(u) . grad(s) - source.
  double interior_at(const PointInput& in, const PointPrediction& pred) const override {
    return in.u * (pred.d2[0] + pred.d2[1]) + in.du1 * pred.d1[0] + in.du2 * pred.d1[1] -
           spec_.darcy_source;
  }

  ad::Tape::Var interior_residual(ad::Tape& tape, ad::Tape::Var b, const nets::TrunkJets& jets,
                                  const CollocationData& data) const override {
    const auto lap = tape.add(tape.matmul(b, jets.streams[0].d2, false, true),
                              tape.matmul(b, jets.streams[1].d2, false, true));
    const auto adv = tape.add(
        tape.mul(tape.constant(data.du1), tape.matmul(b, jets.streams[0].d1, false, true)),
        tape.mul(tape.constant(data.du2), tape.matmul(b, jets.streams[1].d1, false, true)));
    auto r = tape.add(tape.mul(tape.constant(data.u), lap), adv);
    return tape.affine(r, 1.0, -spec_.darcy_source);
  }
};

class DarcyFeaturesResidual final : public DarcyResidual {
 public:
  using DarcyResidual::DarcyResidual;

  CollocationData collocation_inputs(const OperatorDataset& ds, bool labeled,
                                     const Mat& colloc) const override {
    const Mat& inputs = labeled ? ds.inputs_labeled : ds.inputs_unlabeled;
    const int n = inputs.rows, p = colloc.rows;
    CollocationData out;
    out.u = Mat(n, p);
    out.du1 = Mat(n, p);
    out.du2 = Mat(n, p);
    for (int i = 0; i < n; ++i) {
      FeatureField ff{Vec(inputs.row(i), inputs.row(i) + inputs.cols)};
      for (int l = 0; l < p; ++l) {
        const FieldEval e = eval_feature_field(ff, colloc(l, 0), colloc(l, 1));
        out.u(i, l) = e.u;
        out.du1(i, l) = e.du1;
        out.du2(i, l) = e.du2;
      }
    }
    return out;
  }
};

class DarcyCgResidual final : public DarcyResidual {
 public:
  using DarcyResidual::DarcyResidual;

  CollocationData collocation_inputs(const OperatorDataset& ds, bool labeled,
                                     const Mat& colloc) const override {
    const Mat& fine = labeled ? ds.fine_labeled : ds.fine_unlabeled;
    const int nf = static_cast<int>(std::lround(std::sqrt(static_cast<double>(fine.cols))));
    assert(nf * nf == fine.cols);
    const int n = fine.rows, p = colloc.rows;
    const double h = 1.0 / (nf - 1);
    CollocationData out;
    out.u = Mat(n, p);
    out.du1 = Mat(n, p);
    out.du2 = Mat(n, p);
    for (int i = 0; i < n; ++i) {
      const Mat field(nf, nf, Vec(fine.row(i), fine.row(i) + fine.cols));
      // Central-difference gradient fields on the stored fine grid, then
      // bilinear interpolation of all three fields at the collocation points.
      Mat g1(nf, nf), g2(nf, nf);
      for (int a = 0; a < nf; ++a) {
        for (int bcol = 0; bcol < nf; ++bcol) {
          const int am = std::max(a - 1, 0), ap = std::min(a + 1, nf - 1);
          const int bm = std::max(bcol - 1, 0), bp = std::min(bcol + 1, nf - 1);
          g1(a, bcol) = (field(ap, bcol) - field(am, bcol)) / ((ap - am) * h);
          g2(a, bcol) = (field(a, bp) - field(a, bm)) / ((bp - bm) * h);
        }
      }
      for (int l = 0; l < p; ++l) {
        const double x1 = colloc(l, 0), x2 = colloc(l, 1);
        out.u(i, l) = interp_bilinear_unit(field, x1, x2);
        out.du1(i, l) = interp_bilinear_unit(g1, x1, x2);
        out.du2(i, l) = interp_bilinear_unit(g2, x1, x2);
      }
    }
    return out;
  }
};

}  // namespace

std::unique_ptr<ResidualOperator> residual_operator(const ProblemSpec& spec) {
  switch (spec.tag) {
    case Problem::kAntiderivative:
      return std::make_unique<AntiderivativeResidual>(spec);
    case Problem::kReactionDiffusion:
      return std::make_unique<ReactionDiffusionResidual>(spec);
    case Problem::kDarcyFeatures:
      return std::make_unique<DarcyFeaturesResidual>(spec);
    case Problem::kDarcyCg:
      return std::make_unique<DarcyCgResidual>(spec);
  }
  throw ConfigError("unknown problem tag");
}

// ---- dataset generation ------------------------------------------------------

namespace {

Vec linspace(double a, double b, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

Mat column(const Vec& v) { return Mat::from_col(v); }

// Stream layout: 0 = coordinate draws, 1 + i = sample i.
constexpr std::uint64_t kCoordStream = 0;

Mat random_coords(int n, int cdim, Rng& rng) {
  Mat m(n, cdim);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < cdim; ++c) m(i, c) = rng.uniform();
  return m;
}

OperatorDataset gen_antiderivative(const DataGenConfig& cfg) {
  OperatorDataset ds;
  ds.problem = Problem::kAntiderivative;
  const int d = cfg.sensors;
  const int nf = cfg.fine_grid > 0 ? cfg.fine_grid : 10 * (d - 1) + 1;
  const Vec sensor_x = linspace(0.0, 1.0, d);
  const Vec fine_x = linspace(0.0, 1.0, nf);
  ds.sensors = column(sensor_x);

  Rng coord_rng(Rng::derive(cfg.seed, kCoordStream));
  ds.obs_coords = random_coords(cfg.observations, 1, coord_rng);

  const GpSpec gp{cfg.gp_lengthscale, 1.0, 0.0};
  const GpSampler sampler_sensors(gp, ds.sensors);
  ds.inputs_unlabeled = Mat(cfg.n_unlabeled, d);
  for (int i = 0; i < cfg.n_unlabeled; ++i) {
    Rng rng(Rng::derive(cfg.seed, 1 + i));
    const Vec u = sampler_sensors.draw(rng);
    for (int j = 0; j < d; ++j) ds.inputs_unlabeled(i, j) = u[j];
  }

  ds.inputs_labeled = Mat(cfg.n_labeled, d);
  ds.outputs_labeled = Mat(cfg.n_labeled, cfg.observations);
  if (cfg.n_labeled > 0) {
    const GpSampler sampler_fine(gp, column(fine_x));
    const bool aligned = (nf - 1) % (d - 1) == 0;
    const int stride = aligned ? (nf - 1) / (d - 1) : 0;
    for (int i = 0; i < cfg.n_labeled; ++i) {
      Rng rng(Rng::derive(cfg.seed, 1 + cfg.n_unlabeled + i));
      const Vec u_fine = sampler_fine.draw(rng);
      const Vec s_fine = solve_antiderivative(u_fine, fine_x);
      for (int j = 0; j < d; ++j)
        ds.inputs_labeled(i, j) =
            aligned ? u_fine[j * stride] : interp_linear(fine_x, u_fine, sensor_x[j]);
      for (int k = 0; k < cfg.observations; ++k)
        ds.outputs_labeled(i, k) = interp_linear(fine_x, s_fine, ds.obs_coords(k, 0));
    }
  }
  ds.meta.fine_grid = nf;
  return ds;
}

OperatorDataset gen_reaction_diffusion(const DataGenConfig& cfg) {
  OperatorDataset ds;
  ds.problem = Problem::kReactionDiffusion;
  const int d = cfg.sensors;
  const Vec sensor_x = linspace(0.0, 1.0, d);
  ds.sensors = column(sensor_x);

  Rng coord_rng(Rng::derive(cfg.seed, kCoordStream));
  ds.obs_coords = random_coords(cfg.observations, 2, coord_rng);  // (x, t)

  const GpSpec gp{cfg.gp_lengthscale, 1.0, 0.0};
  const GpSampler sampler(gp, ds.sensors);
  ds.inputs_unlabeled = Mat(cfg.n_unlabeled, d);
  for (int i = 0; i < cfg.n_unlabeled; ++i) {
    Rng rng(Rng::derive(cfg.seed, 1 + i));
    const Vec u = sampler.draw(rng);
    for (int j = 0; j < d; ++j) ds.inputs_unlabeled(i, j) = u[j];
  }

  const ProblemSpec spec = ProblemSpec::standard(Problem::kReactionDiffusion);
  RdConfig rd;
  rd.diffusion = spec.rd_diffusion;
  rd.reaction = spec.rd_reaction;
  rd.nt = cfg.rd_nt;
  ds.inputs_labeled = Mat(cfg.n_labeled, d);
  ds.outputs_labeled = Mat(cfg.n_labeled, cfg.observations);
  for (int i = 0; i < cfg.n_labeled; ++i) {
    Rng rng(Rng::derive(cfg.seed, 1 + cfg.n_unlabeled + i));
    const Vec u = sampler.draw(rng);
    for (int j = 0; j < d; ++j) ds.inputs_labeled(i, j) = u[j];
    const Mat field = solve_reaction_diffusion(u, sensor_x, rd);
    for (int k = 0; k < cfg.observations; ++k) {
      const double x = ds.obs_coords(k, 0), t = ds.obs_coords(k, 1);
      ds.outputs_labeled(i, k) = interp_bilinear_unit(field, t, x);
    }
  }
  ds.meta.rd_nx = d;
  ds.meta.rd_nt = cfg.rd_nt;
  return ds;
}

Mat regular_interior_grid(int per_axis) {
  Mat coords(per_axis * per_axis, 2);
  for (int a = 0; a < per_axis; ++a)
    for (int b = 0; b < per_axis; ++b) {
      coords(a * per_axis + b, 0) = static_cast<double>(a + 1) / (per_axis + 1);
      coords(a * per_axis + b, 1) = static_cast<double>(b + 1) / (per_axis + 1);
    }
  return coords;
}

OperatorDataset gen_darcy_features(const DataGenConfig& cfg) {
  OperatorDataset ds;
  ds.problem = Problem::kDarcyFeatures;
  const int n_nodes = cfg.fine_grid > 0 ? cfg.fine_grid : 129;
  ds.obs_coords = regular_interior_grid(cfg.obs_grid);
  const int k = ds.obs_coords.rows;

  ds.inputs_unlabeled = Mat(cfg.n_unlabeled, 64);
  for (int i = 0; i < cfg.n_unlabeled; ++i) {
    Rng rng(Rng::derive(cfg.seed, 1 + i));
    for (int j = 0; j < 64; ++j) ds.inputs_unlabeled(i, j) = rng.uniform();
  }

  const Vec nodes = linspace(0.0, 1.0, n_nodes);
  ds.inputs_labeled = Mat(cfg.n_labeled, 64);
  ds.outputs_labeled = Mat(cfg.n_labeled, k);
  for (int i = 0; i < cfg.n_labeled; ++i) {
    Rng rng(Rng::derive(cfg.seed, 1 + cfg.n_unlabeled + i));
    FeatureField ff{Vec(64)};
    for (int j = 0; j < 64; ++j) ff.c[j] = rng.uniform();
    for (int j = 0; j < 64; ++j) ds.inputs_labeled(i, j) = ff.c[j];
    const Mat u = eval_feature_field_grid(ff, nodes, nodes);
    const Mat s = solve_darcy(u, ProblemSpec::standard(Problem::kDarcyFeatures).darcy_source);
    for (int q = 0; q < k; ++q)
      ds.outputs_labeled(i, q) = interp_bilinear_unit(s, ds.obs_coords(q, 0), ds.obs_coords(q, 1));
  }
  ds.meta.fine_grid = n_nodes;
  return ds;
}

OperatorDataset gen_darcy_cg(const DataGenConfig& cfg) {
  OperatorDataset ds;
  ds.problem = Problem::kDarcyCg;
  const int n_nodes = cfg.fine_grid > 0 ? cfg.fine_grid : 129;
  const int gg = cfg.gp_grid;
  ds.obs_coords = regular_interior_grid(cfg.obs_grid);
  const int k = ds.obs_coords.rows;

  // Branch input: the field sub-sampled on a regular 8 x 8 grid of cell
  // centers (2i+1)/16, which land on fine nodes for 65- and 129-node grids.
  Mat centers(64, 2);
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      centers(a * 8 + b, 0) = (2.0 * a + 1.0) / 16.0;
      centers(a * 8 + b, 1) = (2.0 * b + 1.0) / 16.0;
    }
  ds.sensors = centers;

  Mat gp_pts(gg * gg, 2);
  const Vec gaxis = linspace(0.0, 1.0, gg);
  for (int a = 0; a < gg; ++a)
    for (int b = 0; b < gg; ++b) {
      gp_pts(a * gg + b, 0) = gaxis[a];
      gp_pts(a * gg + b, 1) = gaxis[b];
    }
  const GpSpec gp{cfg.gp_lengthscale, 1.0, 0.0};
  const GpSampler sampler(gp, gp_pts);

  auto make_field = [&](Rng& rng) {
    const Vec g = sampler.draw(rng);
    const Mat gfield(gg, gg, g);
    Mat u(n_nodes, n_nodes);
    for (int a = 0; a < n_nodes; ++a)
      for (int b = 0; b < n_nodes; ++b) {
        const double x1 = static_cast<double>(a) / (n_nodes - 1);
        const double x2 = static_cast<double>(b) / (n_nodes - 1);
        u(a, b) = std::exp(interp_bilinear_unit(gfield, x1, x2));
      }
    return u;
  };
  auto subsample = [&](const Mat& u, double* dst) {
    for (int q = 0; q < 64; ++q)
      dst[q] = interp_bilinear_unit(u, centers(q, 0), centers(q, 1));
  };

  ds.inputs_unlabeled = Mat(cfg.n_unlabeled, 64);
  ds.fine_unlabeled = Mat(cfg.n_unlabeled, n_nodes * n_nodes);
  for (int i = 0; i < cfg.n_unlabeled; ++i) {
    Rng rng(Rng::derive(cfg.seed, 1 + i));
    const Mat u = make_field(rng);
    subsample(u, ds.inputs_unlabeled.row(i));
    std::copy(u.a.begin(), u.a.end(), ds.fine_unlabeled.row(i));
  }

  ds.inputs_labeled = Mat(cfg.n_labeled, 64);
  ds.fine_labeled = Mat(cfg.n_labeled, n_nodes * n_nodes);
  ds.outputs_labeled = Mat(cfg.n_labeled, k);
  for (int i = 0; i < cfg.n_labeled; ++i) {
    Rng rng(Rng::derive(cfg.seed, 1 + cfg.n_unlabeled + i));
    const Mat u = make_field(rng);
    subsample(u, ds.inputs_labeled.row(i));
    std::copy(u.a.begin(), u.a.end(), ds.fine_labeled.row(i));
    const Mat s = solve_darcy(u, ProblemSpec::standard(Problem::kDarcyCg).darcy_source);
    for (int q = 0; q < k; ++q)
      ds.outputs_labeled(i, q) = interp_bilinear_unit(s, ds.obs_coords(q, 0), ds.obs_coords(q, 1));
  }
  ds.meta.fine_grid = n_nodes;
  ds.meta.gp_grid = gg;
  return ds;
}

}  // namespace

OperatorDataset make_dataset(const DataGenConfig& cfg) {
  OperatorDataset ds;
  switch (cfg.problem) {
    case Problem::kAntiderivative:
      ds = gen_antiderivative(cfg);
      break;
    case Problem::kReactionDiffusion:
      ds = gen_reaction_diffusion(cfg);
      break;
    case Problem::kDarcyFeatures:
      ds = gen_darcy_features(cfg);
      break;
    case Problem::kDarcyCg:
      ds = gen_darcy_cg(cfg);
      break;
  }
  ds.meta.seed = cfg.seed;
  ds.meta.gp_lengthscale = cfg.gp_lengthscale;
  ds.meta.config_hash = cfg.config_hash;
  return ds;
}

Vec reference_observations(const ProblemSpec& spec, const Vec& u_sensors, const Mat& sensors,
                           const Mat& obs_coords, const RdConfig& rd) {
  Vec out(obs_coords.rows);
  const Vec xs(sensors.a);
  if (spec.tag == Problem::kAntiderivative) {
    const Vec s = solve_antiderivative(u_sensors, xs);
    for (int k = 0; k < obs_coords.rows; ++k)
      out[k] = interp_linear(xs, s, obs_coords(k, 0));
    return out;
  }
  if (spec.tag == Problem::kReactionDiffusion) {
    const Mat field = solve_reaction_diffusion(u_sensors, xs, rd);
    for (int k = 0; k < obs_coords.rows; ++k)
      out[k] = interp_bilinear_unit(field, obs_coords(k, 1), obs_coords(k, 0));
    return out;
  }
  throw ConfigError("reference_observations: unsupported problem for sensor-valued inputs");
}

std::string problem_name(Problem p) {
  switch (p) {
    case Problem::kAntiderivative:
      return "antiderivative";
    case Problem::kReactionDiffusion:
      return "reaction_diffusion";
    case Problem::kDarcyFeatures:
      return "darcy_features";
    case Problem::kDarcyCg:
      return "darcy_cg";
  }
  return "unknown";
}

Problem problem_from_name(const std::string& name) {
  if (name == "antiderivative") return Problem::kAntiderivative;
  if (name == "reaction_diffusion") return Problem::kReactionDiffusion;
  if (name == "darcy_features") return Problem::kDarcyFeatures;
  if (name == "darcy_cg") return Problem::kDarcyCg;
  throw ConfigError("unknown problem: " + name);
}

}  // namespace idon::prob

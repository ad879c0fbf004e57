#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "idon/dataset.hpp"
#include "idon/jet.hpp"
#include "idon/linalg.hpp"
#include "idon/networks.hpp"
#include "idon/rng.hpp"

namespace idon::prob {

// ---- Gaussian-process inputs -------------------------------------------------

/// Exponential quadratic kernel k(x, x') = variance * exp(-|x-x'|^2 / (2 l^2)).
struct GpSpec {
  double lengthscale = 0.2;
  double variance = 1.0;
  double mean = 0.0;
};

Mat gp_covariance(const GpSpec& spec, const Mat& pts);

/// Holds the Cholesky factor of the covariance at a fixed grid so repeated
/// draws (datasets, pCN proposals) cost one triangular multiply each.
/// Construction jitters the diagonal once (+1e-10 trace/n) if the plain
/// factorization fails; a second failure propagates NotPositiveDefinite.
class GpSampler {
 public:
  GpSampler(const GpSpec& spec, Mat grid);

  Vec draw(Rng& rng) const;           // mean + L z
  Vec draw_centered(Rng& rng) const;  // L z
  int size() const { return grid_.rows; }
  const Mat& grid() const { return grid_; }
  const GpSpec& spec() const { return spec_; }

 private:
  GpSpec spec_;
  Mat grid_;
  Mat chol_;
};

/// n GP draws at `grid`; sample i uses the derived stream (seed, i), so
/// parallel generation cannot reorder results.
std::vector<Vec> sample_gp(const GpSpec& spec, const Mat& grid, int n, std::uint64_t seed);

// ---- reference solvers -------------------------------------------------------

/// Cumulative trapezoid of u over a sorted grid; s(grid[0]) = 0.
Vec solve_antiderivative(const Vec& u_fine, const Vec& grid);

struct RdConfig {
  double diffusion = 0.01;  // D_s
  double reaction = 0.01;   // k
  int nt = 99;              // time steps; levels = nt + 1
  double t_end = 1.0;
};

/// ds/dt = D_s d2s/dx2 + k s^2 + u(x) on [0,1] with zero initial and
/// boundary values. Backward Euler in time, central differences in space,
/// the s^2 term lagged one step (Picard). Returns (nt+1) x nx field, row j =
/// time level j. Throws SolverDiverged if |s| exceeds 1e6.
Mat solve_reaction_diffusion(const Vec& u, const Vec& xgrid, const RdConfig& cfg);

/// Same scheme, time-dependent forcing (manufactured-solution testing).
Mat solve_reaction_diffusion_forced(const std::function<double(double, double)>& forcing,
                                    const Vec& xgrid, const RdConfig& cfg);

/// div(u grad s) = source on the unit square, zero Dirichlet boundary.
/// 5-point finite volumes with arithmetic-mean face coefficients on the
/// n x n node grid carrying u (row i = x1 index, col j = x2 index); the SPD
/// system is solved by a banded Cholesky factorization. Requires u > 0.
Mat solve_darcy(const Mat& u_nodes, double source = 10.0);

// ---- permeability feature expansion -----------------------------------------

/// 64 coefficients c_{f1,f2,q}, f1,f2 in 1..4, q in 1..4, flattened as
/// ((f1-1)*4 + (f2-1))*4 + (q-1). ln u is the sum over the four sin/cos
/// product families with arguments f1*x1 and f2*x2 exactly as written.
struct FeatureField {
  Vec c;  // 64 entries
};

struct FieldEval {
  double u = 0.0;
  double du1 = 0.0;
  double du2 = 0.0;
};

FieldEval eval_feature_field(const FeatureField& field, double x1, double x2);

/// u on the tensor grid xs x ys (separable trig tables; used by data
/// generation where per-node evaluation dominates).
Mat eval_feature_field_grid(const FeatureField& field, const Vec& xs, const Vec& ys);

// ---- interpolation helpers ---------------------------------------------------

/// Piecewise-linear interpolation on a sorted grid; clamps outside the range.
double interp_linear(const Vec& xs, const Vec& ys, double x);

/// Bilinear interpolation of a field tabulated on uniform grids over
/// [0,1] x [0,1]; field(i, j) sits at (i/(rows-1), j/(cols-1)).
double interp_bilinear_unit(const Mat& field, double x1, double x2);

// ---- problem definitions -----------------------------------------------------

struct ProblemSpec {
  Problem tag = Problem::kAntiderivative;
  double rd_diffusion = 0.01;
  double rd_reaction = 0.01;
  double darcy_source = 10.0;

  int coord_dim() const { return tag == Problem::kAntiderivative ? 1 : 2; }
  bool has_hard_constraint() const {
    return tag == Problem::kDarcyFeatures || tag == Problem::kDarcyCg;
  }
  bool has_bc_loss() const { return tag == Problem::kReactionDiffusion; }

  static ProblemSpec standard(Problem tag);
};

/// x1 (1-x1) x2 (1-x2): vanishes on the boundary of the unit square, so
/// Darcy predictions satisfy the zero-Dirichlet condition by construction.
double darcy_constraint(const Vec& xi);
ad::Jet2 darcy_constraint_jet(const Vec& xi, int axis);

/// Per-sample input values (and gradients, when the residual needs them) at
/// the collocation points: row i covers sample i at every point.
struct CollocationData {
  Mat u;
  Mat du1;  // Darcy problems only
  Mat du2;
};

struct PointInput {
  double u = 0.0;
  double du1 = 0.0;
  double du2 = 0.0;
};

/// Prediction s(xi) with directional derivatives per coordinate axis.
struct PointPrediction {
  double s = 0.0;
  double d1[2] = {0.0, 0.0};
  double d2[2] = {0.0, 0.0};
};

/// PDE residual N(u, s)(xi) and boundary residual B(u, s)(xi) for one
/// problem, exposed two ways: pointwise (tests, validation against reference
/// solutions) and as a batched tape expression (training). Both consume the
/// same trunk-derivative streams, declared by jet_requests().
class ResidualOperator {
 public:
  explicit ResidualOperator(ProblemSpec spec) : spec_(spec) {}
  virtual ~ResidualOperator() = default;

  const ProblemSpec& spec() const { return spec_; }

  virtual std::vector<nets::JetRequest> jet_requests() const = 0;

  virtual double interior_at(const PointInput& in, const PointPrediction& pred) const = 0;
  /// Boundary/initial residual; zero-Dirichlet problems return s itself.
  virtual double boundary_at(const PointPrediction& pred) const { return pred.s; }

  /// Batched interior residual matrix (samples x points) on the tape.
  /// `b` holds branch outputs (n x D); `jets` are trunk streams at the
  /// collocation points in jet_requests() order, already constraint-folded.
  virtual ad::Tape::Var interior_residual(ad::Tape& tape, ad::Tape::Var b,
                                          const nets::TrunkJets& jets,
                                          const CollocationData& data) const = 0;

  /// u (and du where needed) at `colloc` for each row of the chosen split.
  virtual CollocationData collocation_inputs(const OperatorDataset& ds, bool labeled,
                                             const Mat& colloc) const = 0;

  /// Uniform draws over the problem domain / along its boundary.
  virtual Mat sample_interior(int n, Rng& rng) const;
  virtual Mat sample_boundary(int n, Rng& rng) const;

  /// Multiplies the hard-constraint factor (value and directional
  /// derivatives) into trunk jet streams; identity when no constraint.
  nets::TrunkJets apply_constraint(ad::Tape& tape, const nets::TrunkJets& jets,
                                   const Mat& coords,
                                   const std::vector<nets::JetRequest>& requests) const;

  std::function<double(const Vec&)> constraint_fn() const;

 protected:
  ProblemSpec spec_;
};

std::unique_ptr<ResidualOperator> residual_operator(const ProblemSpec& spec);

// ---- dataset generation ------------------------------------------------------

struct DataGenConfig {
  Problem problem = Problem::kAntiderivative;
  int n_unlabeled = 0;
  int n_labeled = 0;
  std::uint64_t seed = 1;
  int sensors = 100;           // D for grid-input problems
  int observations = 200;      // K for randomly placed observation coords
  int obs_grid = 62;           // Darcy: K = obs_grid^2 regular interior points
  double gp_lengthscale = 0.2; // 0.1 for darcy_cg
  int fine_grid = 0;           // 0 = problem default
  int rd_nx = 100;
  int rd_nt = 99;
  int gp_grid = 33;            // darcy_cg GP sampling grid per axis
  std::string config_hash;
};

/// Builds a dataset per the generation protocol of the problem; labeled
/// outputs come from the reference solver sampled at the observation
/// coordinates. Deterministic and byte-identical per (config, seed).
OperatorDataset make_dataset(const DataGenConfig& cfg);

/// Observation values of the reference solution for one input, used by the
/// MCMC likelihood (antiderivative and reaction_diffusion sensor inputs).
Vec reference_observations(const ProblemSpec& spec, const Vec& u_sensors, const Mat& sensors,
                           const Mat& obs_coords, const RdConfig& rd);

}  // namespace idon::prob

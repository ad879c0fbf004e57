#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "idon/linalg.hpp"
#include "idon/networks.hpp"

namespace idon::op {

/// Optional hard-constraint factor multiplying the DeepONet expansion
/// pointwise (e.g. a polynomial vanishing on the boundary).
using ConstraintFn = std::function<double(const Vec& xi)>;

/// Trunk outputs tabulated at K observation coordinates.
/// `y` row k holds [t_1(xi_k) ... t_D(xi_k)]; `yeff` is `y` with the
/// hard-constraint factor multiplied into each row (identical to `y` when no
/// factor applies). The effective matrix is the one entering s = Y b and the
/// least-squares inversion.
struct TrunkMatrix {
  Mat coords;   // K x coord_dim
  Mat y;        // K x D
  Vec factors;  // per-row factor; empty when no constraint
  Mat yeff;     // K x D

  int obs_count() const { return y.rows; }
  int dim() const { return y.cols; }
};

/// Evaluates the trunk row-by-row; row k is exactly trunk_eval(xi_k).
TrunkMatrix assemble_trunk_matrix(const nets::MlpParams& trunk, const Mat& coords,
                                  const ConstraintFn& constraint = nullptr);

/// Forward map: s = Y_eff b_NN(u), the predicted solution values at the
/// trunk-matrix coordinates.
Vec forward_map(const nets::DeepONetParams& params, const Vec& u, const TrunkMatrix& ym);

/// Two-step inverse map: b = argmin |s - Y_eff b|^2 + eps |b|^2, then the
/// analytic branch inverse. Throws SingularSystem when eps = 0 and Y is
/// rank-deficient.
Vec inverse_map(const nets::DeepONetParams& params, const Vec& s, const TrunkMatrix& ym,
                double eps);

/// Pointwise prediction sum_j b_j(u) t_j(xi), times the constraint factor if
/// given. Shares the dot-product kernel with forward_map, so evaluating at a
/// trunk-matrix coordinate reproduces that forward_map entry bitwise.
double predict_at(const nets::DeepONetParams& params, const Vec& u, const Vec& xi,
                  const ConstraintFn& constraint = nullptr);

/// Same but with a precomputed branch output (avoids re-running the branch
/// when sweeping coordinates).
double predict_at_b(const nets::MlpParams& trunk, const Vec& b, const Vec& xi,
                    const ConstraintFn& constraint = nullptr);

/// Keyed store of assembled trunk matrices. Entries are immutable once
/// published (readers hold shared ownership); invalidate() after every
/// trunk-parameter update.
class TrunkMatrixCache {
 public:
  std::shared_ptr<const TrunkMatrix> get(const nets::MlpParams& trunk, const Mat& coords,
                                         const ConstraintFn& constraint = nullptr);
  void invalidate();

 private:
  std::mutex mu_;
  std::unordered_map<std::uint64_t, std::shared_ptr<const TrunkMatrix>> entries_;
};

}  // namespace idon::op

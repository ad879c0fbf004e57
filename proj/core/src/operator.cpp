#include "idon/operator.hpp"

#include <cstring>

namespace idon::op {

TrunkMatrix assemble_trunk_matrix(const nets::MlpParams& trunk, const Mat& coords,
                                  const ConstraintFn& constraint) {
  TrunkMatrix tm;
  tm.coords = coords;
  const Vec probe = nets::trunk_eval(trunk, Vec(coords.row(0), coords.row(0) + coords.cols));
  const int d = static_cast<int>(probe.size());
  tm.y = Mat(coords.rows, d);
  for (int k = 0; k < coords.rows; ++k) {
    const Vec xi(coords.row(k), coords.row(k) + coords.cols);
    const Vec t = nets::trunk_eval(trunk, xi);
    std::memcpy(tm.y.row(k), t.data(), sizeof(double) * d);
  }
  if (constraint) {
    tm.factors.resize(coords.rows);
    tm.yeff = Mat(coords.rows, d);
    for (int k = 0; k < coords.rows; ++k) {
      const Vec xi(coords.row(k), coords.row(k) + coords.cols);
      tm.factors[k] = constraint(xi);
      for (int j = 0; j < d; ++j) tm.yeff(k, j) = tm.factors[k] * tm.y(k, j);
    }
  } else {
    tm.yeff = tm.y;
  }
  return tm;
}

Vec forward_map(const nets::DeepONetParams& params, const Vec& u, const TrunkMatrix& ym) {
  const Vec b = nets::branch_forward(params.branch, u).b;
  return linalg::matvec(ym.yeff, b);
}

Vec inverse_map(const nets::DeepONetParams& params, const Vec& s, const TrunkMatrix& ym,
                double eps) {
  const Vec b = linalg::solve_regularized_lsq(ym.yeff, s, eps);
  return nets::branch_inverse(params.branch, b);
}

double predict_at_b(const nets::MlpParams& trunk, const Vec& b, const Vec& xi,
                    const ConstraintFn& constraint) {
  Vec row = nets::trunk_eval(trunk, xi);
  if (constraint) {
    const double f = constraint(xi);
    for (double& v : row) v = f * v;
  }
  return linalg::dot(row.data(), b.data(), static_cast<int>(row.size()));
}

double predict_at(const nets::DeepONetParams& params, const Vec& u, const Vec& xi,
                  const ConstraintFn& constraint) {
  const Vec b = nets::branch_forward(params.branch, u).b;
  return predict_at_b(params.trunk, b, xi, constraint);
}

namespace {
std::uint64_t coord_hash(const Mat& coords) {
  // FNV-1a over the raw coordinate bytes; collisions across distinct
  // coordinate sets within one process run are not a correctness hazard
  // worth more machinery (a miss just re-assembles).
  std::uint64_t h = 1469598103934665603ull;
  const unsigned char* p = reinterpret_cast<const unsigned char*>(coords.a.data());
  const std::size_t n = coords.a.size() * sizeof(double);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h ^ (static_cast<std::uint64_t>(coords.rows) << 32 | coords.cols);
}
}  // namespace

std::shared_ptr<const TrunkMatrix> TrunkMatrixCache::get(const nets::MlpParams& trunk,
                                                         const Mat& coords,
                                                         const ConstraintFn& constraint) {
  const std::uint64_t key = coord_hash(coords);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
  }
  auto built = std::make_shared<const TrunkMatrix>(assemble_trunk_matrix(trunk, coords, constraint));
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, _] = entries_.emplace(key, built);
  return it->second;
}

void TrunkMatrixCache::invalidate() {
  std::lock_guard<std::mutex> lock(mu_);
  entries_.clear();
}

}  // namespace idon::op

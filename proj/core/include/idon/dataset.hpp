#pragma once

#include <cstdint>
#include <string>

#include "idon/linalg.hpp"

namespace idon::prob {

enum class Problem { kAntiderivative, kReactionDiffusion, kDarcyFeatures, kDarcyCg };

std::string problem_name(Problem p);
Problem problem_from_name(const std::string& name);

/// Generation settings recorded with every dataset; together with the seed
/// they are sufficient to regenerate the container byte-for-byte.
struct GenMeta {
  std::uint64_t seed = 0;
  double gp_lengthscale = 0.2;
  int fine_grid = 0;  // antiderivative fine grid size / Darcy node grid per axis
  int gp_grid = 0;    // darcy_cg GP sampling grid per axis
  int rd_nx = 0;
  int rd_nt = 0;  // time steps (levels = rd_nt + 1)
  std::string config_hash;
};

/// PDE-input samples, optional labeled outputs, and the coordinate sets they
/// were generated on. One dataset shares a single observation-coordinate set
/// (and sensor grid) across all samples.
struct OperatorDataset {
  Problem problem = Problem::kAntiderivative;
  GenMeta meta;
  Mat sensors;           // D x coord_dim; 0 x 0 when inputs are feature coefficients
  Mat obs_coords;        // K x coord_dim
  Mat inputs_unlabeled;  // N_u x D
  Mat inputs_labeled;    // N_l x D
  Mat outputs_labeled;   // N_l x K
  Mat fine_unlabeled;    // darcy_cg: stored fine fields, N_u x (nf*nf)
  Mat fine_labeled;      // darcy_cg: N_l x (nf*nf)

  int dim() const {
    return inputs_unlabeled.rows > 0 ? inputs_unlabeled.cols : inputs_labeled.cols;
  }
  int n_unlabeled() const { return inputs_unlabeled.rows; }
  int n_labeled() const { return inputs_labeled.rows; }
  int obs_count() const { return obs_coords.rows; }
};

/// IDON1 container: ASCII magic "IDON1\n", an ASCII-decimal byte length plus
/// newline, that many bytes of UTF-8 key=value metadata (including the array
/// manifest in order), then the arrays as little-endian float64, contiguous
/// in manifest order. Loaders validate magic, lengths, and total byte count.
void save_dataset(const OperatorDataset& ds, const std::string& path);
OperatorDataset load_dataset(const std::string& path);

}  // namespace idon::prob

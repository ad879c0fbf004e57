#pragma once

#include <cstdint>
#include <string>

#include "idon/networks.hpp"

namespace idon::ckpt {

/// Everything needed to resume or evaluate a training run. Stored as a single
/// JSON text document; weights are nested numeric lists and survive a
/// save/load round trip value-exact for 64-bit floats.
struct Checkpoint {
  std::string problem;  // problem tag name
  nets::DeepONetSpec spec;
  std::uint64_t seed = 0;
  int iteration = 0;
  double lr_scale = 1.0;
  double eps_lsq = 1e-6;
  bool detach_trunk = false;
  double log_scale_bound = nets::kLogScaleBound;
  nets::DeepONetParams params;
  Vec adam_m;  // empty when the run carried no optimizer state
  Vec adam_v;
};

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace idon::ckpt

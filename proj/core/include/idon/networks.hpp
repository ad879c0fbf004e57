#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "idon/jet.hpp"
#include "idon/linalg.hpp"
#include "idon/tape.hpp"

namespace idon::nets {

/// Widths input...output; tanh on hidden layers, linear output.
struct MlpSpec {
  std::vector<int> layer_widths;
};

struct MlpLayer {
  Mat w;  // out x in
  Vec b;
};

struct MlpParams {
  std::vector<MlpLayer> layers;
};

/// Everything needed to build the invertible DeepONet. The branch operates on
/// dim-sized vectors (dim = sensor count = branch output size = trunk output
/// size); coupling subnets take the first `split` entries and emit the rest.
struct DeepONetSpec {
  int dim = 0;            // D = F = Q
  int coord_dim = 1;      // spatio-temporal input size of the trunk
  int branch_blocks = 2;  // >= 2 so every entry gets transformed
  int subnet_layers = 2;  // weight layers in each k/r net, hidden width = dim
  int trunk_layers = 4;   // weight layers in the trunk
  int trunk_width = 0;    // hidden width; defaults to dim when 0

  int split() const { return dim / 2; }
  MlpSpec subnet_spec() const;
  MlpSpec trunk_spec() const;
};

struct CouplingBlockParams {
  MlpParams k_net;  // log-scale subnet
  MlpParams r_net;  // shift subnet
};

struct BranchParams {
  std::vector<CouplingBlockParams> blocks;
};

struct DeepONetParams {
  BranchParams branch;
  MlpParams trunk;
};

/// Bound on coupling log-scales: k is passed through s_max tanh(k / s_max)
/// before exponentiation so early-training exp() cannot overflow. Identity
/// near zero; the bound is recorded in checkpoints.
constexpr double kLogScaleBound = 5.0;

/// Glorot-uniform weights, zero biases, zero final layer in every k-net (so
/// freshly initialized couplings have log-det 0). Deterministic per seed.
DeepONetParams init_params(const DeepONetSpec& spec, std::uint64_t seed);

std::size_t param_count(const DeepONetParams& p);
Vec flatten(const DeepONetParams& p);
void unflatten(const Vec& flat, DeepONetParams& p);

// ---- plain (non-tape) evaluation ------------------------------------------

Vec mlp_eval(const MlpParams& mlp, const Vec& x);
std::vector<ad::Jet2> mlp_eval(const MlpParams& mlp, const std::vector<ad::Jet2>& x);

struct CouplingResult {
  Vec y;
  double logdet;
};

/// y_{1:d} = x_{1:d}; y_{d+1:D} = x_{d+1:D} o exp(k(x_{1:d})) + r(x_{1:d});
/// logdet = sum of the (bounded) log-scales.
CouplingResult coupling_forward(const CouplingBlockParams& block, const Vec& x);

/// Exact algebraic inverse: x_{d+1:D} = (y_{d+1:D} - r(x_{1:d})) o exp(-k(x_{1:d})).
Vec coupling_inverse(const CouplingBlockParams& block, const Vec& y);

struct BranchResult {
  Vec b;
  double logdet;
};

/// Applies every coupling block, each followed by a full reversal of the
/// state vector; log-dets add (the permutations contribute |det| = 1).
BranchResult branch_forward(const BranchParams& branch, const Vec& u);
Vec branch_inverse(const BranchParams& branch, const Vec& b);

/// [t_1(xi) ... t_Q(xi)].
Vec trunk_eval(const MlpParams& trunk, const Vec& xi);

/// Trunk output triple along direction `dir` (unit coordinate direction for
/// PDE residuals): per-output value, first and second directional derivative.
std::vector<ad::Jet2> trunk_eval_jet2(const MlpParams& trunk, const Vec& xi, const Vec& dir);

// ---- tape builders (training path) -----------------------------------------

/// Parameter leaves registered on a tape, same traversal order as flatten().
struct TapeMlp {
  std::vector<std::pair<ad::Tape::Var, ad::Tape::Var>> layers;  // (W, bias row)
};

struct TapeDeepONet {
  TapeMlp trunk;
  std::vector<std::pair<TapeMlp, TapeMlp>> blocks;  // (k_net, r_net)
};

TapeDeepONet register_params(ad::Tape& tape, const DeepONetParams& p);

/// Copies accumulated leaf gradients into a parameter-shaped structure.
/// Missing gradients (no flow) read as zero.
void read_grads(const ad::Tape& tape, const TapeDeepONet& vars, DeepONetParams& grads);

/// Batched MLP forward: x is (n x in), result (n x out).
ad::Tape::Var mlp_forward(ad::Tape& tape, const TapeMlp& mlp, ad::Tape::Var x);

/// Batched branch forward/inverse over rows of u / b.
ad::Tape::Var branch_forward(ad::Tape& tape, const TapeDeepONet& net, ad::Tape::Var u);
ad::Tape::Var branch_inverse(ad::Tape& tape, const TapeDeepONet& net, ad::Tape::Var b);

/// One directional-derivative stream requested from the jet trunk pass.
struct JetRequest {
  int axis = 0;        // coordinate direction
  bool second = false;  // also propagate the second derivative
};

struct JetStreamVars {
  int axis = 0;
  ad::Tape::Var d1 = -1;
  ad::Tape::Var d2 = -1;  // -1 when not requested
};

struct TrunkJets {
  ad::Tape::Var value = -1;             // (n x Q) trunk values
  std::vector<JetStreamVars> streams;   // one per request
};

/// Batched trunk evaluation at `coords` (n x coord_dim) with any number of
/// directional-derivative streams sharing one value pass. Derivative
/// propagation is built from ordinary tape primitives, so a reverse sweep
/// differentiates the whole jet computation with respect to the parameters.
TrunkJets trunk_forward_jets(ad::Tape& tape, const TapeMlp& trunk, const Mat& coords,
                             const std::vector<JetRequest>& requests);

/// Plain batched trunk values at coords (no derivative streams).
ad::Tape::Var trunk_forward(ad::Tape& tape, const TapeMlp& trunk, const Mat& coords);

}  // namespace idon::nets

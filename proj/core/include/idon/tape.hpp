#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "idon/linalg.hpp"

namespace idon::ad {

/// Append-only reverse-mode tape over matrix-valued nodes.
///
/// Nodes are tensor-granular (a matmul or an elementwise map is one node), so
/// a training step records hundreds of nodes rather than millions. Parents
/// always precede children, and one backward sweep visits each node once in
/// reverse order. A tape instance is confined to a single thread; independent
/// tapes may run concurrently.
class Tape {
 public:
  using Var = int;

  Var input(Mat value);     // leaf that receives a gradient
  Var constant(Mat value);  // leaf that does not

  // Elementwise; shapes must agree.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var affine(Var a, double scale, double shift);  // scale * x + shift
  Var tanh(Var a);
  Var exp(Var a);

  Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
  Var add_rowvec(Var m, Var r);  // (n x c) + broadcast (1 x c)
  Var slice_cols(Var a, int c0, int c1);
  Var concat_cols(Var a, Var b);
  Var reverse_cols(Var a);
  Var sum(Var a);      // all entries -> 1 x 1
  Var row_sum(Var a);  // (n x c) -> (n x 1)

  /// Value passes through, gradient does not (freezes a subgraph).
  Var detach(Var a);

  /// Batched regularized least squares: rows of s (n x K) are independent
  /// right-hand sides, output rows are b* = (Y^T Y + eps I)^{-1} Y^T s_i.
  /// Backward implements the solve adjoint for both Y and s.
  Var solve_lsq(Var y, Var s, double eps);

  const Mat& val(Var v) const { return nodes_[v].value; }

  /// Seeds d(root)/d(root) = 1 and accumulates gradients into every node
  /// reachable from an input leaf. root must be 1 x 1.
  void backward(Var root);

  /// Gradient accumulated for v by the last backward(); empty if none flowed.
  const Mat& grad(Var v) const { return nodes_[v].grad; }

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kLeaf, kConst, kAdd, kSub, kMul, kAffine, kTanh, kExp, kMatMul,
    kAddRowVec, kSliceCols, kConcatCols, kReverseCols, kSum, kRowSum,
    kDetach, kSolveLsq,
  };

  struct Node {
    Op op;
    bool needs_grad = false;
    Var p0 = -1, p1 = -1;
    double x0 = 0.0, x1 = 0.0;  // affine scale/shift, lsq eps
    int i0 = 0, i1 = 0;         // slice bounds / matmul transpose flags
    Mat value;
    Mat grad;
    std::shared_ptr<linalg::LsqFactor> factor;  // kSolveLsq only
  };

  Var push(Node&& n);
  Mat& grad_buf(Var v);
  void backprop_node(int i);

  std::vector<Node> nodes_;
};

/// Builds a scalar loss from a flat parameter leaf; used by grad().
using ScalarFn = std::function<Tape::Var(Tape&, Tape::Var)>;

/// Gradient of a scalar tape function at a parameter vector.
/// Throws NonFiniteGradient if any component is NaN/Inf.
Vec grad(const ScalarFn& f, const Vec& at);

}  // namespace idon::ad

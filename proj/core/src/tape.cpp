#include "idon/tape.hpp"

#include <cassert>
#include <cmath>

#include "idon/errors.hpp"

namespace idon::ad {

Tape::Var Tape::push(Node&& n) {
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::input(Mat value) {
  Node n;
  n.op = Op::kLeaf;
  n.needs_grad = true;
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::Var Tape::constant(Mat value) {
  Node n;
  n.op = Op::kConst;
  n.value = std::move(value);
  return push(std::move(n));
}

namespace {
void check_same_shape(const Mat& a, const Mat& b) {
  assert(a.rows == b.rows && a.cols == b.cols);
  (void)a;
  (void)b;
}
}  // namespace

Tape::Var Tape::add(Var a, Var b) {
  const Mat &va = nodes_[a].value, &vb = nodes_[b].value;
  check_same_shape(va, vb);
  Node n;
  n.op = Op::kAdd;
  n.p0 = a;
  n.p1 = b;
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  n.value = Mat(va.rows, va.cols);
  for (std::size_t i = 0; i < va.size(); ++i) n.value.a[i] = va.a[i] + vb.a[i];
  return push(std::move(n));
}

Tape::Var Tape::sub(Var a, Var b) {
  const Mat &va = nodes_[a].value, &vb = nodes_[b].value;
  check_same_shape(va, vb);
  Node n;
  n.op = Op::kSub;
  n.p0 = a;
  n.p1 = b;
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  n.value = Mat(va.rows, va.cols);
  for (std::size_t i = 0; i < va.size(); ++i) n.value.a[i] = va.a[i] - vb.a[i];
  return push(std::move(n));
}

Tape::Var Tape::mul(Var a, Var b) {
  const Mat &va = nodes_[a].value, &vb = nodes_[b].value;
  check_same_shape(va, vb);
  Node n;
  n.op = Op::kMul;
  n.p0 = a;
  n.p1 = b;
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  n.value = Mat(va.rows, va.cols);
  for (std::size_t i = 0; i < va.size(); ++i) n.value.a[i] = va.a[i] * vb.a[i];
  return push(std::move(n));
}

Tape::Var Tape::affine(Var a, double scale, double shift) {
  const Mat& va = nodes_[a].value;
  Node n;
  n.op = Op::kAffine;
  n.p0 = a;
  n.x0 = scale;
  n.x1 = shift;
  n.needs_grad = nodes_[a].needs_grad;
  n.value = Mat(va.rows, va.cols);
  for (std::size_t i = 0; i < va.size(); ++i) n.value.a[i] = scale * va.a[i] + shift;
  return push(std::move(n));
}

Tape::Var Tape::tanh(Var a) {
  const Mat& va = nodes_[a].value;
  Node n;
  n.op = Op::kTanh;
  n.p0 = a;
  n.needs_grad = nodes_[a].needs_grad;
  n.value = Mat(va.rows, va.cols);
  for (std::size_t i = 0; i < va.size(); ++i) n.value.a[i] = std::tanh(va.a[i]);
  return push(std::move(n));
}

Tape::Var Tape::exp(Var a) {
  const Mat& va = nodes_[a].value;
  Node n;
  n.op = Op::kExp;
  n.p0 = a;
  n.needs_grad = nodes_[a].needs_grad;
  n.value = Mat(va.rows, va.cols);
  for (std::size_t i = 0; i < va.size(); ++i) n.value.a[i] = std::exp(va.a[i]);
  return push(std::move(n));
}

Tape::Var Tape::matmul(Var a, Var b, bool trans_a, bool trans_b) {
  Node n;
  n.op = Op::kMatMul;
  n.p0 = a;
  n.p1 = b;
  n.i0 = trans_a ? 1 : 0;
  n.i1 = trans_b ? 1 : 0;
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  n.value = linalg::matmul(nodes_[a].value, nodes_[b].value, trans_a, trans_b);
  return push(std::move(n));
}

Tape::Var Tape::add_rowvec(Var m, Var r) {
  const Mat &vm = nodes_[m].value, &vr = nodes_[r].value;
  assert(vr.rows == 1 && vr.cols == vm.cols);
  Node n;
  n.op = Op::kAddRowVec;
  n.p0 = m;
  n.p1 = r;
  n.needs_grad = nodes_[m].needs_grad || nodes_[r].needs_grad;
  n.value = Mat(vm.rows, vm.cols);
  for (int i = 0; i < vm.rows; ++i)
    for (int j = 0; j < vm.cols; ++j) n.value(i, j) = vm(i, j) + vr(0, j);
  return push(std::move(n));
}

Tape::Var Tape::slice_cols(Var a, int c0, int c1) {
  const Mat& va = nodes_[a].value;
  assert(0 <= c0 && c0 < c1 && c1 <= va.cols);
  Node n;
  n.op = Op::kSliceCols;
  n.p0 = a;
  n.i0 = c0;
  n.i1 = c1;
  n.needs_grad = nodes_[a].needs_grad;
  n.value = Mat(va.rows, c1 - c0);
  for (int i = 0; i < va.rows; ++i)
    for (int j = c0; j < c1; ++j) n.value(i, j - c0) = va(i, j);
  return push(std::move(n));
}

Tape::Var Tape::concat_cols(Var a, Var b) {
  const Mat &va = nodes_[a].value, &vb = nodes_[b].value;
  assert(va.rows == vb.rows);
  Node n;
  n.op = Op::kConcatCols;
  n.p0 = a;
  n.p1 = b;
  n.i0 = va.cols;
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  n.value = Mat(va.rows, va.cols + vb.cols);
  for (int i = 0; i < va.rows; ++i) {
    for (int j = 0; j < va.cols; ++j) n.value(i, j) = va(i, j);
    for (int j = 0; j < vb.cols; ++j) n.value(i, va.cols + j) = vb(i, j);
  }
  return push(std::move(n));
}

Tape::Var Tape::reverse_cols(Var a) {
  const Mat& va = nodes_[a].value;
  Node n;
  n.op = Op::kReverseCols;
  n.p0 = a;
  n.needs_grad = nodes_[a].needs_grad;
  n.value = Mat(va.rows, va.cols);
  for (int i = 0; i < va.rows; ++i)
    for (int j = 0; j < va.cols; ++j) n.value(i, j) = va(i, va.cols - 1 - j);
  return push(std::move(n));
}

Tape::Var Tape::sum(Var a) {
  const Mat& va = nodes_[a].value;
  Node n;
  n.op = Op::kSum;
  n.p0 = a;
  n.needs_grad = nodes_[a].needs_grad;
  n.value = Mat(1, 1);
  double s = 0.0;
  for (double v : va.a) s += v;
  n.value(0, 0) = s;
  return push(std::move(n));
}

Tape::Var Tape::row_sum(Var a) {
  const Mat& va = nodes_[a].value;
  Node n;
  n.op = Op::kRowSum;
  n.p0 = a;
  n.needs_grad = nodes_[a].needs_grad;
  n.value = Mat(va.rows, 1);
  for (int i = 0; i < va.rows; ++i) {
    double s = 0.0;
    const double* r = va.row(i);
    for (int j = 0; j < va.cols; ++j) s += r[j];
    n.value(i, 0) = s;
  }
  return push(std::move(n));
}

Tape::Var Tape::detach(Var a) {
  Node n;
  n.op = Op::kDetach;
  n.p0 = a;
  n.needs_grad = false;
  n.value = nodes_[a].value;
  return push(std::move(n));
}

Tape::Var Tape::solve_lsq(Var y, Var s, double eps) {
  const Mat &vy = nodes_[y].value, &vs = nodes_[s].value;
  assert(vs.cols == vy.rows);
  Node n;
  n.op = Op::kSolveLsq;
  n.p0 = y;
  n.p1 = s;
  n.x0 = eps;
  n.needs_grad = nodes_[y].needs_grad || nodes_[s].needs_grad;
  n.factor = std::make_shared<linalg::LsqFactor>(linalg::factor_lsq(vy, eps));
  n.value = Mat(vs.rows, vy.cols);
  for (int i = 0; i < vs.rows; ++i) {
    Vec rhs(vs.row(i), vs.row(i) + vs.cols);
    Vec b = n.factor->solve(rhs);
    for (int j = 0; j < vy.cols; ++j) n.value(i, j) = b[j];
  }
  return push(std::move(n));
}

Mat& Tape::grad_buf(Var v) {
  Node& n = nodes_[v];
  if (n.grad.size() == 0) n.grad = Mat(n.value.rows, n.value.cols);
  return n.grad;
}

namespace {
void add_into(Mat& dst, const Mat& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.a[i] += src.a[i];
}
}  // namespace

void Tape::backward(Var root) {
  assert(nodes_[root].value.rows == 1 && nodes_[root].value.cols == 1);
  grad_buf(root)(0, 0) += 1.0;
  for (int i = root; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    backprop_node(i);
  }
}

void Tape::backprop_node(int i) {
  Node& n = nodes_[i];
  const Mat& g = n.grad;
  auto wants = [&](Var p) { return p >= 0 && nodes_[p].needs_grad; };

  switch (n.op) {
    case Op::kLeaf:
    case Op::kConst:
    case Op::kDetach:
      break;
    case Op::kAdd:
      if (wants(n.p0)) add_into(grad_buf(n.p0), g);
      if (wants(n.p1)) add_into(grad_buf(n.p1), g);
      break;
    case Op::kSub:
      if (wants(n.p0)) add_into(grad_buf(n.p0), g);
      if (wants(n.p1)) {
        Mat& gb = grad_buf(n.p1);
        for (std::size_t k = 0; k < gb.size(); ++k) gb.a[k] -= g.a[k];
      }
      break;
    case Op::kMul: {
      if (wants(n.p0)) {
        Mat& ga = grad_buf(n.p0);
        const Mat& vb = nodes_[n.p1].value;
        for (std::size_t k = 0; k < ga.size(); ++k) ga.a[k] += g.a[k] * vb.a[k];
      }
      if (wants(n.p1)) {
        Mat& gb = grad_buf(n.p1);
        const Mat& va = nodes_[n.p0].value;
        for (std::size_t k = 0; k < gb.size(); ++k) gb.a[k] += g.a[k] * va.a[k];
      }
      break;
    }
    case Op::kAffine: {
      if (wants(n.p0)) {
        Mat& ga = grad_buf(n.p0);
        for (std::size_t k = 0; k < ga.size(); ++k) ga.a[k] += n.x0 * g.a[k];
      }
      break;
    }
    case Op::kTanh: {
      if (wants(n.p0)) {
        Mat& ga = grad_buf(n.p0);
        for (std::size_t k = 0; k < ga.size(); ++k) {
          const double t = n.value.a[k];
          ga.a[k] += g.a[k] * (1.0 - t * t);
        }
      }
      break;
    }
    case Op::kExp: {
      if (wants(n.p0)) {
        Mat& ga = grad_buf(n.p0);
        for (std::size_t k = 0; k < ga.size(); ++k) ga.a[k] += g.a[k] * n.value.a[k];
      }
      break;
    }
    case Op::kMatMul: {
      const bool ta = n.i0 != 0, tb = n.i1 != 0;
      const Mat& va = nodes_[n.p0].value;
      const Mat& vb = nodes_[n.p1].value;
      if (!ta && !tb) {
        if (wants(n.p0)) add_into(grad_buf(n.p0), linalg::matmul(g, vb, false, true));
        if (wants(n.p1)) add_into(grad_buf(n.p1), linalg::matmul(va, g, true, false));
      } else if (!ta && tb) {
        if (wants(n.p0)) add_into(grad_buf(n.p0), linalg::matmul(g, vb, false, false));
        if (wants(n.p1)) add_into(grad_buf(n.p1), linalg::matmul(g, va, true, false));
      } else if (ta && !tb) {
        if (wants(n.p0)) add_into(grad_buf(n.p0), linalg::matmul(vb, g, false, true));
        if (wants(n.p1)) add_into(grad_buf(n.p1), linalg::matmul(va, g, false, false));
      } else {
        if (wants(n.p0)) add_into(grad_buf(n.p0), linalg::matmul(vb, g, true, true));
        if (wants(n.p1)) add_into(grad_buf(n.p1), linalg::matmul(g, va, true, true));
      }
      break;
    }
    case Op::kAddRowVec: {
      if (wants(n.p0)) add_into(grad_buf(n.p0), g);
      if (wants(n.p1)) {
        Mat& gr = grad_buf(n.p1);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c) gr(0, c) += g(r, c);
      }
      break;
    }
    case Op::kSliceCols: {
      if (wants(n.p0)) {
        Mat& ga = grad_buf(n.p0);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c) ga(r, n.i0 + c) += g(r, c);
      }
      break;
    }
    case Op::kConcatCols: {
      const int ca = n.i0;
      if (wants(n.p0)) {
        Mat& ga = grad_buf(n.p0);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < ca; ++c) ga(r, c) += g(r, c);
      }
      if (wants(n.p1)) {
        Mat& gb = grad_buf(n.p1);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < gb.cols; ++c) gb(r, c) += g(r, ca + c);
      }
      break;
    }
    case Op::kReverseCols: {
      if (wants(n.p0)) {
        Mat& ga = grad_buf(n.p0);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c) ga(r, g.cols - 1 - c) += g(r, c);
      }
      break;
    }
    case Op::kSum: {
      if (wants(n.p0)) {
        Mat& ga = grad_buf(n.p0);
        const double gv = g(0, 0);
        for (std::size_t k = 0; k < ga.size(); ++k) ga.a[k] += gv;
      }
      break;
    }
    case Op::kRowSum: {
      if (wants(n.p0)) {
        Mat& ga = grad_buf(n.p0);
        for (int r = 0; r < ga.rows; ++r) {
          const double gv = g(r, 0);
          for (int c = 0; c < ga.cols; ++c) ga(r, c) += gv;
        }
      }
      break;
    }
    case Op::kSolveLsq: {
      const Mat& y = nodes_[n.p0].value;   // K x D
      const Mat& s = nodes_[n.p1].value;   // n x K
      const Mat& b = n.value;              // n x D
      const int nb = s.rows, d = y.cols;
      // lam_i = (Y^T Y + eps I)^{-1} g_i, batched by row.
      Mat lam(nb, d);
      for (int r = 0; r < nb; ++r) {
        Vec gi(g.row(r), g.row(r) + d);
        Vec li = n.factor->solve_normal(gi);
        for (int c = 0; c < d; ++c) lam(r, c) = li[c];
      }
      if (wants(n.p1)) add_into(grad_buf(n.p1), linalg::matmul(lam, y, false, true));
      if (wants(n.p0)) {
        // grad_Y = S^T Lam - Y (Lam^T B + B^T Lam)
        Mat m = linalg::matmul(lam, b, true, false);
        const Mat bt_lam = linalg::matmul(b, lam, true, false);
        add_into(m, bt_lam);
        const Mat ym = linalg::matmul(y, m);
        Mat gy = linalg::matmul(s, lam, true, false);
        for (std::size_t k = 0; k < gy.size(); ++k) gy.a[k] -= ym.a[k];
        add_into(grad_buf(n.p0), gy);
      }
      break;
    }
  }
}

Vec grad(const ScalarFn& f, const Vec& at) {
  Tape tape;
  const Tape::Var params = tape.input(Mat::from_row(at));
  const Tape::Var loss = f(tape, params);
  if (!std::isfinite(tape.val(loss)(0, 0)))
    throw NonFiniteGradient("grad: loss is not finite at the evaluation point");
  tape.backward(loss);
  const Mat& g = tape.grad(params);
  if (g.size() == 0) return Vec(at.size(), 0.0);
  if (!linalg::all_finite(g))
    throw NonFiniteGradient("grad: gradient has NaN/Inf components");
  return g.a;
}

}  // namespace idon::ad

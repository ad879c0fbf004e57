#include <doctest.h>

#include <cmath>

#include "idon/networks.hpp"
#include "test_util.hpp"

using namespace idon;
using namespace testutil;

namespace {

void zero_mlp(nets::MlpParams& m) {
  for (auto& l : m.layers) {
    std::fill(l.w.a.begin(), l.w.a.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
}

nets::DeepONetParams identity_branch(const nets::DeepONetSpec& spec) {
  nets::DeepONetParams p = nets::init_params(spec, 1);
  for (auto& b : p.branch.blocks) {
    zero_mlp(b.k_net);
    zero_mlp(b.r_net);
  }
  return p;
}

}  // namespace

TEST_CASE("coupling with zero subnets is the identity") {
  const auto spec = small_spec(6);
  const auto p = identity_branch(spec);
  Rng rng(2);
  const Vec x = random_vec(6, rng);
  const auto res = nets::coupling_forward(p.branch.blocks[0], x);
  CHECK(max_abs_diff(res.y, x) == 0.0);
  CHECK(res.logdet == 0.0);
}

TEST_CASE("coupling with pure shift") {
  const auto spec = small_spec(6);
  auto p = identity_branch(spec);
  auto& r_last = p.branch.blocks[0].r_net.layers.back();
  for (double& b : r_last.b) b = 0.75;
  Rng rng(3);
  const Vec x = random_vec(6, rng);
  const auto res = nets::coupling_forward(p.branch.blocks[0], x);
  CHECK(res.logdet == 0.0);
  for (int j = 0; j < 3; ++j) CHECK(res.y[j] == x[j]);
  for (int j = 3; j < 6; ++j) CHECK(res.y[j] == doctest::Approx(x[j] + 0.75));
  // Inverse subtracts the shift exactly.
  const Vec back = nets::coupling_inverse(p.branch.blocks[0], res.y);
  CHECK(max_abs_diff(back, x) < 1e-15);
}

TEST_CASE("coupling logdet matches numerical Jacobian") {
  const auto spec = small_spec(6);
  const auto p = random_params(spec, 5, 1.0);
  Rng rng(7);
  const Vec x = random_vec(6, rng);
  const auto res = nets::coupling_forward(p.branch.blocks[0], x);
  const Mat jac = fd_jacobian(
      [&](const Vec& v) { return nets::coupling_forward(p.branch.blocks[0], v).y; }, x);
  const double ref = logabsdet_lu(jac);
  CHECK(res.logdet == doctest::Approx(ref).epsilon(1e-6));
}

TEST_CASE("coupling inverse round trip") {
  const auto spec = small_spec(10);
  const auto p = random_params(spec, 11, 1.0);
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = random_vec(10, rng);
    const auto fwd = nets::coupling_forward(p.branch.blocks[0], x);
    const Vec back = nets::coupling_inverse(p.branch.blocks[0], fwd.y);
    CHECK(max_abs_diff(back, x) < 1e-10);
  }
}

TEST_CASE("branch of identity blocks restores order after two reversals") {
  const auto spec = small_spec(6);
  const auto p = identity_branch(spec);
  Rng rng(17);
  const Vec u = random_vec(6, rng);
  const auto res = nets::branch_forward(p.branch, u);
  CHECK(max_abs_diff(res.b, u) == 0.0);
  CHECK(res.logdet == 0.0);
}

TEST_CASE("branch round trip at D=100") {
  auto spec = small_spec(100);
  spec.branch_blocks = 6;
  const auto p = random_params(spec, 19, 1.0);
  Rng rng(23);
  const Vec u = random_vec(100, rng);
  const auto fwd = nets::branch_forward(p.branch, u);
  const Vec back = nets::branch_inverse(p.branch, fwd.b);
  CHECK(max_abs_diff(back, u) < 1e-9 * (1.0 + max_abs(u)));
}

TEST_CASE("branch logdet vs numerical Jacobian at D=6") {
  auto spec = small_spec(6);
  spec.branch_blocks = 3;
  const auto p = random_params(spec, 29, 1.0);
  Rng rng(31);
  const Vec u = random_vec(6, rng);
  const auto res = nets::branch_forward(p.branch, u);
  const Mat jac =
      fd_jacobian([&](const Vec& v) { return nets::branch_forward(p.branch, v).b; }, u);
  CHECK(res.logdet == doctest::Approx(logabsdet_lu(jac)).epsilon(1e-5));
}

TEST_CASE("invertibility property over random nets") {
  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 4 + 2 * static_cast<int>(rng.uniform_index(8));
    auto spec = small_spec(dim);
    spec.branch_blocks = 2 + static_cast<int>(rng.uniform_index(3));
    const auto p = random_params(spec, 1000 + trial, 1.5);
    const Vec u = random_vec(dim, rng, 2.0);
    const auto fwd = nets::branch_forward(p.branch, u);
    const Vec back = nets::branch_inverse(p.branch, fwd.b);
    CHECK(max_abs_diff(back, u) < 1e-9 * (1.0 + max_abs(u)));
  }
}

TEST_CASE("every coordinate is transformed after two blocks") {
  const auto spec = small_spec(8);
  const auto p = random_params(spec, 41, 1.0);
  Rng rng(43);
  const Vec u = random_vec(8, rng);
  const Vec base = nets::branch_forward(p.branch, u).b;
  for (int j = 0; j < 8; ++j) {
    Vec up = u;
    up[j] += 0.1;
    const Vec out = nets::branch_forward(p.branch, up).b;
    CHECK(max_abs_diff(out, base) > 1e-12);
  }
}

TEST_CASE("trunk with zero weights returns zero") {
  const auto spec = small_spec(6, 2);
  auto p = nets::init_params(spec, 3);
  zero_mlp(p.trunk);
  const Vec t = nets::trunk_eval(p.trunk, {0.3, 0.7});
  CHECK(max_abs(t) == 0.0);
}

TEST_CASE("single linear layer trunk") {
  nets::MlpParams trunk;
  nets::MlpLayer l;
  l.w = Mat(2, 1, {1.5, -2.0});
  l.b = {0.25, 0.5};
  trunk.layers.push_back(l);
  const Vec t = nets::trunk_eval(trunk, {2.0});
  CHECK(t[0] == doctest::Approx(3.25));
  CHECK(t[1] == doctest::Approx(-3.5));
}

TEST_CASE("trunk matches an independent forward-pass implementation") {
  const auto spec = small_spec(5, 2);
  const auto p = random_params(spec, 47);
  const Vec xi = {0.37, 0.81};
  // Reference: naive re-implementation of the tanh MLP forward pass.
  Vec h = xi;
  for (std::size_t l = 0; l < p.trunk.layers.size(); ++l) {
    const auto& layer = p.trunk.layers[l];
    Vec z(layer.w.rows, 0.0);
    for (int i = 0; i < layer.w.rows; ++i) {
      double acc = layer.b[i];
      for (int j = 0; j < layer.w.cols; ++j) acc += layer.w(i, j) * h[j];
      z[i] = (l + 1 < p.trunk.layers.size()) ? std::tanh(acc) : acc;
    }
    h = z;
  }
  const Vec t = nets::trunk_eval(p.trunk, xi);
  CHECK(max_abs_diff(t, h) < 1e-15);
}

TEST_CASE("init_params determinism and seed sensitivity") {
  const auto spec = small_spec(8, 1, 3);
  const auto a = nets::init_params(spec, 12345);
  const auto b = nets::init_params(spec, 12345);
  const auto c = nets::init_params(spec, 54321);
  const Vec fa = nets::flatten(a), fb = nets::flatten(b), fc = nets::flatten(c);
  REQUIRE(fa.size() == fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) CHECK(fa[i] == fb[i]);
  bool any_diff = false;
  for (std::size_t i = 0; i < fa.size(); ++i) any_diff |= (fa[i] != fc[i]);
  CHECK(any_diff);
}

TEST_CASE("fresh init gives zero logdet couplings") {
  const auto spec = small_spec(10, 1, 4);
  const auto p = nets::init_params(spec, 77);
  Rng rng(53);
  const Vec u = random_vec(10, rng);
  const auto res = nets::branch_forward(p.branch, u);
  CHECK(res.logdet == 0.0);
}

TEST_CASE("flatten and unflatten round trip") {
  const auto spec = small_spec(6, 2, 3);
  const auto p = random_params(spec, 59);
  const Vec flat = nets::flatten(p);
  CHECK(flat.size() == nets::param_count(p));
  auto q = nets::init_params(spec, 0);
  nets::unflatten(flat, q);
  const Vec flat2 = nets::flatten(q);
  for (std::size_t i = 0; i < flat.size(); ++i) CHECK(flat[i] == flat2[i]);
}

TEST_CASE("tape branch evaluation matches the plain path bitwise") {
  auto spec = small_spec(12);
  spec.branch_blocks = 3;
  const auto p = random_params(spec, 61, 1.0);
  Rng rng(67);
  const Vec u = random_vec(12, rng);

  ad::Tape tape;
  const auto net = nets::register_params(tape, p);
  const auto out = nets::branch_forward(tape, net, tape.constant(Mat::from_row(u)));
  const Vec plain = nets::branch_forward(p.branch, u).b;
  for (int j = 0; j < 12; ++j) CHECK(tape.val(out)(0, j) == plain[j]);

  const auto inv = nets::branch_inverse(tape, net, out);
  const Vec plain_inv = nets::branch_inverse(p.branch, plain);
  for (int j = 0; j < 12; ++j) CHECK(tape.val(inv)(0, j) == plain_inv[j]);
}

TEST_CASE("tape trunk evaluation matches trunk_eval bitwise") {
  const auto spec = small_spec(7, 2);
  const auto p = random_params(spec, 71);
  Mat coords(3, 2);
  Rng rng(73);
  for (double& v : coords.a) v = rng.uniform();

  ad::Tape tape;
  const auto net = nets::register_params(tape, p);
  const auto y = nets::trunk_forward(tape, net.trunk, coords);
  for (int k = 0; k < 3; ++k) {
    const Vec xi(coords.row(k), coords.row(k) + 2);
    const Vec t = nets::trunk_eval(p.trunk, xi);
    for (int j = 0; j < 7; ++j) CHECK(tape.val(y)(k, j) == t[j]);
  }
}

TEST_CASE("tape trunk jets match pointwise Jet2 evaluation") {
  const auto spec = small_spec(5, 2);
  const auto p = random_params(spec, 79);
  Mat coords(4, 2);
  Rng rng(83);
  for (double& v : coords.a) v = rng.uniform();

  ad::Tape tape;
  const auto net = nets::register_params(tape, p);
  const std::vector<nets::JetRequest> reqs = {{0, true}, {1, false}};
  const auto jets = nets::trunk_forward_jets(tape, net.trunk, coords, reqs);

  for (int k = 0; k < 4; ++k) {
    const Vec xi(coords.row(k), coords.row(k) + 2);
    const auto jx = nets::trunk_eval_jet2(p.trunk, xi, {1.0, 0.0});
    const auto jt = nets::trunk_eval_jet2(p.trunk, xi, {0.0, 1.0});
    for (int j = 0; j < 5; ++j) {
      CHECK(tape.val(jets.value)(k, j) == doctest::Approx(jx[j].v).epsilon(1e-14));
      CHECK(tape.val(jets.streams[0].d1)(k, j) == doctest::Approx(jx[j].d1).epsilon(1e-12));
      CHECK(tape.val(jets.streams[0].d2)(k, j) == doctest::Approx(jx[j].d2).epsilon(1e-12));
      CHECK(tape.val(jets.streams[1].d1)(k, j) == doctest::Approx(jt[j].d1).epsilon(1e-12));
    }
  }
}

#include <doctest.h>

#include <cmath>

#include "idon/jet.hpp"
#include "idon/networks.hpp"
#include "test_util.hpp"

using namespace idon;
using namespace testutil;
using ad::Jet2;

TEST_CASE("jet square") {
  const Jet2 x(2.0, 1.0, 0.0);
  const Jet2 y = x * x;
  CHECK(y.v == doctest::Approx(4.0));
  CHECK(y.d1 == doctest::Approx(4.0));
  CHECK(y.d2 == doctest::Approx(2.0));
}

TEST_CASE("jet tanh at origin") {
  const Jet2 y = ad::tanh(Jet2(0.0, 1.0, 0.0));
  CHECK(y.v == doctest::Approx(0.0));
  CHECK(y.d1 == doctest::Approx(1.0));
  CHECK(y.d2 == doctest::Approx(0.0));
}

namespace {

// Second-order central differences for d1/d2 oracles.
void check_jet_against_fd(const std::function<double(double)>& f,
                          const std::function<Jet2(const Jet2&)>& jf, double x0,
                          double tol = 1e-6) {
  const double h = 1e-4;
  const Jet2 out = jf(Jet2(x0, 1.0, 0.0));
  const double d1 = (f(x0 + h) - f(x0 - h)) / (2 * h);
  const double d2 = (f(x0 + h) - 2 * f(x0) + f(x0 - h)) / (h * h);
  CHECK(out.v == doctest::Approx(f(x0)).epsilon(1e-12));
  CHECK(out.d1 == doctest::Approx(d1).epsilon(tol));
  CHECK(out.d2 == doctest::Approx(d2).epsilon(std::max(tol, 1e-4)));
}

}  // namespace

TEST_CASE("jet primitives match finite differences") {
  check_jet_against_fd([](double x) { return std::exp(x); },
                       [](const Jet2& x) { return ad::exp(x); }, 0.37);
  check_jet_against_fd([](double x) { return std::sin(x); },
                       [](const Jet2& x) { return ad::sin(x); }, 0.83);
  check_jet_against_fd([](double x) { return std::cos(x); },
                       [](const Jet2& x) { return ad::cos(x); }, -0.41);
  check_jet_against_fd([](double x) { return std::tanh(x); },
                       [](const Jet2& x) { return ad::tanh(x); }, 0.6);
  check_jet_against_fd([](double x) { return std::log(x); },
                       [](const Jet2& x) { return ad::log(x); }, 1.7);
  check_jet_against_fd([](double x) { return 1.0 / (1.0 + x * x); },
                       [](const Jet2& x) { return 1.0 / (1.0 + x * x); }, 0.9);
}

TEST_CASE("trunk jets match second-order finite differences") {
  const auto spec = small_spec(6, 2);
  const auto params = random_params(spec, 42);
  Rng rng(17);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec xi = {rng.uniform(), rng.uniform()};
    const int axis = static_cast<int>(rng.uniform_index(2));
    Vec dir(2, 0.0);
    dir[axis] = 1.0;
    const auto jets = nets::trunk_eval_jet2(params.trunk, xi, dir);

    const double h = 1e-4;
    Vec xp = xi, xm = xi;
    xp[axis] += h;
    xm[axis] -= h;
    const Vec fp = nets::trunk_eval(params.trunk, xp);
    const Vec f0 = nets::trunk_eval(params.trunk, xi);
    const Vec fm = nets::trunk_eval(params.trunk, xm);
    for (std::size_t j = 0; j < f0.size(); ++j) {
      const double d1 = (fp[j] - fm[j]) / (2 * h);
      const double d2 = (fp[j] - 2 * f0[j] + fm[j]) / (h * h);
      CHECK(jets[j].v == doctest::Approx(f0[j]).epsilon(1e-12));
      CHECK(jets[j].d1 == doctest::Approx(d1).epsilon(1e-4));
      CHECK(std::fabs(jets[j].d2 - d2) < 1e-4 * (1.0 + std::fabs(d2)));
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("trunk jets stay finite on finite inputs") {
  const auto spec = small_spec(8, 2);
  const auto params = random_params(spec, 7, 2.0);
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec xi = {20.0 * (rng.uniform() - 0.5), 20.0 * (rng.uniform() - 0.5)};
    for (int axis = 0; axis < 2; ++axis) {
      Vec dir(2, 0.0);
      dir[axis] = 1.0;
      for (const Jet2& j : nets::trunk_eval_jet2(params.trunk, xi, dir)) {
        CHECK(std::isfinite(j.v));
        CHECK(std::isfinite(j.d1));
        CHECK(std::isfinite(j.d2));
      }
    }
  }
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

#include "dflab/manifold.hpp"

using namespace dflab;

namespace {

constexpr double kPi = std::numbers::pi;

/// Independent 1-D oracle: plain image sum with many images.
double images_1d(double delta, double t, double len) {
  double s = 0.0;
  for (int n = -60; n <= 60; ++n) {
    const double a = delta + n * len;
    s += std::exp(-a * a / (2.0 * t));
  }
  return len * s / std::sqrt(2.0 * kPi * t);
}

}  // namespace

TEST_CASE("torus heat kernel agrees with a brute image sum") {
  const Manifold m = Manifold::torus(2);
  for (double t : {1e-3, 0.01, 0.1, 0.24, 0.26, 0.5, 2.0}) {
    const std::vector<double> x{0.1, 0.7}, y{0.85, 0.2};
    const double expect = images_1d(-0.25, t, 1.0) * images_1d(0.5, t, 1.0);
    CHECK(heat_kernel_density(m, x, y, t) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("torus heat kernel is a symmetric probability density") {
  const Manifold m = Manifold::torus(2);
  const std::vector<double> x{0.3, 0.6};
  for (double t : {0.02, 0.3}) {
    const int g = 200;
    double total = 0.0;
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j) {
        const std::vector<double> y{(i + 0.5) / g, (j + 0.5) / g};
        total += heat_kernel_density(m, x, y, t);
      }
    CHECK(total / (g * g) == doctest::Approx(1.0).epsilon(1e-9));
  }
  const std::vector<double> y{0.9, 0.05};
  CHECK(heat_kernel_density(m, x, y, 0.07) == doctest::Approx(heat_kernel_density(m, y, x, 0.07)).epsilon(1e-14));
  CHECK_THROWS_AS(heat_kernel_density(m, x, y, 0.0), std::invalid_argument);
}

TEST_CASE("heat kernel satisfies Chapman-Kolmogorov on the circle") {
  const Manifold m = Manifold::torus(1);
  const std::vector<double> x{0.2}, y{0.65};
  const int g = 4000;
  double conv = 0.0;
  for (int i = 0; i < g; ++i) {
    const std::vector<double> z{(i + 0.5) / g};
    conv += heat_kernel_density(m, x, z, 0.03) * heat_kernel_density(m, z, y, 0.05);
  }
  CHECK(conv / g == doctest::Approx(heat_kernel_density(m, x, y, 0.08)).epsilon(1e-9));
}

TEST_CASE("heat kernel conformal rescaling") {
  const Manifold m = Manifold::torus(2);
  const Report rep = verify_heat_rescaling(m, {}, MonteCarlo{});
  CHECK(rep.passed());
  const std::vector<double> x{0.1, 0.2}, y{0.3, 0.9};
  CHECK(heat_kernel_density(m.rescaled(4.0), x, y, 0.2) ==
        doctest::Approx(heat_kernel_density(m, x, y, 0.05)).epsilon(1e-12));
}

TEST_CASE("sphere heat kernel integrates to one and matches the first eigenvalue") {
  const Manifold s = Manifold::sphere();
  const std::vector<double> north{0.0, 0.0, 1.0};
  for (double t : {0.05, 0.5}) {
    const int g = 20000;
    double total = 0.0, first = 0.0;
    for (int i = 0; i < g; ++i) {
      const double th = kPi * (i + 0.5) / g;
      const std::vector<double> y{std::sin(th), 0.0, std::cos(th)};
      const double h = heat_kernel_density(s, north, y, t);
      total += h * std::sin(th) * 0.5 * kPi / g;
      first += h * std::cos(th) * std::sin(th) * 0.5 * kPi / g;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(first == doctest::Approx(std::exp(-t)).epsilon(1e-6));
  }
}

TEST_CASE("sphere random walk reproduces E[cos theta] = exp(-t)") {
  const Manifold s = Manifold::sphere();
  Rng rng = make_rng(3, "sphere-walk");
  const std::vector<double> north{0.0, 0.0, 1.0};
  Moments c;
  for (int i = 0; i < 20000; ++i) c.add(brownian_increment(s, north, 0.5, rng)[2]);
  CHECK(std::abs(c.mean() - std::exp(-0.5)) <= 4.0 * c.stderr_mean());
}

TEST_CASE("torus Brownian increments: uniform at large time, heat kernel at small time") {
  const Manifold m = Manifold::torus(2);
  Rng rng = make_rng(5, "bm");
  const std::vector<double> x0{0.25, 0.5};

  std::vector<double> a, b;
  for (int i = 0; i < 5000; ++i) {
    a.push_back(brownian_increment(m, x0, 1e6, rng)[0]);
    b.push_back(sample_uniform(m, rng)[0]);
  }
  CHECK(ks_two_sample(a, b) <= ks_critical(a.size(), b.size(), 1e-3));

  // Chi-square against bin probabilities integrated from the 1-D kernel.
  const Manifold circle = Manifold::torus(1);
  const double t = 0.02;
  const int bins = 20, n = 20000;
  std::vector<double> counts(bins, 0.0);
  for (int i = 0; i < n; ++i) {
    const double v = brownian_increment(m, x0, t, rng)[0];
    counts[std::min(bins - 1, static_cast<int>(v * bins))] += 1.0;
  }
  double chi2 = 0.0;
  for (int k = 0; k < bins; ++k) {
    double p = 0.0;
    const int q = 200;
    for (int j = 0; j < q; ++j) {
      const std::vector<double> y{(k + (j + 0.5) / q) / bins}, x{0.25};
      p += heat_kernel_density(circle, x, y, t) / (q * bins);
    }
    chi2 += (counts[k] - n * p) * (counts[k] - n * p) / (n * p);
  }
  boost::math::chi_squared dist(bins - 1);
  CHECK(chi2 <= boost::math::quantile(dist, 0.999));
  CHECK_THROWS_AS(brownian_increment(m, x0, 0.0, rng), std::invalid_argument);
}

TEST_CASE("torus distance uses the shortest representative and the metric scale") {
  const Manifold m = Manifold::torus(2);
  const std::vector<double> x{0.05, 0.5}, y{0.95, 0.5};
  CHECK(distance(m, x, y) == doctest::Approx(0.1));
  CHECK(distance(m.rescaled(4.0), x, y) == doctest::Approx(0.2));
  std::vector<double> z{-0.25, 1.75};
  wrap_in_place(m, z);
  CHECK(z[0] == doctest::Approx(0.75));
  CHECK(z[1] == doctest::Approx(0.75));
}

TEST_CASE("trig derivatives match finite differences") {
  const TrigFunction f(2, 1.0, {{1.0, {1, 0}, Phase::cos}, {0.5, {1, 2}, Phase::sin}, {0.3, {0, 0}, Phase::cos}});
  const std::vector<double> x{0.31, 0.77};
  const double h = 1e-5;
  std::vector<double> g(2);
  f.gradient(x, g);
  double lap = 0.0;
  for (int a = 0; a < 2; ++a) {
    std::vector<double> xp = x, xm = x;
    xp[a] += h;
    xm[a] -= h;
    CHECK(g[a] == doctest::Approx((f(xp) - f(xm)) / (2 * h)).epsilon(1e-8));
    CHECK(f.derivative(a)(x) == doctest::Approx(g[a]).epsilon(1e-12));
    const double h2 = 1e-4;
    std::vector<double> xpp = x, xmm = x;
    xpp[a] += h2;
    xmm[a] -= h2;
    lap += (f(xpp) - 2 * f(x) + f(xmm)) / (h2 * h2);
  }
  CHECK(f.laplacian(x) == doctest::Approx(lap).epsilon(1e-5));
  CHECK(f.coef_l1() == doctest::Approx(1.8));
  CHECK(TrigFunction(2, 1.0, {{1.0, {1, 0}, Phase::cos}, {-1.0, {-1, 0}, Phase::cos}}).is_zero());
  CHECK(TrigFunction(2, 1.0, {{2.0, {0, 0}, Phase::cos}}).is_constant());
}

TEST_CASE("flows: closed form, inverse, and Jacobian determinant") {
  const Manifold m = Manifold::torus(2);
  const VectorField constant = VectorField::constant({0.3, -0.2});
  const auto r = flow(m, constant, 1.0, std::vector<double>{0.9, 0.1});
  CHECK(r.x[0] == doctest::Approx(0.2));
  CHECK(r.x[1] == doctest::Approx(0.9));
  CHECK(r.logdet == 0.0);

  const VectorField w({TrigFunction(2, 1.0, {{0.3, {1, 0}, Phase::sin}}),
                       TrigFunction(2, 1.0, {{0.2, {1, 1}, Phase::cos}})});
  CHECK_FALSE(w.divergence_free());
  const std::vector<double> x{0.2, 0.4};
  const auto fwd = flow(m, w, 0.7, x);
  const auto back = flow(m, w, -0.7, fwd.x);
  CHECK(distance(m, back.x, x) <= 1e-10);
  CHECK(back.logdet == doctest::Approx(-fwd.logdet).epsilon(1e-9));

  // Jacobian by central differences.
  const double h = 1e-6;
  double J[2][2];
  for (int c = 0; c < 2; ++c) {
    std::vector<double> xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    const auto p = flow(m, w, 0.7, xp).x, q = flow(m, w, 0.7, xm).x;
    for (int r2 = 0; r2 < 2; ++r2) {
      double d = p[r2] - q[r2];
      d -= std::round(d);
      J[r2][c] = d / (2 * h);
    }
  }
  CHECK(std::log(J[0][0] * J[1][1] - J[0][1] * J[1][0]) == doctest::Approx(fwd.logdet).epsilon(1e-6));

  // The pushforward density integrates to one.
  const FlowMap psi{w, 0.7};
  const int g = 120;
  double total = 0.0;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j)
      total += std::exp(psi.log_pushforward_density(m, std::vector<double>{(i + 0.5) / g, (j + 0.5) / g}));
  CHECK(total / (g * g) == doctest::Approx(1.0).epsilon(1e-8));

  const VectorField shear({TrigFunction(2, 1.0, {{0.4, {0, 1}, Phase::sin}}), TrigFunction(2, 1.0, {})});
  CHECK(shear.divergence_free());
  CHECK(flow(m, shear, 1.0, x).logdet == 0.0);
}

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dflab/diffusion.hpp"

using namespace dflab;

namespace {

const Manifold kTorus = Manifold::torus(2, 1.0, 1.0);

TestFunction cos_x1(double eps) {
  return TestFunction{TrigFunction(2, 1.0, {{1.0, {1, 0}, Phase::cos}}), WeightProfile{{1.0}, eps, 0.05}};
}

double signed_wrap(double d) { return d - std::round(d); }

}  // namespace

TEST_CASE("a step moves locations only and freezes zero-weight atoms") {
  Rng rng = make_rng(1, "step");
  const AtomicMeasure eta(kTorus, {{0.7, 0.3, 0.0}, 0.0, true}, {0.1, 0.1, 0.5, 0.5, 0.9, 0.9});
  const auto next = step(eta, 0.01, rng);
  CHECK(next.weights().s == eta.weights().s);
  CHECK(next.location(2)[0] == 0.9);
  CHECK(next.location(0)[0] != 0.1);
  CHECK_THROWS_AS(step(eta, 0.0, rng), std::invalid_argument);
}

TEST_CASE("atom displacement variance is t over its weight") {
  const double r = 0.2, t = 1e-3;
  for (double w : {1.0, r}) {
    const AtomicMeasure eta = w == 1.0 ? AtomicMeasure(kTorus, {{1.0}, 0.0, true}, {0.5, 0.5})
                                       : AtomicMeasure(kTorus, {{1.0 - r, r}, 0.0, true}, {0.2, 0.2, 0.5, 0.5});
    const std::size_t atom = eta.size() - 1;
    Moments sq;
    Rng rng = make_rng(2, "variance");
    for (int i = 0; i < 10000; ++i) {
      const auto next = step(eta, t, rng);
      const double d = signed_wrap(next.location(atom)[0] - eta.location(atom)[0]);
      sq.add(d * d);
    }
    CHECK(std::abs(sq.mean() - t / w) <= 3.0 * sq.stderr_mean());
  }
}

TEST_CASE("two half steps and one full step agree in law") {
  const AtomicMeasure eta(kTorus, {{0.6, 0.4}, 0.0, true}, {0.2, 0.3, 0.7, 0.6});
  Rng rng = make_rng(3, "markov");
  std::vector<double> one, two;
  for (int i = 0; i < 5000; ++i) {
    one.push_back(step(eta, 0.05, rng).location(1)[0]);
    two.push_back(step(step(eta, 0.02, rng), 0.03, rng).location(1)[0]);
  }
  CHECK(ks_two_sample(one, two) <= ks_critical(one.size(), two.size(), 1e-3));
}

TEST_CASE("metric scale a at time t equals time t/a with matched seeds") {
  const AtomicMeasure eta(kTorus, {{0.6, 0.4}, 0.0, true}, {0.2, 0.3, 0.7, 0.6});
  const AtomicMeasure scaled(kTorus.rescaled(4.0), eta.weights(), eta.coords());
  Rng r1 = make_rng(4, "scale"), r2 = make_rng(4, "scale");
  const auto a = step(scaled, 0.08, r1);
  const auto b = step(eta, 0.02, r2);
  for (std::size_t k = 0; k < a.coords().size(); ++k) CHECK(std::abs(a.coords()[k] - b.coords()[k]) <= 1e-12);
}

TEST_CASE("simulated paths start at the declared state and keep their weights") {
  PathSpec spec{kTorus, {}, std::nullopt, uniform_grid(0.01, 0.05), 3};
  const auto paths = simulate(spec, MonteCarlo{});
  REQUIRE(paths.size() == 3);
  for (const auto& p : paths) {
    CHECK(p.states.size() == 6);
    for (const auto& s : p.states) CHECK(s.weights().s == p.states.front().weights().s);
  }
  const AtomicMeasure init(kTorus, {{1.0}, 0.0, true}, {0.5, 0.5});
  spec.initial = init;
  const auto fixed = simulate(spec, MonteCarlo{});
  CHECK(fixed[0].states[0].coords() == init.coords());
  std::ostringstream os;
  write_paths_csv(os, fixed);
  const std::string csv = os.str();
  CHECK(csv.rfind("path_id,t,atom_id,weight,coord_1,coord_2\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 6);
  CHECK_THROWS_AS(validate_grid({0.0, 0.1, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(validate_grid({0.1, 0.2}), std::invalid_argument);
}

TEST_CASE("martingale statistics vanish for constant and weight-only functions") {
  PathSpec spec{kTorus, {}, std::nullopt, uniform_grid(0.01, 0.1), 20};
  const auto paths = simulate(spec, MonteCarlo{});
  const auto weight_only = CylinderFunction(
      Polynomial(1, {{1.0, {2}}}),
      {TestFunction{TrigFunction::constant(2, 1.0), WeightProfile{{0.0, 1.0}, std::nullopt, 0.05}}});
  for (const auto& u : {CylinderFunction::constant(3.0, cos_x1(0.02)), weight_only}) {
    const auto rep = verify_martingale(u, {}, paths);
    for (double v : rep.mean_M) CHECK(std::abs(v) <= 1e-14);
    for (double v : rep.realized_qv) CHECK(std::abs(v) <= 1e-26);
    for (double v : rep.predicted_qv) CHECK(v == 0.0);
  }
}

TEST_CASE("martingale problem at small scale, independent of worker count") {
  const auto u = CylinderFunction::star_of(cos_x1(0.02));
  const std::vector<CylinderFunction> gs{u};
  PathSpec spec{kTorus, {}, std::nullopt, uniform_grid(5e-3, 0.05), 300};
  MonteCarlo one, two;
  two.workers = 2;
  const auto a = verify_martingale(u, gs, spec, {}, one);
  const auto b = verify_martingale(u, gs, spec, {}, two);
  CHECK(a.report.to_json().dump() == b.report.to_json().dump());
  CHECK(a.report.find("martingale.E[M_t]=0.max|z|")->status == Status::pass);
  CHECK(a.report.find("martingale.orthogonality[g0]")->status == Status::pass);
  // Stored and streamed paths give the same statistics.
  const auto stored = verify_martingale(u, gs, simulate(spec, one));
  CHECK(stored.mean_M == a.mean_M);
}

TEST_CASE("invariance, ergodic component and energy at small scale") {
  const std::vector<TestFunction> probes{cos_x1(0.02),
                                         TestFunction{TrigFunction(2, 1.0, {{1.0, {1, 1}, Phase::sin}}), WeightProfile{}}};
  CHECK(verify_invariance(kTorus, {}, probes, {0.0, 0.1, 0.5}, 5000, 3.0, MonteCarlo{}).passed());
  const WeightVector s{{0.5, 0.3, 0.2}, 0.0, true};
  const std::vector<Window> windows{{{0.0, 0.0}, {0.5, 0.5}}, {{0.2, 0.1}, {0.3, 0.9}}};
  CHECK(verify_ergodic_component(kTorus, s, windows, {0.0, 0.1, 1.0}, 5000, 3.0, MonteCarlo{}).passed());
  CHECK(windows[0].volume_fraction(1.0) == doctest::Approx(0.25));
  const auto e = dirichlet_energy(kTorus, {}, CylinderFunction::star_of(cos_x1(0.02)), 5000, 3.0, MonteCarlo{});
  CHECK(e.report.passed());
  CHECK(e.value > 0.0);
}

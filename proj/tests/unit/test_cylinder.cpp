#include <doctest.h>

#include <cmath>

#include "dflab/cylinder.hpp"

using namespace dflab;

namespace {

const Manifold kTorus = Manifold::torus(2, 1.0, 1.0);

TrigFunction trig(std::vector<TrigTerm> t) { return TrigFunction(2, 1.0, std::move(t)); }

AtomicMeasure fixture(const Manifold& m = kTorus) {
  WeightVector w{{0.4, 0.25, 0.2, 0.1, 0.05}, 0.0, true};
  return AtomicMeasure(m, w, {0.1, 0.2, 0.35, 0.8, 0.6, 0.55, 0.9, 0.05, 0.45, 0.7});
}

TestFunction tf(TrigFunction f, std::vector<double> poly = {1.0}, std::optional<double> eps = 0.02) {
  return TestFunction{std::move(f), WeightProfile{std::move(poly), eps, 0.05}};
}

/// u = y1^2 y2 + 3 y2 on two test functions.
CylinderFunction sample_u() {
  return CylinderFunction(Polynomial(2, {{1.0, {2, 1}}, {3.0, {0, 1}}}),
                          {tf(trig({{1.0, {1, 0}, Phase::cos}}), {1.0, 0.5}),
                           tf(trig({{0.7, {1, 1}, Phase::sin}, {0.2, {0, 2}, Phase::cos}}))});
}

CylinderFunction sample_v() {
  return CylinderFunction::star_of(tf(trig({{1.0, {0, 1}, Phase::sin}}), {0.0, 1.0}, std::nullopt));
}

double shifted(const CylinderFunction& u, const AtomicMeasure& eta, std::size_t i, std::size_t c, double h) {
  AtomicMeasure e = eta;
  e.location(i)[c] += h;
  return u(e);
}

}  // namespace

TEST_CASE("weight profiles") {
  const WeightProfile p{{1.0}, 0.1, 0.05};
  CHECK(p(0.1) == 0.0);
  CHECK(p(0.125) == doctest::Approx(0.5));
  CHECK(p(0.2) == 1.0);
  CHECK(p.threshold() == 0.1);
  CHECK(WeightProfile{}.identically_one());
  CHECK(WeightProfile{{0.0, 1.0}}.at_zero_plus() == 0.0);
  CHECK(tf(TrigFunction::constant(2, 1.0), {1.0}, std::nullopt).function_class() == FunctionClass::hTF_minus);
  CHECK(tf(trig({{1.0, {1, 0}, Phase::cos}}), {1.0}, std::nullopt).function_class() == FunctionClass::TF);
}

TEST_CASE("polynomial calculus") {
  const Polynomial p(2, {{2.0, {2, 1}}, {1.0, {0, 0}}});
  const std::vector<double> y{3.0, 2.0};
  CHECK(p(y) == 37.0);
  CHECK(p.partial(0)(y) == 24.0);
  CHECK(p.partial(1)(y) == 18.0);
  CHECK(p.partial(0).partial(0)(y) == 8.0);
  const Polynomial q = p.tensor(Polynomial::identity(1, 0));
  CHECK(q(std::vector<double>{3.0, 2.0, 5.0}) == 185.0);
  CHECK(Polynomial::constant(3, 2.0).is_constant());
  CHECK_THROWS_AS(Polynomial(2, {{1.0, {1}}}), std::invalid_argument);
}

TEST_CASE("gradient matches finite differences of atom positions") {
  const auto u = sample_u();
  const auto eta = fixture();
  const auto g = grad(u, eta);
  const double h = 1e-6;
  for (std::size_t i = 0; i < eta.size(); ++i)
    for (std::size_t c = 0; c < 2; ++c) {
      const double fd = (shifted(u, eta, i, c, h) - shifted(u, eta, i, c, -h)) / (2 * h);
      CHECK(g[i * 2 + c] * eta.weight(i) == doctest::Approx(fd).epsilon(1e-7).scale(1e-9));
    }
}

TEST_CASE("generator equals sum of atom Laplacians over twice the weight") {
  for (const auto& u : {sample_u(), sample_u() * sample_u()}) {
    const auto eta = fixture();
    const double h = 1e-4;
    double oracle = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) {
      double lap = 0.0;
      for (std::size_t c = 0; c < 2; ++c)
        lap += (shifted(u, eta, i, c, h) - 2 * u(eta) + shifted(u, eta, i, c, -h)) / (h * h);
      oracle += lap / (2.0 * eta.weight(i));
    }
    CHECK(generator(u, eta) == doctest::Approx(oracle).epsilon(1e-5));
  }
}

TEST_CASE("carre du champ: Leibniz rule, bilinearity, product rule for L") {
  const auto u = sample_u(), v = sample_v();
  const auto w = CylinderFunction::star_of(tf(trig({{1.0, {2, 1}, Phase::cos}}), {1.0}, 0.03));
  const auto eta = fixture();
  CHECK(carre_du_champ(u * v, w, eta) ==
        doctest::Approx(u(eta) * carre_du_champ(v, w, eta) + v(eta) * carre_du_champ(u, w, eta)).epsilon(1e-12));
  CHECK(carre_du_champ(u + v, w, eta) ==
        doctest::Approx(carre_du_champ(u, w, eta) + carre_du_champ(v, w, eta)).epsilon(1e-12));
  CHECK(carre_du_champ(u, v, eta) == doctest::Approx(carre_du_champ(v, u, eta)).epsilon(1e-14));
  CHECK(generator(u * w, eta) ==
        doctest::Approx(u(eta) * generator(w, eta) + w(eta) * generator(u, eta) + 2 * carre_du_champ(u, w, eta))
            .epsilon(1e-11));
  CHECK(carre_du_champ(u, u, eta) >= 0.0);
}

TEST_CASE("metric scale divides Gamma and L but not the directional derivative") {
  const auto u = sample_u();
  const VectorField w({trig({{0.3, {0, 1}, Phase::sin}}), trig({{0.2, {1, 0}, Phase::cos}})});
  const auto eta = fixture(), eta4 = fixture(kTorus.rescaled(4.0));
  CHECK(carre_du_champ(u, u, eta4) == doctest::Approx(carre_du_champ(u, u, eta) / 4.0).epsilon(1e-14));
  CHECK(generator(u, eta4) == doctest::Approx(generator(u, eta) / 4.0).epsilon(1e-14));
  CHECK(directional_derivative(u, w, eta4) == doctest::Approx(directional_derivative(u, w, eta)).epsilon(1e-14));
}

TEST_CASE("directional derivative matches a flow finite difference") {
  const auto u = sample_u();
  const VectorField w({trig({{0.3, {0, 1}, Phase::sin}}), trig({{0.2, {1, 1}, Phase::cos}})});
  const auto eta = fixture();
  const double h = 1e-4;
  const double fd = (u(push_forward(FlowMap{w, h, h}, eta)) - u(push_forward(FlowMap{w, -h, h}, eta))) / (2 * h);
  CHECK(directional_derivative(u, w, eta) == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("drift is minus the flow derivative of the Radon-Nikodym factor") {
  const VectorField w({trig({{0.3, {1, 0}, Phase::sin}}), trig({{0.2, {1, 1}, Phase::cos}})});
  const auto eta = fixture();
  const double h = 1e-4, eps = 0.08;
  const double fd = (rn_derivative(FlowMap{w, h, h}, eps, eta) - rn_derivative(FlowMap{w, -h, h}, eps, eta)) / (2 * h);
  CHECK(fd == doctest::Approx(-drift_B(w, eps, eta)).epsilon(1e-7));
  CHECK(rn_derivative(FlowMap{VectorField::constant({0.1, 0.2}), 1.0}, eps, eta) == 1.0);
}

TEST_CASE("weight-only and constant functions have zero gradient and generator") {
  const auto eta = fixture();
  const auto weight_only = CylinderFunction(Polynomial(1, {{1.0, {2}}}),
                                            {tf(TrigFunction::constant(2, 1.0), {0.0, 1.0}, std::nullopt)});
  for (double g : grad(weight_only, eta)) CHECK(g == 0.0);
  CHECK(generator(weight_only, eta) == 0.0);
  const auto c = CylinderFunction::constant(2.5, tf(trig({{1.0, {1, 0}, Phase::cos}})));
  CHECK(c(eta) == 2.5);
  CHECK(generator(c, eta) == 0.0);
}

TEST_CASE("generator rejects a profile that stays positive at zero weight") {
  const auto bad = CylinderFunction::star_of(tf(trig({{1.0, {1, 0}, Phase::cos}}), {1.0}, std::nullopt));
  CHECK_THROWS_AS(generator(bad, fixture()), std::invalid_argument);
}

TEST_CASE("push forward leaves light atoms in place") {
  const auto eta = fixture();
  const auto moved = push_forward(FlowMap{VectorField::constant({0.5, 0.0}), 1.0}, eta, 0.15);
  CHECK(moved.location(0)[0] == doctest::Approx(0.6));
  CHECK(moved.location(4)[0] == eta.location(4)[0]);
}

TEST_CASE("JSON forms of test functions and cylinder functions") {
  const auto j = nlohmann::json::parse(
      R"({"F": [[1.0, [2]]], "fhats": [{"f": [[1.0, [1, 0], "cos"]], "rho": {"poly": [1.0], "eps": 0.05}}]})");
  const auto u = cylinder_from_json(j, 2, 1.0);
  CHECK(u.k() == 1);
  CHECK(u.threshold() == 0.05);
  nlohmann::json bad = j;
  bad["extra"] = 1;
  CHECK_THROWS_AS(cylinder_from_json(bad, 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(trig_from_json(nlohmann::json::parse(R"([[1.0, [1], "cos"]])"), 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(trig_from_json(nlohmann::json::parse(R"([[1.0, [1, 0], "tan"]])"), 2, 1.0), std::invalid_argument);
  const auto w = vector_field_from_json(nlohmann::json::parse(R"({"components": [[[1.0, [0, 1], "sin"]], []]})"), 2, 1.0);
  CHECK(w.divergence_free());
  CHECK(to_json(trig({{1.0, {1, 0}, Phase::cos}}))[0][2] == "cos");
}

TEST_CASE("integration by parts, quasi-invariance and energy identities at small scale") {
  const Manifold m = Manifold::torus(2, 1.0, 1.0);
  const std::vector<CylinderFunction> us{sample_u(), CylinderFunction::star_of(tf(trig({{1.0, {0, 1}, Phase::cos}}), {1.0}, 0.1))};
  const std::vector<VectorField> ws{VectorField({trig({{0.5, {1, 0}, Phase::sin}}), trig({})})};
  IbpOptions io;
  io.n = 20000;
  CHECK(verify_ibp(m, {}, us, us, ws, io, MonteCarlo{}).passed());

  PqiOptions po;
  po.n = 20000;
  po.level = 10;
  const std::vector<CylinderFunction> heavy{
      CylinderFunction::star_of(tf(trig({{1.0, {1, 0}, Phase::cos}}), {1.0}, 0.1))};
  CHECK(verify_pqi(m, {}, FlowMap{ws[0], 0.5}, heavy, po, MonteCarlo{}).passed());
  const auto tr = verify_pqi(m, {}, FlowMap{VectorField::constant({0.2, 0.1}), 1.0}, heavy, po, MonteCarlo{});
  CHECK(tr.passed());
  REQUIRE(tr.find("pqi.R-identically-one") != nullptr);

  BMartingaleOptions bo;
  bo.n = 20000;
  CHECK(verify_B_martingale(m, {}, ws[0], heavy, bo, MonteCarlo{}).passed());
  CHECK(verify_energy_identities(m, {}, us, 20000, 3.0, MonteCarlo{}).passed());
}

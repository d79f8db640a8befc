#include <doctest.h>

#include <cmath>

#include "dflab/random_measures.hpp"

using namespace dflab;

TEST_CASE("stick breaking on explicit sticks") {
  const std::vector<double> r{0.5, 0.5, 0.5};
  const auto w = stick_break(r);
  CHECK(w.s[0] == 0.5);
  CHECK(w.s[1] == 0.25);
  CHECK(w.s[2] == 0.125);
  CHECK(w.tail == 0.125);
  const std::vector<double> full{0.3, 1.0, 0.9};
  const auto w2 = stick_break(full);
  CHECK(w2.tail == 0.0);
  CHECK(w2.s[2] == 0.0);
  CHECK_THROWS_AS(stick_break(std::vector<double>{0.0}), std::invalid_argument);
  CHECK_THROWS_AS(stick_break(std::vector<double>{1.5}), std::invalid_argument);
}

TEST_CASE("reordering is idempotent and non-increasing") {
  WeightVector w{{0.1, 0.5, 0.2, 0.2}, 0.0, false};
  const auto r = reorder(w);
  CHECK(std::is_sorted(r.s.begin(), r.s.end(), std::greater<>()));
  CHECK(reorder(r).s == r.s);
  CHECK(r.ordered);
}

TEST_CASE("automatic truncation length") {
  CHECK(auto_truncation(1.0) == 34);
  CHECK(auto_truncation(2.0) == 57);
  CHECK(auto_truncation(0.5) == 21);
  CHECK(expected_tail(1.0, 34) <= 1e-10);
  CHECK(expected_tail(1.0, 33) > 1e-10);
}

TEST_CASE("tail policies") {
  const Manifold m = Manifold::torus(2, 1.0, 1.0);
  Rng rng = make_rng(1, "tail");
  const auto keep = sample_dirichlet_ferguson(m, {5, TailPolicy::keep}, rng);
  CHECK(keep.size() == 5);
  CHECK(keep.weights().total() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(keep.weights().tail > 0.0);
  const auto lump = sample_dirichlet_ferguson(m, {5, TailPolicy::lump}, rng);
  CHECK(lump.size() == 6);
  CHECK(lump.weights().tail == 0.0);
  CHECK(std::is_sorted(lump.weights().s.begin(), lump.weights().s.end(), std::greater<>()));
  const auto ren = sample_dirichlet_ferguson(m, {5, TailPolicy::renormalize}, rng);
  double s = 0.0;
  for (double v : ren.weights().s) s += v;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  for (double c : ren.coords()) CHECK((c >= 0.0 && c < 1.0));
  CHECK(parse_tail_policy("lump") == TailPolicy::lump);
  CHECK_THROWS(parse_tail_policy("bogus"));
}

TEST_CASE("largest weight matches the Golomb-Dickman constant at beta = 1") {
  const Manifold m = Manifold::torus(2, 1.0, 1.0);
  auto mom = mc_accumulate(MonteCarlo{}, "golomb", 20000, 1, [&](Rng& rng, std::span<double> out) {
    out[0] = sample_dirichlet_ferguson(m, {}, rng).max_weight();
  });
  CHECK(std::abs(mom[0].mean() - 0.6243299885435508) <= 4.0 * mom[0].stderr_mean());
}

TEST_CASE("stick-breaking and PD moment verifiers pass at small scale") {
  StickBreakOptions opt;
  opt.n = 20000;
  CHECK(verify_stick_breaking(opt, MonteCarlo{}).passed());
  const auto rep = verify_pd_moments(Manifold::torus(2), {}, {0.5, 1.0, 2.0}, 20000, 3.0, MonteCarlo{});
  CHECK(rep.passed());
}

TEST_CASE("relocation preserves total mass") {
  const Manifold m = Manifold::torus(2);
  Rng rng = make_rng(2, "reloc");
  const auto eta = sample_dirichlet_ferguson(m, {}, rng);
  const auto moved = relocate(eta, std::vector<double>{0.5, 0.5}, 0.3);
  CHECK(moved.size() == eta.size() + 1);
  CHECK(moved.weights().total() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(moved.weight(moved.size() - 1) == 0.3);
}

TEST_CASE("Mecke identity and Sethuraman fixed point at small scale") {
  const Manifold m = Manifold::torus(2, 1.0, 1.0);
  const TrigFunction one = TrigFunction::constant(2, 1.0);
  const TrigFunction c1(2, 1.0, {{1.0, {1, 0}, Phase::cos}});
  std::vector<MeckeProbe> basket{
      {"r", one, {0.0, 1.0}, std::nullopt, 0.5},
      {"cos*g", c1, {1.0}, StarProbe{c1, {1.0}}, std::nullopt},
  };
  CHECK(verify_mecke(m, {}, basket, 20000, 3.0, MonteCarlo{}).passed());
  SethuramanOptions so;
  so.n = 20000;
  const std::vector<StarProbe> probes{{c1, {1.0}}};
  CHECK(verify_sethuraman(m, {}, probes, so, MonteCarlo{}).passed());
  so.beta_shift = 3.0;
  so.n = 100000;
  const auto neg = verify_sethuraman(m, {}, probes, so, MonteCarlo{});
  CHECK(neg.extra["max_z"].get<double>() > 5.0);
}

TEST_CASE("results do not depend on the worker count") {
  const Manifold m = Manifold::torus(2);
  auto run = [&](unsigned workers) {
    MonteCarlo mc;
    mc.workers = workers;
    mc.chunk_size = 1000;
    return mc_accumulate(mc, "workers", 10000, 1, [&](Rng& rng, std::span<double> out) {
      out[0] = sample_dirichlet_ferguson(m, {}, rng).max_weight();
    })[0];
  };
  const auto a = run(1), b = run(3);
  CHECK(a.mean() == b.mean());
  CHECK(a.variance() == b.variance());
}

TEST_CASE("atomic measure JSON round trip") {
  const Manifold m = Manifold::torus(2);
  Rng rng = make_rng(4, "json");
  const auto eta = sample_dirichlet_ferguson(m, {6}, rng);
  const auto back = AtomicMeasure::from_json(m, eta.to_json());
  CHECK(back.weights().s == eta.weights().s);
  CHECK(back.coords() == eta.coords());
  CHECK_THROWS_AS(AtomicMeasure::from_json(m, nlohmann::json{{"weights", {1.0}}}), std::invalid_argument);
}

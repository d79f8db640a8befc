// One PASS/FAIL line per acceptance criterion. Runs the harness on
// configs/acceptance.json and keeps every artifact under the output directory.
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dflab/config.hpp"
#include "dflab/harness.hpp"
#include "transport_oracle.hpp"

using namespace dflab;

namespace {

struct Line {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<const Check*> matching(const Report& r, const std::string& prefix, const std::string& contains = "") {
  std::vector<const Check*> out;
  for (const auto& c : r.checks)
    if (c.name.rfind(prefix, 0) == 0 && c.name.find(contains) != std::string::npos) out.push_back(&c);
  return out;
}

bool all_pass(const std::vector<const Check*>& cs) {
  for (const auto* c : cs)
    if (c->status != Status::pass) return false;
  return true;
}

std::string fails(const Report& r) {
  std::string s;
  for (const auto& c : r.checks)
    if (c.status == Status::fail) s += (s.empty() ? "; failed: " : ", ") + c.name;
  return s;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

Line counted(const std::string& name, const std::vector<const Check*>& cs, std::size_t expected,
             const Report& r) {
  const bool ok = cs.size() == expected && all_pass(cs);
  return {name, ok,
          std::to_string(cs.size()) + " checks (expected " + std::to_string(expected) + ")" + (ok ? "" : fails(r))};
}

Line w2_line(const Report& fixture) {
  const Manifold m = Manifold::torus(2);
  Rng rng = make_rng(20240601, "acceptance/w2-oracle");
  std::uniform_int_distribution<std::size_t> size(1, 4);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto mu = oracle::random_measure(m, size(rng), rng);
    const auto nu = oracle::random_measure(m, size(rng), rng);
    const double exact = oracle::brute_force_cost(mu.weights().s, nu.weights().s, oracle::cost_matrix(mu, nu));
    worst = std::max(worst, std::abs(w2(mu, nu).cost - exact));
  }
  Rng trng = make_rng(20240601, "acceptance/w2-axioms");
  std::uniform_int_distribution<std::size_t> tsize(1, 8);
  double axiom = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = oracle::random_measure(m, tsize(trng), trng);
    const auto b = oracle::random_measure(m, tsize(trng), trng);
    const auto c = oracle::random_measure(m, tsize(trng), trng);
    const double ab = w2_distance(a, b), ba = w2_distance(b, a), bc = w2_distance(b, c), ac = w2_distance(a, c);
    axiom = std::max({axiom, std::abs(ab - ba), ac - ab - bc, w2_distance(a, a), -ab});
  }
  const bool ok = worst <= 1e-9 && axiom <= 1e-9 && fixture.passed();
  return {"W2 solver exact vs enumeration, metric axioms", ok,
          "max |cost - oracle| = " + fmt(worst) + " over 100 fixtures, max axiom violation = " + fmt(axiom) +
              ", bundled fixture " + (fixture.passed() ? "matches" : "differs" + fails(fixture))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string config = argc > 1 ? argv[1] : DFLAB_SOURCE_DIR "/configs/acceptance.json";
  Overrides ov;
  ov.out_dir = argc > 2 ? argv[2] : DFLAB_ACCEPTANCE_OUT;
  ov.workers = std::max(1u, std::thread::hardware_concurrency());
  RunConfig cfg;
  try {
    cfg = load_config_file(config, ov);
  } catch (const std::exception& e) {
    std::cerr << "cannot load " << config << ": " << e.what() << '\n';
    return 2;
  }

  auto run = [&](const std::string& task) {
    auto r = run_task(task, cfg).report;
    std::cerr << "[" << task << " " << fmt(r.wall_time) << " s]\n";
    return r;
  };
  std::vector<Line> lines;

  const Report sdf = run("sample-df");
  lines.push_back(counted("stick-breaking exactness and E[tail]", matching(sdf, "stick["), 12, sdf));
  lines.push_back(counted("Poisson-Dirichlet E[sum s^2] = 1/(1+beta)", matching(sdf, "pd[beta=", "E[sum s^2]"), 3, sdf));

  const Report mecke = run("verify-mecke");
  {
    auto ids = matching(mecke, "mecke[", "lhs-rhs");
    auto closed = matching(mecke, "mecke[r]", "closed-form");
    const bool ok = ids.size() == 5 && closed.size() == 2 && all_pass(ids) && all_pass(closed);
    lines.push_back({"Mecke identity, 5-probe basket, u = r closed form", ok,
                     std::to_string(ids.size()) + " identities, " + std::to_string(closed.size()) +
                         " closed-form checks" + fails(mecke)});
  }

  const Report seth = run("verify-sethuraman");
  {
    const auto neg = matching(seth, "negative-control");
    const bool ok = seth.passed() && neg.size() == 1;
    lines.push_back({"Sethuraman fixed point and negative control", ok,
                     std::to_string(seth.checks.size()) + " checks, control max|z| = " +
                         (neg.empty() ? std::string("missing") : fmt(neg.front()->estimate)) + fails(seth)});
  }

  const Report ibp = run("verify-ibp");
  {
    auto full = matching(ibp, "ibp[u", ".residual");
    std::size_t triples = 0;
    for (const auto* c : full)
      if (c->name.find("v=1") == std::string::npos) ++triples;
    const bool ok = ibp.passed() && triples == 18;
    lines.push_back({"integration by parts, 3x3x2 basket, v = 1 and B mean zero", ok,
                     std::to_string(triples) + " (u,v,w) residuals, " + std::to_string(ibp.checks.size()) +
                         " checks" + fails(ibp)});
  }

  const Report pqi = run("verify-pqi");
  {
    const bool translation = pqi.extra.is_array() && pqi.extra.size() == 2 &&
                             pqi.extra[0]["volume_preserving"].get<bool>() &&
                             !pqi.extra[1]["volume_preserving"].get<bool>();
    const auto exact = matching(pqi, "flow0.pqi.R-identically-one");
    const bool ok = pqi.passed() && translation && exact.size() == 1;
    lines.push_back({"partial quasi-invariance, translation (R = 1) and trig flow", ok,
                     std::to_string(pqi.checks.size()) + " checks" + fails(pqi)});
  }

  const Report sim = run("simulate");
  {
    const auto* c = sim.find("heat-rescaling.max-rel-error");
    const bool ok = c && c->status == Status::pass && c->tolerance <= 1e-12;
    lines.push_back({"heat-kernel conformal rescaling to 1e-12", ok,
                     c ? "max relative error " + fmt(c->estimate) + " on 10x10 (x,y,t,a)" : "check missing"});
  }

  const Report mart = run("verify-martingale");
  {
    const auto* qv = mart.find("martingale.qv-relative-error");
    const auto* mean = mart.find("martingale.E[M_t]=0.max|z|");
    const bool ok = mart.passed() && qv && mean && qv->tolerance == 0.05;
    lines.push_back({"martingale problem: E[M_t] = 0 and QV within 5%", ok,
                     qv ? "QV relative error " + fmt(qv->estimate) + ", " + (mean ? mean->note : "") + fails(mart)
                        : "checks missing"});
  }

  const Report inv = run("verify-invariance");
  lines.push_back({"DF invariance and frozen weights", inv.passed() && inv.find("invariance.weights-frozen"),
                   std::to_string(inv.checks.size()) + " checks" + fails(inv)});

  lines.push_back(w2_line(run("w2")));

  const Report var = run("varadhan");
  {
    const bool ok = var.count(Status::fail) == 0 && var.checks.size() == 3;
    std::string hits;
    for (const auto& h : var.extra["hits"]) hits += (hits.empty() ? "" : ",") + std::to_string(h.get<std::uint64_t>());
    lines.push_back({"Varadhan one-sided bound on the two-ball fixture", ok,
                     std::to_string(var.count(Status::pass)) + " pass, " +
                         std::to_string(var.count(Status::inconclusive)) + " inconclusive, hits [" + hits + "]" +
                         fails(var)});
  }

  const Report rad = run("rademacher");
  lines.push_back({"Rademacher difference quotients bounded", rad.passed() && !rad.checks.empty(),
                   std::to_string(rad.checks.size()) + " (ref, field) pairs" + fails(rad)});

  bool ok = true;
  for (const auto& l : lines) {
    ok = ok && l.pass;
    std::cout << (l.pass ? "PASS  " : "FAIL  ") << l.name << "  (" << l.detail << ")\n";
  }
  std::cout << (ok ? "acceptance: all criteria pass\n" : "acceptance: some criteria fail\n");
  return ok ? 0 : 1;
}

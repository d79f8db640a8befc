#include "dflab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace dflab {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{
      "sample-df",   "verify-mecke",      "verify-sethuraman", "verify-ibp",     "verify-pqi",
      "verify-bmart", "simulate",         "verify-martingale", "verify-invariance", "verify-ergodic",
      "energy",      "w2",                "varadhan",          "rademacher",     "all"};
  return names;
}

bool is_subcommand(const std::string& name) {
  const auto& s = subcommands();
  return std::find(s.begin(), s.end(), name) != s.end();
}

void check_task_inputs(const std::string& task, const RunConfig& cfg) {
  if (!is_subcommand(task) || task == "all") throw SchemaError("", "unknown task " + task);
  static const std::vector<std::string> any_manifold{"sample-df", "simulate", "w2", "varadhan"};
  if (!cfg.manifold.is_torus() &&
      std::find(any_manifold.begin(), any_manifold.end(), task) == any_manifold.end())
    throw SchemaError("/manifold/kind", task + " needs a FlatTorus (its baskets are trigonometric)");
  if (task == "w2" && (!cfg.w2.mu || !cfg.w2.nu))
    throw SchemaError("/tasks/w2/mu", "w2 needs mu and nu, inline or through a fixture");
  if (task == "varadhan" && (!cfg.varadhan.a1 || !cfg.varadhan.a2))
    throw SchemaError("/tasks/varadhan/a1", "varadhan needs balls a1 and a2, inline or through a fixture");
}

void write_report_csv(std::ostream& os, const Report& rep) {
  os << "name,estimate,stderr,target,tolerance,status\n";
  const auto prec = os.precision(17);
  for (const auto& c : rep.checks) {
    std::string name = c.name;
    if (name.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (char ch : name) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      name = q + "\"";
    }
    os << name << ',' << c.estimate << ',' << c.stderr_ << ',' << c.target << ',' << c.tolerance << ','
       << to_string(c.status) << '\n';
  }
  os.precision(prec);
}

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

template <class Fn>
void write_stream(const fs::path& p, Fn&& fn) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  fn(out);
}

Report sample_df(const RunConfig& cfg, const fs::path& dir) {
  const auto& t = cfg.sample_df;
  Report rep;
  rep.task = "sample-df";
  rep.append(verify_stick_breaking(t.stick, cfg.mc));
  rep.append(verify_pd_moments(cfg.manifold, cfg.truncation, t.pd_betas, t.pd_n, cfg.n_sigma, cfg.mc));

  write_stream(dir / "spectrum.csv", [&](std::ostream& os) {
    os << "beta,sample_id,rank,weight\n";
    os.precision(17);
    for (std::size_t b = 0; b < t.spectrum_betas.size(); ++b) {
      Manifold m = cfg.manifold;
      m.beta = t.spectrum_betas[b];
      Rng rng = make_rng(cfg.mc.seed, "sample-df/spectrum", b);
      for (std::size_t k = 0; k < t.n_dump; ++k) {
        const auto eta = sample_dirichlet_ferguson(m, cfg.truncation, rng);
        for (std::size_t i = 0; i < eta.size(); ++i)
          os << m.beta << ',' << k << ',' << (i + 1) << ',' << eta.weight(i) << '\n';
      }
    }
  });
  Rng rng = make_rng(cfg.mc.seed, "sample-df/sample");
  const auto eta = sample_dirichlet_ferguson(cfg.manifold, cfg.truncation, rng);
  write_json(dir / "sample.json", eta.to_json());
  write_stream(dir / "sample.csv", [&](std::ostream& os) { eta.write_csv(os); });
  rep.extra["n_atoms"] = cfg.truncation.resolve(cfg.manifold.beta);
  return rep;
}

Report sethuraman(const RunConfig& cfg) {
  const auto& t = cfg.sethuraman;
  Report rep = verify_sethuraman(cfg.manifold, cfg.truncation, cfg.star_probes, t.opt, cfg.mc);
  rep.task = "verify-sethuraman";
  const double r_beta = rep.extra["r_beta"].get<double>();
  rep.extra.erase("r_beta");
  rep.extra["beta"] = r_beta;
  if (t.control) {
    SethuramanOptions o = t.opt;
    o.n = t.control_n;
    o.beta_shift = t.control_shift;
    const Report neg = verify_sethuraman(cfg.manifold, cfg.truncation, cfg.star_probes, o, cfg.mc);
    const double z = neg.extra["max_z"].get<double>();
    std::ostringstream name;
    name << "negative-control[beta_shift=" << t.control_shift << "].max|z|";
    auto c = lower_check(name.str(), z, t.control_min_z);
    c.note = "relocation r ~ Beta(1, beta + shift) must be detected";
    rep.checks.push_back(c);
    rep.extra["negative_control"] = {{"beta_shift", t.control_shift}, {"n", t.control_n}, {"max_z", z}};
  }
  return rep;
}

Report per_item(const std::string& task, const std::string& prefix, std::size_t n,
                const std::function<Report(std::size_t)>& fn) {
  Report rep;
  rep.task = task;
  rep.extra = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const Report r = fn(i);
    rep.append(r, prefix + std::to_string(i) + ".");
    rep.extra.push_back(r.extra);
  }
  if (rep.extra.empty()) rep.extra = json::object();
  return rep;
}

Report simulate_task(const RunConfig& cfg, const fs::path& dir) {
  const auto& t = cfg.simulate;
  Report rep;
  rep.task = "simulate";
  rep.append(verify_heat_rescaling(cfg.manifold, t.rescaling, cfg.mc));
  const PathSpec spec{cfg.manifold, cfg.truncation, t.initial, t.t_grid, t.n_paths};
  const auto paths = simulate(spec, cfg.mc);
  write_stream(dir / "paths.csv", [&](std::ostream& os) { write_paths_csv(os, paths); });
  rep.extra = {{"n_paths", t.n_paths},
               {"n_times", t.t_grid.size()},
               {"n_atoms", paths.empty() ? 0 : paths.front().states.front().size()}};
  return rep;
}

Report martingale_task(const RunConfig& cfg, const fs::path& dir) {
  const auto& t = cfg.martingale;
  const PathSpec spec{cfg.manifold, cfg.truncation, std::nullopt, t.t_grid, t.n_paths};
  const MartingaleReport mr = verify_martingale(t.u, t.orthogonality, spec, t.opt, cfg.mc);
  write_stream(dir / "qv.csv", [&](std::ostream& os) {
    os << "t,mean_M,stderr_M,realized_qv,realized_qv_stderr,predicted_qv,predicted_qv_stderr\n";
    os.precision(17);
    for (std::size_t k = 0; k < mr.t.size(); ++k)
      os << mr.t[k] << ',' << mr.mean_M[k] << ',' << mr.stderr_M[k] << ',' << mr.realized_qv[k] << ','
         << mr.realized_qv_stderr[k] << ',' << mr.predicted_qv[k] << ',' << mr.predicted_qv_stderr[k] << '\n';
  });
  Report rep = mr.report;
  rep.task = "verify-martingale";
  return rep;
}

Report energy_task(const RunConfig& cfg) {
  Report rep;
  rep.task = "energy";
  rep.extra["energy"] = json::array();
  for (std::size_t i = 0; i < cfg.cylinders.size(); ++i) {
    const auto e = dirichlet_energy(cfg.manifold, cfg.truncation, cfg.cylinders[i], cfg.energy_n, cfg.n_sigma, cfg.mc);
    rep.append(e.report, "u" + std::to_string(i) + ".");
    rep.extra["energy"].push_back(e.report.extra["energy"]);
  }
  rep.append(verify_energy_identities(cfg.manifold, cfg.truncation, cfg.cylinders, cfg.energy_n, cfg.n_sigma, cfg.mc));
  return rep;
}

Report w2_task(const RunConfig& cfg, const fs::path& dir) {
  const auto& mu = *cfg.w2.mu;
  const auto& nu = *cfg.w2.nu;
  const TransportPlan plan = w2(mu, nu);
  write_stream(dir / "plan.csv", [&](std::ostream& os) { plan.write_csv(os, mu, nu); });

  Report rep;
  rep.task = "w2";
  std::vector<double> row(mu.size(), 0.0), col(nu.size(), 0.0);
  for (const auto& e : plan.edges) {
    row[e.i] += e.mass;
    col[e.j] += e.mass;
  }
  const double scale = mu.weights().total() > 0.0 ? mu.weights().total() : 1.0;
  double marg = 0.0;
  double nu_total = 0.0;
  for (std::size_t j = 0; j < nu.size(); ++j) nu_total += nu.weight(j);
  for (std::size_t i = 0; i < mu.size(); ++i) marg = std::max(marg, std::abs(row[i] - mu.weight(i)));
  for (std::size_t j = 0; j < nu.size(); ++j)
    marg = std::max(marg, std::abs(col[j] - nu.weight(j) * (nu_total > 0.0 ? scale / nu_total : 0.0)));
  rep.checks.push_back(abs_check("w2.marginal-error", marg, 0.0, 1e-12 * scale));
  if (cfg.w2.expected_cost) {
    auto c = abs_check("w2.cost-vs-expected", plan.cost, *cfg.w2.expected_cost, cfg.w2.tol);
    c.note = "expected cost from brute-force enumeration of the bundled fixture";
    rep.checks.push_back(c);
  }
  rep.extra = plan.to_json();
  return rep;
}

Report varadhan_task(const RunConfig& cfg, const fs::path& dir) {
  const auto& v = cfg.varadhan;
  Manifold m = cfg.manifold;
  if (v.beta) m.beta = *v.beta;
  Report rep = varadhan_probe(m, cfg.truncation, *v.a1, *v.a2, v.opt, cfg.mc);
  rep.extra["beta"] = m.beta;
  rep.task = "varadhan";
  write_stream(dir / "varadhan.csv", [&](std::ostream& os) {
    os << "t,p_hat,stderr,t_log_p,bound,hits\n";
    os.precision(17);
    const auto& x = rep.extra;
    for (std::size_t k = 0; k < x["t"].size(); ++k) {
      os << x["t"][k].get<double>() << ',' << x["p_hat"][k].get<double>() << ','
         << x["stderr"][k].get<double>() << ',';
      if (x["t_log_p"][k].is_null())
        os << "nan";
      else
        os << x["t_log_p"][k].get<double>();
      os << ',' << x["bound"][k].get<double>() << ',' << x["hits"][k].get<std::uint64_t>() << '\n';
    }
  });
  return rep;
}

Report dispatch(const std::string& task, const RunConfig& cfg, const fs::path& dir) {
  const Manifold& m = cfg.manifold;
  const Truncation& tr = cfg.truncation;
  if (task == "sample-df") return sample_df(cfg, dir);
  if (task == "verify-mecke") return verify_mecke(m, tr, cfg.mecke, cfg.mecke_n, cfg.n_sigma, cfg.mc);
  if (task == "verify-sethuraman") return sethuraman(cfg);
  if (task == "verify-ibp") return verify_ibp(m, tr, cfg.cylinders, cfg.cylinders_v, cfg.vector_fields, cfg.ibp, cfg.mc);
  if (task == "verify-pqi")
    return per_item(task, "flow", cfg.flows.size(),
                    [&](std::size_t i) { return verify_pqi(m, tr, cfg.flows[i], cfg.cylinders, cfg.pqi, cfg.mc); });
  if (task == "verify-bmart")
    return per_item(task, "w", cfg.vector_fields.size(), [&](std::size_t i) {
      return verify_B_martingale(m, tr, cfg.vector_fields[i], cfg.cylinders, cfg.bmart, cfg.mc);
    });
  if (task == "simulate") return simulate_task(cfg, dir);
  if (task == "verify-martingale") return martingale_task(cfg, dir);
  if (task == "verify-invariance")
    return verify_invariance(m, tr, cfg.test_functions, cfg.invariance.t_list, cfg.invariance.n, cfg.n_sigma, cfg.mc);
  if (task == "verify-ergodic")
    return verify_ergodic_component(m, cfg.ergodic.weights, cfg.windows, cfg.ergodic.t_list, cfg.ergodic.n,
                                    cfg.n_sigma, cfg.mc);
  if (task == "energy") return energy_task(cfg);
  if (task == "w2") return w2_task(cfg, dir);
  if (task == "varadhan") return varadhan_task(cfg, dir);
  if (task == "rademacher")
    return rademacher_probe(m, tr, cfg.rademacher.refs, cfg.vector_fields, cfg.rademacher.opt, cfg.mc);
  throw SchemaError("", "unknown task " + task);
}

}  // namespace

TaskResult run_task(const std::string& task, const RunConfig& cfg) {
  check_task_inputs(task, cfg);
  TaskResult res;
  res.dir = fs::path(cfg.out_dir) / task;
  fs::create_directories(res.dir);

  const auto start = std::chrono::steady_clock::now();
  try {
    res.report = dispatch(task, cfg, res.dir);
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    res.report = Report{};
    Check c;
    c.name = task + ".error";
    c.status = Status::fail;
    c.note = e.what();
    res.report.checks.push_back(c);
  }
  res.report.task = task;
  res.report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json body = res.report.to_json();
  body["config_hash"] = cfg.hash();
  body["seed"] = cfg.mc.seed;
  write_json(res.dir / "report.json", body);
  write_json(res.dir / "resolved_config.json", cfg.canonical());
  write_json(res.dir / "timing.json",
             {{"task", task}, {"wall_time_s", res.report.wall_time}, {"workers", cfg.mc.workers}});
  if (cfg.format == "csv")
    write_stream(res.dir / "report.csv", [&](std::ostream& os) { write_report_csv(os, res.report); });
  return res;
}

int run(const std::string& subcommand, const RunConfig& cfg, std::ostream& log) {
  if (!is_subcommand(subcommand)) throw SchemaError("", "unknown subcommand " + subcommand);
  std::vector<std::string> tasks;
  if (subcommand == "all")
    tasks.assign(subcommands().begin(), subcommands().end() - 1);
  else
    tasks.push_back(subcommand);
  for (const auto& t : tasks) check_task_inputs(t, cfg);

  bool ok = true;
  json summary = json::array();
  for (const auto& t : tasks) {
    const TaskResult r = run_task(t, cfg);
    const auto& rep = r.report;
    ok = ok && rep.passed();
    log << std::left << std::setw(20) << t << rep.count(Status::pass) << " pass, " << rep.count(Status::fail)
        << " fail, " << rep.count(Status::inconclusive) << " inconclusive  (" << std::fixed << std::setprecision(1)
        << rep.wall_time << " s)" << std::defaultfloat << '\n';
    for (const auto& c : rep.checks)
      if (c.status == Status::fail)
        log << "  FAIL " << c.name << ": estimate " << c.estimate << ", target " << c.target << ", tolerance "
            << c.tolerance << (c.note.empty() ? "" : " (" + c.note + ")") << '\n';
    summary.push_back({{"task", t},
                       {"pass", rep.count(Status::pass)},
                       {"fail", rep.count(Status::fail)},
                       {"inconclusive", rep.count(Status::inconclusive)}});
  }
  if (subcommand == "all")
    write_json(fs::path(cfg.out_dir) / "summary.json",
               {{"config_hash", cfg.hash()}, {"seed", cfg.mc.seed}, {"tasks", summary}, {"passed", ok}});
  return ok ? 0 : 1;
}

}  // namespace dflab

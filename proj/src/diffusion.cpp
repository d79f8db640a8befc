#include "dflab/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dflab {

void step_in_place(AtomicMeasure& eta, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const Manifold& m = eta.manifold();
  for (std::size_t i = 0; i < eta.size(); ++i) {
    const double s = eta.weight(i);
    if (s <= 0.0) continue;
    brownian_advance(m, eta.location(i), dt / s, rng);
  }
}

AtomicMeasure step(const AtomicMeasure& eta, double dt, Rng& rng) {
  AtomicMeasure out = eta;
  step_in_place(out, dt, rng);
  return out;
}

std::vector<double> uniform_grid(double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon > 0.0)) throw std::invalid_argument("uniform_grid: dt and horizon must be positive");
  const auto n = static_cast<std::size_t>(std::llround(horizon / dt));
  if (n == 0) throw std::invalid_argument("uniform_grid: horizon shorter than dt");
  std::vector<double> t(n + 1);
  for (std::size_t k = 0; k <= n; ++k) t[k] = horizon * static_cast<double>(k) / static_cast<double>(n);
  return t;
}

void validate_grid(const std::vector<double>& t_grid) {
  if (t_grid.empty() || t_grid.front() != 0.0) throw std::invalid_argument("time grid must start at 0");
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (!(t_grid[k] > t_grid[k - 1])) throw std::invalid_argument("time grid must be strictly increasing");
}

void simulate_path(const PathSpec& spec, std::size_t path_id, const MonteCarlo& mc,
                   const std::function<void(std::size_t, const AtomicMeasure&)>& visit) {
  validate_grid(spec.t_grid);
  Rng rng = make_rng(mc.seed, "simulate", path_id);
  AtomicMeasure eta = spec.initial ? *spec.initial : sample_dirichlet_ferguson(spec.manifold, spec.truncation, rng);
  visit(0, eta);
  for (std::size_t k = 1; k < spec.t_grid.size(); ++k) {
    step_in_place(eta, spec.t_grid[k] - spec.t_grid[k - 1], rng);
    visit(k, eta);
  }
}

std::vector<SimulationPath> simulate(const PathSpec& spec, const MonteCarlo& mc) {
  validate_grid(spec.t_grid);
  return mc_map<SimulationPath>(mc, "simulate/paths", spec.n_paths, [&](Rng&, std::size_t p) {
    SimulationPath path;
    path.t_grid = spec.t_grid;
    path.seed = mc.seed;
    path.path_id = p;
    path.states.reserve(spec.t_grid.size());
    simulate_path(spec, p, mc, [&](std::size_t, const AtomicMeasure& eta) { path.states.push_back(eta); });
    return path;
  });
}

void write_paths_csv(std::ostream& os, const std::vector<SimulationPath>& paths) {
  std::size_t d = paths.empty() || paths.front().states.empty() ? 0 : paths.front().states.front().stride();
  os << "path_id,t,atom_id,weight";
  for (std::size_t k = 0; k < d; ++k) os << ",coord_" << (k + 1);
  os << '\n';
  const auto prec = os.precision(17);
  for (const auto& p : paths)
    for (std::size_t k = 0; k < p.states.size(); ++k) {
      const auto& eta = p.states[k];
      for (std::size_t i = 0; i < eta.size(); ++i) {
        os << p.path_id << ',' << p.t_grid[k] << ',' << i << ',' << eta.weight(i);
        for (double c : eta.location(i)) os << ',' << c;
        os << '\n';
      }
    }
  os.precision(prec);
}

// ---------------------------------------------------------------------------

namespace {

/// Per-path martingale statistics, fed one state at a time.
class PathKernel {
 public:
  PathKernel(const CylinderFunction& u, const std::vector<CylinderFunction>& gs,
             const std::vector<double>& t, std::size_t split)
      : u_(u), gs_(gs), t_(t), split_(split), M_(t.size()), rqv_(t.size()), pqv_(t.size()),
        g_split_(gs.size()) {}

  void visit(std::size_t k, const AtomicMeasure& eta) {
    const double uk = u_(eta);
    const double lk = generator(u_, eta);
    const double qk = 2.0 * carre_du_champ(u_, u_, eta);
    if (k == 0) {
      u0_ = uk;
      M_[0] = rqv_[0] = pqv_[0] = 0.0;
    } else {
      const double dt = t_[k] - t_[k - 1];
      integral_ += 0.5 * (l_prev_ + lk) * dt;
      M_[k] = uk - u0_ - integral_;
      const double dM = M_[k] - M_[k - 1];
      rqv_[k] = rqv_[k - 1] + dM * dM;
      pqv_[k] = pqv_[k - 1] + 0.5 * (q_prev_ + qk) * dt;
    }
    if (k == split_)
      for (std::size_t j = 0; j < gs_.size(); ++j) g_split_[j] = gs_[j](eta);
    l_prev_ = lk;
    q_prev_ = qk;
  }

  /// Flat layout: M[0..K], realized[0..K], predicted[0..K], orth[0..|g|).
  std::vector<double> result() const {
    std::vector<double> out;
    out.reserve(3 * M_.size() + gs_.size());
    out.insert(out.end(), M_.begin(), M_.end());
    out.insert(out.end(), rqv_.begin(), rqv_.end());
    out.insert(out.end(), pqv_.begin(), pqv_.end());
    const double inc = M_.back() - M_[split_];
    for (double g : g_split_) out.push_back(inc * g);
    return out;
  }

 private:
  const CylinderFunction& u_;
  const std::vector<CylinderFunction>& gs_;
  const std::vector<double>& t_;
  std::size_t split_;
  std::vector<double> M_, rqv_, pqv_, g_split_;
  double u0_ = 0.0, integral_ = 0.0, l_prev_ = 0.0, q_prev_ = 0.0;
};

std::size_t split_index(const std::vector<double>& t, const MartingaleOptions& opt) {
  const double target = opt.split_time.value_or(0.5 * t.back());
  auto it = std::lower_bound(t.begin(), t.end(), target);
  std::size_t k = static_cast<std::size_t>(it - t.begin());
  return std::min(k, t.size() - 1);
}

MartingaleReport summarize(const std::vector<double>& t, std::size_t split, std::size_t n_g,
                           const std::vector<std::vector<double>>& per_path, const MartingaleOptions& opt) {
  const std::size_t K = t.size();
  const std::size_t n_stats = 3 * K + n_g;
  std::vector<Moments> mom(n_stats);
  for (const auto& row : per_path)
    for (std::size_t s = 0; s < n_stats; ++s) mom[s].add(row[s]);

  MartingaleReport r;
  r.t = t;
  r.n_paths = per_path.size();
  double max_z = 0.0, t_max_z = 0.0;
  std::size_t n_out = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& m = mom[k];
    r.mean_M.push_back(m.mean());
    r.stderr_M.push_back(m.stderr_mean());
    r.realized_qv.push_back(mom[K + k].mean());
    r.realized_qv_stderr.push_back(mom[K + k].stderr_mean());
    r.predicted_qv.push_back(mom[2 * K + k].mean());
    r.predicted_qv_stderr.push_back(mom[2 * K + k].stderr_mean());
    const Check c = sigma_check("", m.mean(), m.stderr_mean(), 0.0, opt.n_sigma);
    if (c.status == Status::fail) ++n_out;
    const double z = m.stderr_mean() > 0.0 ? std::abs(m.mean()) / m.stderr_mean() : 0.0;
    if (z > max_z) {
      max_z = z;
      t_max_z = t[k];
    }
  }

  Report& rep = r.report;
  rep.task = "verify-martingale";
  Check cm;
  cm.name = "martingale.E[M_t]=0.max|z|";
  cm.estimate = max_z;
  cm.target = 0.0;
  cm.tolerance = opt.n_sigma;
  cm.status = n_out == 0 ? Status::pass : Status::fail;
  std::ostringstream note;
  note << n_out << " of " << K << " grid times outside " << opt.n_sigma << " sigma; max at t=" << t_max_z;
  cm.note = note.str();
  rep.checks.push_back(cm);

  for (std::size_t j = 0; j < n_g; ++j) {
    auto c = zero_check("martingale.orthogonality[g" + std::to_string(j) + "]", mom[3 * K + j], opt.n_sigma);
    c.note = "E[(M_T - M_s) g(eta_s)], s=" + std::to_string(t[split]);
    rep.checks.push_back(c);
  }

  const double R = r.realized_qv.back(), P = r.predicted_qv.back();
  const double rel = P > 0.0 ? std::abs(R - P) / P : (R == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  auto cq = abs_check("martingale.qv-relative-error", rel, 0.0, opt.qv_rel_tol);
  std::ostringstream qn;
  qn << "realized " << R << " vs predicted " << P << " at t=" << t.back()
     << "; predicted QV is int 2*Gamma(u) ds = int <grad u, grad u> ds";
  cq.note = qn.str();
  rep.checks.push_back(cq);

  std::vector<double> rel_t(K, 0.0);
  for (std::size_t k = 0; k < K; ++k)
    rel_t[k] = r.predicted_qv[k] > 0.0 ? (r.realized_qv[k] - r.predicted_qv[k]) / r.predicted_qv[k] : 0.0;
  rep.extra = r.to_json();
  rep.extra["qv_relative_error"] = rel_t;
  return r;
}

}  // namespace

nlohmann::json MartingaleReport::to_json() const {
  return {{"t", t},
          {"mean_M", mean_M},
          {"stderr_M", stderr_M},
          {"realized_qv", realized_qv},
          {"realized_qv_stderr", realized_qv_stderr},
          {"predicted_qv", predicted_qv},
          {"predicted_qv_stderr", predicted_qv_stderr},
          {"n_paths", n_paths},
          {"qv_normalization", "predicted_qv = int_0^t 2 Gamma(u)(eta_s) ds, Gamma = (1/2) sum_i s_i |grad u|^2"}};
}

MartingaleReport verify_martingale(const CylinderFunction& u, const std::vector<CylinderFunction>& gs,
                                   const std::vector<SimulationPath>& paths, const MartingaleOptions& opt) {
  if (paths.empty()) throw std::invalid_argument("verify_martingale: no paths");
  const auto& t = paths.front().t_grid;
  validate_grid(t);
  const std::size_t split = split_index(t, opt);
  std::vector<std::vector<double>> rows;
  for (const auto& p : paths) {
    if (p.t_grid != t || p.states.size() != t.size())
      throw std::invalid_argument("verify_martingale: paths must share one time grid");
    PathKernel kernel(u, gs, t, split);
    for (std::size_t k = 0; k < t.size(); ++k) kernel.visit(k, p.states[k]);
    rows.push_back(kernel.result());
  }
  return summarize(t, split, gs.size(), rows, opt);
}

MartingaleReport verify_martingale(const CylinderFunction& u, const std::vector<CylinderFunction>& gs,
                                   const PathSpec& spec, const MartingaleOptions& opt, const MonteCarlo& mc) {
  validate_grid(spec.t_grid);
  if (spec.n_paths < 2) throw std::invalid_argument("verify_martingale: need at least two paths");
  const auto& t = spec.t_grid;
  const std::size_t split = split_index(t, opt);
  auto rows = mc_map<std::vector<double>>(mc, "verify-martingale", spec.n_paths, [&](Rng&, std::size_t p) {
    PathKernel kernel(u, gs, t, split);
    simulate_path(spec, p, mc, [&](std::size_t k, const AtomicMeasure& eta) { kernel.visit(k, eta); });
    return kernel.result();
  });
  return summarize(t, split, gs.size(), rows, opt);
}

// ---------------------------------------------------------------------------

Report verify_invariance(const Manifold& m, const Truncation& trunc, const std::vector<TestFunction>& probes,
                         const std::vector<double>& t_list, std::size_t n, double n_sigma, const MonteCarlo& mc) {
  if (probes.empty()) throw std::invalid_argument("verify_invariance: empty probe basket");
  std::vector<double> ts = t_list;
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  if (ts.empty() || ts.front() < 0.0) throw std::invalid_argument("verify_invariance: times must be >= 0");
  if (ts.front() != 0.0) ts.insert(ts.begin(), 0.0);
  const std::size_t k = probes.size(), nt = ts.size();

  // Stats per (t, probe): f, f^2, f - f0, f^2 - f0^2; then a weight-mismatch indicator.
  const std::size_t n_stats = 4 * k * nt + 1;
  auto mom = mc_accumulate(mc, "verify-invariance", n, n_stats, [&](Rng& rng, std::span<double> out) {
    AtomicMeasure eta = sample_dirichlet_ferguson(m, trunc, rng);
    const std::vector<double> w0 = eta.weights().s;
    std::vector<double> f0(k);
    for (std::size_t ti = 0; ti < nt; ++ti) {
      if (ti > 0) step_in_place(eta, ts[ti] - ts[ti - 1], rng);
      for (std::size_t p = 0; p < k; ++p) {
        const double f = star(probes[p], eta);
        if (ti == 0) f0[p] = f;
        double* o = out.data() + 4 * (ti * k + p);
        o[0] = f;
        o[1] = f * f;
        o[2] = f - f0[p];
        o[3] = f * f - f0[p] * f0[p];
      }
    }
    out[n_stats - 1] = eta.weights().s == w0 ? 0.0 : 1.0;
  });

  Report rep;
  rep.task = "verify-invariance";
  nlohmann::json table = nlohmann::json::array();
  for (std::size_t ti = 0; ti < nt; ++ti)
    for (std::size_t p = 0; p < k; ++p) {
      const std::size_t b = 4 * (ti * k + p);
      table.push_back({{"t", ts[ti]}, {"probe", p}, {"mean", mom[b].mean()}, {"stderr", mom[b].stderr_mean()},
                       {"second_moment", mom[b + 1].mean()}, {"second_moment_stderr", mom[b + 1].stderr_mean()}});
      if (ti == 0) continue;
      std::ostringstream tag;
      tag << "invariance[f" << p << ",t=" << ts[ti] << "]";
      rep.checks.push_back(zero_check(tag.str() + ".mean-drift", mom[b + 2], n_sigma));
      rep.checks.push_back(zero_check(tag.str() + ".second-moment-drift", mom[b + 3], n_sigma));
    }
  auto cw = abs_check("invariance.weights-frozen", mom[n_stats - 1].mean(), 0.0, 0.0);
  cw.note = "fraction of paths whose weight vector changed bitwise";
  rep.checks.push_back(cw);
  rep.extra["moments"] = table;
  return rep;
}

double Window::volume_fraction(double side) const {
  double v = 1.0;
  for (std::size_t i = 0; i < lo.size(); ++i) v *= (hi[i] - lo[i]) / side;
  return v;
}

bool Window::contains(std::span<const double> x) const {
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (x[i] < lo[i] || x[i] >= hi[i]) return false;
  return true;
}

Report verify_ergodic_component(const Manifold& m, const WeightVector& s, const std::vector<Window>& windows,
                                const std::vector<double>& t_list, std::size_t n, double n_sigma,
                                const MonteCarlo& mc) {
  if (!m.is_torus()) throw std::invalid_argument("verify_ergodic_component: torus only");
  if (windows.empty()) throw std::invalid_argument("verify_ergodic_component: no windows");
  if (s.s.empty()) throw std::invalid_argument("verify_ergodic_component: empty weight vector");
  for (const auto& w : windows) {
    if (w.lo.size() != static_cast<std::size_t>(m.dim) || w.hi.size() != w.lo.size())
      throw std::invalid_argument("window dimension must match the torus");
    for (std::size_t i = 0; i < w.lo.size(); ++i)
      if (!(0.0 <= w.lo[i] && w.lo[i] < w.hi[i] && w.hi[i] <= m.side))
        throw std::invalid_argument("window bounds must satisfy 0 <= lo < hi <= side");
  }
  std::vector<double> ts = t_list;
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  if (ts.empty() || ts.front() < 0.0) throw std::invalid_argument("verify_ergodic_component: times must be >= 0");
  const std::size_t nw = windows.size(), nt = ts.size(), d = m.coord_dim();

  auto mom = mc_accumulate(mc, "verify-ergodic", n, nw * nt + 1, [&](Rng& rng, std::span<double> out) {
    std::vector<double> coords(s.s.size() * d);
    for (std::size_t i = 0; i < s.s.size(); ++i) sample_uniform_into(m, rng, std::span<double>(coords.data() + i * d, d));
    AtomicMeasure eta(m, s, std::move(coords));
    double prev = 0.0;
    for (std::size_t ti = 0; ti < nt; ++ti) {
      if (ts[ti] > prev) step_in_place(eta, ts[ti] - prev, rng);
      prev = ts[ti];
      for (std::size_t w = 0; w < nw; ++w) {
        double mass = 0.0;
        for (std::size_t i = 0; i < eta.size(); ++i)
          if (windows[w].contains(eta.location(i))) mass += eta.weight(i);
        out[ti * nw + w] = mass;
      }
    }
    out[nw * nt] = eta.weights().s == s.s ? 0.0 : 1.0;
  });

  double atom_mass = 0.0;
  for (double v : s.s) atom_mass += v;
  Report rep;
  rep.task = "verify-ergodic";
  for (std::size_t ti = 0; ti < nt; ++ti)
    for (std::size_t w = 0; w < nw; ++w) {
      std::ostringstream tag;
      tag << "ergodic[A" << w << ",t=" << ts[ti] << "]";
      const auto& mm = mom[ti * nw + w];
      // Atoms are exchangeable and uniform at all times, so E[eta_t A] = (sum s) |A|.
      rep.checks.push_back(sigma_check(tag.str() + ".E[eta_t(A)]", mm.mean(), mm.stderr_mean(),
                                       atom_mass * windows[w].volume_fraction(m.side), n_sigma));
    }
  auto cw = abs_check("ergodic.weights-conserved", mom[nw * nt].mean(), 0.0, 0.0);
  cw.note = "fraction of samples whose weight vector changed bitwise";
  rep.checks.push_back(cw);
  return rep;
}

EnergyEstimate dirichlet_energy(const Manifold& m, const Truncation& trunc, const CylinderFunction& u,
                                std::size_t n, double n_sigma, const MonteCarlo& mc) {
  auto mom = mc_accumulate(mc, "energy", n, 3, [&](Rng& rng, std::span<double> out) {
    const AtomicMeasure eta = sample_dirichlet_ferguson(m, trunc, rng);
    const double g = carre_du_champ(u, u, eta);
    const double ulu = u(eta) * generator(u, eta);
    out[0] = g;
    out[1] = -ulu;
    out[2] = g + ulu;
  });
  EnergyEstimate e;
  e.value = mom[0].mean();
  e.stderr_ = mom[0].stderr_mean();
  e.report.task = "energy";
  auto c = zero_check("energy.gamma-vs-minus-uLu", mom[2], n_sigma);
  std::ostringstream note;
  note << "E[Gamma(u,u)]=" << mom[0].mean() << " +- " << mom[0].stderr_mean() << ", -E[u Lu]=" << mom[1].mean()
       << " +- " << mom[1].stderr_mean();
  c.note = note.str();
  e.report.checks.push_back(c);
  e.report.extra["energy"] = {{"value", e.value}, {"stderr", e.stderr_}, {"minus_uLu", mom[1].mean()},
                              {"minus_uLu_stderr", mom[1].stderr_mean()}};
  return e;
}

}  // namespace dflab

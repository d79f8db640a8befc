#include "dflab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dflab/diffusion.hpp"

namespace dflab {

namespace {

struct Cell {
  std::size_t i, j;
  bool operator<(const Cell& o) const { return i != o.i ? i < o.i : j < o.j; }
  bool operator==(const Cell& o) const { return i == o.i && j == o.j; }
};

/// Spanning-tree basis of the m x n transportation problem.
class Basis {
 public:
  Basis(std::size_t m, std::size_t n) : m_(m), n_(n), in_basis_(m * n, 0) {}

  void add(Cell c, double flow) {
    cells_.push_back(c);
    flow_.push_back(flow);
    in_basis_[c.i * n_ + c.j] = 1;
  }

  bool contains(std::size_t i, std::size_t j) const { return in_basis_[i * n_ + j] != 0; }
  std::size_t size() const { return cells_.size(); }
  const Cell& cell(std::size_t k) const { return cells_[k]; }
  double& flow(std::size_t k) { return flow_[k]; }

  void replace(std::size_t k, Cell c, double flow) {
    in_basis_[cells_[k].i * n_ + cells_[k].j] = 0;
    cells_[k] = c;
    flow_[k] = flow;
    in_basis_[c.i * n_ + c.j] = 1;
  }

  /// Node ids: rows 0..m-1, columns m..m+n-1. adjacency[node] lists basis indices.
  std::vector<std::vector<std::size_t>> adjacency() const {
    std::vector<std::vector<std::size_t>> adj(m_ + n_);
    for (std::size_t k = 0; k < cells_.size(); ++k) {
      adj[cells_[k].i].push_back(k);
      adj[m_ + cells_[k].j].push_back(k);
    }
    return adj;
  }

  std::size_t other_end(std::size_t k, std::size_t node) const {
    return node < m_ ? m_ + cells_[k].j : cells_[k].i;
  }

  /// Potentials with u_0 = 0 and u_i + v_j = c_ij on every basic cell.
  void potentials(const std::vector<double>& c, std::vector<double>& u, std::vector<double>& v) const {
    const auto adj = adjacency();
    std::vector<double> pot(m_ + n_, 0.0);
    std::vector<char> seen(m_ + n_, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t k : adj[node]) {
        const std::size_t nb = other_end(k, node);
        if (seen[nb]) continue;
        seen[nb] = 1;
        pot[nb] = c[cells_[k].i * n_ + cells_[k].j] - pot[node];
        stack.push_back(nb);
      }
    }
    u.assign(pot.begin(), pot.begin() + static_cast<std::ptrdiff_t>(m_));
    v.assign(pot.begin() + static_cast<std::ptrdiff_t>(m_), pot.end());
  }

  /// Basis indices on the tree path from row node p to column node m+q, ordered from p.
  std::vector<std::size_t> path(std::size_t p, std::size_t q) const {
    const auto adj = adjacency();
    const std::size_t target = m_ + q;
    std::vector<std::ptrdiff_t> via(m_ + n_, -1);
    std::vector<char> seen(m_ + n_, 0);
    std::vector<std::size_t> queue{p};
    seen[p] = 1;
    for (std::size_t h = 0; h < queue.size() && !seen[target]; ++h) {
      const std::size_t node = queue[h];
      for (std::size_t k : adj[node]) {
        const std::size_t nb = other_end(k, node);
        if (seen[nb]) continue;
        seen[nb] = 1;
        via[nb] = static_cast<std::ptrdiff_t>(k);
        queue.push_back(nb);
      }
    }
    if (!seen[target]) throw std::logic_error("transport: basis is not a spanning tree");
    std::vector<std::size_t> edges;
    std::size_t node = target;
    while (node != p) {
      const auto k = static_cast<std::size_t>(via[node]);
      edges.push_back(k);
      node = other_end(k, node);
    }
    std::reverse(edges.begin(), edges.end());
    return edges;
  }

  /// Recomputes flows from the marginals by peeling leaves of the tree.
  void refresh_flows(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> rem(m_ + n_);
    std::copy(a.begin(), a.end(), rem.begin());
    std::copy(b.begin(), b.end(), rem.begin() + static_cast<std::ptrdiff_t>(m_));
    const auto adj = adjacency();
    std::vector<std::size_t> degree(m_ + n_);
    for (std::size_t v = 0; v < m_ + n_; ++v) degree[v] = adj[v].size();
    std::vector<char> done(cells_.size(), 0);
    std::vector<std::size_t> leaves;
    for (std::size_t v = 0; v < m_ + n_; ++v)
      if (degree[v] == 1) leaves.push_back(v);
    std::size_t assigned = 0;
    while (!leaves.empty() && assigned < cells_.size()) {
      // Lowest node id first keeps the peeling order deterministic.
      std::sort(leaves.begin(), leaves.end(), std::greater<>());
      const std::size_t leaf = leaves.back();
      leaves.pop_back();
      if (degree[leaf] != 1) continue;
      std::size_t k = 0;
      for (std::size_t e : adj[leaf])
        if (!done[e]) k = e;
      const std::size_t other = other_end(k, leaf);
      flow_[k] = std::max(0.0, rem[leaf]);
      rem[other] -= flow_[k];
      rem[leaf] = 0.0;
      done[k] = 1;
      ++assigned;
      --degree[leaf];
      if (--degree[other] == 1) leaves.push_back(other);
    }
  }

 private:
  std::size_t m_, n_;
  std::vector<Cell> cells_;
  std::vector<double> flow_;
  std::vector<char> in_basis_;
};

}  // namespace

TransportPlan solve_transport(const std::vector<double>& a, const std::vector<double>& b,
                              const std::vector<double>& c) {
  const std::size_t m = a.size(), n = b.size();
  if (m == 0 || n == 0) throw std::invalid_argument("transport: empty marginal");
  if (c.size() != m * n) throw std::invalid_argument("transport: cost matrix has wrong size");
  for (double v : a)
    if (!(v >= 0.0)) throw std::invalid_argument("transport: negative mass");
  for (double v : b)
    if (!(v >= 0.0)) throw std::invalid_argument("transport: negative mass");

  // Northwest corner: every step advances exactly one index, giving m + n - 1 cells.
  Basis basis(m, n);
  {
    std::vector<double> ra = a, rb = b;
    std::size_t i = 0, j = 0;
    while (true) {
      const double q = std::min(ra[i], rb[j]);
      basis.add({i, j}, q);
      ra[i] -= q;
      rb[j] -= q;
      if (i == m - 1 && j == n - 1) break;
      if (j == n - 1 || (i < m - 1 && ra[i] <= rb[j]))
        ++i;
      else
        ++j;
    }
  }
  basis.refresh_flows(a, b);

  double c_scale = 0.0;
  for (double v : c) c_scale = std::max(c_scale, std::abs(v));
  const double tol = 1e-12 * std::max(1.0, c_scale);
  const double zero_flow = 1e-15;

  std::vector<double> u, v;
  std::size_t pivots = 0, degenerate_run = 0;
  const std::size_t max_pivots = 100 * (m + n) * std::max(m, n) + 1000;
  while (true) {
    basis.potentials(c, u, v);
    const bool bland = degenerate_run >= m + n;
    std::ptrdiff_t bi = -1, bj = -1;
    double best = -tol;
    for (std::size_t i = 0; i < m && !(bland && bi >= 0); ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (basis.contains(i, j)) continue;
        const double r = c[i * n + j] - u[i] - v[j];
        if (r < best) {
          best = r;
          bi = static_cast<std::ptrdiff_t>(i);
          bj = static_cast<std::ptrdiff_t>(j);
          if (bland) break;
        }
      }
    if (bi < 0) break;
    if (++pivots > max_pivots) throw std::runtime_error("transport: pivot limit exceeded");

    const Cell enter{static_cast<std::size_t>(bi), static_cast<std::size_t>(bj)};
    const auto edges = basis.path(enter.i, enter.j);
    // Signs along the cycle: the edge at the column end loses mass, then alternate.
    double theta = std::numeric_limits<double>::infinity();
    std::ptrdiff_t leave = -1;
    for (std::size_t e = edges.size(); e-- > 0;) {
      const bool minus = (edges.size() - 1 - e) % 2 == 0;
      if (!minus) continue;
      const double f = basis.flow(edges[e]);
      const Cell& cell = basis.cell(edges[e]);
      if (f < theta || (f == theta && leave >= 0 && cell < basis.cell(static_cast<std::size_t>(leave)))) {
        theta = f;
        leave = static_cast<std::ptrdiff_t>(edges[e]);
      }
    }
    theta = std::max(0.0, theta);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const bool minus = (edges.size() - 1 - e) % 2 == 0;
      basis.flow(edges[e]) += minus ? -theta : theta;
    }
    basis.replace(static_cast<std::size_t>(leave), enter, theta);
    degenerate_run = theta <= zero_flow ? degenerate_run + 1 : 0;
  }
  basis.refresh_flows(a, b);

  TransportPlan plan;
  plan.pivots = pivots;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double f = basis.flow(k);
    if (f <= 0.0) continue;
    plan.edges.push_back({basis.cell(k).i, basis.cell(k).j, f});
  }
  std::sort(plan.edges.begin(), plan.edges.end(),
            [](const TransportEdge& x, const TransportEdge& y) { return x.i != y.i ? x.i < y.i : x.j < y.j; });
  for (const auto& e : plan.edges) plan.cost += e.mass * c[e.i * n + e.j];
  plan.cost = std::max(0.0, plan.cost);
  plan.w2 = std::sqrt(plan.cost);
  return plan;
}

namespace {

void require_compatible(const Manifold& a, const Manifold& b) {
  if (a.kind != b.kind || a.coord_dim() != b.coord_dim() || a.side != b.side || a.metric_scale != b.metric_scale)
    throw std::invalid_argument("w2: measures live on different manifolds");
}

}  // namespace

TransportPlan w2(const AtomicMeasure& mu, const AtomicMeasure& nu) {
  require_compatible(mu.manifold(), nu.manifold());
  const std::size_t m = mu.size(), n = nu.size();
  if (m == 0 || n == 0) throw std::invalid_argument("w2: empty measure");
  if (m * n > 1000000) throw std::invalid_argument("w2: support product exceeds 10^6");
  std::vector<double> a = mu.weights().s, b = nu.weights().s;
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  if (std::abs(sa - sb) > 1e-8)
    throw std::invalid_argument("w2: total masses differ; renormalize sub-probability measures first");
  if (sb > 0.0)
    for (double& x : b) x *= sa / sb;
  std::vector<double> c(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = distance_squared(mu.manifold(), mu.location(i), nu.location(j));
  return solve_transport(a, b, c);
}

double w2_distance(const AtomicMeasure& mu, const AtomicMeasure& nu) { return w2(mu, nu).w2; }

void TransportPlan::write_csv(std::ostream& os, const AtomicMeasure& mu, const AtomicMeasure& nu) const {
  os << "i,j,mass,cost_contrib\n";
  const auto prec = os.precision(17);
  for (const auto& e : edges)
    os << e.i << ',' << e.j << ',' << e.mass << ','
       << e.mass * distance_squared(mu.manifold(), mu.location(e.i), nu.location(e.j)) << '\n';
  os.precision(prec);
}

nlohmann::json TransportPlan::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : edges) rows.push_back({e.i, e.j, e.mass});
  return {{"cost", cost}, {"w2", w2}, {"pivots", pivots}, {"edges", rows}};
}

// ---------------------------------------------------------------------------

bool MeasureBall::contains(const AtomicMeasure& eta) const {
  const double r2 = radius * radius;
  double lower = 0.0;
  for (std::size_t i = 0; i < eta.size() && lower <= r2; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < center.size(); ++j)
      best = std::min(best, distance_squared(eta.manifold(), eta.location(i), center.location(j)));
    lower += eta.weight(i) * best;
  }
  if (lower > r2) return false;
  return w2_distance(eta, center) <= radius;
}

Report varadhan_probe(const Manifold& m, const Truncation& trunc, const MeasureBall& a1, const MeasureBall& a2,
                      const VaradhanOptions& opt, const MonteCarlo& mc) {
  if (opt.t_list.empty()) throw std::invalid_argument("varadhan_probe: empty time list");
  std::vector<double> ts = opt.t_list;
  std::sort(ts.begin(), ts.end());
  if (!(ts.front() > 0.0)) throw std::invalid_argument("varadhan_probe: times must be positive");
  if (!(opt.slack >= 0.0 && opt.slack < 1.0)) throw std::invalid_argument("varadhan_probe: slack must lie in [0, 1)");
  const std::size_t nt = ts.size();

  struct ChunkOut {
    std::vector<Moments> hits;
    Moments in1, in2;
    std::vector<AtomicMeasure> members1, members2;
  };
  const std::size_t chunk = std::max<std::size_t>(1, mc.chunk_size);
  const std::size_t n_chunks = (opt.n + chunk - 1) / chunk;
  auto parts = mc_map<ChunkOut>(mc, "varadhan", n_chunks, [&](Rng& rng, std::size_t c) {
    ChunkOut out;
    out.hits.resize(nt);
    const std::size_t end = std::min(opt.n, (c + 1) * chunk);
    for (std::size_t s = c * chunk; s < end; ++s) {
      AtomicMeasure eta = sample_dirichlet_ferguson(m, trunc, rng);
      const bool in1 = a1.contains(eta);
      const bool in2 = a2.contains(eta);
      out.in1.add(in1 ? 1.0 : 0.0);
      out.in2.add(in2 ? 1.0 : 0.0);
      if (in1 && out.members1.size() < opt.max_members) out.members1.push_back(eta);
      if (in2 && out.members2.size() < opt.max_members) out.members2.push_back(eta);
      if (!in1) {
        for (auto& h : out.hits) h.add(0.0);
        continue;
      }
      // One path serves every t: the transitions are exact and Markov.
      double prev = 0.0;
      for (std::size_t k = 0; k < nt; ++k) {
        step_in_place(eta, ts[k] - prev, rng);
        prev = ts[k];
        out.hits[k].add(a2.contains(eta) ? 1.0 : 0.0);
      }
    }
    return out;
  });

  std::vector<Moments> hits(nt);
  Moments in1, in2;
  std::vector<AtomicMeasure> members1, members2;
  for (const auto& p : parts) {
    for (std::size_t k = 0; k < nt; ++k) hits[k].merge(p.hits[k]);
    in1.merge(p.in1);
    in2.merge(p.in2);
    for (const auto& e : p.members1)
      if (members1.size() < opt.max_members) members1.push_back(e);
    for (const auto& e : p.members2)
      if (members2.size() < opt.max_members) members2.push_back(e);
  }

  // Sampled-pair set distance, with the centres as fallback members.
  double d_hat = std::numeric_limits<double>::infinity();
  if (members1.empty()) members1.push_back(a1.center);
  if (members2.empty()) members2.push_back(a2.center);
  for (const auto& x : members1)
    for (const auto& y : members2) d_hat = std::min(d_hat, w2_distance(x, y));
  const double d_lower = std::max(0.0, w2_distance(a1.center, a2.center) - a1.radius - a2.radius);
  const double bound = -0.5 * d_hat * d_hat * (1.0 - opt.slack);

  Report rep;
  rep.task = "varadhan";
  nlohmann::json arr_t = nlohmann::json::array(), arr_p = nlohmann::json::array(), arr_se = nlohmann::json::array(),
                 arr_tl = nlohmann::json::array(), arr_b = nlohmann::json::array(), arr_h = nlohmann::json::array();
  // Report from largest to smallest t, the order in which the bound sharpens.
  for (std::size_t kk = nt; kk-- > 0;) {
    const double t = ts[kk];
    const double p = hits[kk].mean();
    const double se = hits[kk].stderr_mean();
    const auto n_hits = static_cast<std::uint64_t>(std::llround(p * static_cast<double>(hits[kk].count())));
    std::ostringstream name;
    name << "varadhan[t=" << t << "].t-log-p";
    Check c;
    c.name = name.str();
    c.target = bound;
    arr_t.push_back(t);
    arr_p.push_back(p);
    arr_se.push_back(se);
    arr_b.push_back(bound);
    arr_h.push_back(n_hits);
    if (n_hits == 0) {
      c.estimate = -std::numeric_limits<double>::infinity();
      c.status = Status::inconclusive;
      c.note = "no joint hits";
      arr_tl.push_back(nullptr);
    } else {
      c.estimate = t * std::log(p);
      c.stderr_ = t * se / p;
      c.tolerance = opt.n_sigma * c.stderr_;
      c.status = c.estimate <= bound + c.tolerance ? Status::pass : Status::fail;
      c.note = std::to_string(n_hits) + " joint hits; one-sided bound t log p <= -(1/2) d^2 (1 - slack)";
      arr_tl.push_back(c.estimate);
    }
    rep.checks.push_back(c);
  }
  rep.extra = {{"t", arr_t},
               {"p_hat", arr_p},
               {"stderr", arr_se},
               {"t_log_p", arr_tl},
               {"bound", arr_b},
               {"hits", arr_h},
               {"d_hat", d_hat},
               {"d_lower_bound", d_lower},
               {"slack", opt.slack},
               {"n", opt.n},
               {"p_A1", in1.mean()},
               {"p_A2", in2.mean()},
               {"members", {members1.size(), members2.size()}}};
  return rep;
}

Report rademacher_probe(const Manifold& m, const Truncation& trunc, const std::vector<AtomicMeasure>& refs,
                        const std::vector<VectorField>& fields, const RademacherOptions& opt, const MonteCarlo& mc) {
  if (refs.empty() || fields.empty()) throw std::invalid_argument("rademacher_probe: empty basket");
  if (!(opt.h > 0.0)) throw std::invalid_argument("rademacher_probe: h must be positive");
  const std::size_t nr = refs.size(), nf = fields.size();

  struct Out {
    std::vector<double> worst_ratio;
    std::vector<std::size_t> violations;
    std::vector<Moments> quotient_sq, norm_sq;
  };
  const std::size_t chunk = std::max<std::size_t>(1, std::min<std::size_t>(mc.chunk_size, 64));
  const std::size_t n_chunks = (opt.n + chunk - 1) / chunk;
  auto parts = mc_map<Out>(mc, "rademacher", n_chunks, [&](Rng& rng, std::size_t c) {
    Out out;
    out.worst_ratio.assign(nr * nf, 0.0);
    out.violations.assign(nr * nf, 0);
    out.quotient_sq.resize(nr * nf);
    out.norm_sq.resize(nf);
    const std::size_t end = std::min(opt.n, (c + 1) * chunk);
    std::vector<double> wx(m.coord_dim());
    for (std::size_t s = c * chunk; s < end; ++s) {
      const AtomicMeasure eta = sample_dirichlet_ferguson(m, trunc, rng);
      std::vector<double> u0(nr);
      for (std::size_t r = 0; r < nr; ++r) u0[r] = w2_distance(eta, refs[r]);
      for (std::size_t f = 0; f < nf; ++f) {
        double norm2 = 0.0;
        for (std::size_t i = 0; i < eta.size(); ++i) {
          fields[f](eta.location(i), wx);
          double sq = 0.0;
          for (double v : wx) sq += v * v;
          norm2 += eta.weight(i) * sq;
        }
        out.norm_sq[f].add(norm2);
        const AtomicMeasure moved = push_forward(FlowMap{fields[f], opt.h, opt.h}, eta);
        const double bound = std::sqrt(norm2) * (1.0 + opt.curvature * opt.h);
        for (std::size_t r = 0; r < nr; ++r) {
          const double q = std::abs(w2_distance(moved, refs[r]) - u0[r]) / opt.h;
          out.quotient_sq[r * nf + f].add(q * q);
          const double ratio = bound > 0.0 ? q / bound : (q > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
          out.worst_ratio[r * nf + f] = std::max(out.worst_ratio[r * nf + f], ratio);
          if (q > bound) ++out.violations[r * nf + f];
        }
      }
    }
    return out;
  });

  std::vector<double> worst(nr * nf, 0.0);
  std::vector<std::size_t> viol(nr * nf, 0);
  std::vector<Moments> qsq(nr * nf), nsq(nf);
  for (const auto& p : parts) {
    for (std::size_t k = 0; k < nr * nf; ++k) {
      worst[k] = std::max(worst[k], p.worst_ratio[k]);
      viol[k] += p.violations[k];
      qsq[k].merge(p.quotient_sq[k]);
    }
    for (std::size_t f = 0; f < nf; ++f) nsq[f].merge(p.norm_sq[f]);
  }

  Report rep;
  rep.task = "rademacher";
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < nr; ++r)
    for (std::size_t f = 0; f < nf; ++f) {
      const std::size_t k = r * nf + f;
      std::ostringstream name;
      name << "rademacher[ref" << r << ",w" << f << "].max-ratio";
      auto c = upper_check(name.str(), worst[k], 1.0);
      c.note = std::to_string(viol[k]) + " of " + std::to_string(opt.n) +
               " samples above ||w||_{L2(eta)} (1 + C h)";
      rep.checks.push_back(c);
      rows.push_back({{"ref", r}, {"field", f}, {"max_ratio", worst[k]}, {"violations", viol[k]},
                      {"mean_quotient_sq", qsq[k].mean()}, {"mean_norm_sq", nsq[f].mean()}});
    }
  rep.extra = {{"h", opt.h}, {"curvature", opt.curvature}, {"rows", rows}};
  return rep;
}

}  // namespace dflab

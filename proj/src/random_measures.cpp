#include "dflab/random_measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dflab {

double WeightVector::total() const {
  return std::accumulate(s.begin(), s.end(), 0.0) + tail;
}

AtomicMeasure::AtomicMeasure(Manifold manifold, WeightVector weights, std::vector<double> coords)
    : manifold_(std::move(manifold)), weights_(std::move(weights)), coords_(std::move(coords)) {
  if (coords_.size() != weights_.s.size() * manifold_.coord_dim())
    throw std::invalid_argument("AtomicMeasure: weights/locations length mismatch");
}

std::size_t AtomicMeasure::count_above(double eps) const {
  if (weights_.ordered) {
    auto it = std::find_if(weights_.s.begin(), weights_.s.end(), [eps](double v) { return v <= eps; });
    return static_cast<std::size_t>(it - weights_.s.begin());
  }
  return static_cast<std::size_t>(
      std::count_if(weights_.s.begin(), weights_.s.end(), [eps](double v) { return v > eps; }));
}

double AtomicMeasure::max_weight() const {
  if (weights_.s.empty()) return 0.0;
  return weights_.ordered ? weights_.s.front()
                          : *std::max_element(weights_.s.begin(), weights_.s.end());
}

bool AtomicMeasure::has_duplicate_locations() const {
  const std::size_t n = size(), d = stride();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  auto loc = [&](std::size_t i) { return coords_.begin() + static_cast<std::ptrdiff_t>(i * d); };
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(loc(a), loc(a) + d, loc(b), loc(b) + d);
  });
  for (std::size_t i = 1; i < n; ++i)
    if (std::equal(loc(idx[i - 1]), loc(idx[i - 1]) + d, loc(idx[i]))) return true;
  return false;
}

nlohmann::json AtomicMeasure::to_json() const {
  nlohmann::json locs = nlohmann::json::array();
  for (std::size_t i = 0; i < size(); ++i) {
    auto l = location(i);
    locs.push_back(std::vector<double>(l.begin(), l.end()));
  }
  return {{"weights", weights_.s}, {"tail", weights_.tail}, {"locations", locs}};
}

AtomicMeasure AtomicMeasure::from_json(const Manifold& m, const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("weights") || !j.contains("locations"))
    throw std::invalid_argument("atomic measure needs \"weights\" and \"locations\"");
  WeightVector w;
  w.s = j.at("weights").get<std::vector<double>>();
  w.tail = j.value("tail", 0.0);
  const auto& locs = j.at("locations");
  if (!locs.is_array() || locs.size() != w.s.size())
    throw std::invalid_argument("atomic measure: weights/locations length mismatch");
  std::vector<double> coords;
  for (const auto& l : locs) {
    auto p = l.get<std::vector<double>>();
    if (p.size() != m.coord_dim())
      throw std::invalid_argument("atomic measure: location has wrong dimension");
    wrap_in_place(m, p);
    coords.insert(coords.end(), p.begin(), p.end());
  }
  for (double s : w.s)
    if (!(s >= 0.0)) throw std::invalid_argument("atomic measure: negative weight");
  w.ordered = std::is_sorted(w.s.begin(), w.s.end(), std::greater<>());
  return AtomicMeasure(m, std::move(w), std::move(coords));
}

void AtomicMeasure::write_csv(std::ostream& os) const {
  os << "index,weight";
  for (std::size_t k = 0; k < stride(); ++k) os << ",coord_" << (k + 1);
  os << '\n';
  const auto prec = os.precision(17);
  for (std::size_t i = 0; i < size(); ++i) {
    os << i << ',' << weights_.s[i];
    for (double c : location(i)) os << ',' << c;
    os << '\n';
  }
  os.precision(prec);
}

TailPolicy parse_tail_policy(const std::string& s) {
  if (s == "renormalize") return TailPolicy::renormalize;
  if (s == "lump") return TailPolicy::lump;
  if (s == "keep") return TailPolicy::keep;
  throw std::invalid_argument("unknown tail policy: " + s);
}

std::string to_string(TailPolicy p) {
  switch (p) {
    case TailPolicy::renormalize: return "renormalize";
    case TailPolicy::lump: return "lump";
    case TailPolicy::keep: return "keep";
  }
  return "renormalize";
}

std::vector<double> sample_sticks(double beta, std::size_t n, Rng& rng) {
  if (!(beta > 0.0)) throw std::invalid_argument("sample_sticks: beta must be positive");
  std::vector<double> r(n);
  // 1 - U^{1/beta} written as -expm1(log U / beta) to keep r in (0, 1].
  for (auto& v : r) v = -std::expm1(std::log(uniform_open(rng)) / beta);
  return r;
}

WeightVector stick_break(std::span<const double> r) {
  WeightVector w;
  w.s.resize(r.size());
  double remaining = 1.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (!(r[k] > 0.0 && r[k] <= 1.0))
      throw std::invalid_argument("stick_break: sticks must lie in (0, 1]");
    w.s[k] = r[k] * remaining;
    remaining *= 1.0 - r[k];
  }
  w.tail = remaining;
  w.ordered = false;
  return w;
}

WeightVector reorder(const WeightVector& w) {
  WeightVector out = w;
  std::sort(out.s.begin(), out.s.end(), std::greater<>());
  out.ordered = true;
  return out;
}

std::size_t auto_truncation(double beta, double tol) {
  if (!(beta > 0.0)) throw std::invalid_argument("auto_truncation: beta must be positive");
  return static_cast<std::size_t>(std::ceil(std::log(tol) / std::log(beta / (1.0 + beta))));
}

double expected_tail(double beta, std::size_t n) {
  return std::pow(beta / (1.0 + beta), static_cast<double>(n));
}

AtomicMeasure sample_dirichlet_ferguson(const Manifold& m, const Truncation& trunc, Rng& rng) {
  const std::size_t n = trunc.resolve(m.beta);
  if (n < 1) throw std::invalid_argument("sample_dirichlet_ferguson: n_atoms must be >= 1");
  const auto sticks = sample_sticks(m.beta, n, rng);
  WeightVector w = reorder(stick_break(sticks));
  const std::size_t d = m.coord_dim();

  // Locations are independent of the weights, so they can be drawn after sorting.
  std::vector<double> coords(n * d);
  for (std::size_t i = 0; i < n; ++i)
    sample_uniform_into(m, rng, std::span<double>(coords.data() + i * d, d));

  switch (trunc.tail_policy) {
    case TailPolicy::renormalize: {
      const double keep = 1.0 - w.tail;
      for (double& s : w.s) s /= keep;
      w.tail = 0.0;
      break;
    }
    case TailPolicy::lump: {
      if (w.tail > 0.0) {
        Point x = sample_uniform(m, rng);
        auto pos = std::upper_bound(w.s.begin(), w.s.end(), w.tail, std::greater<>());
        const auto idx = static_cast<std::size_t>(pos - w.s.begin());
        w.s.insert(pos, w.tail);
        coords.insert(coords.begin() + static_cast<std::ptrdiff_t>(idx * d), x.begin(), x.end());
        w.tail = 0.0;
      }
      break;
    }
    case TailPolicy::keep:
      break;
  }

  AtomicMeasure eta(m, std::move(w), std::move(coords));
  if (eta.has_duplicate_locations())
    throw std::runtime_error("sample_dirichlet_ferguson: two atoms drawn at the same location");
  return eta;
}

AtomicMeasure relocate(const AtomicMeasure& eta, std::span<const double> x, double r) {
  WeightVector w = eta.weights();
  for (double& s : w.s) s *= 1.0 - r;
  w.tail *= 1.0 - r;
  w.s.push_back(r);
  w.ordered = false;
  std::vector<double> coords = eta.coords();
  coords.insert(coords.end(), x.begin(), x.end());
  return AtomicMeasure(eta.manifold(), std::move(w), std::move(coords));
}

namespace {

double poly_eval(const std::vector<double>& c, double s) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * s + *it;
  return v;
}

}  // namespace

double StarProbe::rho(double s) const { return poly_eval(rho_poly, s); }

double StarProbe::star(const AtomicMeasure& eta) const {
  double v = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    const double s = eta.weight(i);
    v += s * f(eta.location(i)) * rho(s);
  }
  return v;
}

double MeckeProbe::eval(const AtomicMeasure& eta, std::span<const double> x, double r) const {
  double v = f(x) * poly_eval(rho_poly, r);
  if (g) v *= g->star(eta);
  return v;
}

Report verify_mecke(const Manifold& m, const Truncation& trunc,
                    const std::vector<MeckeProbe>& basket, std::size_t n, double n_sigma,
                    const MonteCarlo& mc) {
  if (basket.empty()) throw std::invalid_argument("verify_mecke: empty probe basket");
  const std::size_t k = basket.size();
  // Per probe: LHS sample, RHS sample, paired difference.
  auto mom = mc_accumulate(mc, "verify-mecke", n, 3 * k, [&](Rng& rng, std::span<double> out) {
    const AtomicMeasure eta = sample_dirichlet_ferguson(m, trunc, rng);
    const Point x = sample_uniform(m, rng);
    const double r = sample_sticks(m.beta, 1, rng)[0];
    const AtomicMeasure moved = relocate(eta, x, r);
    for (std::size_t p = 0; p < k; ++p) {
      double lhs = 0.0;
      for (std::size_t i = 0; i < eta.size(); ++i)
        lhs += eta.weight(i) * basket[p].eval(eta, eta.location(i), eta.weight(i));
      const double rhs = basket[p].eval(moved, x, r);
      out[3 * p] = lhs;
      out[3 * p + 1] = rhs;
      out[3 * p + 2] = lhs - rhs;
    }
  });

  Report rep;
  rep.task = "verify-mecke";
  for (std::size_t p = 0; p < k; ++p) {
    const auto& name = basket[p].name.empty() ? "probe" + std::to_string(p) : basket[p].name;
    auto c = zero_check("mecke[" + name + "].lhs-rhs", mom[3 * p + 2], n_sigma);
    c.note = "lhs=" + std::to_string(mom[3 * p].mean()) + " rhs=" + std::to_string(mom[3 * p + 1].mean());
    rep.checks.push_back(c);
    if (basket[p].expected) {
      rep.checks.push_back(sigma_check("mecke[" + name + "].lhs-closed-form", mom[3 * p].mean(),
                                       mom[3 * p].stderr_mean(), *basket[p].expected, n_sigma));
      rep.checks.push_back(sigma_check("mecke[" + name + "].rhs-closed-form", mom[3 * p + 1].mean(),
                                       mom[3 * p + 1].stderr_mean(), *basket[p].expected, n_sigma));
    }
  }
  return rep;
}

Report verify_sethuraman(const Manifold& m, const Truncation& trunc,
                         const std::vector<StarProbe>& probes, const SethuramanOptions& opt,
                         const MonteCarlo& mc) {
  if (probes.empty()) throw std::invalid_argument("verify_sethuraman: empty probe basket");
  const std::size_t k = probes.size();
  const std::size_t chunk = std::max<std::size_t>(1, mc.chunk_size);
  const std::size_t n_chunks = (opt.n + chunk - 1) / chunk;
  const double r_beta = m.beta + opt.beta_shift;

  struct ChunkOut {
    std::vector<std::vector<double>> direct, moved;
  };
  auto chunks = mc_map<ChunkOut>(mc, "verify-sethuraman", n_chunks, [&](Rng& rng, std::size_t c) {
    ChunkOut out;
    out.direct.resize(k);
    out.moved.resize(k);
    const std::size_t end = std::min(opt.n, (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) {
      const AtomicMeasure eta = sample_dirichlet_ferguson(m, trunc, rng);
      const AtomicMeasure other = sample_dirichlet_ferguson(m, trunc, rng);
      const Point x = sample_uniform(m, rng);
      const double r = sample_sticks(r_beta, 1, rng)[0];
      const AtomicMeasure moved = relocate(other, x, r);
      for (std::size_t p = 0; p < k; ++p) {
        out.direct[p].push_back(probes[p].star(eta));
        out.moved[p].push_back(probes[p].star(moved));
      }
    }
    return out;
  });

  Report rep;
  rep.task = "verify-sethuraman";
  double max_z = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    std::vector<double> a, b;
    Moments a1, a2, b1, b2;
    for (const auto& ch : chunks) {
      for (double v : ch.direct[p]) {
        a.push_back(v);
        a1.add(v);
        a2.add(v * v);
      }
      for (double v : ch.moved[p]) {
        b.push_back(v);
        b1.add(v);
        b2.add(v * v);
      }
    }
    const std::string tag = "sethuraman[" + std::to_string(p) + "]";
    const double se1 = std::hypot(a1.stderr_mean(), b1.stderr_mean());
    const double se2 = std::hypot(a2.stderr_mean(), b2.stderr_mean());
    auto c1 = sigma_check(tag + ".mean-gap", a1.mean() - b1.mean(), se1, 0.0, opt.n_sigma);
    auto c2 = sigma_check(tag + ".second-moment-gap", a2.mean() - b2.mean(), se2, 0.0, opt.n_sigma);
    if (se1 > 0) max_z = std::max(max_z, std::abs(c1.estimate) / se1);
    if (se2 > 0) max_z = std::max(max_z, std::abs(c2.estimate) / se2);
    rep.checks.push_back(c1);
    rep.checks.push_back(c2);
    const double ks = ks_two_sample(a, b);
    auto cks = upper_check(tag + ".ks", ks, ks_critical(a.size(), b.size(), opt.ks_alpha));
    cks.note = "two-sample KS vs critical value at alpha=" + std::to_string(opt.ks_alpha);
    rep.checks.push_back(cks);
  }
  rep.extra["max_z"] = max_z;
  rep.extra["r_beta"] = r_beta;
  return rep;
}

}  // namespace dflab

namespace dflab {

Report verify_stick_breaking(const StickBreakOptions& opt, const MonteCarlo& mc) {
  Report rep;
  rep.task = "stick-breaking";
  for (double beta : opt.betas)
    for (std::size_t len : opt.lengths) {
      // Per chunk: max |sum + tail - 1|, tail moments, and moments of (1 - r_k) per position.
      struct ChunkOut {
        double worst = 0.0;
        Moments tail;
        std::vector<Moments> factor;
      };
      const std::string task = "stick-breaking/" + std::to_string(beta) + "/" + std::to_string(len);
      const std::size_t chunk = std::max<std::size_t>(1, mc.chunk_size);
      const std::size_t n_chunks = (opt.n + chunk - 1) / chunk;
      auto parts = mc_map<ChunkOut>(mc, task, n_chunks, [&](Rng& rng, std::size_t c) {
        ChunkOut out;
        out.factor.resize(len);
        const std::size_t end = std::min(opt.n, (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < end; ++i) {
          const WeightVector w = stick_break(sample_sticks(beta, len, rng));
          double sum = w.tail;
          for (double v : w.s) sum += v;
          out.worst = std::max(out.worst, std::abs(sum - 1.0));
          out.tail.add(w.tail);
          // Suffix sums rem_k = tail + sum_{i>k} s_i keep full relative precision.
          std::vector<double> rem(len + 1);
          rem[len] = w.tail;
          for (std::size_t k = len; k-- > 0;) rem[k] = rem[k + 1] + w.s[k];
          for (std::size_t k = 0; k < len; ++k) out.factor[k].add(rem[k] > 0.0 ? rem[k + 1] / rem[k] : 1.0);
        }
        return out;
      });
      double worst = 0.0;
      Moments tail;
      std::vector<Moments> factor(len);
      for (const auto& p : parts) {
        worst = std::max(worst, p.worst);
        tail.merge(p.tail);
        for (std::size_t k = 0; k < len; ++k) factor[k].merge(p.factor[k]);
      }
      std::ostringstream tag;
      tag << "stick[beta=" << beta << ",n=" << len << "]";
      rep.checks.push_back(abs_check(tag.str() + ".max|sum+tail-1|", worst, 0.0, opt.sum_tol));

      double log_est = 0.0, rel_var = 0.0;
      for (std::size_t k = 0; k < len; ++k) {
        const auto& f = factor[k];
        log_est += std::log(f.mean());
        const double rel = f.stderr_mean() / f.mean();
        rel_var += rel * rel;
      }
      const double est = std::exp(log_est);
      const double target = expected_tail(beta, len);
      auto c = sigma_check(tag.str() + ".E[tail]", est, est * std::sqrt(rel_var), target, opt.n_sigma);
      std::ostringstream note;
      note << "product-of-factor-means estimator; plain tail average " << tail.mean();
      c.note = note.str();
      rep.checks.push_back(c);
    }
  return rep;
}

Report verify_pd_moments(const Manifold& m, const Truncation& trunc, const std::vector<double>& betas,
                         std::size_t n, double n_sigma, const MonteCarlo& mc) {
  Report rep;
  rep.task = "pd-moments";
  std::vector<Moments> first_mom;
  for (double beta : betas) {
    Manifold mb = m;
    mb.beta = beta;
    auto mom = mc_accumulate(mc, "pd-moments/" + std::to_string(beta), n, 2, [&](Rng& rng, std::span<double> out) {
      const AtomicMeasure eta = sample_dirichlet_ferguson(mb, trunc, rng);
      double s2 = 0.0;
      for (double v : eta.weights().s) s2 += v * v;
      out[0] = s2;
      out[1] = eta.max_weight();
    });
    std::ostringstream tag;
    tag << "pd[beta=" << beta << "]";
    rep.checks.push_back(sigma_check(tag.str() + ".E[sum s^2]", mom[0].mean(), mom[0].stderr_mean(),
                                     1.0 / (1.0 + beta), n_sigma));
    first_mom.push_back(mom[1]);
    rep.extra["E_s1"][tag.str()] = {{"beta", beta}, {"mean", mom[1].mean()}, {"stderr", mom[1].stderr_mean()}};
  }
  // E[s_1] must decrease in beta; judged on sorted betas.
  std::vector<std::size_t> idx(betas.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return betas[a] < betas[b]; });
  for (std::size_t i = 1; i < idx.size(); ++i) {
    const auto& lo = first_mom[idx[i - 1]];
    const auto& hi = first_mom[idx[i]];
    std::ostringstream tag;
    tag << "pd.E[s1](beta=" << betas[idx[i - 1]] << ")>E[s1](beta=" << betas[idx[i]] << ")";
    const double gap = lo.mean() - hi.mean();
    Check c;
    c.name = tag.str();
    c.estimate = gap;
    c.stderr_ = std::hypot(lo.stderr_mean(), hi.stderr_mean());
    c.target = 0.0;
    c.tolerance = n_sigma * c.stderr_;
    c.status = gap > c.tolerance ? Status::pass : Status::fail;
    c.note = "ordering: gap must exceed n_sigma standard errors";
    rep.checks.push_back(c);
  }
  return rep;
}

}  // namespace dflab

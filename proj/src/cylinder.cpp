#include "dflab/cylinder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace dflab {

namespace {

double poly1(const std::vector<double>& c, double s) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * s + *it;
  return v;
}

void require_torus(const AtomicMeasure& eta) {
  if (!eta.manifold().is_torus())
    throw std::invalid_argument("cylinder calculus requires a flat torus");
}

}  // namespace

// ---------------------------------------------------------------------------

double WeightProfile::operator()(double s) const {
  const double p = poly1(poly, s);
  if (!eps) return p;
  if (s <= *eps) return 0.0;
  const double t = (s - *eps) / delta;
  if (t >= 1.0) return p;
  return p * t * t * (3.0 - 2.0 * t);
}

bool WeightProfile::identically_one() const {
  if (eps) return false;
  if (poly.empty() || poly[0] != 1.0) return false;
  return std::all_of(poly.begin() + 1, poly.end(), [](double c) { return c == 0.0; });
}

double WeightProfile::at_zero_plus() const {
  if (eps) return 0.0;
  return poly.empty() ? 0.0 : poly[0];
}

FunctionClass TestFunction::function_class() const {
  if (f.is_constant()) return FunctionClass::hTF_minus;
  if (rho.identically_one()) return FunctionClass::TF;
  return FunctionClass::hTF_eps;
}

double star(const TestFunction& fhat, const AtomicMeasure& eta) {
  const double cut = fhat.rho.eps ? *fhat.rho.eps : -1.0;
  double v = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    const double s = eta.weight(i);
    if (s <= cut) {
      if (eta.weights().ordered) break;
      continue;
    }
    v += s * fhat.f(eta.location(i)) * fhat.rho(s);
  }
  return v;
}

// ---------------------------------------------------------------------------

Polynomial::Polynomial(std::size_t n_vars, std::vector<Term> terms) : n_vars_(n_vars) {
  std::map<std::vector<int>, double> acc;
  for (auto& t : terms) {
    if (t.exps.size() != n_vars_)
      throw std::invalid_argument("Polynomial: exponent tuple has wrong length");
    for (int e : t.exps)
      if (e < 0) throw std::invalid_argument("Polynomial: negative exponent");
    acc[t.exps] += t.coef;
  }
  for (auto& [e, c] : acc)
    if (c != 0.0) terms_.push_back({c, e});
}

Polynomial Polynomial::identity(std::size_t n_vars, std::size_t var) {
  std::vector<int> e(n_vars, 0);
  e.at(var) = 1;
  return Polynomial(n_vars, {{1.0, e}});
}

Polynomial Polynomial::constant(std::size_t n_vars, double c) {
  return Polynomial(n_vars, {{c, std::vector<int>(n_vars, 0)}});
}

double Polynomial::operator()(std::span<const double> y) const {
  double v = 0.0;
  for (const auto& t : terms_) {
    double m = t.coef;
    for (std::size_t i = 0; i < n_vars_; ++i)
      for (int p = 0; p < t.exps[i]; ++p) m *= y[i];
    v += m;
  }
  return v;
}

Polynomial Polynomial::partial(std::size_t var) const {
  std::vector<Term> out;
  for (const auto& t : terms_) {
    if (t.exps[var] == 0) continue;
    Term d = t;
    d.coef *= t.exps[var];
    d.exps[var] -= 1;
    out.push_back(std::move(d));
  }
  return Polynomial(n_vars_, std::move(out));
}

bool Polynomial::is_constant() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) {
    return std::all_of(t.exps.begin(), t.exps.end(), [](int e) { return e == 0; });
  });
}

Polynomial Polynomial::tensor(const Polynomial& other) const {
  std::vector<Term> out;
  for (const auto& a : terms_)
    for (const auto& b : other.terms_) {
      Term t{a.coef * b.coef, a.exps};
      t.exps.insert(t.exps.end(), b.exps.begin(), b.exps.end());
      out.push_back(std::move(t));
    }
  return Polynomial(n_vars_ + other.n_vars_, std::move(out));
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  if (other.n_vars_ != n_vars_) throw std::invalid_argument("Polynomial: variable count mismatch");
  auto terms = terms_;
  terms.insert(terms.end(), other.terms_.begin(), other.terms_.end());
  return Polynomial(n_vars_, std::move(terms));
}

// ---------------------------------------------------------------------------

CylinderFunction::CylinderFunction(Polynomial F, std::vector<TestFunction> fhats)
    : F_(std::move(F)), fhats_(std::move(fhats)) {
  if (fhats_.empty()) throw std::invalid_argument("CylinderFunction: needs at least one test function");
  if (F_.n_vars() != fhats_.size())
    throw std::invalid_argument("CylinderFunction: F arity does not match number of test functions");
  const int d = fhats_.front().f.dim();
  for (const auto& fh : fhats_)
    if (fh.f.dim() != d) throw std::invalid_argument("CylinderFunction: mixed dimensions");
  const std::size_t k = fhats_.size();
  for (std::size_t i = 0; i < k; ++i) dF_.push_back(F_.partial(i));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) d2F_.push_back(dF_[i].partial(j));
}

CylinderFunction CylinderFunction::star_of(const TestFunction& fhat) {
  return CylinderFunction(Polynomial::identity(1, 0), {fhat});
}

CylinderFunction CylinderFunction::constant(double c, const TestFunction& fhat) {
  return CylinderFunction(Polynomial::constant(1, c), {fhat});
}

std::vector<double> CylinderFunction::star_values(const AtomicMeasure& eta) const {
  std::vector<double> y(k());
  for (std::size_t i = 0; i < k(); ++i) y[i] = star(fhats_[i], eta);
  return y;
}

double CylinderFunction::operator()(const AtomicMeasure& eta) const {
  if (is_constant()) return F_(std::vector<double>(k(), 0.0));
  return F_(star_values(eta));
}

double CylinderFunction::threshold() const {
  double t = std::numeric_limits<double>::infinity();
  for (const auto& fh : fhats_) t = std::min(t, fh.rho.threshold());
  return t;
}

CylinderFunction CylinderFunction::operator*(const CylinderFunction& other) const {
  auto fh = fhats_;
  fh.insert(fh.end(), other.fhats_.begin(), other.fhats_.end());
  return CylinderFunction(F_.tensor(other.F_), std::move(fh));
}

CylinderFunction CylinderFunction::operator+(const CylinderFunction& other) const {
  auto fh = fhats_;
  fh.insert(fh.end(), other.fhats_.begin(), other.fhats_.end());
  const auto one_a = Polynomial::constant(k(), 1.0);
  const auto one_b = Polynomial::constant(other.k(), 1.0);
  return CylinderFunction(F_.tensor(one_b) + one_a.tensor(other.F_), std::move(fh));
}

// ---------------------------------------------------------------------------

namespace {

/// Euclidean-coordinate gradient of u at every atom (before the metric factor).
std::vector<double> coord_grad(const CylinderFunction& u, const AtomicMeasure& eta,
                               std::span<const double> y) {
  const std::size_t n = eta.size(), d = eta.stride();
  std::vector<double> out(n * d, 0.0);
  std::vector<double> g(d);
  for (std::size_t j = 0; j < u.k(); ++j) {
    const double dfj = u.dF(j)(y);
    if (dfj == 0.0) continue;
    const auto& fh = u.fhats()[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double r = fh.rho(eta.weight(i));
      if (r == 0.0) continue;
      fh.f.gradient(eta.location(i), g);
      for (std::size_t c = 0; c < d; ++c) out[i * d + c] += dfj * r * g[c];
    }
  }
  return out;
}

}  // namespace

std::vector<double> grad(const CylinderFunction& u, const AtomicMeasure& eta) {
  require_torus(eta);
  auto out = coord_grad(u, eta, u.star_values(eta));
  const double a = eta.manifold().metric_scale;
  if (a != 1.0)
    for (double& v : out) v /= a;
  return out;
}

double directional_derivative(const CylinderFunction& u, const VectorField& w,
                              const AtomicMeasure& eta) {
  require_torus(eta);
  const auto y = u.star_values(eta);
  const std::size_t d = eta.stride();
  std::vector<double> g(d), wx(d);
  double total = 0.0;
  for (std::size_t j = 0; j < u.k(); ++j) {
    const double dfj = u.dF(j)(y);
    if (dfj == 0.0) continue;
    const auto& fh = u.fhats()[j];
    double integral = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) {
      const double s = eta.weight(i);
      const double r = fh.rho(s);
      if (r == 0.0) continue;
      fh.f.gradient(eta.location(i), g);
      w(eta.location(i), wx);
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += g[c] * wx[c];
      integral += s * r * dot;
    }
    total += dfj * integral;
  }
  return total;
}

double carre_du_champ(const CylinderFunction& u, const CylinderFunction& v,
                      const AtomicMeasure& eta) {
  require_torus(eta);
  const auto gu = coord_grad(u, eta, u.star_values(eta));
  const auto gv = &u == &v ? gu : coord_grad(v, eta, v.star_values(eta));
  const std::size_t d = eta.stride();
  double sum = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    double dot = 0.0;
    for (std::size_t c = 0; c < d; ++c) dot += gu[i * d + c] * gv[i * d + c];
    sum += eta.weight(i) * dot;
  }
  return 0.5 * sum / eta.manifold().metric_scale;
}

GeneratorValue generator_parts(const CylinderFunction& u, const AtomicMeasure& eta) {
  require_torus(eta);
  for (const auto& fh : u.fhats())
    if (!fh.rho.eps && fh.rho.at_zero_plus() != 0.0 && !fh.f.is_constant())
      throw std::invalid_argument(
          "generator: drift part diverges for test functions with rho(0+) != 0 and no cutoff");

  GeneratorValue out;
  if (u.is_constant()) return out;
  const auto y = u.star_values(eta);
  const std::size_t k = u.k(), d = eta.stride(), n = eta.size();
  const double a = eta.manifold().metric_scale;

  // Cache rho_j(s_i) and grad f_j(x_i) for the atoms each test function sees.
  std::vector<double> rho(k * n), grads(k * n * d, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const auto& fh = u.fhats()[j];
    for (std::size_t i = 0; i < n; ++i) {
      rho[j * n + i] = fh.rho(eta.weight(i));
      if (rho[j * n + i] != 0.0)
        fh.f.gradient(eta.location(i), std::span<double>(grads.data() + (j * n + i) * d, d));
    }
  }

  double diffusion = 0.0;
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t p = 0; p < k; ++p) {
      const double h = u.d2F(j, p)(y);
      if (h == 0.0) continue;
      double integral = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double rr = rho[j * n + i] * rho[p * n + i];
        if (rr == 0.0) continue;
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c)
          dot += grads[(j * n + i) * d + c] * grads[(p * n + i) * d + c];
        integral += eta.weight(i) * rr * dot;
      }
      diffusion += h * integral;
    }
  out.diffusion = 0.5 * diffusion / a;

  double drift = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double dfj = u.dF(j)(y);
    if (dfj == 0.0) continue;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (eta.weight(i) <= 0.0 || rho[j * n + i] == 0.0) continue;
      sum += rho[j * n + i] * u.fhats()[j].f.laplacian(eta.location(i));
    }
    drift += dfj * sum;
  }
  out.drift = 0.5 * drift / a;
  return out;
}

double generator(const CylinderFunction& u, const AtomicMeasure& eta) {
  return generator_parts(u, eta).total();
}

double drift_B(const VectorField& w, double eps, const AtomicMeasure& eta) {
  require_torus(eta);
  double s = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (eta.weight(i) <= eps) {
      if (eta.weights().ordered) break;
      continue;
    }
    s += w.divergence(eta.location(i));
  }
  return s;
}

double rn_derivative(const FlowMap& psi, double eps, const AtomicMeasure& eta) {
  require_torus(eta);
  if (psi.volume_preserving()) return 1.0;
  double log_r = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (eta.weight(i) <= eps) {
      if (eta.weights().ordered) break;
      continue;
    }
    log_r += psi.log_pushforward_density(eta.manifold(), eta.location(i));
  }
  return std::exp(log_r);
}

AtomicMeasure push_forward(const FlowMap& psi, const AtomicMeasure& eta, double min_weight) {
  require_torus(eta);
  AtomicMeasure out = eta;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.weight(i) <= min_weight) continue;
    const Point y = psi.apply(eta.manifold(), eta.location(i));
    std::copy(y.begin(), y.end(), out.location(i).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------

Report verify_ibp(const Manifold& m, const Truncation& trunc,
                  const std::vector<CylinderFunction>& us, const std::vector<CylinderFunction>& vs,
                  const std::vector<VectorField>& ws, const IbpOptions& opt, const MonteCarlo& mc) {
  if (us.empty() || vs.empty() || ws.empty())
    throw std::invalid_argument("verify_ibp: empty basket");
  for (const auto* basket : {&us, &vs})
    for (const auto& f : *basket)
      if (!(f.threshold() > 0.0))
        throw std::invalid_argument("verify_ibp: cylinder functions need a positive vanishing threshold");

  const std::size_t nu = us.size(), nv = vs.size(), nw = ws.size();
  // Layout: residual per (u, v, w), then per (u, w): D_w u + u B, then per (u, w): B_{eps_u}.
  const std::size_t n_main = nu * nv * nw;
  const std::size_t n_stats = n_main + 2 * nu * nw;
  auto mom = mc_accumulate(mc, "verify-ibp", opt.n, n_stats, [&](Rng& rng, std::span<double> out) {
    const AtomicMeasure eta = sample_dirichlet_ferguson(m, trunc, rng);
    std::vector<double> u_val(nu), v_val(nv), du(nu * nw), dv(nv * nw);
    for (std::size_t i = 0; i < nu; ++i) {
      u_val[i] = us[i](eta);
      for (std::size_t c = 0; c < nw; ++c) du[i * nw + c] = directional_derivative(us[i], ws[c], eta);
    }
    for (std::size_t j = 0; j < nv; ++j) {
      v_val[j] = vs[j](eta);
      for (std::size_t c = 0; c < nw; ++c) dv[j * nw + c] = directional_derivative(vs[j], ws[c], eta);
    }
    std::size_t idx = 0;
    for (std::size_t i = 0; i < nu; ++i)
      for (std::size_t j = 0; j < nv; ++j) {
        const double eps = std::min(us[i].threshold(), vs[j].threshold());
        for (std::size_t c = 0; c < nw; ++c) {
          const double b = drift_B(ws[c], eps, eta);
          out[idx++] = du[i * nw + c] * v_val[j] + u_val[i] * dv[j * nw + c] + u_val[i] * v_val[j] * b;
        }
      }
    for (std::size_t i = 0; i < nu; ++i)
      for (std::size_t c = 0; c < nw; ++c) {
        const double b = drift_B(ws[c], us[i].threshold(), eta);
        out[n_main + i * nw + c] = du[i * nw + c] + u_val[i] * b;
        out[n_main + nu * nw + i * nw + c] = b;
      }
  });

  Report rep;
  rep.task = "verify-ibp";
  std::size_t idx = 0;
  for (std::size_t i = 0; i < nu; ++i)
    for (std::size_t j = 0; j < nv; ++j)
      for (std::size_t c = 0; c < nw; ++c)
        rep.checks.push_back(zero_check("ibp[u" + std::to_string(i) + ",v" + std::to_string(j) + ",w" +
                                            std::to_string(c) + "].residual",
                                        mom[idx++], opt.n_sigma));
  for (std::size_t i = 0; i < nu; ++i)
    for (std::size_t c = 0; c < nw; ++c) {
      rep.checks.push_back(zero_check("ibp[u" + std::to_string(i) + ",v=1,w" + std::to_string(c) +
                                          "].residual",
                                      mom[n_main + i * nw + c], opt.n_sigma));
      rep.checks.push_back(zero_check("drift[u" + std::to_string(i) + ",w" + std::to_string(c) + "].mean",
                                      mom[n_main + nu * nw + i * nw + c], opt.n_sigma));
    }
  return rep;
}

Report verify_pqi(const Manifold& m, const Truncation& trunc, const FlowMap& psi,
                  const std::vector<CylinderFunction>& us, const PqiOptions& opt,
                  const MonteCarlo& mc) {
  if (us.empty()) throw std::invalid_argument("verify_pqi: empty basket");
  if (opt.level < 1) throw std::invalid_argument("verify_pqi: level must be >= 1");
  const double eps = 1.0 / static_cast<double>(opt.level);
  for (const auto& u : us)
    if (!u.is_constant() && u.threshold() < eps)
      throw std::invalid_argument("verify_pqi: u must vanish on atoms of weight <= 1/n");

  const std::size_t k = us.size();
  // Stats: per u: lhs, rhs, lhs - rhs; then R and |R - 1|.
  auto mom = mc_accumulate(mc, "verify-pqi", opt.n, 3 * k + 2, [&](Rng& rng, std::span<double> out) {
    const AtomicMeasure eta = sample_dirichlet_ferguson(m, trunc, rng);
    const double r = rn_derivative(psi, eps, eta);
    // u ignores atoms of weight <= eps, so only the heavy atoms need to be moved.
    const AtomicMeasure moved = push_forward(psi, eta, eps);
    for (std::size_t p = 0; p < k; ++p) {
      const double lhs = us[p](moved);
      const double rhs = r * us[p](eta);
      out[3 * p] = lhs;
      out[3 * p + 1] = rhs;
      out[3 * p + 2] = lhs - rhs;
    }
    out[3 * k] = r;
    out[3 * k + 1] = std::abs(r - 1.0);
  });

  Report rep;
  rep.task = "verify-pqi";
  for (std::size_t p = 0; p < k; ++p) {
    auto c = zero_check("pqi[u" + std::to_string(p) + "].lhs-rhs", mom[3 * p + 2], opt.n_sigma);
    c.note = "lhs=" + std::to_string(mom[3 * p].mean()) + " rhs=" + std::to_string(mom[3 * p + 1].mean());
    rep.checks.push_back(c);
  }
  rep.checks.push_back(sigma_check("pqi.mean-R", mom[3 * k].mean(), mom[3 * k].stderr_mean(), 1.0,
                                   opt.n_sigma));
  if (psi.volume_preserving()) {
    // Max |R - 1| is zero iff the mean of |R - 1| is.
    auto c = abs_check("pqi.R-identically-one", mom[3 * k + 1].mean(), 0.0, 0.0);
    c.note = "measure-preserving flow: R must equal 1 exactly";
    rep.checks.push_back(c);
  }
  rep.extra["volume_preserving"] = psi.volume_preserving();
  rep.extra["level"] = opt.level;
  return rep;
}

Report verify_B_martingale(const Manifold& m, const Truncation& trunc, const VectorField& w,
                           const std::vector<CylinderFunction>& us, const BMartingaleOptions& opt,
                           const MonteCarlo& mc) {
  if (!(opt.eps_small > 0.0 && opt.eps_small < opt.eps_large))
    throw std::invalid_argument("verify_B_martingale: need 0 < eps_small < eps_large");
  for (const auto& u : us)
    if (!u.is_constant() && u.threshold() < opt.eps_large)
      throw std::invalid_argument("verify_B_martingale: u must be measurable at level eps_large");
  const std::size_t k = us.size();
  auto mom = mc_accumulate(mc, "verify-bmart", opt.n, 2 + 2 * k, [&](Rng& rng, std::span<double> out) {
    const AtomicMeasure eta = sample_dirichlet_ferguson(m, trunc, rng);
    const double bs = drift_B(w, opt.eps_small, eta);
    const double bl = drift_B(w, opt.eps_large, eta);
    out[0] = bs;
    out[1] = bl;
    for (std::size_t p = 0; p < k; ++p) {
      const double u = us[p](eta);
      out[2 + 2 * p] = (bs - bl) * u;
      out[3 + 2 * p] = bl * u;
    }
  });
  Report rep;
  rep.task = "verify-bmart";
  rep.checks.push_back(zero_check("B[eps_small].mean", mom[0], opt.n_sigma));
  rep.checks.push_back(zero_check("B[eps_large].mean", mom[1], opt.n_sigma));
  for (std::size_t p = 0; p < k; ++p) {
    auto c = zero_check("tower[u" + std::to_string(p) + "]", mom[2 + 2 * p], opt.n_sigma);
    c.note = "E[B_large u]=" + std::to_string(mom[3 + 2 * p].mean());
    rep.checks.push_back(c);
  }
  return rep;
}

Report verify_energy_identities(const Manifold& m, const Truncation& trunc,
                                const std::vector<CylinderFunction>& us, std::size_t n,
                                double n_sigma, const MonteCarlo& mc) {
  if (us.empty()) throw std::invalid_argument("verify_energy_identities: empty basket");
  const std::size_t k = us.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) pairs.emplace_back(i, j);
  auto mom = mc_accumulate(mc, "energy-identities", n, 2 * pairs.size(), [&](Rng& rng, std::span<double> out) {
    const AtomicMeasure eta = sample_dirichlet_ferguson(m, trunc, rng);
    std::vector<double> val(k), lu(k);
    for (std::size_t i = 0; i < k; ++i) {
      val[i] = us[i](eta);
      lu[i] = generator(us[i], eta);
    }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto [i, j] = pairs[p];
      out[2 * p] = carre_du_champ(us[i], us[j], eta) + val[i] * lu[j];
      out[2 * p + 1] = val[i] * lu[j] - val[j] * lu[i];
    }
  });
  Report rep;
  rep.task = "energy-identities";
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto tag = "[u" + std::to_string(pairs[p].first) + ",u" + std::to_string(pairs[p].second) + "]";
    rep.checks.push_back(zero_check("energy" + tag + ".gamma+uLv", mom[2 * p], n_sigma));
    if (pairs[p].first != pairs[p].second)
      rep.checks.push_back(zero_check("symmetry" + tag + ".uLv-vLu", mom[2 * p + 1], n_sigma));
  }
  return rep;
}

// ---------------------------------------------------------------------------

TrigFunction trig_from_json(const nlohmann::json& j, int dim, double side) {
  if (!j.is_array()) throw std::invalid_argument("trig function must be an array of [coef, [k...], \"cos\"|\"sin\"]");
  std::vector<TrigTerm> terms;
  for (const auto& t : j) {
    if (!t.is_array() || t.size() != 3 || !t[0].is_number() || !t[1].is_array() || !t[2].is_string())
      throw std::invalid_argument("trig term must be [coef, [k...], \"cos\"|\"sin\"]");
    const auto ph = t[2].get<std::string>();
    if (ph != "cos" && ph != "sin") throw std::invalid_argument("trig phase must be \"cos\" or \"sin\"");
    auto k = t[1].get<std::vector<int>>();
    if (static_cast<int>(k.size()) != dim) throw std::invalid_argument("wave-vector length must equal dim");
    terms.push_back({t[0].get<double>(), std::move(k), ph == "cos" ? Phase::cos : Phase::sin});
  }
  return TrigFunction(dim, side, std::move(terms));
}

nlohmann::json to_json(const TrigFunction& f) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& t : f.terms()) j.push_back({t.coef, t.k, t.phase == Phase::cos ? "cos" : "sin"});
  return j;
}

WeightProfile profile_from_json(const nlohmann::json& j) {
  WeightProfile p;
  if (!j.is_object()) throw std::invalid_argument("rho must be an object");
  for (const auto& [key, val] : j.items())
    if (key != "poly" && key != "eps" && key != "delta")
      throw std::invalid_argument("unknown key in rho: " + key);
  if (j.contains("poly")) {
    p.poly = j.at("poly").get<std::vector<double>>();
    if (p.poly.empty()) throw std::invalid_argument("rho.poly must not be empty");
  }
  if (j.contains("eps") && !j.at("eps").is_null()) {
    p.eps = j.at("eps").get<double>();
    if (!(*p.eps >= 0.0 && *p.eps < 1.0)) throw std::invalid_argument("rho.eps must lie in [0, 1)");
  }
  if (j.contains("delta")) p.delta = j.at("delta").get<double>();
  if (!(p.delta > 0.0)) throw std::invalid_argument("rho.delta must be positive");
  return p;
}

TestFunction test_function_from_json(const nlohmann::json& j, int dim, double side) {
  if (!j.is_object() || !j.contains("f")) throw std::invalid_argument("test function needs \"f\"");
  for (const auto& [key, val] : j.items())
    if (key != "f" && key != "rho") throw std::invalid_argument("unknown key in test function: " + key);
  TestFunction t{trig_from_json(j.at("f"), dim, side), {}};
  if (j.contains("rho")) t.rho = profile_from_json(j.at("rho"));
  return t;
}

CylinderFunction cylinder_from_json(const nlohmann::json& j, int dim, double side) {
  if (!j.is_object() || !j.contains("F") || !j.contains("fhats"))
    throw std::invalid_argument("cylinder function needs \"F\" and \"fhats\"");
  for (const auto& [key, val] : j.items())
    if (key != "F" && key != "fhats") throw std::invalid_argument("unknown key in cylinder function: " + key);
  std::vector<TestFunction> fh;
  for (const auto& t : j.at("fhats")) fh.push_back(test_function_from_json(t, dim, side));
  if (fh.empty()) throw std::invalid_argument("cylinder function needs at least one test function");
  std::vector<Polynomial::Term> terms;
  for (const auto& t : j.at("F")) {
    if (!t.is_array() || t.size() != 2) throw std::invalid_argument("F term must be [coef, [exponents]]");
    terms.push_back({t[0].get<double>(), t[1].get<std::vector<int>>()});
  }
  Polynomial F(fh.size(), std::move(terms));
  return CylinderFunction(std::move(F), std::move(fh));
}

VectorField vector_field_from_json(const nlohmann::json& j, int dim, double side) {
  if (!j.is_object() || !j.contains("components"))
    throw std::invalid_argument("vector field needs \"components\"");
  for (const auto& [key, val] : j.items())
    if (key != "components") throw std::invalid_argument("unknown key in vector field: " + key);
  std::vector<TrigFunction> comps;
  for (const auto& c : j.at("components")) comps.push_back(trig_from_json(c, dim, side));
  if (static_cast<int>(comps.size()) != dim)
    throw std::invalid_argument("vector field must have one component per dimension");
  return VectorField(std::move(comps));
}

}  // namespace dflab

#include "dflab/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dflab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_torus(const Manifold& m, const char* what) {
  if (!m.is_torus()) throw std::invalid_argument(std::string(what) + " requires a flat torus");
}

double wrap_coord(double v, double side) {
  double r = std::fmod(v, side);
  if (r < 0.0) r += side;
  if (r >= side) r = 0.0;
  return r;
}

/// Shortest signed representative of d modulo side, in [-side/2, side/2].
double wrapped_delta(double d, double side) {
  d = std::fmod(d, side);
  if (d > 0.5 * side) d -= side;
  if (d < -0.5 * side) d += side;
  return d;
}

/// Density w.r.t. the normalized length of a Gaussian of variance t wrapped
/// on a circle of length `len`, at signed offset delta.
double wrapped_gaussian(double delta, double t, double len) {
  const double ratio = t / (len * len);
  if (ratio < 0.25) {
    // Image sum: len * sum_n phi_t(delta + n len).
    const double norm = len / std::sqrt(kTwoPi * t);
    double sum = norm * std::exp(-delta * delta / (2.0 * t));
    for (int n = 1;; ++n) {
      const double a = delta + n * len;
      const double b = delta - n * len;
      const double term = norm * (std::exp(-a * a / (2.0 * t)) + std::exp(-b * b / (2.0 * t)));
      sum += term;
      if (term < 1e-16 * std::max(sum, 1e-300) || term < 1e-300) break;
    }
    return sum;
  }
  // Fourier form: 1 + 2 sum_k exp(-2 pi^2 k^2 t / len^2) cos(2 pi k delta / len).
  double sum = 1.0;
  for (int k = 1;; ++k) {
    const double decay = std::exp(-0.5 * kTwoPi * kTwoPi * k * k * ratio);
    if (decay < 1e-16) break;
    sum += 2.0 * decay * std::cos(kTwoPi * k * delta / len);
  }
  return sum;
}

double legendre_series_kernel(double cos_theta, double t) {
  // sum_l (2l+1) exp(-l(l+1) t / 2) P_l(cos theta)
  double p_prev = 1.0, p = cos_theta;
  double sum = 1.0;
  for (int l = 1; l < 200000; ++l) {
    const double decay = std::exp(-0.5 * l * (l + 1.0) * t);
    const double term = (2.0 * l + 1.0) * decay * p;
    sum += term;
    if ((2.0 * l + 1.0) * decay < 1e-16 * std::max(1.0, std::abs(sum))) break;
    const double p_next = ((2.0 * l + 1.0) * cos_theta * p - l * p_prev) / (l + 1.0);
    p_prev = p;
    p = p_next;
  }
  return sum;
}

std::vector<int> negated(const std::vector<int>& k) {
  std::vector<int> r(k.size());
  std::transform(k.begin(), k.end(), r.begin(), [](int v) { return -v; });
  return r;
}

bool leading_negative(const std::vector<int>& k) {
  for (int v : k)
    if (v != 0) return v < 0;
  return false;
}

bool all_zero(const std::vector<int>& k) {
  return std::all_of(k.begin(), k.end(), [](int v) { return v == 0; });
}

}  // namespace

Manifold Manifold::torus(int dim, double side, double beta) {
  Manifold m;
  m.kind = ManifoldKind::FlatTorus;
  m.dim = dim;
  m.side = side;
  m.beta = beta;
  m.validate();
  return m;
}

Manifold Manifold::sphere(double beta, int substeps) {
  Manifold m;
  m.kind = ManifoldKind::Sphere2;
  m.dim = 2;
  m.beta = beta;
  m.sphere_substeps = substeps;
  m.validate();
  return m;
}

Manifold Manifold::rescaled(double a) const {
  if (!(a > 0.0)) throw std::invalid_argument("metric scale must be positive");
  Manifold m = *this;
  m.metric_scale = metric_scale * a;
  return m;
}

void Manifold::validate() const {
  if (kind == ManifoldKind::FlatTorus && dim < 1)
    throw std::invalid_argument("torus dimension must be >= 1");
  if (kind == ManifoldKind::Sphere2 && dim != 2)
    throw std::invalid_argument("sphere dimension is fixed to 2");
  if (!(side > 0.0)) throw std::invalid_argument("side must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (!(metric_scale > 0.0)) throw std::invalid_argument("metric_scale must be positive");
  if (sphere_substeps < 1) throw std::invalid_argument("sphere_substeps must be >= 1");
}

std::string Manifold::describe() const {
  std::ostringstream os;
  if (is_torus())
    os << "T^" << dim << "(side=" << side << ")";
  else
    os << "S^2";
  os << " beta=" << beta;
  if (metric_scale != 1.0) os << " metric_scale=" << metric_scale;
  return os.str();
}

void wrap_in_place(const Manifold& m, std::span<double> x) {
  if (m.is_torus()) {
    for (double& v : x) v = wrap_coord(v, m.side);
    return;
  }
  const double n = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  for (double& v : x) v /= n;
}

void sample_uniform_into(const Manifold& m, Rng& rng, std::span<double> out) {
  if (m.is_torus()) {
    std::uniform_real_distribution<double> u(0.0, m.side);
    for (double& v : out) v = u(rng);
    return;
  }
  std::normal_distribution<double> g;
  double n = 0.0;
  do {
    for (double& v : out) v = g(rng);
    n = std::sqrt(out[0] * out[0] + out[1] * out[1] + out[2] * out[2]);
  } while (n < 1e-12);
  for (double& v : out) v /= n;
}

Point sample_uniform(const Manifold& m, Rng& rng) {
  Point p(m.coord_dim());
  sample_uniform_into(m, rng, p);
  return p;
}

void brownian_advance(const Manifold& m, std::span<double> x, double tau, Rng& rng) {
  if (!(tau > 0.0)) throw std::invalid_argument("brownian_increment: time must be positive");
  std::normal_distribution<double> g;
  if (m.is_torus()) {
    const double sd = std::sqrt(tau / m.metric_scale);
    for (double& v : x) v = wrap_coord(v + sd * g(rng), m.side);
    return;
  }
  // Geodesic random walk: isotropic tangent Gaussian steps followed along great circles.
  const int n = m.sphere_substeps;
  const double sd = std::sqrt(tau / (m.metric_scale * n));
  for (int s = 0; s < n; ++s) {
    double v[3] = {g(rng), g(rng), g(rng)};
    const double dot = v[0] * x[0] + v[1] * x[1] + v[2] * x[2];
    for (int i = 0; i < 3; ++i) v[i] = sd * (v[i] - dot * x[i]);
    const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (len <= 0.0) continue;
    const double c = std::cos(len), sn = std::sin(len) / len;
    for (int i = 0; i < 3; ++i) x[i] = c * x[i] + sn * v[i];
    wrap_in_place(m, x);
  }
}

Point brownian_increment(const Manifold& m, std::span<const double> x, double tau, Rng& rng) {
  Point p(x.begin(), x.end());
  brownian_advance(m, p, tau, rng);
  return p;
}

double heat_kernel_density(const Manifold& m, std::span<const double> x,
                           std::span<const double> y, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("heat_kernel_density: time must be positive");
  if (m.is_torus()) {
    // Work in geodesic units: the metric a*g stretches each circle by sqrt(a).
    const double stretch = std::sqrt(m.metric_scale);
    const double len = stretch * m.side;
    double h = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      h *= wrapped_gaussian(stretch * wrapped_delta(x[i] - y[i], m.side), t, len);
    return h;
  }
  const double c = std::clamp(x[0] * y[0] + x[1] * y[1] + x[2] * y[2], -1.0, 1.0);
  return legendre_series_kernel(c, t / m.metric_scale);
}

double distance_squared(const Manifold& m, std::span<const double> x, std::span<const double> y) {
  if (m.is_torus()) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = wrapped_delta(x[i] - y[i], m.side);
      s += d * d;
    }
    return m.metric_scale * s;
  }
  const double c = std::clamp(x[0] * y[0] + x[1] * y[1] + x[2] * y[2], -1.0, 1.0);
  const double a = std::acos(c);
  return m.metric_scale * a * a;
}

double distance(const Manifold& m, std::span<const double> x, std::span<const double> y) {
  return std::sqrt(distance_squared(m, x, y));
}

// ---------------------------------------------------------------------------

TrigFunction::TrigFunction(int dim, double side, std::vector<TrigTerm> terms)
    : dim_(dim), side_(side), terms_(std::move(terms)) {
  if (dim_ < 1) throw std::invalid_argument("TrigFunction: dim must be >= 1");
  if (!(side_ > 0.0)) throw std::invalid_argument("TrigFunction: side must be positive");
  for (const auto& t : terms_)
    if (static_cast<int>(t.k.size()) != dim_)
      throw std::invalid_argument("TrigFunction: wave-vector length does not match dim");
}

TrigFunction TrigFunction::constant(int dim, double value, double side) {
  return TrigFunction(dim, side, {TrigTerm{value, std::vector<int>(dim, 0), Phase::cos}});
}

double TrigFunction::operator()(std::span<const double> x) const {
  double s = 0.0;
  const double w = kTwoPi / side_;
  for (const auto& t : terms_) {
    double arg = 0.0;
    for (int i = 0; i < dim_; ++i) arg += t.k[i] * x[i];
    arg *= w;
    s += t.coef * (t.phase == Phase::cos ? std::cos(arg) : std::sin(arg));
  }
  return s;
}

void TrigFunction::gradient(std::span<const double> x, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const double w = kTwoPi / side_;
  for (const auto& t : terms_) {
    double arg = 0.0;
    for (int i = 0; i < dim_; ++i) arg += t.k[i] * x[i];
    arg *= w;
    // d/dx_i cos = -w k_i sin, d/dx_i sin = w k_i cos
    const double d = t.phase == Phase::cos ? -std::sin(arg) : std::cos(arg);
    for (int i = 0; i < dim_; ++i) out[i] += t.coef * w * t.k[i] * d;
  }
}

double TrigFunction::laplacian(std::span<const double> x) const {
  double s = 0.0;
  const double w = kTwoPi / side_;
  for (const auto& t : terms_) {
    double arg = 0.0, k2 = 0.0;
    for (int i = 0; i < dim_; ++i) {
      arg += t.k[i] * x[i];
      k2 += static_cast<double>(t.k[i]) * t.k[i];
    }
    arg *= w;
    s -= w * w * k2 * t.coef * (t.phase == Phase::cos ? std::cos(arg) : std::sin(arg));
  }
  return s;
}

TrigFunction TrigFunction::derivative(int axis) const {
  if (axis < 0 || axis >= dim_) throw std::out_of_range("TrigFunction::derivative: bad axis");
  const double w = kTwoPi / side_;
  std::vector<TrigTerm> out;
  for (const auto& t : terms_) {
    if (t.k[axis] == 0) continue;
    const double f = w * t.k[axis] * t.coef;
    if (t.phase == Phase::cos)
      out.push_back({-f, t.k, Phase::sin});
    else
      out.push_back({f, t.k, Phase::cos});
  }
  return TrigFunction(dim_, side_, std::move(out)).simplified();
}

TrigFunction TrigFunction::simplified() const {
  std::map<std::pair<std::vector<int>, int>, double> acc;
  for (const auto& t : terms_) {
    std::vector<int> k = t.k;
    double c = t.coef;
    if (leading_negative(k)) {
      k = negated(k);
      if (t.phase == Phase::sin) c = -c;
    }
    if (all_zero(k) && t.phase == Phase::sin) continue;
    acc[{k, t.phase == Phase::cos ? 0 : 1}] += c;
  }
  std::vector<TrigTerm> out;
  for (const auto& [key, c] : acc) {
    if (std::abs(c) <= 1e-14) continue;
    out.push_back({c, key.first, key.second == 0 ? Phase::cos : Phase::sin});
  }
  return TrigFunction(dim_, side_, std::move(out));
}

bool TrigFunction::is_zero() const { return simplified().terms_.empty(); }

bool TrigFunction::is_constant() const {
  for (const auto& t : simplified().terms_)
    if (!all_zero(t.k)) return false;
  return true;
}

double TrigFunction::coef_l1() const {
  double s = 0.0;
  for (const auto& t : terms_) s += std::abs(t.coef);
  return s;
}

TrigFunction TrigFunction::operator+(const TrigFunction& o) const {
  if (o.dim_ != dim_ || o.side_ != side_)
    throw std::invalid_argument("TrigFunction: incompatible operands");
  auto terms = terms_;
  terms.insert(terms.end(), o.terms_.begin(), o.terms_.end());
  return TrigFunction(dim_, side_, std::move(terms)).simplified();
}

TrigFunction TrigFunction::scaled(double a) const {
  auto terms = terms_;
  for (auto& t : terms) t.coef *= a;
  return TrigFunction(dim_, side_, std::move(terms));
}

// ---------------------------------------------------------------------------

VectorField::VectorField(std::vector<TrigFunction> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("VectorField: no components");
  const int d = static_cast<int>(components_.size());
  const double side = components_.front().side();
  TrigFunction div = TrigFunction(d, side, {});
  for (int i = 0; i < d; ++i) {
    if (components_[i].dim() != d)
      throw std::invalid_argument("VectorField: component dimension mismatch");
    div = div + components_[i].derivative(i);
    if (!components_[i].is_constant()) constant_ = false;
  }
  divergence_ = div.simplified();
  divergence_free_ = divergence_.terms().empty();
}

VectorField VectorField::constant(const std::vector<double>& value, double side) {
  const int d = static_cast<int>(value.size());
  std::vector<TrigFunction> comps;
  for (double v : value) comps.push_back(TrigFunction::constant(d, v, side));
  return VectorField(std::move(comps));
}

void VectorField::operator()(std::span<const double> x, std::span<double> out) const {
  for (std::size_t i = 0; i < components_.size(); ++i) out[i] = components_[i](x);
}

double VectorField::divergence(std::span<const double> x) const {
  return divergence_free_ ? 0.0 : divergence_(x);
}

VectorField VectorField::scaled(double a) const {
  std::vector<TrigFunction> comps;
  for (const auto& c : components_) comps.push_back(c.scaled(a));
  return VectorField(std::move(comps));
}

FlowResult flow(const Manifold& m, const VectorField& w, double t, std::span<const double> x,
                double step) {
  require_torus(m, "flow");
  const std::size_t d = x.size();
  if (static_cast<std::size_t>(w.dim()) != d)
    throw std::invalid_argument("flow: field and point dimensions differ");
  FlowResult r{Point(x.begin(), x.end()), 0.0};
  if (t == 0.0) return r;
  if (w.is_constant()) {
    std::vector<double> v(d);
    w(x, v);
    for (std::size_t i = 0; i < d; ++i) r.x[i] += t * v[i];
    wrap_in_place(m, r.x);
    return r;
  }
  if (!(step > 0.0)) throw std::invalid_argument("flow: step must be positive");
  const auto n = static_cast<long>(std::ceil(std::abs(t) / step));
  const double h = t / static_cast<double>(n);
  const bool track = !w.divergence_free();

  std::vector<double> y(r.x), k1(d), k2(d), k3(d), k4(d), tmp(d);
  double logdet = 0.0;
  for (long s = 0; s < n; ++s) {
    w(y, k1);
    const double l1 = track ? w.divergence(y) : 0.0;
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    w(tmp, k2);
    const double l2 = track ? w.divergence(tmp) : 0.0;
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    w(tmp, k3);
    const double l3 = track ? w.divergence(tmp) : 0.0;
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * k3[i];
    w(tmp, k4);
    const double l4 = track ? w.divergence(tmp) : 0.0;
    for (std::size_t i = 0; i < d; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    logdet += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
  }
  r.x = std::move(y);
  wrap_in_place(m, r.x);
  r.logdet = logdet;
  return r;
}

Point FlowMap::apply(const Manifold& m, std::span<const double> x) const {
  return flow(m, field, time, x, step).x;
}

double FlowMap::log_pushforward_density(const Manifold& m, std::span<const double> x) const {
  if (field.divergence_free()) return 0.0;
  return flow(m, field, -time, x, step).logdet;
}

}  // namespace dflab

namespace dflab {

Report verify_heat_rescaling(const Manifold& m, const RescalingOptions& opt, const MonteCarlo& mc) {
  Rng rng = make_rng(mc.seed, "heat-rescaling");
  std::vector<std::pair<Point, Point>> pts;
  for (std::size_t i = 0; i < opt.n_points; ++i) pts.emplace_back(sample_uniform(m, rng), sample_uniform(m, rng));
  std::uniform_real_distribution<double> log_t(std::log(1e-3), std::log(2.0));
  std::uniform_real_distribution<double> log_a(std::log(0.1), std::log(10.0));
  std::vector<std::pair<double, double>> ta;
  for (std::size_t k = 0; k < opt.n_times; ++k) ta.emplace_back(std::exp(log_t(rng)), std::exp(log_a(rng)));

  double worst = 0.0, worst_h = 0.0;
  std::size_t bad = 0;
  for (const auto& [t, a] : ta) {
    const Manifold scaled = m.rescaled(a);
    for (const auto& [x, y] : pts) {
      const double lhs = heat_kernel_density(scaled, x, y, t);
      const double rhs = heat_kernel_density(m, x, y, t / a);
      const double err = std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
      if (err > opt.rel_tol) ++bad;
      if (err >= worst) {
        worst = err;
        worst_h = rhs;
      }
    }
  }
  Report rep;
  rep.task = "heat-rescaling";
  auto c = abs_check("heat-rescaling.max-rel-error", worst, 0.0, opt.rel_tol);
  c.note = std::to_string(bad) + " of " + std::to_string(ta.size() * pts.size()) +
           " points above tolerance; kernel value at worst point " + std::to_string(worst_h);
  rep.checks.push_back(c);
  return rep;
}

}  // namespace dflab

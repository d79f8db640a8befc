#pragma once

#include <span>
#include <string>
#include <vector>

#include "dflab/montecarlo.hpp"
#include "dflab/report.hpp"

namespace dflab {

enum class ManifoldKind { FlatTorus, Sphere2 };

/// Geometry backend. Points are stored as `coord_dim()` doubles: torus
/// coordinates in [0, side)^dim, or unit vectors in R^3 for the sphere.
///
/// `metric_scale` a replaces the metric g by a*g. Brownian motion, heat
/// kernel, distances and the calculus in the cylinder module all honour it;
/// the normalized volume does not depend on it.
struct Manifold {
  ManifoldKind kind = ManifoldKind::FlatTorus;
  int dim = 2;
  double side = 1.0;
  /// Total intensity of the Dirichlet-Ferguson reference measure m = beta * normalized volume.
  double beta = 1.0;
  double metric_scale = 1.0;
  int sphere_substeps = 64;

  static Manifold torus(int dim = 2, double side = 1.0, double beta = 1.0);
  static Manifold sphere(double beta = 1.0, int substeps = 64);

  std::size_t coord_dim() const { return kind == ManifoldKind::Sphere2 ? 3 : static_cast<std::size_t>(dim); }
  bool is_torus() const { return kind == ManifoldKind::FlatTorus; }
  /// Same manifold with metric a*g.
  Manifold rescaled(double a) const;
  /// Throws std::invalid_argument on inconsistent fields.
  void validate() const;
  std::string describe() const;
};

using Point = std::vector<double>;

/// Wraps torus coordinates into [0, side); renormalizes sphere points.
void wrap_in_place(const Manifold& m, std::span<double> x);

void sample_uniform_into(const Manifold& m, Rng& rng, std::span<double> out);
Point sample_uniform(const Manifold& m, Rng& rng);

/// Brownian motion with generator (1/2)Laplacian run for time tau, started at x.
/// Exact on the torus; geodesic random walk with `sphere_substeps` steps on S^2.
Point brownian_increment(const Manifold& m, std::span<const double> x, double tau, Rng& rng);
void brownian_advance(const Manifold& m, std::span<double> x, double tau, Rng& rng);

/// Transition density of that Brownian motion w.r.t. the normalized volume.
double heat_kernel_density(const Manifold& m, std::span<const double> x,
                           std::span<const double> y, double t);

double distance_squared(const Manifold& m, std::span<const double> x, std::span<const double> y);
double distance(const Manifold& m, std::span<const double> x, std::span<const double> y);

enum class Phase { cos, sin };

struct TrigTerm {
  double coef = 0.0;
  std::vector<int> k;
  Phase phase = Phase::cos;
};

/// f(x) = sum_j c_j trig_j(2 pi k_j . x / side) on the flat torus. All
/// derivatives are symbolic.
class TrigFunction {
 public:
  TrigFunction() = default;
  TrigFunction(int dim, double side, std::vector<TrigTerm> terms);

  static TrigFunction constant(int dim, double value, double side = 1.0);

  int dim() const { return dim_; }
  double side() const { return side_; }
  const std::vector<TrigTerm>& terms() const { return terms_; }

  double operator()(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;
  double laplacian(std::span<const double> x) const;

  /// Partial derivative along `axis`, as a trig polynomial.
  TrigFunction derivative(int axis) const;
  /// Canonical form: non-negative leading wave-vector, like terms merged, zeros dropped.
  TrigFunction simplified() const;
  bool is_zero() const;
  bool is_constant() const;
  /// sum |c_j|, an upper bound for the sup norm.
  double coef_l1() const;

  TrigFunction operator+(const TrigFunction& o) const;
  TrigFunction scaled(double a) const;

 private:
  int dim_ = 0;
  double side_ = 1.0;
  std::vector<TrigTerm> terms_;
};

class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(std::vector<TrigFunction> components);

  static VectorField constant(const std::vector<double>& value, double side = 1.0);

  int dim() const { return static_cast<int>(components_.size()); }
  const std::vector<TrigFunction>& components() const { return components_; }

  void operator()(std::span<const double> x, std::span<double> out) const;
  double divergence(std::span<const double> x) const;
  const TrigFunction& divergence_function() const { return divergence_; }
  bool divergence_free() const { return divergence_free_; }
  bool is_constant() const { return constant_; }
  VectorField scaled(double a) const;

 private:
  std::vector<TrigFunction> components_;
  TrigFunction divergence_;
  bool divergence_free_ = true;
  bool constant_ = true;
};

struct FlowResult {
  Point x;
  /// log det of the Jacobian of the flow map at the starting point.
  double logdet = 0.0;
};

/// psi^{w,t}(x) by RK4 (closed form for constant fields), together with
/// log det D psi^{w,t}(x) from d/dt logdet = div w along the trajectory.
FlowResult flow(const Manifold& m, const VectorField& w, double t, std::span<const double> x,
                double step = 1e-3);

/// The time-t flow map of a field, used as a diffeomorphism of the torus.
struct FlowMap {
  VectorField field;
  double time = 1.0;
  double step = 1e-3;

  Point apply(const Manifold& m, std::span<const double> x) const;
  /// log of d(psi_# m)/dm at x, i.e. -logdet D psi(psi^{-1} x) = logdet of the
  /// backward flow from x.
  double log_pushforward_density(const Manifold& m, std::span<const double> x) const;
  bool volume_preserving() const { return field.divergence_free(); }
};

struct RescalingOptions {
  std::size_t n_points = 10;  ///< (x, y) pairs
  std::size_t n_times = 10;   ///< (t, a) pairs
  double rel_tol = 1e-12;
};

/// Pointwise check of h^{a g}_t(x, y) = h^g_{t/a}(x, y) on random (x, y, t, a).
Report verify_heat_rescaling(const Manifold& m, const RescalingOptions& opt, const MonteCarlo& mc);

}  // namespace dflab

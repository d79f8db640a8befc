#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dflab/manifold.hpp"
#include "dflab/random_measures.hpp"
#include "dflab/report.hpp"

namespace dflab {

/// rho(s) = poly(s) * cutoff(s). With a cutoff eps, rho vanishes on [0, eps]
/// and ramps up through a C^1 smoothstep of width delta; without one, rho = poly.
struct WeightProfile {
  std::vector<double> poly{1.0};
  std::optional<double> eps;
  double delta = 0.05;

  double operator()(double s) const;
  /// Vanishing threshold: rho(s) = 0 for s <= threshold().
  double threshold() const { return eps.value_or(0.0); }
  bool identically_one() const;
  /// Right limit rho(0+) (zero whenever a cutoff is present).
  double at_zero_plus() const;
};

enum class FunctionClass { hTF_eps, TF, hTF_minus };

/// f_hat = f (x) rho on M x [0, 1].
struct TestFunction {
  TrigFunction f;
  WeightProfile rho;

  FunctionClass function_class() const;
  double operator()(std::span<const double> x, double s) const { return f(x) * rho(s); }
};

/// f_hat*(eta) = sum_i s_i f(x_i) rho(s_i); tail mass does not contribute.
double star(const TestFunction& fhat, const AtomicMeasure& eta);

/// Polynomial in k variables: sum_t c_t prod_i y_i^{e_ti}.
class Polynomial {
 public:
  struct Term {
    double coef = 0.0;
    std::vector<int> exps;
  };

  Polynomial() = default;
  Polynomial(std::size_t n_vars, std::vector<Term> terms);

  static Polynomial identity(std::size_t n_vars, std::size_t var);
  static Polynomial constant(std::size_t n_vars, double c);

  std::size_t n_vars() const { return n_vars_; }
  const std::vector<Term>& terms() const { return terms_; }
  double operator()(std::span<const double> y) const;
  Polynomial partial(std::size_t var) const;
  bool is_constant() const;
  /// P(y) Q(z) in the concatenated variables (y, z).
  Polynomial tensor(const Polynomial& other) const;
  Polynomial operator+(const Polynomial& other) const;

 private:
  std::size_t n_vars_ = 0;
  std::vector<Term> terms_;
};

/// u(eta) = F(f_hat_1*(eta), ..., f_hat_k*(eta)) with symbolic partials of F.
class CylinderFunction {
 public:
  CylinderFunction() = default;
  CylinderFunction(Polynomial F, std::vector<TestFunction> fhats);

  /// F = id on a single test function.
  static CylinderFunction star_of(const TestFunction& fhat);
  /// The constant c, carrying `fhat` only to define the vanishing threshold.
  static CylinderFunction constant(double c, const TestFunction& fhat);

  const Polynomial& F() const { return F_; }
  const std::vector<TestFunction>& fhats() const { return fhats_; }
  std::size_t k() const { return fhats_.size(); }
  const Polynomial& dF(std::size_t i) const { return dF_[i]; }
  const Polynomial& d2F(std::size_t i, std::size_t j) const { return d2F_[i * k() + j]; }

  std::vector<double> star_values(const AtomicMeasure& eta) const;
  double operator()(const AtomicMeasure& eta) const;
  /// Smallest vanishing threshold over the test functions.
  double threshold() const;
  bool is_constant() const { return F_.is_constant(); }

  /// Pointwise product u * v.
  CylinderFunction operator*(const CylinderFunction& other) const;
  CylinderFunction operator+(const CylinderFunction& other) const;

 private:
  Polynomial F_;
  std::vector<TestFunction> fhats_;
  std::vector<Polynomial> dF_;
  std::vector<Polynomial> d2F_;
};

/// Per-atom gradient, flat n x d: grad u(eta)(x_i) = sum_j dF_j rho_j(s_i) grad f_j(x_i),
/// as a Riemannian gradient for the manifold metric.
std::vector<double> grad(const CylinderFunction& u, const AtomicMeasure& eta);

/// d/dt u(psi^{w,t}_# eta) at t = 0.
double directional_derivative(const CylinderFunction& u, const VectorField& w,
                              const AtomicMeasure& eta);

/// Gamma(u, v)(eta) = (1/2) sum_i s_i <grad u(x_i), grad v(x_i)>.
double carre_du_champ(const CylinderFunction& u, const CylinderFunction& v,
                      const AtomicMeasure& eta);

struct GeneratorValue {
  double diffusion = 0.0;  ///< L1: second-order part in F
  double drift = 0.0;      ///< L2: sum of Laplacians over atoms
  double total() const { return diffusion + drift; }
};

/// Lu = L1 u + L2 u. Throws std::invalid_argument when a non-constant f is
/// paired with a profile that has no cutoff and rho(0+) != 0.
GeneratorValue generator_parts(const CylinderFunction& u, const AtomicMeasure& eta);
double generator(const CylinderFunction& u, const AtomicMeasure& eta);

/// B_eps[w](eta) = sum over atoms with s_i > eps of div w(x_i).
double drift_B(const VectorField& w, double eps, const AtomicMeasure& eta);

/// R_eps[psi](eta) = prod over atoms with s_i > eps of d(psi_# m)/dm (x_i).
double rn_derivative(const FlowMap& psi, double eps, const AtomicMeasure& eta);

/// psi_# eta. Atoms with weight <= min_weight are left in place, which is
/// exact for any function that ignores them.
AtomicMeasure push_forward(const FlowMap& psi, const AtomicMeasure& eta, double min_weight = -1.0);

struct IbpOptions {
  std::size_t n = 100000;
  double n_sigma = 3.0;
};

/// Integration by parts: E[D_w u v] + E[u D_w v] + E[u v B_eps[w]] = 0 with
/// eps = min(eps_u, eps_v), for every (u, v, w) in the baskets. Also checks
/// the v = 1 case E[D_w u] = -E[u B_eps[w]] and E[B_eps[w]] = 0.
Report verify_ibp(const Manifold& m, const Truncation& trunc,
                  const std::vector<CylinderFunction>& us, const std::vector<CylinderFunction>& vs,
                  const std::vector<VectorField>& ws, const IbpOptions& opt, const MonteCarlo& mc);

struct PqiOptions {
  std::size_t n = 100000;
  double n_sigma = 3.0;
  std::size_t level = 10;  ///< filtration index: R_{1/level}
};

/// Partial quasi-invariance: E[u(psi_# eta)] = E[R_{1/n}[psi](eta) u(eta)]
/// for u measurable at level 1/n, plus E[R] = 1.
Report verify_pqi(const Manifold& m, const Truncation& trunc, const FlowMap& psi,
                  const std::vector<CylinderFunction>& us, const PqiOptions& opt,
                  const MonteCarlo& mc);

struct BMartingaleOptions {
  std::size_t n = 100000;
  double n_sigma = 3.0;
  double eps_small = 0.02;
  double eps_large = 0.1;
};

/// B_eps[w] as a martingale in eps: E[B_eps] = 0 at both levels and
/// E[(B_small - B_large) u] = 0 for u measurable at level eps_large.
Report verify_B_martingale(const Manifold& m, const Truncation& trunc, const VectorField& w,
                           const std::vector<CylinderFunction>& us, const BMartingaleOptions& opt,
                           const MonteCarlo& mc);

/// E[Gamma(u_i, u_j)] = -E[u_i L u_j] and E[u_i L u_j - u_j L u_i] = 0 over all pairs.
Report verify_energy_identities(const Manifold& m, const Truncation& trunc,
                                const std::vector<CylinderFunction>& us, std::size_t n,
                                double n_sigma, const MonteCarlo& mc);

// JSON forms of the symbolic objects.
TrigFunction trig_from_json(const nlohmann::json& j, int dim, double side);
nlohmann::json to_json(const TrigFunction& f);
WeightProfile profile_from_json(const nlohmann::json& j);
TestFunction test_function_from_json(const nlohmann::json& j, int dim, double side);
/// {"F": [[coef, [exps]], ...], "fhats": [{"f": [...], "rho": {...}}, ...]}
CylinderFunction cylinder_from_json(const nlohmann::json& j, int dim, double side);
/// {"components": [trig, trig, ...]}
VectorField vector_field_from_json(const nlohmann::json& j, int dim, double side);

}  // namespace dflab

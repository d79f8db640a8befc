#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dflab/manifold.hpp"
#include "dflab/report.hpp"

namespace dflab {

/// Finite weight vector with the mass not carried by atoms kept as `tail`.
struct WeightVector {
  std::vector<double> s;
  double tail = 0.0;
  bool ordered = false;

  double total() const;
};

/// eta = sum_i s_i delta_{x_i}; locations stored flat with stride manifold.coord_dim().
class AtomicMeasure {
 public:
  AtomicMeasure() = default;
  AtomicMeasure(Manifold manifold, WeightVector weights, std::vector<double> coords);

  const Manifold& manifold() const { return manifold_; }
  const WeightVector& weights() const { return weights_; }
  std::size_t size() const { return weights_.s.size(); }
  std::size_t stride() const { return manifold_.coord_dim(); }
  double weight(std::size_t i) const { return weights_.s[i]; }
  std::span<const double> location(std::size_t i) const {
    return {coords_.data() + i * stride(), stride()};
  }
  std::span<double> location(std::size_t i) { return {coords_.data() + i * stride(), stride()}; }
  const std::vector<double>& coords() const { return coords_; }
  std::vector<double>& coords() { return coords_; }

  /// Number of atoms with weight strictly above eps.
  std::size_t count_above(double eps) const;
  double max_weight() const;
  /// True iff two atoms share a location (exact comparison).
  bool has_duplicate_locations() const;

  /// {"weights":[...], "tail":t, "locations":[[...],...]}
  nlohmann::json to_json() const;
  static AtomicMeasure from_json(const Manifold& m, const nlohmann::json& j);
  /// Rows "index,weight,coord_1..coord_d" after a header line.
  void write_csv(std::ostream& os) const;

 private:
  Manifold manifold_;
  WeightVector weights_;
  std::vector<double> coords_;
};

enum class TailPolicy { renormalize, lump, keep };

TailPolicy parse_tail_policy(const std::string& s);
std::string to_string(TailPolicy p);

/// i.i.d. Beta(1, beta) draws, r = 1 - U^{1/beta}.
std::vector<double> sample_sticks(double beta, std::size_t n, Rng& rng);

/// Lambda_k = r_k prod_{i<k} (1 - r_i); tail = prod_i (1 - r_i).
WeightVector stick_break(std::span<const double> r);

/// Non-increasing rearrangement; idempotent.
WeightVector reorder(const WeightVector& w);

/// Smallest n with (beta/(1+beta))^n <= tol: the expected tail mass after n sticks.
std::size_t auto_truncation(double beta, double tol = 1e-10);
double expected_tail(double beta, std::size_t n);

struct Truncation {
  std::size_t n_atoms = 0;  ///< 0 means auto_truncation(beta)
  TailPolicy tail_policy = TailPolicy::renormalize;

  std::size_t resolve(double beta) const { return n_atoms == 0 ? auto_truncation(beta) : n_atoms; }
};

/// Draws eta ~ DF: sticks, stick-breaking, reordering, i.i.d. uniform
/// locations, then the tail policy. Throws std::runtime_error on a location
/// collision.
AtomicMeasure sample_dirichlet_ferguson(const Manifold& m, const Truncation& trunc, Rng& rng);

/// (1-r) eta + r delta_x, with x appended as a new atom.
AtomicMeasure relocate(const AtomicMeasure& eta, std::span<const double> x, double r);

/// Probe function f_hat = f (x) rho for star-evaluations in the identity checks.
struct StarProbe {
  TrigFunction f;
  std::vector<double> rho_poly{1.0};  ///< rho(s) = sum_k c_k s^k
  double rho(double s) const;
  double star(const AtomicMeasure& eta) const;
};

/// Product-form Mecke probe u(eta, x, r) = f(x) * rho(r) * (g*eta), g optional.
struct MeckeProbe {
  std::string name;
  TrigFunction f;
  std::vector<double> rho_poly{1.0};
  std::optional<StarProbe> g;
  /// Closed-form value of both sides, when known.
  std::optional<double> expected;

  double eval(const AtomicMeasure& eta, std::span<const double> x, double r) const;
};

struct SethuramanOptions {
  std::size_t n = 100000;
  double n_sigma = 3.0;
  double ks_alpha = 1e-3;
  /// Negative control: draw r ~ Beta(1, beta + beta_shift) for the relocated side.
  double beta_shift = 0.0;
};

struct StickBreakOptions {
  std::vector<double> betas{0.5, 1.0, 2.0};
  std::vector<std::size_t> lengths{50, 200};
  std::size_t n = 100000;
  double n_sigma = 3.0;
  double sum_tol = 1e-12;
};

/// For each (beta, n): max |sum s + tail - 1| <= sum_tol over all draws, and
/// E[tail] = (beta/(1+beta))^n. The tail mean is estimated as the product over
/// positions k of the sample means of (1 - r_k), with r_k recovered from the
/// weights; a plain average of tail values is reported alongside.
Report verify_stick_breaking(const StickBreakOptions& opt, const MonteCarlo& mc);

/// E[sum s_i^2] = 1/(1+beta) under the configured truncation, and E[s_1]
/// decreasing in beta.
Report verify_pd_moments(const Manifold& m, const Truncation& trunc, const std::vector<double>& betas,
                         std::size_t n, double n_sigma, const MonteCarlo& mc);

Report verify_sethuraman(const Manifold& m, const Truncation& trunc,
                         const std::vector<StarProbe>& probes, const SethuramanOptions& opt,
                         const MonteCarlo& mc);

Report verify_mecke(const Manifold& m, const Truncation& trunc,
                    const std::vector<MeckeProbe>& basket, std::size_t n, double n_sigma,
                    const MonteCarlo& mc);

}  // namespace dflab

#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "dflab/cylinder.hpp"
#include "dflab/random_measures.hpp"
#include "dflab/report.hpp"

namespace dflab {

struct TransportEdge {
  std::size_t i = 0;
  std::size_t j = 0;
  double mass = 0.0;
};

struct TransportPlan {
  std::vector<TransportEdge> edges;
  double cost = 0.0;
  double w2 = 0.0;
  std::size_t pivots = 0;

  /// Rows "i,j,mass,cost_contrib".
  void write_csv(std::ostream& os, const AtomicMeasure& mu, const AtomicMeasure& nu) const;
  nlohmann::json to_json() const;
};

/// Transportation problem min <C, P> over couplings of a and b, solved
/// exactly by the network simplex on the bipartite graph. Entering cells are
/// chosen by most negative reduced cost (lowest (i, j) on ties); after a run
/// of degenerate pivots the rule switches to Bland's. Zero-mass rows and
/// columns are allowed.
TransportPlan solve_transport(const std::vector<double>& a, const std::vector<double>& b,
                              const std::vector<double>& cost_rowmajor);

/// Exact W2 between atomic measures. Throws std::invalid_argument when the
/// total masses differ by more than 1e-8 or the supports exceed 10^6 cells.
TransportPlan w2(const AtomicMeasure& mu, const AtomicMeasure& nu);
double w2_distance(const AtomicMeasure& mu, const AtomicMeasure& nu);

/// W2 ball {eta : W2(eta, center) <= radius}.
struct MeasureBall {
  AtomicMeasure center;
  double radius = 0.0;
  /// Rejects early when sum_i s_i min_j d(x_i, y_j)^2, a lower bound for W2^2, exceeds radius^2.
  bool contains(const AtomicMeasure& eta) const;
};

struct VaradhanOptions {
  std::vector<double> t_list{0.04, 0.02, 0.01};
  std::size_t n = 1000000;
  double slack = 0.5;
  double n_sigma = 3.0;
  /// Members of each set kept for the sampled-pair estimate of the set distance.
  std::size_t max_members = 50;
};

/// p_t = P(eta_0 in A1, eta_t in A2) under a stationary start, compared with
/// t log p_t <= -(1/2) d^2 (1 - slack), d = min W2 over sampled member pairs.
/// A time with zero hits is inconclusive.
Report varadhan_probe(const Manifold& m, const Truncation& trunc, const MeasureBall& a1,
                      const MeasureBall& a2, const VaradhanOptions& opt, const MonteCarlo& mc);

struct RademacherOptions {
  std::size_t n = 1000;
  double h = 1e-3;
  double curvature = 10.0;
};

/// For u = W2(., ref) and each field w: |u(Psi^{w,h} eta) - u(eta)| / h <=
/// ||w||_{L2(eta)} (1 + curvature * h) on every DF sample.
Report rademacher_probe(const Manifold& m, const Truncation& trunc, const std::vector<AtomicMeasure>& refs,
                        const std::vector<VectorField>& fields, const RademacherOptions& opt,
                        const MonteCarlo& mc);

}  // namespace dflab

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "dflab/cylinder.hpp"
#include "dflab/random_measures.hpp"
#include "dflab/report.hpp"

namespace dflab {

/// One trajectory of the truncated massive-particle system.
struct SimulationPath {
  std::vector<double> t_grid;
  std::vector<AtomicMeasure> states;
  std::uint64_t seed = 0;
  std::size_t path_id = 0;
};

/// Advances every atom by Brownian motion for dt / s_i. Zero-weight atoms stay put.
void step_in_place(AtomicMeasure& eta, double dt, Rng& rng);
AtomicMeasure step(const AtomicMeasure& eta, double dt, Rng& rng);

/// Uniform grid 0, dt, ..., horizon.
std::vector<double> uniform_grid(double dt, double horizon);

/// Throws std::invalid_argument unless the grid starts at 0 and increases strictly.
void validate_grid(const std::vector<double>& t_grid);

struct PathSpec {
  Manifold manifold;
  Truncation truncation;
  /// Fixed starting state; DF-stationary start when empty.
  std::optional<AtomicMeasure> initial;
  std::vector<double> t_grid;
  std::size_t n_paths = 1;
};

/// Runs path `path_id` and calls visit(k, state) at every grid index k.
/// The path's substream depends only on (seed, path_id).
void simulate_path(const PathSpec& spec, std::size_t path_id, const MonteCarlo& mc,
                   const std::function<void(std::size_t, const AtomicMeasure&)>& visit);

std::vector<SimulationPath> simulate(const PathSpec& spec, const MonteCarlo& mc);

/// Rows "path_id,t,atom_id,weight,coord_1..coord_d".
void write_paths_csv(std::ostream& os, const std::vector<SimulationPath>& paths);

struct MartingaleOptions {
  double n_sigma = 3.0;
  double qv_rel_tol = 0.05;
  /// Split time for the increment-orthogonality statistic; defaults to mid-horizon.
  std::optional<double> split_time;
};

/// M^u_t = u(eta_t) - u(eta_0) - int_0^t Lu(eta_s) ds (trapezoid). The
/// quadratic variation is compared against int_0^t 2 Gamma(u)(eta_s) ds,
/// i.e. int <grad u, grad u>, since Gamma carries a factor 1/2.
struct MartingaleReport {
  std::vector<double> t;
  std::vector<double> mean_M, stderr_M;
  std::vector<double> realized_qv, realized_qv_stderr;
  std::vector<double> predicted_qv, predicted_qv_stderr;
  std::size_t n_paths = 0;
  Report report;

  nlohmann::json to_json() const;
};

MartingaleReport verify_martingale(const CylinderFunction& u, const std::vector<CylinderFunction>& gs,
                                   const std::vector<SimulationPath>& paths,
                                   const MartingaleOptions& opt = {});

/// Same statistics with paths generated on the fly, never stored.
MartingaleReport verify_martingale(const CylinderFunction& u, const std::vector<CylinderFunction>& gs,
                                   const PathSpec& spec, const MartingaleOptions& opt,
                                   const MonteCarlo& mc);

/// Stationary start: E[f*(eta_t)] and E[f*(eta_t)^2] equal their t = 0 values
/// (paired differences), and weights stay bitwise identical along each path.
Report verify_invariance(const Manifold& m, const Truncation& trunc,
                         const std::vector<TestFunction>& probes, const std::vector<double>& t_list,
                         std::size_t n, double n_sigma, const MonteCarlo& mc);

/// Axis-aligned box [lo, hi) on the torus.
struct Window {
  std::vector<double> lo, hi;
  double volume_fraction(double side) const;
  bool contains(std::span<const double> x) const;
};

/// Start from fixed weights with i.i.d. uniform locations: E[eta_t(A)] equals
/// the normalized volume of A at every t, and weights are conserved.
Report verify_ergodic_component(const Manifold& m, const WeightVector& s,
                                const std::vector<Window>& windows, const std::vector<double>& t_list,
                                std::size_t n, double n_sigma, const MonteCarlo& mc);

/// E(u) = E[Gamma(u, u)] under DF, with standard error, cross-checked
/// against -E[u Lu].
struct EnergyEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  Report report;
};

EnergyEstimate dirichlet_energy(const Manifold& m, const Truncation& trunc, const CylinderFunction& u,
                                std::size_t n, double n_sigma, const MonteCarlo& mc);

}  // namespace dflab

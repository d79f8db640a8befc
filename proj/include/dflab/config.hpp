#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dflab/cylinder.hpp"
#include "dflab/diffusion.hpp"
#include "dflab/transport.hpp"

namespace dflab {

/// Configuration error tied to a JSON-pointer-like path, e.g. "/tasks/w2/tol".
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& message);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct SampleDfTask {
  std::size_t n_dump = 20;
  std::vector<double> spectrum_betas{0.5, 1.0, 2.0};
  StickBreakOptions stick;
  std::size_t pd_n = 100000;
  std::vector<double> pd_betas{0.5, 1.0, 2.0};
};

struct SethuramanTask {
  SethuramanOptions opt;
  bool control = true;
  double control_shift = 3.0;
  std::size_t control_n = 1000000;
  double control_min_z = 5.0;
};

struct SimulateTask {
  std::vector<double> t_grid;
  std::size_t n_paths = 4;
  std::optional<AtomicMeasure> initial;
  RescalingOptions rescaling;
};

struct MartingaleTask {
  std::vector<double> t_grid;
  std::size_t n_paths = 4000;
  CylinderFunction u;
  std::vector<CylinderFunction> orthogonality;
  MartingaleOptions opt;
};

struct GridTask {
  std::size_t n = 100000;
  std::vector<double> t_list;
};

struct ErgodicTask {
  std::size_t n = 100000;
  std::vector<double> t_list;
  WeightVector weights;
};

struct W2Task {
  std::optional<AtomicMeasure> mu, nu;
  std::optional<double> expected_cost;
  double tol = 1e-9;
};

struct VaradhanTask {
  /// Overrides the global beta for this probe when set.
  std::optional<double> beta;
  std::optional<MeasureBall> a1, a2;
  VaradhanOptions opt;
};

struct RademacherTask {
  std::vector<AtomicMeasure> refs;
  RademacherOptions opt;
};

/// Fully validated run configuration. `resolved` is the defaults merged with
/// the user file and overrides, with fixtures inlined.
struct RunConfig {
  nlohmann::json resolved;
  std::filesystem::path base_dir;

  Manifold manifold;
  Truncation truncation;
  MonteCarlo mc;
  double n_sigma = 3.0;
  std::string out_dir;
  std::string format = "json";

  std::vector<MeckeProbe> mecke;
  std::vector<StarProbe> star_probes;
  std::vector<TestFunction> test_functions;
  std::vector<CylinderFunction> cylinders;
  std::vector<CylinderFunction> cylinders_v;
  std::vector<VectorField> vector_fields;
  std::vector<FlowMap> flows;
  std::vector<Window> windows;

  SampleDfTask sample_df;
  std::size_t mecke_n = 100000;
  SethuramanTask sethuraman;
  IbpOptions ibp;
  PqiOptions pqi;
  BMartingaleOptions bmart;
  SimulateTask simulate;
  MartingaleTask martingale;
  GridTask invariance;
  ErgodicTask ergodic;
  std::size_t energy_n = 100000;
  W2Task w2;
  VaradhanTask varadhan;
  RademacherTask rademacher;

  /// Resolved config without run-environment keys (workers, out_dir).
  nlohmann::json canonical() const;
  /// FNV-1a of canonical().dump(), as 16 hex digits.
  std::string hash() const;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<unsigned> workers;
  std::optional<std::string> format;
};

nlohmann::json default_config();

/// Merges `user` over the defaults, rejecting unknown keys, inlines fixture
/// files (resolved against base_dir) and validates every field.
RunConfig load_config(const nlohmann::json& user, const std::filesystem::path& base_dir,
                      const Overrides& ov = {});
RunConfig load_config_file(const std::filesystem::path& path, const Overrides& ov = {});

}  // namespace dflab

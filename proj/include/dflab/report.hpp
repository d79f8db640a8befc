#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dflab/montecarlo.hpp"

namespace dflab {

enum class Status { pass, fail, inconclusive };

std::string to_string(Status s);

/// One judged estimate. `tolerance` is the absolute band the estimate was
/// judged against (for n-sigma checks: n * stderr).
struct Check {
  std::string name;
  double estimate = 0.0;
  double stderr_ = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  Status status = Status::pass;
  std::string note;
};

/// |estimate - target| <= n_sigma * stderr. A zero standard error falls back
/// to an absolute band of 1e-12 * max(1, |target|).
Check sigma_check(std::string name, double estimate, double stderr_, double target,
                  double n_sigma);

/// Paired-difference check: mean of `diff` equals zero within n_sigma.
Check zero_check(std::string name, const Moments& diff, double n_sigma);

/// |estimate - target| <= tol.
Check abs_check(std::string name, double estimate, double target, double tol);

/// estimate <= bound.
Check upper_check(std::string name, double estimate, double bound, double stderr_ = 0.0);

/// estimate > bound. Used for negative controls that must be detected.
Check lower_check(std::string name, double estimate, double bound);

struct Report {
  std::string task;
  std::vector<Check> checks;
  nlohmann::json extra = nlohmann::json::object();
  double wall_time = 0.0;

  bool passed() const;
  std::size_t count(Status s) const;
  const Check* find(const std::string& name) const;
  void append(const Report& other, const std::string& prefix = {});

  /// Report body without wall time, so output bytes depend only on inputs.
  nlohmann::json to_json() const;
};

}  // namespace dflab

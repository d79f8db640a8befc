#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dflab/config.hpp"
#include "dflab/report.hpp"

namespace dflab {

/// Subcommands in the order `all` runs them; "all" itself is last.
const std::vector<std::string>& subcommands();
bool is_subcommand(const std::string& name);

/// Throws SchemaError when the config cannot drive `task` (missing fixture,
/// trigonometric baskets on a non-torus manifold).
void check_task_inputs(const std::string& task, const RunConfig& cfg);

struct TaskResult {
  Report report;
  std::filesystem::path dir;
};

/// Runs one task and writes out_dir/<task>/{report.json, timing.json,
/// resolved_config.json, report.csv (csv format), task artifacts}. An
/// exception inside the task becomes a failed "<task>.error" check.
TaskResult run_task(const std::string& task, const RunConfig& cfg);

/// Validates inputs for every selected task, then runs them. Returns 0 iff no
/// check failed, 1 otherwise. SchemaError propagates to the caller.
int run(const std::string& subcommand, const RunConfig& cfg, std::ostream& log);

/// Rows "name,estimate,stderr,target,tolerance,status".
void write_report_csv(std::ostream& os, const Report& rep);

}  // namespace dflab

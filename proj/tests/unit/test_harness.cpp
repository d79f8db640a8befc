#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dflab/config.hpp"
#include "dflab/harness.hpp"

using namespace dflab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dflab_test_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string schema_path(const json& user) {
  try {
    load_config(user, ".");
  } catch (const SchemaError& e) {
    return e.path();
  }
  return "<accepted>";
}

const json kFixture = json::parse(R"({
  "mu": {"weights": [0.5, 0.5], "locations": [[0.1, 0.1], [0.6, 0.1]]},
  "nu": {"weights": [0.5, 0.5], "locations": [[0.1, 0.3], [0.6, 0.3]]},
  "expected_cost": 0.04
})");

}  // namespace

TEST_CASE("defaults load and the hash ignores run-environment keys") {
  const auto a = load_config(json::object(), ".");
  CHECK(a.mecke.size() == 3);
  CHECK(a.cylinders.size() == 3);
  CHECK(a.martingale.t_grid.size() == 251);
  Overrides ov;
  ov.workers = 4;
  ov.out_dir = "elsewhere";
  const auto b = load_config(json::object(), ".", ov);
  CHECK(a.hash() == b.hash());
  CHECK_FALSE(b.canonical().contains("workers"));
  ov.seed = 7;
  CHECK(load_config(json::object(), ".", ov).hash() != a.hash());
}

TEST_CASE("schema errors name the offending field") {
  CHECK(schema_path(json::parse(R"({"tasks": {"verify-mecke": {"N": 10}}})")) == "/tasks/verify-mecke/N");
  CHECK(schema_path(json::parse(R"({"baskets": {"mecke": []}})")) == "/baskets/mecke");
  CHECK(schema_path(json::parse(R"({"beta": -1})")) == "/beta");
  CHECK(schema_path(json::parse(R"({"seed": "x"})")) == "/seed");
  CHECK(schema_path(json::parse(R"({"truncation": {"tail_policy": "drop"}})")) == "/truncation/tail_policy");
  CHECK(schema_path(json::parse(R"({"baskets": {"cylinders": [{"F": [[1, [1]]], "fhats": [{"f": [], "rho": {"eps": 2}}]}]}})")) ==
        "/baskets/cylinders/0");
  CHECK(schema_path(json::parse(R"({"tasks": {"verify-martingale": {"t_grid": [0.0, 0.2, 0.1]}}})")) ==
        "/tasks/verify-martingale/t_grid");
  CHECK(schema_path(json::parse(R"({"tasks": {"verify-pqi": {"n": 1e5}}})")) == "<accepted>");
}

TEST_CASE("fixtures merge under inline keys and are inlined in the resolved config") {
  const auto dir = scratch("fixture");
  std::ofstream(dir / "fx.json") << kFixture.dump();
  const auto c = load_config(json::parse(R"({"tasks": {"w2": {"fixture": "fx.json", "tol": 1e-6}}})"), dir);
  REQUIRE(c.w2.mu);
  CHECK(*c.w2.expected_cost == 0.04);
  CHECK(c.w2.tol == 1e-6);
  CHECK(c.resolved["tasks"]["w2"]["fixture"].is_null());
  CHECK(c.resolved["tasks"]["w2"]["mu"]["weights"].size() == 2);
  CHECK(schema_path(json::parse(R"({"tasks": {"w2": {"fixture": "missing.json"}}})")) == "/tasks/w2/fixture");
}

TEST_CASE("tasks without their inputs are rejected before running") {
  const auto c = load_config(json::object(), ".");
  CHECK_THROWS_AS(check_task_inputs("w2", c), SchemaError);
  CHECK_THROWS_AS(check_task_inputs("varadhan", c), SchemaError);
  const auto s = load_config(json::parse(R"({"manifold": {"kind": "Sphere2"}})"), ".");
  CHECK_THROWS_AS(check_task_inputs("verify-mecke", s), SchemaError);
  CHECK_NOTHROW(check_task_inputs("sample-df", s));
}

TEST_CASE("w2 task writes the plan and judges the fixture cost") {
  const auto dir = scratch("w2");
  json user = {{"out_dir", dir.string()}, {"format", "csv"}, {"tasks", {{"w2", kFixture}}}};
  auto c = load_config(user, ".");
  std::ostringstream log;
  CHECK(run("w2", c, log) == 0);
  CHECK(fs::exists(dir / "w2" / "plan.csv"));
  CHECK(fs::exists(dir / "w2" / "timing.json"));
  CHECK(slurp(dir / "w2" / "report.csv").rfind("name,estimate,stderr,target,tolerance,status\n", 0) == 0);
  const auto rep = json::parse(slurp(dir / "w2" / "report.json"));
  CHECK(rep["config_hash"] == c.hash());
  CHECK(rep["data"]["cost"].get<double>() == doctest::Approx(0.04).epsilon(1e-12));

  user["tasks"]["w2"]["expected_cost"] = 0.05;
  CHECK(run("w2", load_config(user, "."), log) == 1);

  // A numeric failure inside the task is recorded, not thrown.
  user["tasks"]["w2"]["nu"]["weights"] = {0.25, 0.25};
  const auto res = run_task("w2", load_config(user, "."));
  REQUIRE(res.report.checks.size() == 1);
  CHECK(res.report.checks[0].name == "w2.error");
  CHECK(res.report.checks[0].status == Status::fail);
}

TEST_CASE("outputs are byte-identical across worker counts") {
  const json user = json::parse(R"({
    "chunk_size": 500,
    "tasks": {
      "verify-mecke": {"n": 3000},
      "simulate": {"n_paths": 3, "dt": 0.01, "horizon": 0.05},
      "verify-martingale": {"n_paths": 40, "dt": 0.01, "horizon": 0.05}
    }
  })");
  std::vector<fs::path> dirs;
  for (unsigned w : {1u, 3u}) {
    Overrides ov;
    ov.workers = w;
    ov.out_dir = scratch("det" + std::to_string(w)).string();
    const auto c = load_config(user, ".", ov);
    std::ostringstream log;
    for (const char* t : {"verify-mecke", "simulate", "verify-martingale"}) run(t, c, log);
    dirs.push_back(ov.out_dir.value());
  }
  for (const char* f : {"verify-mecke/report.json", "simulate/paths.csv", "simulate/report.json",
                        "verify-martingale/qv.csv", "verify-martingale/report.json",
                        "verify-mecke/resolved_config.json"}) {
    CAPTURE(f);
    CHECK(slurp(dirs[0] / f) == slurp(dirs[1] / f));
    CHECK_FALSE(slurp(dirs[0] / f).empty());
  }
}

TEST_CASE("report CSV quotes awkward names") {
  Report r;
  r.checks.push_back(abs_check("stick[beta=1,n=50].x", 0.5, 0.5, 0.0));
  std::ostringstream os;
  write_report_csv(os, r);
  CHECK(os.str().find("\"stick[beta=1,n=50].x\",0.5,0,0.5,0,pass") != std::string::npos);
}

#include "dflab/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace dflab {

using nlohmann::json;

SchemaError::SchemaError(std::string path, const std::string& message)
    : std::runtime_error((path.empty() ? std::string("/") : path) + ": " + message), path_(std::move(path)) {}

namespace {

const char* const kDefaults = R"json({
  "manifold": {"kind": "FlatTorus", "dim": 2, "side": 1.0, "sphere_substeps": 64},
  "beta": 1.0,
  "truncation": {"n_atoms": "auto", "tail_policy": "renormalize"},
  "seed": 20240601,
  "out_dir": "dflab_out",
  "workers": 1,
  "chunk_size": 4096,
  "n_sigma": 3.0,
  "format": "json",
  "baskets": {
    "mecke": [
      {"name": "cos-x1", "f": [[1.0, [1, 0], "cos"]], "rho": [1.0]},
      {"name": "cos-x1*g", "f": [[1.0, [1, 0], "cos"]], "rho": [1.0],
       "g": {"f": [[1.0, [1, 0], "cos"]], "rho": [1.0]}},
      {"name": "sin-x2*r^2", "f": [[1.0, [0, 1], "sin"], [0.5, [0, 0], "cos"]], "rho": [0.0, 0.0, 1.0]}
    ],
    "star_probes": [
      {"f": [[1.0, [1, 0], "cos"]], "rho": [1.0]},
      {"f": [[1.0, [0, 1], "sin"], [1.0, [0, 0], "cos"]], "rho": [0.0, 1.0]}
    ],
    "test_functions": [
      {"f": [[1.0, [1, 0], "cos"]], "rho": {"poly": [1.0]}},
      {"f": [[1.0, [0, 1], "sin"], [1.0, [0, 0], "cos"]], "rho": {"poly": [0.0, 1.0]}}
    ],
    "cylinders": [
      {"F": [[1.0, [1]]],
       "fhats": [{"f": [[1.0, [1, 0], "cos"]], "rho": {"poly": [1.0], "eps": 0.1, "delta": 0.05}}]},
      {"F": [[1.0, [2, 1]], [3.0, [0, 1]]],
       "fhats": [{"f": [[1.0, [0, 1], "sin"]], "rho": {"poly": [1.0], "eps": 0.1, "delta": 0.05}},
                 {"f": [[1.0, [1, 1], "cos"]], "rho": {"poly": [0.0, 1.0], "eps": 0.12, "delta": 0.05}}]},
      {"F": [[1.0, [2]]],
       "fhats": [{"f": [[1.0, [1, 0], "sin"], [0.5, [0, 2], "cos"]], "rho": {"poly": [1.0, 1.0], "eps": 0.15, "delta": 0.05}}]}
    ],
    "cylinders_v": [
      {"F": [[1.0, [1]]],
       "fhats": [{"f": [[1.0, [1, 1], "cos"]], "rho": {"poly": [1.0], "eps": 0.05, "delta": 0.05}}]},
      {"F": [[1.0, [2]]],
       "fhats": [{"f": [[1.0, [0, 1], "sin"]], "rho": {"poly": [1.0], "eps": 0.05, "delta": 0.05}}]},
      {"F": [[1.0, [1, 1]]],
       "fhats": [{"f": [[1.0, [1, 0], "cos"]], "rho": {"poly": [1.0], "eps": 0.05, "delta": 0.05}},
                 {"f": [[1.0, [0, 1], "cos"]], "rho": {"poly": [0.0, 1.0], "eps": 0.08, "delta": 0.05}}]}
    ],
    "vector_fields": [
      {"components": [[[0.3, [1, 0], "sin"]], [[0.2, [0, 1], "cos"]]]},
      {"components": [[[0.2, [1, 1], "cos"]], [[0.3, [1, 0], "sin"]]]}
    ],
    "flows": [
      {"field": {"components": [[[0.2, [0, 0], "cos"]], [[0.1, [0, 0], "cos"]]]}, "time": 1.0, "step": 0.01},
      {"field": {"components": [[[0.5, [1, 0], "sin"]], []]}, "time": 0.5, "step": 0.01}
    ],
    "windows": [
      {"lo": [0.0, 0.0], "hi": [0.5, 0.5]},
      {"lo": [0.2, 0.6], "hi": [0.45, 0.9]}
    ]
  },
  "tasks": {
    "sample-df": {
      "n_dump": 20,
      "spectrum_betas": [0.5, 1.0, 2.0],
      "stick": {"n": 100000, "betas": [0.5, 1.0, 2.0], "lengths": [50, 200], "sum_tol": 1e-12},
      "pd": {"n": 100000, "betas": [0.5, 1.0, 2.0]}
    },
    "verify-mecke": {"n": 100000},
    "verify-sethuraman": {
      "n": 100000,
      "ks_alpha": 0.001,
      "negative_control": {"enabled": true, "beta_shift": 3.0, "n": 1000000, "min_z": 5.0}
    },
    "verify-ibp": {"n": 100000},
    "verify-pqi": {"n": 400000, "level": 10},
    "verify-bmart": {"n": 100000, "eps_small": 0.02, "eps_large": 0.1},
    "simulate": {
      "n_paths": 4,
      "dt": 0.001,
      "horizon": 0.25,
      "t_grid": null,
      "initial": null,
      "rescaling": {"n_points": 10, "n_times": 10, "rel_tol": 1e-12}
    },
    "verify-martingale": {
      "n_paths": 4000,
      "dt": 0.001,
      "horizon": 0.25,
      "t_grid": null,
      "u": {"F": [[1.0, [1]]],
            "fhats": [{"f": [[1.0, [1, 0], "cos"]], "rho": {"poly": [1.0], "eps": 0.02, "delta": 0.05}}]},
      "orthogonality": [
        {"F": [[1.0, [1]]],
         "fhats": [{"f": [[1.0, [1, 0], "cos"]], "rho": {"poly": [1.0], "eps": 0.02, "delta": 0.05}}]}
      ],
      "qv_rel_tol": 0.05,
      "split_time": null
    },
    "verify-invariance": {"n": 100000, "t_list": [0.0, 0.1, 0.5, 1.0]},
    "verify-ergodic": {"n": 100000, "t_list": [0.0, 0.1, 0.5, 1.0], "weights": [0.5, 0.3, 0.2]},
    "energy": {"n": 100000},
    "w2": {"fixture": null, "mu": null, "nu": null, "expected_cost": null, "tol": 1e-9},
    "varadhan": {
      "fixture": null,
      "beta": null,
      "a1": null,
      "a2": null,
      "t_list": [0.04, 0.02, 0.01],
      "n": 1000000,
      "slack": 0.5,
      "max_members": 50
    },
    "rademacher": {
      "n": 1000,
      "h": 0.001,
      "curvature": 10.0,
      "refs": [{"weights": [0.5, 0.3, 0.2], "tail": 0.0, "locations": [[0.1, 0.2], [0.6, 0.4], [0.3, 0.8]]}]
    }
  }
})json";

// Objects replaced wholesale instead of merged key by key.
const std::set<std::string> kAtomic = {"u", "mu", "nu", "initial", "a1", "a2", "center"};
const std::set<std::string> kFixtureTasks = {"w2", "varadhan"};

void merge_into(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw SchemaError(path, "expected an object");
  for (const auto& [key, val] : user.items()) {
    const std::string p = path + "/" + key;
    if (!base.contains(key)) throw SchemaError(p, "unknown key");
    json& b = base[key];
    if (b.is_object() && !kAtomic.count(key))
      merge_into(b, val, p);
    else
      b = val;
  }
}

/// Cursor into the resolved config that carries its path for diagnostics.
struct At {
  const json& j;
  std::string path;

  At operator[](const std::string& key) const {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    if (!j.contains(key)) throw SchemaError(path + "/" + key, "missing");
    return {j.at(key), path + "/" + key};
  }
  At operator[](std::size_t i) const { return {j.at(i), path + "/" + std::to_string(i)}; }

  bool is_null() const { return j.is_null(); }

  double real() const {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
    return v;
  }
  double positive() const {
    const double v = real();
    if (!(v > 0.0)) throw SchemaError(path, "expected a positive number");
    return v;
  }
  double in_range(double lo, double hi) const {
    const double v = real();
    if (!(v >= lo && v <= hi)) {
      std::ostringstream os;
      os << "expected a number in [" << lo << ", " << hi << "]";
      throw SchemaError(path, os.str());
    }
    return v;
  }
  std::uint64_t u64() const {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
    if (j.is_number_float()) {
      const double v = j.get<double>();
      if (v >= 0.0 && v < 9.0e15 && v == std::floor(v)) return static_cast<std::uint64_t>(v);
    }
    throw SchemaError(path, "expected a non-negative integer");
  }
  std::size_t count(std::size_t min = 1) const {
    const auto v = u64();
    if (v < min) throw SchemaError(path, "expected an integer >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
  }
  bool boolean() const {
    if (!j.is_boolean()) throw SchemaError(path, "expected true or false");
    return j.get<bool>();
  }
  std::string str() const {
    if (!j.is_string()) throw SchemaError(path, "expected a string");
    return j.get<std::string>();
  }
  const json& array(bool allow_empty = false) const {
    if (!j.is_array()) throw SchemaError(path, "expected an array");
    if (!allow_empty && j.empty()) throw SchemaError(path, "must not be empty");
    return j;
  }
  std::vector<double> reals(bool allow_empty = false) const {
    array(allow_empty);
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back((*this)[i].real());
    return out;
  }
  std::vector<double> times() const {
    auto v = reals();
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] < 0.0) throw SchemaError(path + "/" + std::to_string(i), "times must be non-negative");
    return v;
  }
  void keys(std::initializer_list<const char*> allowed) const {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    for (const auto& [key, val] : j.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) throw SchemaError(path + "/" + key, "unknown key");
    }
  }
  /// Runs a module parser, re-raising its errors at this path.
  template <class F>
  auto parse(F&& f) const {
    try {
      return f(j);
    } catch (const SchemaError&) {
      throw;
    } catch (const std::exception& e) {
      throw SchemaError(path, e.what());
    }
  }
};

std::vector<double> poly_of(const At& a) { return a.reals(); }

StarProbe star_probe_of(const At& a, const Manifold& m) {
  a.keys({"f", "rho"});
  StarProbe p;
  p.f = a["f"].parse([&](const json& j) { return trig_from_json(j, m.dim, m.side); });
  if (a.j.contains("rho")) p.rho_poly = poly_of(a["rho"]);
  return p;
}

MeckeProbe mecke_probe_of(const At& a, const Manifold& m) {
  a.keys({"name", "f", "rho", "g", "expected"});
  MeckeProbe p;
  p.name = a["name"].str();
  p.f = a["f"].parse([&](const json& j) { return trig_from_json(j, m.dim, m.side); });
  if (a.j.contains("rho")) p.rho_poly = poly_of(a["rho"]);
  if (a.j.contains("g") && !a["g"].is_null()) p.g = star_probe_of(a["g"], m);
  if (a.j.contains("expected") && !a["expected"].is_null()) {
    const At e = a["expected"];
    if (e.j.is_string()) {
      if (e.str() != "1/(1+beta)") throw SchemaError(e.path, "expected a number or \"1/(1+beta)\"");
      p.expected = 1.0 / (1.0 + m.beta);
    } else {
      p.expected = e.real();
    }
  }
  return p;
}

AtomicMeasure measure_of(const At& a, const Manifold& m) {
  a.keys({"weights", "tail", "locations"});
  return a.parse([&](const json& j) { return AtomicMeasure::from_json(m, j); });
}

MeasureBall ball_of(const At& a, const Manifold& m) {
  a.keys({"center", "radius"});
  return MeasureBall{measure_of(a["center"], m), a["radius"].positive()};
}

std::vector<double> grid_of(const At& task) {
  if (!task.j.contains("t_grid") || task["t_grid"].is_null())
    return uniform_grid(task["dt"].positive(), task["horizon"].positive());
  const At g = task["t_grid"];
  auto t = g.times();
  g.parse([&](const json&) {
    validate_grid(t);
    return 0;
  });
  return t;
}

template <class T, class F>
std::vector<T> basket_of(const At& a, F&& item) {
  std::vector<T> out;
  const auto& arr = a.array();
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(item(a[i]));
  return out;
}

json load_json_file(const std::filesystem::path& p, const std::string& diag_path) {
  std::ifstream in(p);
  if (!in) throw SchemaError(diag_path, "cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(diag_path, p.string() + ": " + e.what());
  }
}

}  // namespace

json default_config() { return json::parse(kDefaults); }

json RunConfig::canonical() const {
  json c = resolved;
  c.erase("workers");
  c.erase("out_dir");
  return c;
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical().dump())));
  return buf;
}

RunConfig load_config(const json& user_in, const std::filesystem::path& base_dir, const Overrides& ov) {
  if (!user_in.is_object()) throw SchemaError("", "config must be a JSON object");
  json user = user_in;
  json r = default_config();

  // Fixture files are merged first so inline keys override them.
  if (user.contains("tasks") && user["tasks"].is_object()) {
    for (const auto& name : kFixtureTasks) {
      if (!user["tasks"].contains(name)) continue;
      json& t = user["tasks"][name];
      if (!t.is_object() || !t.contains("fixture") || t["fixture"].is_null()) continue;
      const std::string p = "/tasks/" + name + "/fixture";
      if (!t["fixture"].is_string()) throw SchemaError(p, "expected a path string");
      const json fx = load_json_file(base_dir / t["fixture"].get<std::string>(), p);
      if (fx.is_object() && fx.contains("fixture")) throw SchemaError(p, "fixture files cannot nest fixtures");
      merge_into(r["tasks"][name], fx, p);
      t.erase("fixture");
    }
  }
  merge_into(r, user, "");
  if (ov.seed) r["seed"] = *ov.seed;
  if (ov.out_dir) r["out_dir"] = *ov.out_dir;
  if (ov.workers) r["workers"] = *ov.workers;
  if (ov.format) r["format"] = *ov.format;

  RunConfig c;
  c.base_dir = base_dir;
  const At root{r, ""};

  const At man = root["manifold"];
  const auto kind = man["kind"].str();
  if (kind == "FlatTorus")
    c.manifold.kind = ManifoldKind::FlatTorus;
  else if (kind == "Sphere2")
    c.manifold.kind = ManifoldKind::Sphere2;
  else
    throw SchemaError(man["kind"].path, "expected \"FlatTorus\" or \"Sphere2\"");
  c.manifold.dim = static_cast<int>(man["dim"].count(1));
  c.manifold.side = man["side"].positive();
  c.manifold.sphere_substeps = static_cast<int>(man["sphere_substeps"].count(1));
  c.manifold.beta = root["beta"].positive();
  man.parse([&](const json&) {
    c.manifold.validate();
    return 0;
  });

  const At tr = root["truncation"];
  if (tr["n_atoms"].j.is_string()) {
    if (tr["n_atoms"].str() != "auto") throw SchemaError(tr["n_atoms"].path, "expected a positive integer or \"auto\"");
  } else {
    c.truncation.n_atoms = tr["n_atoms"].count(1);
  }
  c.truncation.tail_policy = tr["tail_policy"].parse([](const json& j) { return parse_tail_policy(j.get<std::string>()); });

  c.mc.seed = root["seed"].u64();
  c.mc.workers = static_cast<unsigned>(root["workers"].count(1));
  c.mc.chunk_size = root["chunk_size"].count(1);
  c.n_sigma = root["n_sigma"].positive();
  c.out_dir = root["out_dir"].str();
  c.format = root["format"].str();
  if (c.format != "json" && c.format != "csv") throw SchemaError("/format", "expected \"json\" or \"csv\"");

  const Manifold& m = c.manifold;
  const At b = root["baskets"];
  // Every basket must be non-empty; the trigonometric ones need the flat torus.
  for (const char* name : {"mecke", "star_probes", "test_functions", "cylinders", "cylinders_v", "vector_fields",
                           "flows", "windows"})
    b[name].array();
  if (m.is_torus()) {
    c.mecke = basket_of<MeckeProbe>(b["mecke"], [&](const At& a) { return mecke_probe_of(a, m); });
    c.star_probes = basket_of<StarProbe>(b["star_probes"], [&](const At& a) { return star_probe_of(a, m); });
    c.test_functions = basket_of<TestFunction>(b["test_functions"], [&](const At& a) {
      return a.parse([&](const json& j) { return test_function_from_json(j, m.dim, m.side); });
    });
    auto cyl = [&](const At& a) { return a.parse([&](const json& j) { return cylinder_from_json(j, m.dim, m.side); }); };
    c.cylinders = basket_of<CylinderFunction>(b["cylinders"], cyl);
    c.cylinders_v = basket_of<CylinderFunction>(b["cylinders_v"], cyl);
    auto field = [&](const At& a) {
      return a.parse([&](const json& j) { return vector_field_from_json(j, m.dim, m.side); });
    };
    c.vector_fields = basket_of<VectorField>(b["vector_fields"], field);
    c.flows = basket_of<FlowMap>(b["flows"], [&](const At& a) {
      a.keys({"field", "time", "step"});
      return FlowMap{field(a["field"]), a["time"].real(), a["step"].positive()};
    });
    c.windows = basket_of<Window>(b["windows"], [&](const At& a) {
      a.keys({"lo", "hi"});
      Window w{a["lo"].reals(), a["hi"].reals()};
      if (w.lo.size() != static_cast<std::size_t>(m.dim) || w.hi.size() != w.lo.size())
        throw SchemaError(a.path, "window corners must have one coordinate per dimension");
      for (std::size_t i = 0; i < w.lo.size(); ++i)
        if (!(w.lo[i] >= 0.0 && w.lo[i] < w.hi[i] && w.hi[i] <= m.side))
          throw SchemaError(a.path, "window needs 0 <= lo < hi <= side in every coordinate");
      return w;
    });
  }

  const At tasks = root["tasks"];
  {
    const At t = tasks["sample-df"];
    auto& s = c.sample_df;
    s.n_dump = t["n_dump"].count(1);
    s.spectrum_betas = t["spectrum_betas"].reals();
    s.stick.n = t["stick"]["n"].count(1);
    s.stick.betas = t["stick"]["betas"].reals();
    s.stick.sum_tol = t["stick"]["sum_tol"].positive();
    s.stick.lengths.clear();
    const At len = t["stick"]["lengths"];
    len.array();
    for (std::size_t i = 0; i < len.j.size(); ++i) s.stick.lengths.push_back(len[i].count(1));
    s.stick.n_sigma = c.n_sigma;
    s.pd_n = t["pd"]["n"].count(2);
    s.pd_betas = t["pd"]["betas"].reals();
    for (const auto* v : {&s.spectrum_betas, &s.stick.betas, &s.pd_betas})
      for (double beta : *v)
        if (!(beta > 0.0)) throw SchemaError(t.path, "every beta must be positive");
  }
  c.mecke_n = tasks["verify-mecke"]["n"].count(2);
  {
    const At t = tasks["verify-sethuraman"];
    auto& s = c.sethuraman;
    s.opt.n = t["n"].count(2);
    s.opt.ks_alpha = t["ks_alpha"].in_range(1e-12, 0.5);
    s.opt.n_sigma = c.n_sigma;
    const At nc = t["negative_control"];
    s.control = nc["enabled"].boolean();
    s.control_shift = nc["beta_shift"].positive();
    s.control_n = nc["n"].count(2);
    s.control_min_z = nc["min_z"].positive();
  }
  c.ibp = IbpOptions{tasks["verify-ibp"]["n"].count(2), c.n_sigma};
  c.pqi = PqiOptions{tasks["verify-pqi"]["n"].count(2), c.n_sigma, tasks["verify-pqi"]["level"].count(1)};
  {
    const At t = tasks["verify-bmart"];
    c.bmart = BMartingaleOptions{t["n"].count(2), c.n_sigma, t["eps_small"].in_range(0.0, 1.0),
                                 t["eps_large"].in_range(0.0, 1.0)};
    if (!(c.bmart.eps_small < c.bmart.eps_large)) throw SchemaError(t.path, "eps_small must be below eps_large");
  }
  {
    const At t = tasks["simulate"];
    auto& s = c.simulate;
    s.t_grid = grid_of(t);
    s.n_paths = t["n_paths"].count(1);
    if (!t["initial"].is_null()) s.initial = measure_of(t["initial"], m);
    s.rescaling.n_points = t["rescaling"]["n_points"].count(1);
    s.rescaling.n_times = t["rescaling"]["n_times"].count(1);
    s.rescaling.rel_tol = t["rescaling"]["rel_tol"].positive();
  }
  {
    const At t = tasks["verify-martingale"];
    auto& s = c.martingale;
    s.t_grid = grid_of(t);
    s.n_paths = t["n_paths"].count(2);
    s.opt.n_sigma = c.n_sigma;
    s.opt.qv_rel_tol = t["qv_rel_tol"].positive();
    if (!t["split_time"].is_null()) s.opt.split_time = t["split_time"].positive();
    if (m.is_torus()) {
      s.u = t["u"].parse([&](const json& j) { return cylinder_from_json(j, m.dim, m.side); });
      const At g = t["orthogonality"];
      g.array(true);
      for (std::size_t i = 0; i < g.j.size(); ++i)
        s.orthogonality.push_back(g[i].parse([&](const json& j) { return cylinder_from_json(j, m.dim, m.side); }));
    }
  }
  c.invariance = GridTask{tasks["verify-invariance"]["n"].count(2), tasks["verify-invariance"]["t_list"].times()};
  {
    const At t = tasks["verify-ergodic"];
    c.ergodic.n = t["n"].count(2);
    c.ergodic.t_list = t["t_list"].times();
    c.ergodic.weights.s = t["weights"].reals();
    double total = 0.0;
    for (double s : c.ergodic.weights.s) {
      if (!(s > 0.0)) throw SchemaError(t["weights"].path, "weights must be positive");
      total += s;
    }
    if (total > 1.0 + 1e-12) throw SchemaError(t["weights"].path, "weights must sum to at most 1");
    c.ergodic.weights.tail = std::max(0.0, 1.0 - total);
    c.ergodic.weights.ordered = std::is_sorted(c.ergodic.weights.s.begin(), c.ergodic.weights.s.end(), std::greater<>());
  }
  c.energy_n = tasks["energy"]["n"].count(2);
  {
    const At t = tasks["w2"];
    t.keys({"fixture", "mu", "nu", "expected_cost", "tol"});
    if (!t["mu"].is_null()) c.w2.mu = measure_of(t["mu"], m);
    if (!t["nu"].is_null()) c.w2.nu = measure_of(t["nu"], m);
    if (!t["expected_cost"].is_null()) c.w2.expected_cost = t["expected_cost"].real();
    c.w2.tol = t["tol"].positive();
  }
  {
    const At t = tasks["varadhan"];
    auto& v = c.varadhan;
    if (!t["a1"].is_null()) v.a1 = ball_of(t["a1"], m);
    if (!t["a2"].is_null()) v.a2 = ball_of(t["a2"], m);
    v.opt.t_list = t["t_list"].reals();
    for (std::size_t i = 0; i < v.opt.t_list.size(); ++i)
      if (!(v.opt.t_list[i] > 0.0)) throw SchemaError(t["t_list"][i].path, "expected a positive time");
    v.opt.n = t["n"].count(1);
    v.opt.slack = t["slack"].in_range(0.0, 1.0);
    v.opt.max_members = t["max_members"].count(1);
    v.opt.n_sigma = c.n_sigma;
    if (!t["beta"].is_null()) v.beta = t["beta"].positive();
  }
  {
    const At t = tasks["rademacher"];
    auto& rd = c.rademacher;
    rd.opt.n = t["n"].count(1);
    rd.opt.h = t["h"].positive();
    rd.opt.curvature = t["curvature"].real();
    if (m.is_torus()) rd.refs = basket_of<AtomicMeasure>(t["refs"], [&](const At& a) { return measure_of(a, m); });
  }

  r["tasks"]["w2"]["fixture"] = nullptr;
  r["tasks"]["varadhan"]["fixture"] = nullptr;
  c.resolved = std::move(r);
  return c;
}

RunConfig load_config_file(const std::filesystem::path& path, const Overrides& ov) {
  const json j = load_json_file(path, "");
  return load_config(j, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."), ov);
}

}  // namespace dflab

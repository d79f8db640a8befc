#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dflab/config.hpp"
#include "dflab/harness.hpp"

namespace py = pybind11;
using namespace dflab;

namespace {

Manifold torus_of(double beta, int dim, double side) {
  Manifold m = Manifold::torus(dim, side, beta);
  m.validate();
  return m;
}

py::array_t<double> coords_array(const AtomicMeasure& eta) {
  py::array_t<double> out({eta.size(), eta.stride()});
  auto r = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < eta.size(); ++i)
    for (std::size_t k = 0; k < eta.stride(); ++k) r(i, k) = eta.location(i)[k];
  return out;
}

py::dict measure_dict(const AtomicMeasure& eta) {
  py::dict d;
  d["weights"] = py::array_t<double>(eta.size(), eta.weights().s.data());
  d["tail"] = eta.weights().tail;
  d["locations"] = coords_array(eta);
  return d;
}

AtomicMeasure measure_of(const Manifold& m, py::array_t<double, py::array::c_style | py::array::forcecast> w,
                         py::array_t<double, py::array::c_style | py::array::forcecast> x) {
  if (w.ndim() != 1 || x.ndim() != 2 || x.shape(0) != w.shape(0) ||
      x.shape(1) != static_cast<py::ssize_t>(m.coord_dim()))
    throw std::invalid_argument("weights must be (n,) and locations (n, dim)");
  WeightVector wv;
  wv.s.assign(w.data(), w.data() + w.size());
  wv.ordered = std::is_sorted(wv.s.begin(), wv.s.end(), std::greater<>());
  std::vector<double> c(x.data(), x.data() + x.size());
  for (std::size_t i = 0; i < wv.s.size(); ++i) wrap_in_place(m, std::span<double>(c.data() + i * m.coord_dim(), m.coord_dim()));
  return AtomicMeasure(m, std::move(wv), std::move(c));
}

/// Runs a subcommand on a JSON config and returns (exit code, {task: report}).
std::pair<int, std::string> run_json(const std::string& subcommand, const std::string& config_json,
                                     const std::string& base_dir, std::optional<std::uint64_t> seed,
                                     std::optional<std::string> out_dir, std::optional<unsigned> workers) {
  const Overrides ov{seed, std::move(out_dir), workers, std::nullopt};
  const RunConfig cfg = load_config(nlohmann::json::parse(config_json), base_dir, ov);
  if (!is_subcommand(subcommand)) throw SchemaError("", "unknown subcommand " + subcommand);
  std::vector<std::string> tasks;
  if (subcommand == "all")
    tasks.assign(subcommands().begin(), subcommands().end() - 1);
  else
    tasks.push_back(subcommand);
  for (const auto& t : tasks) check_task_inputs(t, cfg);
  nlohmann::json out = nlohmann::json::object();
  bool ok = true;
  for (const auto& t : tasks) {
    const auto r = run_task(t, cfg);
    ok = ok && r.report.passed();
    auto body = r.report.to_json();
    body["config_hash"] = cfg.hash();
    body["dir"] = r.dir.string();
    out[t] = std::move(body);
  }
  return {ok ? 0 : 1, out.dump()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dirichlet-Ferguson diffusion simulator and verification harness";

  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);

  m.def("auto_truncation", &auto_truncation, py::arg("beta"), py::arg("tol") = 1e-10,
        "Smallest n with (beta/(1+beta))^n <= tol.");

  m.def(
      "stick_break",
      [](const std::vector<double>& r) {
        const auto w = stick_break(r);
        return py::make_tuple(py::array_t<double>(w.s.size(), w.s.data()), w.tail);
      },
      py::arg("r"), "Weights and tail from sticks r in [0, 1].");

  m.def(
      "sample_df",
      [](double beta, int dim, double side, std::size_t n_atoms, const std::string& tail_policy,
         std::uint64_t seed, std::uint64_t index) {
        const Manifold man = torus_of(beta, dim, side);
        Truncation tr{n_atoms, parse_tail_policy(tail_policy)};
        Rng rng = make_rng(seed, "python/sample_df", index);
        return measure_dict(sample_dirichlet_ferguson(man, tr, rng));
      },
      py::arg("beta") = 1.0, py::arg("dim") = 2, py::arg("side") = 1.0, py::arg("n_atoms") = 0,
      py::arg("tail_policy") = "renormalize", py::arg("seed") = 20240601, py::arg("index") = 0,
      "One Dirichlet-Ferguson sample on the flat torus; n_atoms = 0 picks the automatic truncation.");

  m.def(
      "heat_kernel",
      [](const std::vector<double>& x, const std::vector<double>& y, double t, double side, double metric_scale) {
        Manifold man = Manifold::torus(static_cast<int>(x.size()), side);
        man.metric_scale = metric_scale;
        if (y.size() != x.size()) throw std::invalid_argument("x and y must have equal length");
        return heat_kernel_density(man, x, y, t);
      },
      py::arg("x"), py::arg("y"), py::arg("t"), py::arg("side") = 1.0, py::arg("metric_scale") = 1.0,
      "Transition density of Brownian motion (generator Laplacian / 2) w.r.t. normalized volume.");

  m.def(
      "w2",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> wa,
         py::array_t<double, py::array::c_style | py::array::forcecast> xa,
         py::array_t<double, py::array::c_style | py::array::forcecast> wb,
         py::array_t<double, py::array::c_style | py::array::forcecast> xb, double side) {
        const Manifold man = Manifold::torus(static_cast<int>(xa.ndim() == 2 ? xa.shape(1) : 0), side);
        const auto plan = w2(measure_of(man, wa, xa), measure_of(man, wb, xb));
        py::array_t<double> edges({plan.edges.size(), std::size_t{3}});
        auto r = edges.mutable_unchecked<2>();
        for (std::size_t k = 0; k < plan.edges.size(); ++k) {
          r(k, 0) = static_cast<double>(plan.edges[k].i);
          r(k, 1) = static_cast<double>(plan.edges[k].j);
          r(k, 2) = plan.edges[k].mass;
        }
        py::dict d;
        d["cost"] = plan.cost;
        d["w2"] = plan.w2;
        d["edges"] = edges;
        return d;
      },
      py::arg("weights_a"), py::arg("locations_a"), py::arg("weights_b"), py::arg("locations_b"),
      py::arg("side") = 1.0, "Exact W2 on the flat torus; edges rows are (i, j, mass).");

  m.def(
      "simulate",
      [](double beta, int dim, std::vector<double> t_grid, std::size_t n_paths, std::size_t n_atoms,
         std::uint64_t seed, unsigned workers) {
        PathSpec spec{torus_of(beta, dim, 1.0), Truncation{n_atoms, TailPolicy::renormalize}, std::nullopt,
                      std::move(t_grid), n_paths};
        MonteCarlo mc;
        mc.seed = seed;
        mc.workers = workers;
        std::vector<SimulationPath> paths;
        {
          py::gil_scoped_release release;
          paths = simulate(spec, mc);
        }
        const std::size_t nt = spec.t_grid.size();
        const std::size_t na = paths.empty() ? 0 : paths.front().states.front().size();
        py::array_t<double> weights({n_paths, na});
        py::array_t<double> locs({n_paths, nt, na, static_cast<std::size_t>(dim)});
        auto w = weights.mutable_unchecked<2>();
        auto x = locs.mutable_unchecked<4>();
        for (std::size_t p = 0; p < n_paths; ++p)
          for (std::size_t k = 0; k < nt; ++k)
            for (std::size_t i = 0; i < na; ++i) {
              const auto& eta = paths[p].states[k];
              if (k == 0) w(p, i) = eta.weight(i);
              for (int d = 0; d < dim; ++d) x(p, k, i, d) = eta.location(i)[d];
            }
        py::dict out;
        out["t"] = py::array_t<double>(nt, spec.t_grid.data());
        out["weights"] = weights;
        out["locations"] = locs;
        return out;
      },
      py::arg("beta"), py::arg("dim"), py::arg("t_grid"), py::arg("n_paths"), py::arg("n_atoms") = 0,
      py::arg("seed") = 20240601, py::arg("workers") = 1,
      "Stationary-start paths; weights are (paths, atoms), locations (paths, times, atoms, dim).");

  m.def("default_config_json", [] { return default_config().dump(); });

  m.def(
      "run_json",
      [](const std::string& subcommand, const std::string& config_json, const std::string& base_dir,
         std::optional<std::uint64_t> seed, std::optional<std::string> out_dir, std::optional<unsigned> workers) {
        py::gil_scoped_release release;
        return run_json(subcommand, config_json, base_dir, seed, std::move(out_dir), workers);
      },
      py::arg("subcommand"), py::arg("config_json"), py::arg("base_dir") = ".", py::arg("seed") = py::none(),
      py::arg("out_dir") = py::none(), py::arg("workers") = py::none());

  m.attr("subcommands") = subcommands();
}

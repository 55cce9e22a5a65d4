#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vrbound/concentration.hpp"
#include "vrbound/experiment.hpp"

namespace py = pybind11;
using namespace vrbound;

namespace {

GeometrySpec make_geometry(const std::string& kind, int d, double lo, double hi) {
  switch (geometry_kind_from_string(kind)) {
    case GeometryKind::EuclideanFree: return GeometrySpec::euclidean_free(d);
    case GeometryKind::EuclideanBox: return GeometrySpec::box(d, lo, hi);
    case GeometryKind::Simplex: return GeometrySpec::simplex(d);
  }
  throw GeometryError("unknown geometry");
}

py::dict constants_dict(const ProblemConstants& c) {
  py::dict d;
  d["sigma"] = c.sigma;
  d["L"] = c.L;
  d["ell"] = c.ell;
  d["gamma"] = c.gamma;
  d["alpha"] = c.alpha;
  d["G_update"] = c.G_update;
  d["delta_f"] = c.delta_f;
  return d;
}

ProblemConstants constants_from(const py::dict& d) {
  ProblemConstants c;
  auto get = [&](const char* k, double def) {
    return d.contains(k) ? d[k].cast<double>() : def;
  };
  c.sigma = get("sigma", 0.0);
  c.L = get("L", 0.0);
  c.ell = get("ell", 0.0);
  c.gamma = get("gamma", 0.0);
  c.alpha = get("alpha", 0.0);
  c.G_update = get("G_update", 1.0);
  c.delta_f = get("delta_f", 0.0);
  return c;
}

Json to_json(const py::object& o) {
  py::module_ json = py::module_::import("json");
  return Json::parse(json.attr("dumps")(o).cast<std::string>());
}

py::object from_json(const Json& j) {
  py::module_ json = py::module_::import("json");
  return json.attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "variance-reduced estimation bounds";

  py::register_exception<GeometryError>(m, "GeometryError", PyExc_ValueError);
  py::register_exception<BoundsError>(m, "BoundsError", PyExc_ValueError);

  py::class_<GeometrySpec>(m, "Geometry")
      .def(py::init(&make_geometry), py::arg("kind"), py::arg("dimension"),
           py::arg("lower") = -1.0, py::arg("upper") = 1.0)
      .def_property_readonly("kind", [](const GeometrySpec& g) { return to_string(g.kind); })
      .def_readonly("dimension", &GeometrySpec::dimension)
      .def_readonly("kappa", &GeometrySpec::kappa)
      .def("primal_norm", [](const GeometrySpec& g, const Vec& x) { return primal_norm(x, g); })
      .def("dual_norm", [](const GeometrySpec& g, const Vec& u) { return dual_norm(u, g); })
      .def("bregman", [](const GeometrySpec& g, const Vec& x, const Vec& y) {
        return bregman(x, y, g);
      })
      .def("prox_step", [](const GeometrySpec& g, const Vec& w, const Vec& u, double eta) {
        return prox_step(w, u, eta, g);
      })
      .def("prox_map", [](const GeometrySpec& g, const Vec& w, const Vec& u, double eta) {
        return prox_map(w, u, eta, g);
      })
      .def("is_feasible", [](const GeometrySpec& g, const Vec& w) { return is_feasible(w, g); })
      .def("center", [](const GeometrySpec& g) { return center_point(g); });

  m.def("confidence_factor", &confidence_factor, py::arg("delta"), py::arg("kappa") = 1.0);
  m.def("min_horizon", &min_horizon, py::arg("epsilon"), py::arg("delta"), py::arg("q"));
  m.def("sgm_threshold", &sgm_threshold, py::arg("R"), py::arg("eta"), py::arg("T"),
        py::arg("G"), py::arg("D"), py::arg("delta"), py::arg("envelope_E"));

  m.def(
      "envelope",
      [](const std::string& family, int case_id, const py::dict& constants, double delta,
         double kappa, int T, double eta, int B, double beta, double p, int E,
         const std::vector<int>& ts) {
        EnvelopeParams params{beta, p, E, eta, B, T};
        BoundEnvelope env = require_envelope(family_from_string(family), case_id, params,
                                             constants_from(constants), delta, kappa);
        std::vector<double> out;
        for (int t : ts) out.push_back(env(t));
        return out;
      },
      py::arg("family"), py::arg("case"), py::arg("constants"), py::arg("delta"),
      py::arg("kappa") = 1.0, py::arg("T") = 1, py::arg("eta") = 0.0, py::arg("B") = 1,
      py::arg("beta") = 0.0, py::arg("p") = 0.0, py::arg("E") = 0,
      py::arg("t") = std::vector<int>{0});

  m.def(
      "configure_from_table",
      [](const std::string& family, int case_id, const py::dict& constants, int T,
         double delta, double kappa) {
        TableConfig tc = configure_from_table(family_from_string(family), case_id,
                                              constants_from(constants), T, delta, kappa);
        py::dict d;
        d["eta"] = tc.config.eta;
        d["beta"] = tc.config.beta;
        d["p"] = tc.config.schedule.p;
        d["E"] = tc.config.schedule.E;
        d["batch_size"] = tc.config.batch_size;
        d["admissible"] = tc.selection.admissible;
        d["violated"] = tc.selection.violated;
        d["predicted_bound"] = tc.selection.predicted_bound;
        return d;
      },
      py::arg("family"), py::arg("case"), py::arg("constants"), py::arg("T"),
      py::arg("delta"), py::arg("kappa") = 1.0);

  m.def(
      "noisy_quadratic_constants",
      [](int d, double eig_min, double eig_max, std::uint64_t seed, double noise_std,
         double additive_std, double radius) {
        NoisyQuadratic q(GeometrySpec::euclidean_free(d),
                         random_spd_matrix(d, eig_min, eig_max, seed), noise_std, additive_std,
                         radius);
        return constants_dict(q.constants());
      },
      py::arg("dimension"), py::arg("eigen_min"), py::arg("eigen_max"), py::arg("seed"),
      py::arg("noise_std"), py::arg("additive_std"), py::arg("radius"));

  m.def(
      "freedman_violation_rate",
      [](int d, int n, double sigma0, double V, double gamma, std::int64_t trials,
         std::uint64_t seed, int workers) {
        MartingaleSpec s;
        s.dimension = d;
        s.geometry = GeometrySpec::euclidean_free(d);
        s.n = n;
        s.sigma0 = sigma0;
        FreedmanReport r = freedman_violation_rate(s, V, gamma, trials, seed, workers);
        py::dict out;
        out["rate"] = r.rate;
        out["violations"] = r.violations;
        out["bound"] = r.bound;
        out["ci_low"] = r.ci_low;
        out["ci_high"] = r.ci_high;
        return out;
      },
      py::arg("dimension"), py::arg("n"), py::arg("sigma0"), py::arg("V"), py::arg("gamma"),
      py::arg("trials"), py::arg("seed") = 0, py::arg("workers") = 1);

  m.def(
      "validate_config",
      [](const py::object& config) {
        ValidationResult v = validate_experiment(parse_config(to_json(config)));
        return from_json(v.resolved);
      },
      py::arg("config"));

  m.def(
      "run_experiment",
      [](const py::object& config, const std::string& out_dir, int workers, bool plots) {
        RunOptions opt{out_dir, workers, plots};
        ExperimentConfig cfg = parse_config(to_json(config));
        Json report;
        {
          py::gil_scoped_release release;
          report = run_experiment(cfg, opt);
        }
        return from_json(report);
      },
      py::arg("config"), py::arg("out_dir"), py::arg("workers") = 1, py::arg("plots") = false);

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ExperimentError& e) {
      PyErr_SetString(PyExc_ValueError,
                      ("[" + std::to_string(static_cast<int>(e.code())) + "] " + e.what()).c_str());
    }
  });
}

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "lyacanon/pipeline.hpp"
#include "lyacanon/repro.hpp"
#include "lyacanon/report.hpp"

namespace py = pybind11;
using namespace lyacanon;

namespace {

SystemDef load(const std::optional<std::string>& path) {
  return path ? load_system(*path) : bundled_example();
}

PipelineConfig config(double rel_tol, double abs_tol, double xi_box_scale, std::uint64_t seed) {
  PipelineConfig cfg;
  cfg.rel_tol = rel_tol;
  cfg.abs_tol = abs_tol;
  cfg.xi_box_scale = xi_box_scale;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_lyacanon, m) {
  m.doc() = "Native core of lyacanon";

  py::register_exception<Error>(m, "Error");

  m.def("parse_print", [](const std::string& text) { return to_string(parse(text)); });
  m.def("evaluate", [](const std::string& text, const std::map<std::string, double>& b) {
    Binding binding(b.begin(), b.end());
    return eval(parse(text), binding);
  });
  m.def("differentiate", [](const std::string& text, const std::string& var) {
    return to_string(diff(parse(text), var));
  });
  m.def("simplify", [](const std::string& text) { return to_string(simplify(parse(text))); });
  m.def("bundled_example_text", [] { return std::string(bundled_example_text()); });

  m.def(
      "validate",
      [](std::optional<std::string> path) {
        const SystemDef s = load(path);
        const ParamPoint xi = s.param_box.nominal();
        return validation_report(s, xi, validate_integrals(s, validation_grid(s, xi))).dump();
      },
      py::arg("path") = py::none());
  m.def(
      "canonize",
      [](std::optional<std::string> path, std::uint64_t seed) {
        const PipelineConfig cfg = config(1e-8, 1e-10, 1.0, seed);
        const CanonicalSystem cs = build_canonical(load(path), cascade_options(cfg));
        return canonical_report(cs, check_canonical(cs, cfg)).dump();
      },
      py::arg("path") = py::none(), py::arg("seed") = 0);
  m.def(
      "stability",
      [](std::optional<std::string> path, double xi_box_scale) {
        const PipelineConfig cfg = config(1e-8, 1e-10, xi_box_scale, 0);
        py::gil_scoped_release release;
        const CanonicalSystem cs = build_canonical(load(path), cascade_options(cfg));
        return stability_report(assess_stability(cs, cfg), cfg.lyapunov).dump();
      },
      py::arg("path") = py::none(), py::arg("xi_box_scale") = 1.0);
  m.def(
      "integrate_curve",
      [](const std::vector<double>& c, std::optional<std::string> path, double rel_tol,
         double abs_tol) {
        const SystemDef s = load(path);
        const PipelineConfig cfg = config(rel_tol, abs_tol, 1.0, 0);
        const CanonicalSystem cs = build_canonical(s, cascade_options(cfg));
        const std::vector<LevelVec> cs_grid{c};
        const std::vector<ParamPoint> xi{s.param_box.nominal()};
        const SweepResult r =
            sweep_original(s, &cs, cs_grid, xi, s.t0 + kDefaultSpan, integrate_options(cfg));
        const auto& p = r.points.at(0);
        if (!p.ok) throw Error(p.error);
        return py::make_tuple(p.trajectory.times, p.trajectory.states, p.trajectory.drift);
      },
      py::arg("c"), py::arg("path") = py::none(), py::arg("rel_tol") = 1e-8,
      py::arg("abs_tol") = 1e-10);
  m.def(
      "reproduce",
      [](double rel_tol, double abs_tol, std::uint64_t seed) {
        const PipelineConfig cfg = config(rel_tol, abs_tol, 1.0, seed);
        ReproResult r;
        {
          py::gil_scoped_release release;
          r = reproduce_example(cfg);
        }
        Json j;
        j["ok"] = r.ok;
        Json crit = Json::array();
        for (const auto& c : r.criteria) {
          crit.push_back({{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        }
        j["criteria"] = crit;
        return j.dump();
      },
      py::arg("rel_tol") = 1e-8, py::arg("abs_tol") = 1e-10, py::arg("seed") = 0);
}

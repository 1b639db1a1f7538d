#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "coneflow/error.hpp"
#include "coneflow/io.hpp"
#include "coneflow/report.hpp"
#include "coneflow/scenario.hpp"

namespace py = pybind11;
using namespace coneflow;

namespace {

using Nodes = py::array_t<double, py::array::c_style | py::array::forcecast>;

DiscreteCurve to_curve(const Nodes& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw InvalidInput("nodes must have shape (n, 2)");
  std::vector<Point2> p(static_cast<std::size_t>(a.shape(0)));
  auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) p[static_cast<std::size_t>(i)] = {r(i, 0), r(i, 1)};
  return DiscreteCurve(std::move(p));
}

py::array_t<double> to_array(const DiscreteCurve& c) {
  py::array_t<double> out({static_cast<py::ssize_t>(c.size()), py::ssize_t{2}});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < c.size(); ++i) {
    w(static_cast<py::ssize_t>(i), 0) = c[i].x;
    w(static_cast<py::ssize_t>(i), 1) = c[i].y;
  }
  return out;
}

EndMirrors mirrors_for(const DiscreteCurve& c, const std::optional<Cone>& cone) {
  return cone ? cone_mirrors(*cone) : free_end_mirrors(c);
}

py::dict residuals_dict(const BoundaryResiduals& r) {
  py::dict d;
  d["neumann_minus"] = r.neumann_minus;
  d["neumann_plus"] = r.neumann_plus;
  d["flux_minus"] = r.flux_minus;
  d["flux_plus"] = r.flux_plus;
  d["on_ray_minus"] = r.on_ray_minus;
  d["on_ray_plus"] = r.on_ray_plus;
  return d;
}

py::dict series_dict(const Series& s) {
  const auto& names = series_columns();
  std::vector<std::vector<double>> cols(names.size());
  for (const auto& f : s.frames) {
    const auto v = frame_values(f);
    for (std::size_t j = 0; j < v.size(); ++j) cols[j].push_back(v[j]);
  }
  py::dict d;
  for (std::size_t j = 0; j < names.size(); ++j)
    d[py::str(names[j])] = py::array_t<double>(static_cast<py::ssize_t>(cols[j].size()), cols[j].data());
  return d;
}

py::object json_to_python(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

FlowSpec spec_of(const std::string& mode, double lambda) {
  FlowSpec s{parse_flow_mode(mode), lambda};
  validate(s);
  return s;
}

}  // namespace

PYBIND11_MODULE(_coneflow, m) {
  m.doc() = "Elastic flows of open planar curves in a cone";
  m.attr("engine_version") = kEngineVersion;

  static py::exception<Error> base(m, "ConeflowError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
  py::register_exception<StepperFailure>(m, "StepperFailure", base.ptr());
  py::register_exception<TipCollision>(m, "TipCollision", base.ptr());
  py::register_exception<DegenerateCurvature>(m, "DegenerateCurvature", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  py::class_<Cone>(m, "Cone")
      .def(py::init<double, double>(), py::arg("theta1"), py::arg("theta2") = 0.0)
      .def_property_readonly("theta1", &Cone::theta1)
      .def_property_readonly("theta2", &Cone::theta2)
      .def_property_readonly("omega", &Cone::omega)
      .def("__repr__", [](const Cone& c) {
        return "Cone(theta1=" + std::to_string(c.theta1()) + ", theta2=" + std::to_string(c.theta2()) + ")";
      });

  m.def("centred_arc", [](const Cone& c, double r, int n) { return to_array(centred_arc(c, r, n)); },
        py::arg("cone"), py::arg("r"), py::arg("n"));
  m.def("resample_uniform", [](const Nodes& a, int n) { return to_array(resample_uniform(to_curve(a), n)); },
        py::arg("nodes"), py::arg("n"));
  m.def("arc_length", [](const Nodes& a) { return arc_length(to_curve(a)); }, py::arg("nodes"));
  m.def("enclosed_area", [](const Nodes& a) { return enclosed_area(to_curve(a)); }, py::arg("nodes"));
  m.def(
      "curvature",
      [](const Nodes& a, std::optional<Cone> cone) {
        const auto c = to_curve(a);
        return py::array_t<double>(py::cast(curvature(c, mirrors_for(c, cone)).values));
      },
      py::arg("nodes"), py::arg("cone") = py::none());
  m.def(
      "rotation_number",
      [](const Nodes& a, std::optional<Cone> cone) {
        const auto c = to_curve(a);
        return rotation_number(c, mirrors_for(c, cone));
      },
      py::arg("nodes"), py::arg("cone") = py::none());
  m.def("boundary_residuals", [](const Nodes& a, const Cone& c) { return residuals_dict(boundary_residuals(to_curve(a), c)); },
        py::arg("nodes"), py::arg("cone"));
  m.def(
      "normal_speed",
      [](const Nodes& a, const Cone& cone, const std::string& mode, double lambda) {
        return py::array_t<double>(py::cast(normal_speed(to_curve(a), spec_of(mode, lambda), cone_mirrors(cone)).values));
      },
      py::arg("nodes"), py::arg("cone"), py::arg("mode"), py::arg("lam") = 0.0);
  m.def(
      "energies",
      [](const Nodes& a, const Cone& cone, const std::string& mode, double lambda) {
        const auto e = energies(to_curve(a), cone_mirrors(cone), spec_of(mode, lambda));
        return py::make_tuple(e.E0, e.E_lambda);
      },
      py::arg("nodes"), py::arg("cone"), py::arg("mode"), py::arg("lam") = 0.0);

  m.def("length_bounds", [](double e, double w, double lam) {
    const auto b = length_bounds(e, w, lam);
    return py::make_tuple(b.lower, b.upper);
  });
  m.def("smallness_penalised", [](double w, double lo, double up, double lam) {
    const auto t = smallness_penalised(w, lo, up, lam);
    return py::make_tuple(t.value, t.hypothesis_ok);
  });
  m.def("smallness_constrained", [](double w, double L0) {
    const auto t = smallness_constrained(w, L0);
    return py::make_tuple(t.value, t.hypothesis_ok);
  });
  m.def("epsilon_star", &epsilon_star, py::arg("omega"));
  m.def("omega_bound_penalised", &omega_bound_penalised);
  m.def("omega_bound_constrained", &omega_bound_constrained);

  py::class_<ScenarioConfig>(m, "Config")
      .def_property_readonly("omega", [](const ScenarioConfig& c) { return c.cone().omega(); })
      .def_property_readonly("cone", &ScenarioConfig::cone)
      .def_property_readonly("mode", [](const ScenarioConfig& c) { return to_string(c.flow.mode); })
      .def_property_readonly("lam", [](const ScenarioConfig& c) { return c.flow.lambda; })
      .def_readonly("N", &ScenarioConfig::N)
      .def_readonly("t_end", &ScenarioConfig::t_end)
      .def_property_readonly("hash", [](const ScenarioConfig& c) { return config_hash(c); })
      .def("to_text", [](const ScenarioConfig& c) { return config_to_text(c); })
      .def(
          "with_overrides",
          [](const ScenarioConfig& c, const std::map<std::string, std::string>& kv) {
            return with_overrides(c, {kv.begin(), kv.end()});
          },
          py::arg("overrides"))
      .def("__repr__", [](const ScenarioConfig& c) { return "Config(" + config_hash(c) + ")"; });

  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));
  m.def("gen_initial", [](const ScenarioConfig& c) { return to_array(gen_initial(c)); }, py::arg("config"));
  m.def(
      "check",
      [](const ScenarioConfig& c) {
        const auto r = check_thresholds(c);
        py::dict d = json_to_python(threshold_json(r.report));
        d["mode_j"] = r.mode_j;
        d["max_compliant_amplitude"] = r.max_compliant_amplitude;
        return d;
      },
      py::arg("config"));
  m.def(
      "run",
      [](const ScenarioConfig& c) {
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run(c);
        }
        py::dict d;
        d["status"] = to_string(r.status);
        d["message"] = r.message;
        d["steps"] = r.steps;
        d["wall_seconds"] = r.wall_seconds;
        d["series"] = series_dict(r.series);
        d["thresholds"] = json_to_python(threshold_json(r.thresholds));
        d["final_nodes"] = r.final_state ? py::object(to_array(r.final_state->curve)) : py::object(py::none());
        d["report"] = json_to_python(report_json(evaluate_run(c, r.series, r.status, r.thresholds)));
        return d;
      },
      py::arg("config"));
  m.def("read_series", [](const std::string& path) { return series_dict(read_series(path)); }, py::arg("path"));
  m.def("series_columns", &series_columns);

  py::class_<FlowState>(m, "Flow")
      .def(py::init([](const Nodes& a, const Cone& cone, const std::string& mode, double lambda, double dt) {
             StepperOptions o;
             o.dt = dt;
             return make_state(to_curve(a), cone, spec_of(mode, lambda), o);
           }),
           py::arg("nodes"), py::arg("cone"), py::arg("mode"), py::arg("lam") = 0.0, py::arg("dt") = 0.0)
      .def_readonly("time", &FlowState::time)
      .def_readonly("dt", &FlowState::dt_current)
      .def_readonly("steps", &FlowState::step_count)
      .def_property_readonly("nodes", [](const FlowState& s) { return to_array(s.curve); })
      .def("stability_dt", [](const FlowState& s) { return stability_dt(s); })
      .def(
          "step",
          [](FlowState& s, std::optional<double> dt) {
            auto [next, rep] = step(s, dt.value_or(s.dt_current));
            s = std::move(next);
            return rep.dt_used;
          },
          py::arg("dt") = py::none())
      .def(
          "step_explicit",
          [](FlowState& s, std::optional<double> dt) {
            auto [next, rep] = step_explicit(s, dt.value_or(stability_dt(s)));
            s = std::move(next);
            return rep.dt_used;
          },
          py::arg("dt") = py::none())
      .def(
          "advance",
          [](FlowState& s, double t) {
            py::gil_scoped_release release;
            while (s.time < t) s = step(s, std::min(s.dt_current, t - s.time)).first;
          },
          py::arg("t"));
}

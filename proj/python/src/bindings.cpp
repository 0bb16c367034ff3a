#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qmem/analysis.hpp"
#include "qmem/errors.hpp"
#include "qmem/scenario.hpp"
#include "qmem/trap_model.hpp"

namespace py = pybind11;
using namespace qmem;

namespace {

ScenarioConfig make_config(const std::optional<std::string>& preset_name, const std::optional<std::string>& config_path,
                           const std::map<std::string, std::string>& settings) {
    if (preset_name && config_path) throw InvalidArgument("give either preset or config, not both");
    ScenarioConfig c = config_path ? load_config(*config_path) : preset(preset_name.value_or("centered"));
    apply_settings(c, {settings.begin(), settings.end()});
    return c;
}

py::dict fit_dict(const FitResult& f) {
    py::dict params, errors;
    for (std::size_t i = 0; i < f.names.size(); ++i) {
        params[py::str(f.names[i])] = f.params[i];
        errors[py::str(f.names[i])] = f.errors[i];
    }
    py::dict d;
    d["params"] = params;
    d["errors"] = errors;
    d["rss"] = f.rss;
    d["iterations"] = f.iterations;
    d["converged"] = f.converged;
    d["degenerate"] = f.degenerate;
    d["collapsed"] = f.collapsed;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Cold-atom quantum memory storage-efficiency simulator";

    py::class_<EfficiencyCurve>(m, "Curve")
        .def(py::init<>())
        .def_readwrite("times", &EfficiencyCurve::times)
        .def_readwrite("overlap", &EfficiencyCurve::overlap)
        .def_readwrite("dephasing", &EfficiencyCurve::dephasing)
        .def_readwrite("loss", &EfficiencyCurve::loss)
        .def_readwrite("total", &EfficiencyCurve::total)
        .def("__len__", &EfficiencyCurve::size)
        .def("column", [](const EfficiencyCurve& c, const std::string& name) { return curve_column(c, name); });

    py::class_<ScenarioResult>(m, "ScenarioResult")
        .def_readonly("curve", &ScenarioResult::curve)
        .def_readonly("overlap_stderr", &ScenarioResult::overlap_stderr)
        .def_readonly("noise_floor", &ScenarioResult::noise_floor)
        .def_readonly("spin_coherence", &ScenarioResult::spin_coherence)
        .def_readonly("motional_coherence", &ScenarioResult::motional_coherence)
        .def_readonly("participating_atoms", &ScenarioResult::participating_atoms);

    m.def("preset_names", &preset_names);

    m.def(
        "simulate",
        [](std::optional<std::string> preset_name, std::optional<std::string> config,
           std::map<std::string, std::string> settings, std::optional<std::uint64_t> seed,
           std::optional<std::size_t> atoms, unsigned workers) {
            ScenarioConfig c = make_config(preset_name, config, settings);
            if (seed) c.seed = *seed;
            if (atoms) c.atoms = *atoms;
            c.workers = workers;
            c.validate();
            py::gil_scoped_release release;
            return run_scenario(c);
        },
        py::arg("preset") = py::none(), py::arg("config") = py::none(),
        py::arg("settings") = std::map<std::string, std::string>{}, py::arg("seed") = py::none(),
        py::arg("atoms") = py::none(), py::arg("workers") = 0u);

    m.def("curve_csv", &curve_csv, py::arg("curve"));
    m.def("read_curve_csv", &read_curve_csv_file, py::arg("path"));
    m.def(
        "render_svg",
        [](const EfficiencyCurve& curve, bool log_y, std::optional<std::vector<std::string>> columns) {
            RenderOptions o;
            o.log_y = log_y;
            if (columns) o.columns = *columns;
            return render_svg(curve, o);
        },
        py::arg("curve"), py::arg("log_y") = false, py::arg("columns") = py::none());

    m.def(
        "fit_exponential",
        [](const std::vector<double>& t, const std::vector<double>& y, bool offset) {
            FitOptions o;
            o.offset = offset;
            return fit_dict(fit_exponential(t, y, o));
        },
        py::arg("t"), py::arg("y"), py::arg("offset") = false);
    m.def(
        "fit_double_exponential",
        [](const std::vector<double>& t, const std::vector<double>& y) { return fit_dict(fit_double_exponential(t, y)); },
        py::arg("t"), py::arg("y"));

    m.def(
        "find_extrema",
        [](const std::vector<double>& t, const std::vector<double>& y, std::size_t window, double noise_floor) {
            py::list out;
            for (const auto& e : find_extrema(t, y, window, noise_floor).extrema) {
                py::dict d;
                d["time"] = e.time;
                d["value"] = e.value;
                d["kind"] = e.kind == ExtremumKind::min ? "min" : "max";
                d["prominence"] = e.prominence;
                out.append(d);
            }
            return out;
        },
        py::arg("t"), py::arg("y"), py::arg("window") = 3, py::arg("noise_floor") = 0.0);

    m.def(
        "compensation_power",
        [](double power, double trap_nm, bool d2_only) {
            CompensationSpec s;
            s.trap_power = power;
            s.trap_wavelength = trap_nm * 1e-9;
            s.include_d1 = !d2_only;
            return optimal_compensation_power(s);
        },
        py::arg("power") = 1.9, py::arg("trap_nm") = 775.0, py::arg("d2_only") = false);
    m.def("residual_lifetime", &residual_lifetime, py::arg("tau_uncompensated"), py::arg("epsilon"));
}

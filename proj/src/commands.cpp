#include "qmem/commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "qmem/analysis.hpp"
#include "qmem/errors.hpp"
#include "qmem/scenario.hpp"
#include "qmem/trap_model.hpp"

namespace qmem {

namespace {

std::string fixed(double v, int decimals) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    return std::string(buf, res.ptr);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write " + path);
    f << text;
    if (!f) throw InvalidArgument("error while writing " + path);
}

void print_param(std::ostream& out, const std::string& key, double value, double error, int decimals) {
    out << key << '=' << fixed(value, decimals) << '\n';
    out << key << "_err=" << fixed(error, decimals) << '\n';
}

const char* yes_no(bool b) { return b ? "true" : "false"; }

}  // namespace

int guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const ConfigurationError& e) {
        err << "error: configuration: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(
        [&] {
            if (args.preset.has_value() == args.config.has_value())
                throw InvalidArgument("simulate: give exactly one of --preset or --config");
            ScenarioConfig config = args.preset ? preset(*args.preset) : load_config(*args.config);
            if (args.seed) config.seed = *args.seed;
            if (args.atoms) config.atoms = *args.atoms;
            if (args.out) config.out_csv = *args.out;
            if (args.svg) config.out_svg = *args.svg;
            if (args.workers) config.workers = *args.workers;
            config.validate();

            const ScenarioResult result = run_scenario(config);
            const std::string csv = curve_csv(result.curve);
            if (config.out_csv.empty()) {
                out << csv;
            } else {
                write_text_file(config.out_csv, csv);
            }
            if (!config.out_svg.empty()) {
                // Rendered from the CSV text so the chart matches the file.
                std::istringstream in(csv);
                write_text_file(config.out_svg, render_svg(read_curve_csv(in)));
            }
            if (!config.out_csv.empty()) {
                out << "scenario=" << config.name << '\n';
                out << "rows=" << result.curve.size() << '\n';
                out << "noise_floor=" << format_number(result.noise_floor) << '\n';
                out << "participating_atoms=" << fixed(result.participating_atoms, 1) << '\n';
                out << "csv=" << config.out_csv << '\n';
                if (!config.out_svg.empty()) out << "svg=" << config.out_svg << '\n';
            }
            return kExitOk;
        },
        err);
}

int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(
        [&] {
            const EfficiencyCurve curve = read_curve_csv_file(args.input);
            const std::vector<double> t = curve_column(curve, "t_ms");
            const std::vector<double> y = curve_column(curve, args.column);
            FitOptions opt;
            opt.offset = args.offset;
            FitResult fit;
            if (args.model == "exp") {
                fit = fit_exponential(t, y, opt);
                out << "model=exp\n";
                out << "column=" << args.column << '\n';
                out << "points=" << t.size() << '\n';
                print_param(out, "A", fit.params[0], fit.errors[0], 6);
                print_param(out, "tau_ms", fit.params[1], fit.errors[1], 3);
                if (args.offset) print_param(out, "C", fit.params[2], fit.errors[2], 6);
            } else if (args.model == "dexp") {
                if (args.offset) throw InvalidArgument("fit: --offset applies to the exponential model only");
                fit = fit_double_exponential(t, y, opt);
                out << "model=dexp\n";
                out << "column=" << args.column << '\n';
                out << "points=" << t.size() << '\n';
                print_param(out, "f", fit.params[0], fit.errors[0], 6);
                print_param(out, "tau1_ms", fit.params[1], fit.errors[1], 3);
                print_param(out, "tau2_ms", fit.params[2], fit.errors[2], 3);
                out << "degenerate=" << yes_no(fit.degenerate) << '\n';
                out << "collapsed=" << yes_no(fit.collapsed) << '\n';
            } else {
                throw InvalidArgument("fit: model must be exp or dexp");
            }
            out << "rss=" << format_number(fit.rss) << '\n';
            out << "iterations=" << fit.iterations << '\n';
            out << "converged=" << yes_no(fit.converged) << '\n';
            if (!fit.converged) {
                err << "error: fit did not converge\n";
                return kExitNumerical;
            }
            return kExitOk;
        },
        err);
}

int cmd_extrema(const ExtremaArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(
        [&] {
            const EfficiencyCurve curve = read_curve_csv_file(args.input);
            const std::vector<double> y = curve_column(curve, args.column);
            const ExtremaReport report = find_extrema(curve.times, y, args.window, args.noise_floor);
            out << "column=" << args.column << '\n';
            out << "noise_floor=" << format_number(report.noise_floor) << '\n';
            out << "extrema=" << report.size() << '\n';
            for (const Extremum& e : report.extrema) {
                out << "kind=" << (e.kind == ExtremumKind::min ? "min" : "max") << " t_ms=" << fixed(e.time * 1e3, 3)
                    << " value=" << format_number(e.value) << " prominence=" << format_number(e.prominence) << '\n';
            }
            return kExitOk;
        },
        err);
}

int cmd_compensation(const CompensationArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(
        [&] {
            if (!(args.trap_nm > 0.0) || !std::isfinite(args.trap_nm))
                throw InvalidArgument("compensation: --trap-nm must be positive");
            if (!(args.tau0_ms > 0.0)) throw InvalidArgument("compensation: --tau0-ms must be positive");
            CompensationSpec spec;
            spec.trap_power = args.power;
            spec.trap_wavelength = args.trap_nm * 1e-9;
            spec.include_d1 = !args.d2_only;
            const double p = optimal_compensation_power(spec);
            const auto& k = default_constants();

            out << "trap_power_W=" << format_number(args.power) << '\n';
            out << "trap_wavelength_nm=" << format_number(args.trap_nm) << '\n';
            out << "detuning_D2_GHz=" << fixed(detuning_from_D2(spec.trap_wavelength, k) / (2e9 * std::numbers::pi), 1)
                << '\n';
            out << "include_D1=" << yes_no(spec.include_d1) << '\n';
            out << "comp_power_uW=" << fixed(p * 1e6, 3) << '\n';

            const RingPotential ring{};
            const ShiftField field = ShiftField::from_trap(ring, spec.trap_wavelength, k);
            out << "peak_shift_Hz=" << fixed(field(Vec2{ring.ring_radius, 0.0}) / (2.0 * std::numbers::pi), 1)
                << '\n';

            double tau0 = args.tau0_ms * 1e-3;
            out << "tau0_ms=" << fixed(args.tau0_ms, 3) << '\n';
            if (args.simulate_tau0) {
                DephasingEnsemble ens;
                ens.n_atoms = args.tau0_atoms;
                ens.trap_wavelength = spec.trap_wavelength;
                const auto t = dephasing_time(ring, ens);
                if (t) {
                    out << "tau0_model_ms=" << fixed(*t * 1e3, 3) << '\n';
                } else {
                    out << "tau0_model_ms=inf\n";
                }
            }
            for (double eps : {0.01, 0.024, 0.10}) {
                const auto tau = residual_lifetime(tau0, eps);
                out << "residual eps=" << fixed(eps, 3) << " tau_ms=" << fixed(*tau * 1e3, 3) << '\n';
            }
            return kExitOk;
        },
        err);
}

int cmd_render(const RenderArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(
        [&] {
            const EfficiencyCurve curve = read_curve_csv_file(args.input);
            if (curve.size() == 0) throw InvalidArgument("render: " + args.input + " has no data rows");
            RenderOptions opt;
            opt.log_y = args.log_y;
            if (!args.columns.empty()) opt.columns = args.columns;
            for (const auto& c : opt.columns) {
                if (c == "t_ms") throw InvalidArgument("render: t_ms is the x axis, not a plottable column");
                (void)curve_column(curve, c);
            }
            write_text_file(args.out, render_svg(curve, opt));
            out << "svg=" << args.out << '\n';
            out << "polylines=" << opt.columns.size() << '\n';
            return kExitOk;
        },
        err);
}

}  // namespace qmem

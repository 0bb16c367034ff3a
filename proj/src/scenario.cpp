#include "qmem/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "qmem/errors.hpp"
#include "qmem/trap_model.hpp"

namespace qmem {

namespace {

constexpr double kWriteWavelength = 780.241e-9;

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

double parse_double(std::string_view key, std::string_view text) {
    text = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
        throw ConfigurationError(std::string(key), "expected a number, got '" + std::string(text) + "'");
    return v;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view text) {
    text = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw ConfigurationError(std::string(key), "expected a non-negative integer, got '" + std::string(text) + "'");
    return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
    const std::string v = lower(trim(text));
    if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
    if (v == "off" || v == "false" || v == "no" || v == "0") return false;
    throw ConfigurationError(std::string(key), "expected on/off, got '" + std::string(text) + "'");
}

WallModel parse_wall(std::string_view key, std::string_view text) {
    const std::string v = lower(trim(text));
    if (v == "hard") return WallModel::hard;
    if (v == "soft") return WallModel::soft;
    throw ConfigurationError(std::string(key), "expected hard or soft, got '" + std::string(text) + "'");
}

std::vector<double> parse_list(std::string_view key, std::string_view text, double unit) {
    std::vector<double> out;
    while (!text.empty()) {
        const auto comma = text.find(',');
        out.push_back(parse_double(key, text.substr(0, comma)) * unit);
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

struct GridParams {
    double start, stop, step;
};

GridParams current_grid(const ScenarioConfig& c) {
    if (c.times.size() >= 2) return {c.times.front(), c.times.back(), c.times[1] - c.times[0]};
    if (c.times.size() == 1) return {c.times.front(), c.times.front(), 0.4e-3};
    return {0.0, 20e-3, 0.4e-3};
}

struct PartialGrid {
    std::optional<double> start, stop, step;
    std::string last_key;

    void set(const std::string& key, double value) {
        if (key == "t_start_ms") start = value;
        if (key == "t_stop_ms") stop = value;
        if (key == "t_step_ms") step = value;
        last_key = key;
    }
    bool any() const { return start || stop || step; }
};

bool is_grid_key(std::string_view k) { return k == "t_start_ms" || k == "t_stop_ms" || k == "t_step_ms"; }

void apply_grid(ScenarioConfig& c, const PartialGrid& p) {
    GridParams g = current_grid(c);
    if (p.start) g.start = *p.start;
    if (p.stop) g.stop = *p.stop;
    if (p.step) g.step = *p.step;
    try {
        c.times = time_grid(g.start, g.stop, g.step);
    } catch (const ConfigurationError&) {
        throw ConfigurationError(p.last_key, "need t_start_ms <= t_stop_ms and t_step_ms > 0");
    }
}

ScenarioConfig breathing_base() {
    ScenarioConfig c;
    c.atoms = 100000;
    c.spatial = SpatialModel::uniform;
    c.times = time_grid(0.0, 24e-3, 0.4e-3);
    c.tau_dephase = 28e-3;
    return c;
}

}  // namespace

std::vector<double> time_grid(double start, double stop, double step) {
    if (!(step > 0.0) || !(stop >= start)) throw ConfigurationError("times", "need start <= stop and step > 0");
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i) t[i] = start + static_cast<double>(i) * step;
    return t;
}

void ScenarioConfig::validate() const {
    if (atoms == 0) throw ConfigurationError("atoms", "must be at least 1");
    if (!(temperature >= 0.0) || !std::isfinite(temperature))
        throw ConfigurationError("temperature_uK", "must be finite and non-negative");
    trap.validate();
    if (gravity_on && (!(gravity >= 0.0) || !std::isfinite(gravity)))
        throw ConfigurationError("gravity_m_s2", "must be finite and non-negative");
    if (!(signal_waist > 0.0)) throw ConfigurationError("signal_waist_um", "must be positive");
    if (!(write_waist > 0.0)) throw ConfigurationError("write_waist_um", "must be positive");
    if (!std::isfinite(mode_center.x)) throw ConfigurationError("mode_x_um", "must be finite");
    if (!std::isfinite(mode_center.y)) throw ConfigurationError("mode_y_um", "must be finite");
    if (times.empty()) throw ConfigurationError("times_ms", "need at least one storage time");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= 0.0) || !std::isfinite(times[i]))
            throw ConfigurationError("times_ms", "storage times must be finite and non-negative");
        if (i > 0 && !(times[i] > times[i - 1])) throw ConfigurationError("times_ms", "storage times must increase");
    }
    if (!(tau_dephase > 0.0)) throw ConfigurationError("tau_dephase_ms", "must be positive");
    if (!(survival.fast_fraction >= 0.0 && survival.fast_fraction <= 1.0))
        throw ConfigurationError("loss_fast_fraction", "must lie in [0, 1]");
    if (!(survival.tau_fast > 0.0)) throw ConfigurationError("loss_tau_fast_ms", "must be positive");
    if (!(survival.tau_slow > 0.0)) throw ConfigurationError("loss_tau_slow_ms", "must be positive");
    if (grid.nx < 8 || grid.ny < 8) throw ConfigurationError("grid_cells", "need at least 8 cells per axis");
    if (!(grid.x_max > grid.x_min && grid.y_max > grid.y_min))
        throw ConfigurationError("grid_half_um", "must be positive");
    if (!(bandwidth > 0.0)) throw ConfigurationError("bandwidth_um", "must be positive");
    if (!(dt > 0.0)) throw ConfigurationError("dt_us", "must be positive");
    if (!(trap_wavelength > 0.0)) throw ConfigurationError("trap_wavelength_nm", "must be positive");
    if (!(shift_epsilon >= 0.0 && shift_epsilon <= 1.0)) throw ConfigurationError("shift_epsilon", "must lie in [0, 1]");
    if (jackknife_groups < 2) throw ConfigurationError("jackknife_groups", "need at least 2 groups");
    if (jackknife_groups > atoms) throw ConfigurationError("jackknife_groups", "more groups than atoms");
    if (smoothing_window == 0 || smoothing_window % 2 == 0)
        throw ConfigurationError("smoothing_window", "must be odd");
}

std::vector<std::string> preset_names() { return {"centered", "offset60", "shortdecay", "longdecay"}; }

ScenarioConfig preset(std::string_view name) {
    if (name == "centered") {
        ScenarioConfig c = breathing_base();
        c.name = "centered";
        return c;
    }
    if (name == "offset60") {
        ScenarioConfig c = breathing_base();
        c.name = "offset60";
        c.mode_center = {0.0, 60e-6};
        return c;
    }
    if (name == "shortdecay") {
        ScenarioConfig c;
        c.name = "shortdecay";
        c.atoms = 50000;
        c.spatial = SpatialModel::uniform;
        c.times = time_grid(0.0, 5e-3, 0.1e-3);
        c.tau_dephase = 0.67e-3;
        return c;
    }
    if (name == "longdecay") {
        ScenarioConfig c;
        c.name = "longdecay";
        c.atoms = 20000;
        c.spatial = SpatialModel::uniform;
        c.times = time_grid(0.0, 100e-3, 2.5e-3);
        c.tau_dephase = 28e-3;
        return c;
    }
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigurationError("preset", "unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

void apply_setting(ScenarioConfig& c, std::string_view key, std::string_view value) {
    const std::string k(key);
    if (k == "name") {
        c.name = std::string(trim(value));
    } else if (k == "atoms") {
        c.atoms = parse_unsigned(k, value);
    } else if (k == "temperature_uK") {
        c.temperature = parse_double(k, value) * 1e-6;
    } else if (k == "trap_radius_um") {
        c.trap.radius = parse_double(k, value) * 1e-6;
        c.trap.ring.ring_radius = c.trap.radius;
    } else if (k == "trap_length_mm") {
        c.trap.length = parse_double(k, value) * 1e-3;
    } else if (k == "wall_model") {
        c.trap.wall = parse_wall(k, value);
    } else if (k == "endcap_model") {
        c.trap.endcap = parse_wall(k, value);
    } else if (k == "wall_width_um") {
        c.trap.ring.wall_width = parse_double(k, value) * 1e-6;
    } else if (k == "peak_depth_uK") {
        c.trap.ring.peak_depth = parse_double(k, value) * 1e-6;
    } else if (k == "endcap_depth_uK") {
        c.trap.ring.endcap_depth = parse_double(k, value) * 1e-6;
    } else if (k == "gravity") {
        c.gravity_on = parse_bool(k, value);
    } else if (k == "gravity_m_s2") {
        c.gravity = parse_double(k, value);
    } else if (k == "spatial") {
        const std::string v = lower(trim(value));
        if (v == "thermal") {
            c.spatial = SpatialModel::thermal;
        } else if (v == "uniform") {
            c.spatial = SpatialModel::uniform;
        } else {
            throw ConfigurationError(k, "expected thermal or uniform, got '" + std::string(value) + "'");
        }
    } else if (k == "mode_x_um") {
        c.mode_center.x = parse_double(k, value) * 1e-6;
    } else if (k == "mode_y_um") {
        c.mode_center.y = parse_double(k, value) * 1e-6;
    } else if (k == "signal_waist_um") {
        c.signal_waist = parse_double(k, value) * 1e-6;
    } else if (k == "write_waist_um") {
        c.write_waist = parse_double(k, value) * 1e-6;
    } else if (k == "times_ms") {
        c.times = parse_list(k, value, 1e-3);
    } else if (is_grid_key(k)) {
        PartialGrid g;
        g.set(k, parse_double(k, value) * 1e-3);
        apply_grid(c, g);
    } else if (k == "tau_dephase_ms") {
        c.tau_dephase = parse_double(k, value) * 1e-3;
    } else if (k == "loss_fast_fraction") {
        c.survival.fast_fraction = parse_double(k, value);
    } else if (k == "loss_tau_fast_ms") {
        c.survival.tau_fast = parse_double(k, value) * 1e-3;
    } else if (k == "loss_tau_slow_ms") {
        c.survival.tau_slow = parse_double(k, value) * 1e-3;
    } else if (k == "grid_half_um") {
        const double h = parse_double(k, value) * 1e-6;
        const std::size_t n = c.grid.nx;
        c.grid = GridSpec::square(h, n);
    } else if (k == "grid_cells") {
        const auto n = static_cast<std::size_t>(parse_unsigned(k, value));
        c.grid.nx = c.grid.ny = n;
    } else if (k == "bandwidth_um") {
        c.bandwidth = parse_double(k, value) * 1e-6;
    } else if (k == "dt_us") {
        c.dt = parse_double(k, value) * 1e-6;
    } else if (k == "trap_wavelength_nm") {
        c.trap_wavelength = parse_double(k, value) * 1e-9;
    } else if (k == "shift_epsilon") {
        c.shift_epsilon = parse_double(k, value);
    } else if (k == "jackknife_groups") {
        c.jackknife_groups = parse_unsigned(k, value);
    } else if (k == "smoothing_window") {
        c.smoothing_window = parse_unsigned(k, value);
    } else if (k == "seed") {
        c.seed = parse_unsigned(k, value);
    } else if (k == "workers") {
        c.workers = static_cast<unsigned>(parse_unsigned(k, value));
    } else if (k == "strict") {
        c.strict = parse_bool(k, value);
    } else if (k == "out") {
        c.out_csv = std::string(trim(value));
    } else if (k == "svg") {
        c.out_svg = std::string(trim(value));
    } else {
        throw ConfigurationError(k, "unknown key");
    }
}

void apply_settings(ScenarioConfig& c, const std::vector<std::pair<std::string, std::string>>& settings) {
    PartialGrid grid;
    for (const auto& [key, value] : settings) {
        if (is_grid_key(key)) {
            grid.set(key, parse_double(key, value) * 1e-3);
        } else {
            apply_setting(c, key, value);
        }
    }
    if (grid.any()) apply_grid(c, grid);
}

ScenarioConfig parse_config(std::istream& in, std::string_view source) {
    ScenarioConfig c = preset("centered");
    c.name = "custom";
    bool in_section = false;
    bool seen_setting = false;
    PartialGrid grid;
    std::string grid_at;
    std::string line;
    int line_no = 0;
    const std::string where(source);
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view s(line);
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        const std::string at = where + ":" + std::to_string(line_no);
        if (s.front() == '[') {
            if (s != "[scenario]") throw ConfigurationError(at + ": unknown section " + std::string(s));
            if (in_section) throw ConfigurationError(at + ": duplicate [scenario] section");
            in_section = true;
            continue;
        }
        if (!in_section) throw ConfigurationError(at + ": settings must follow a [scenario] header");
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) throw ConfigurationError(at + ": expected key = value");
        const std::string_view key = trim(s.substr(0, eq));
        const std::string_view value = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigurationError(at + ": empty key");
        try {
            if (key == "preset") {
                if (seen_setting) throw ConfigurationError("preset", "must come before other settings");
                c = preset(value);
            } else if (is_grid_key(key)) {
                grid.set(std::string(key), parse_double(key, value) * 1e-3);
                grid_at = at;
            } else {
                apply_setting(c, key, value);
            }
        } catch (const ConfigurationError& e) {
            throw ConfigurationError(e.field(), at + ": " + e.what());
        }
        seen_setting = true;
    }
    if (!in_section) throw ConfigurationError(where + ": missing [scenario] header");
    if (grid.any()) {
        try {
            apply_grid(c, grid);
        } catch (const ConfigurationError& e) {
            throw ConfigurationError(e.field(), grid_at + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("config", "cannot open " + path);
    return parse_config(in, path);
}

ScenarioResult run_scenario(const ScenarioConfig& config) {
    config.validate();
    const ExecutionPolicy policy = config.policy();
    const double g = config.effective_gravity();
    const TrapGeometry& trap = config.trap;

    std::vector<AtomState> atoms =
        sample_thermal_ensemble(config.atoms, trap, config.temperature, g, config.seed, config.spatial, policy);

    const auto [write_k, signal_k] = collinear_wavevectors(kWriteWavelength);
    const Vec3 dk = spinwave_wavevector(write_k, signal_k).delta_k;
    const ModeSpec signal{config.mode_center, config.signal_waist, kWriteWavelength};
    const ModeSpec write{config.mode_center, config.write_waist, kWriteWavelength};
    SpinWaveRecord record = assign_excitation(atoms, signal, write, dk, config.times.front());

    RingPotential ring = trap.ring;
    ring.ring_radius = trap.radius;
    const ShiftField field = ShiftField::from_trap(ring, config.trap_wavelength).scaled(config.shift_epsilon);

    const std::vector<double> masses = record.probabilities();
    std::vector<Vec2> positions(atoms.size());
    auto snapshot = [&] {
        for (std::size_t j = 0; j < atoms.size(); ++j) positions[j] = atoms[j].position.transverse();
        return grouped_density(masses, positions, config.grid, config.bandwidth, config.jackknife_groups, policy);
    };

    ScenarioResult result;
    double w4 = 0.0;
    for (double p : masses) w4 += p * p;
    result.participating_atoms = 1.0 / w4;

    // The ensemble is sampled at the first storage time; earlier evolution is
    // not modelled.
    const std::size_t groups = config.jackknife_groups;
    const GroupedDensity g0 = snapshot();
    const DensityGrid u0 = g0.combined();
    std::vector<DensityGrid> u0_minus;
    for (std::size_t k = 0; k < groups; ++k) u0_minus.push_back(g0.leave_out(k));

    std::vector<double> overlap;
    double t_prev = config.times.front();
    for (double t : config.times) {
        if (t > t_prev) evolve_phases_along(record, atoms, t - t_prev, config.dt, trap, g, field, policy);
        t_prev = t;
        const GroupedDensity gt = snapshot();
        overlap.push_back(mode_overlap(u0, gt.combined()));
        std::vector<double> partial(groups);
        double mean = 0.0;
        for (std::size_t k = 0; k < groups; ++k) {
            partial[k] = mode_overlap(u0_minus[k], gt.leave_out(k));
            mean += partial[k];
        }
        mean /= static_cast<double>(groups);
        double ss = 0.0;
        for (double r : partial) ss += (r - mean) * (r - mean);
        result.overlap_stderr.push_back(std::sqrt(ss * static_cast<double>(groups - 1) / static_cast<double>(groups)));
        result.spin_coherence.push_back(spin_coherence(record));
        result.motional_coherence.push_back(motional_coherence(record));
    }

    double se_sum = 0.0;
    std::size_t se_count = 0;
    for (std::size_t i = 1; i < result.overlap_stderr.size(); ++i) {
        se_sum += result.overlap_stderr[i];
        ++se_count;
    }
    result.noise_floor = se_count > 0 ? 2.0 * se_sum / static_cast<double>(se_count) : 0.0;
    result.curve = efficiency_total(config.times, overlap, config.tau_dephase, config.survival);
    return result;
}

// ---------------------------------------------------------------------------

std::string format_number(double value, int significant) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, significant);
    return std::string(buf, res.ptr);
}

namespace {

double round_sig(double v) {
    const std::string s = format_number(v);
    double out = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), out);
    return out;
}

}  // namespace

void write_curve_csv(std::ostream& out, const EfficiencyCurve& curve) {
    out << kCsvHeader << '\n';
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const double r = round_sig(curve.overlap[i]);
        const double d = round_sig(curve.dephasing[i]);
        const double l = round_sig(curve.loss[i]);
        out << format_number(curve.times[i] * 1e3) << ',' << format_number(r) << ',' << format_number(d) << ','
            << format_number(l) << ',' << format_number(r * d * l) << '\n';
    }
}

std::string curve_csv(const EfficiencyCurve& curve) {
    std::ostringstream s;
    write_curve_csv(s, curve);
    return s.str();
}

void write_curve_csv_file(const std::string& path, const EfficiencyCurve& curve) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path);
    write_curve_csv(out, curve);
    if (!out) throw InvalidArgument("error while writing " + path);
}

EfficiencyCurve read_curve_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw InvalidArgument("csv: header must be '" + std::string(kCsvHeader) + "'");
    EfficiencyCurve curve;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        double v[5];
        std::string_view rest(line);
        for (int c = 0; c < 5; ++c) {
            const auto comma = rest.find(',');
            if ((c < 4) == (comma == std::string_view::npos))
                throw InvalidArgument("csv: row " + std::to_string(row) + " must have 5 fields");
            const std::string_view field = trim(rest.substr(0, comma));
            const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v[c]);
            if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty() || !std::isfinite(v[c]))
                throw InvalidArgument("csv: row " + std::to_string(row) + ": malformed number '" + std::string(field) + "'");
            if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
        }
        curve.times.push_back(v[0] * 1e-3);
        curve.overlap.push_back(v[1]);
        curve.dephasing.push_back(v[2]);
        curve.loss.push_back(v[3]);
        curve.total.push_back(v[4]);
    }
    return curve;
}

EfficiencyCurve read_curve_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path);
    return read_curve_csv(in);
}

std::vector<double> curve_column(const EfficiencyCurve& curve, std::string_view column) {
    if (column == "t_ms") {
        std::vector<double> t(curve.times);
        for (double& v : t) v *= 1e3;
        return t;
    }
    if (column == "R_overlap") return curve.overlap;
    if (column == "dephasing_factor") return curve.dephasing;
    if (column == "loss_factor") return curve.loss;
    if (column == "R_total") return curve.total;
    throw InvalidArgument("unknown column '" + std::string(column) + "'");
}

// ---------------------------------------------------------------------------

double ChartFrame::map_x(double t_ms) const {
    return left + (t_ms - x_lo) / (x_hi - x_lo) * plot_width;
}

double ChartFrame::map_y(double value) const {
    const double v = log_y ? std::log10(value) : value;
    return top + (y_hi - v) / (y_hi - y_lo) * plot_height;
}

double ChartFrame::unmap_y(double pixel) const {
    const double v = y_hi - (pixel - top) / plot_height * (y_hi - y_lo);
    return log_y ? std::pow(10.0, v) : v;
}

ChartFrame chart_frame(const EfficiencyCurve& curve, const RenderOptions& opt) {
    if (curve.size() == 0) throw InvalidArgument("render: curve has no rows");
    if (opt.columns.empty()) throw InvalidArgument("render: no columns requested");
    ChartFrame f{};
    f.left = 70.0;
    f.top = 30.0;
    f.plot_width = opt.width - 70.0 - 150.0;
    f.plot_height = opt.height - 30.0 - 60.0;
    f.log_y = opt.log_y;
    f.x_lo = curve.times.front() * 1e3;
    f.x_hi = curve.times.back() * 1e3;
    if (!(f.x_hi > f.x_lo)) f.x_hi = f.x_lo + 1.0;

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& name : opt.columns) {
        for (double v : curve_column(curve, name)) {
            if (opt.log_y && !(v > 0.0)) throw InvalidArgument("render: log axis needs positive values in " + name);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (opt.log_y) {
        f.y_lo = std::floor(std::log10(lo));
        f.y_hi = std::max(0.0, std::ceil(std::log10(hi)));
        if (!(f.y_hi > f.y_lo)) f.y_lo = f.y_hi - 1.0;
    } else {
        f.y_lo = std::min(0.0, std::floor(lo * 10.0) / 10.0);
        f.y_hi = std::max(1.0, std::ceil(hi * 10.0) / 10.0);
    }
    return f;
}

namespace {

std::string px(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 3);
    return std::string(buf, res.ptr);
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

std::string render_svg(const EfficiencyCurve& curve, const RenderOptions& opt) {
    const ChartFrame f = chart_frame(curve, opt);
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
      << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n";
    s << "<rect x=\"0\" y=\"0\" width=\"" << opt.width << "\" height=\"" << opt.height << "\" fill=\"white\"/>\n";
    s << "<rect x=\"" << px(f.left) << "\" y=\"" << px(f.top) << "\" width=\"" << px(f.plot_width) << "\" height=\""
      << px(f.plot_height) << "\" fill=\"none\" stroke=\"black\"/>\n";

    s << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int i = 0; i <= 5; ++i) {
        const double t = f.x_lo + (f.x_hi - f.x_lo) * i / 5.0;
        const double x = f.map_x(t);
        s << "<line x1=\"" << px(x) << "\" y1=\"" << px(f.top + f.plot_height) << "\" x2=\"" << px(x) << "\" y2=\""
          << px(f.top + f.plot_height + 5) << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << px(x) << "\" y=\"" << px(f.top + f.plot_height + 18) << "\" text-anchor=\"middle\">"
          << format_number(t, 4) << "</text>\n";
    }
    const int y_ticks = opt.log_y ? static_cast<int>(f.y_hi - f.y_lo) : 5;
    for (int i = 0; i <= y_ticks; ++i) {
        const double v = f.y_lo + (f.y_hi - f.y_lo) * i / y_ticks;
        const double value = opt.log_y ? std::pow(10.0, v) : v;
        const double y = f.map_y(value);
        s << "<line x1=\"" << px(f.left - 5) << "\" y1=\"" << px(y) << "\" x2=\"" << px(f.left) << "\" y2=\""
          << px(y) << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << px(f.left - 8) << "\" y=\"" << px(y + 4) << "\" text-anchor=\"end\">"
          << format_number(value, 4) << "</text>\n";
    }
    s << "<text x=\"" << px(f.left + f.plot_width / 2) << "\" y=\"" << px(opt.height - 15.0)
      << "\" text-anchor=\"middle\">t (ms)</text>\n";
    s << "<text x=\"18\" y=\"" << px(f.top + f.plot_height / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << px(f.top + f.plot_height / 2) << ")\">normalized efficiency</text>\n";
    s << "</g>\n";

    for (std::size_t c = 0; c < opt.columns.size(); ++c) {
        const auto values = curve_column(curve, opt.columns[c]);
        const char* colour = kPalette[c % std::size(kPalette)];
        s << "<polyline data-column=\"" << opt.columns[c] << "\" fill=\"none\" stroke=\"" << colour
          << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i > 0) s << ' ';
            s << px(f.map_x(curve.times[i] * 1e3)) << ',' << px(f.map_y(values[i]));
        }
        s << "\"/>\n";
        const double ly = f.top + 12.0 + 16.0 * static_cast<double>(c);
        const double lx = f.left + f.plot_width + 12.0;
        s << "<line x1=\"" << px(lx) << "\" y1=\"" << px(ly) << "\" x2=\"" << px(lx + 20) << "\" y2=\"" << px(ly)
          << "\" stroke=\"" << colour << "\" stroke-width=\"1.5\"/>\n";
        s << "<text x=\"" << px(lx + 26) << "\" y=\"" << px(ly + 4)
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << opt.columns[c] << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace qmem

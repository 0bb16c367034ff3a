#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qmem/parallel.hpp"
#include "qmem/phys_core.hpp"
#include "qmem/spinwave.hpp"
#include "qmem/trap_geometry.hpp"

namespace qmem {

struct ScenarioConfig {
    std::string name = "custom";
    std::size_t atoms = 100000;
    double temperature = 15e-6;  // K
    TrapGeometry trap{};
    bool gravity_on = true;
    double gravity = 9.81;  // m/s^2, used when gravity_on
    SpatialModel spatial = SpatialModel::uniform;
    Vec2 mode_center{};          // m, signal mode centre (y is vertical)
    double signal_waist = 65e-6; // m
    double write_waist = 275e-6; // m
    std::vector<double> times;   // s, increasing
    double tau_dephase = 28e-3;  // s
    SurvivalParams survival{};
    GridSpec grid{};
    double bandwidth = 10e-6;       // m
    double dt = 5e-6;               // s
    double trap_wavelength = 775e-9;
    double shift_epsilon = 0.0;     // residual light shift tracked in the phases (0 = off)
    std::size_t jackknife_groups = 8;
    std::size_t smoothing_window = 3;
    std::uint64_t seed = 1;
    unsigned workers = 0;
    bool strict = true;
    std::string out_csv;
    std::string out_svg;

    double effective_gravity() const { return gravity_on ? gravity : 0.0; }
    ExecutionPolicy policy() const { return {workers, strict}; }

    // Throws ConfigurationError naming the offending field.
    void validate() const;
};

// Evenly spaced grid [start, stop] (inclusive when stop lands on the grid).
std::vector<double> time_grid(double start, double stop, double step);

std::vector<std::string> preset_names();
// Throws ConfigurationError for an unknown name.
ScenarioConfig preset(std::string_view name);

// key = value lines under a [scenario] header; '#' starts a comment. Keys
// use the units in their suffix (e.g. temperature_uK, times_ms). A `preset`
// key, if present, must come first and seeds the remaining fields.
ScenarioConfig parse_config(std::istream& in, std::string_view source = "config");
ScenarioConfig load_config(const std::string& path);
void apply_setting(ScenarioConfig& config, std::string_view key, std::string_view value);
// Applies settings in order, except that t_start_ms, t_stop_ms and t_step_ms
// are combined after the other keys, so their relative order does not matter.
void apply_settings(ScenarioConfig& config, const std::vector<std::pair<std::string, std::string>>& settings);

struct ScenarioResult {
    EfficiencyCurve curve;
    std::vector<double> overlap_stderr;  // jackknife standard error of R per time
    double noise_floor = 0.0;            // 2 x mean standard error
    std::vector<double> spin_coherence;      // |<w^2 e^{i phi}>| per time
    std::vector<double> motional_coherence;  // same with phi2 only
    double participating_atoms = 0.0;        // 1 / sum w^4
};

ScenarioResult run_scenario(const ScenarioConfig& config);

// ---------------------------------------------------------------------------
// CSV and SVG

inline constexpr std::string_view kCsvHeader = "t_ms,R_overlap,dephasing_factor,loss_factor,R_total";
inline constexpr std::string_view kCurveColumns[] = {"R_overlap", "dephasing_factor", "loss_factor", "R_total"};

// %.9g-style formatting, independent of the C locale.
std::string format_number(double value, int significant = 9);

void write_curve_csv(std::ostream& out, const EfficiencyCurve& curve);
std::string curve_csv(const EfficiencyCurve& curve);
void write_curve_csv_file(const std::string& path, const EfficiencyCurve& curve);

// Parses the CSV schema back into a curve (times in s). Throws
// InvalidArgument on a wrong header, malformed numbers or ragged rows.
EfficiencyCurve read_curve_csv(std::istream& in);
EfficiencyCurve read_curve_csv_file(const std::string& path);

// Named column of a curve ("t_ms" gives times in ms).
std::vector<double> curve_column(const EfficiencyCurve& curve, std::string_view column);

struct RenderOptions {
    bool log_y = false;
    std::vector<std::string> columns{"R_overlap", "R_total"};
    int width = 720;
    int height = 450;
};

// Plot area and axis ranges of a rendered chart; y_lo/y_hi are log10 values
// when log_y is set.
struct ChartFrame {
    double left, top, plot_width, plot_height;
    double x_lo, x_hi, y_lo, y_hi;
    bool log_y;

    double map_x(double t_ms) const;
    double map_y(double value) const;
    double unmap_y(double pixel) const;
};

ChartFrame chart_frame(const EfficiencyCurve& curve, const RenderOptions& options);
std::string render_svg(const EfficiencyCurve& curve, const RenderOptions& options = {});

}  // namespace qmem

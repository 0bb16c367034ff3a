#include <CLI11.hpp>
#include <iostream>

#include "qmem/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Spin-wave memory breathing simulator and curve analysis"};
    app.require_subcommand(1);

    qmem::SimulateArgs sim;
    std::string preset, config, out, svg;
    std::uint64_t seed = 0;
    std::size_t atoms = 0;
    unsigned workers = 0;
    auto* s = app.add_subcommand("simulate", "Run a scenario and write the efficiency curve as CSV");
    auto* o_preset = s->add_option("--preset", preset, "centered | offset60 | shortdecay | longdecay");
    auto* o_config = s->add_option("--config", config, "Scenario file ([scenario] key = value)");
    o_preset->excludes(o_config);
    auto* o_seed = s->add_option("--seed", seed, "Master seed");
    auto* o_atoms = s->add_option("--atoms", atoms, "Number of atoms")->check(CLI::PositiveNumber);
    auto* o_out = s->add_option("--out", out, "CSV output path (default: stdout)");
    auto* o_svg = s->add_option("--svg", svg, "Also render the curve to this SVG");
    auto* o_workers = s->add_option("--workers", workers, "Worker threads (output does not depend on it)");

    qmem::FitArgs fit;
    auto* f = app.add_subcommand("fit", "Fit an exponential or double exponential to a curve column");
    f->add_option("--input", fit.input, "Curve CSV")->required();
    f->add_option("--model", fit.model, "exp | dexp")->required()->check(CLI::IsMember({"exp", "dexp"}));
    f->add_flag("--offset", fit.offset, "Add a constant offset (exp only)");
    f->add_option("--column", fit.column, "Column to fit")->capture_default_str();

    qmem::ExtremaArgs ext;
    auto* e = app.add_subcommand("extrema", "Find local extrema of a smoothed curve column");
    e->add_option("--input", ext.input, "Curve CSV")->required();
    e->add_option("--window", ext.window, "Odd moving-average window")->capture_default_str();
    e->add_option("--noise-floor", ext.noise_floor, "Minimum prominence")->capture_default_str();
    e->add_option("--column", ext.column, "Column to scan")->capture_default_str();

    qmem::CompensationArgs comp;
    auto* c = app.add_subcommand("compensation", "Compensation beam power and residual lifetimes");
    c->add_option("--power", comp.power, "Trap power (W)")->required();
    c->add_option("--trap-nm", comp.trap_nm, "Trap wavelength (nm)")->required();
    c->add_option("--tau0-ms", comp.tau0_ms, "Uncompensated dephasing time (ms)")->capture_default_str();
    c->add_flag("--d2-only", comp.d2_only, "Ignore the D1 line in the trap shift");
    c->add_flag("--simulate-tau0", comp.simulate_tau0, "Also estimate tau0 from the Monte-Carlo ring model");

    qmem::RenderArgs ren;
    auto* r = app.add_subcommand("render", "Render curve columns to SVG");
    r->add_option("--input", ren.input, "Curve CSV")->required();
    r->add_option("--out", ren.out, "SVG output path")->required();
    r->add_flag("--log-y", ren.log_y, "Logarithmic y axis");
    r->add_option("--columns", ren.columns, "Columns to draw")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex);
        return qmem::kExitUsage;
    }

    if (s->parsed()) {
        if (*o_preset) sim.preset = preset;
        if (*o_config) sim.config = config;
        if (*o_seed) sim.seed = seed;
        if (*o_atoms) sim.atoms = atoms;
        if (*o_out) sim.out = out;
        if (*o_svg) sim.svg = svg;
        if (*o_workers) sim.workers = workers;
        return qmem::cmd_simulate(sim, std::cout, std::cerr);
    }
    if (f->parsed()) return qmem::cmd_fit(fit, std::cout, std::cerr);
    if (e->parsed()) return qmem::cmd_extrema(ext, std::cout, std::cerr);
    if (c->parsed()) return qmem::cmd_compensation(comp, std::cout, std::cerr);
    if (r->parsed()) return qmem::cmd_render(ren, std::cout, std::cerr);
    return qmem::kExitUsage;
}

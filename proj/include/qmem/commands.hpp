#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qmem {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

// Runs body and maps exceptions to exit codes: invalid arguments, bad
// configuration and out-of-model inputs give kExitUsage, everything else
// kExitNumerical. The message goes to err.
int guarded(const std::function<int()>& body, std::ostream& err);

struct SimulateArgs {
    std::optional<std::string> preset;
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> atoms;
    std::optional<std::string> out;  // CSV path; stdout when absent
    std::optional<std::string> svg;
    std::optional<unsigned> workers;
};

struct FitArgs {
    std::string input;
    std::string model = "exp";  // exp | dexp
    bool offset = false;
    std::string column = "R_total";
};

struct ExtremaArgs {
    std::string input;
    std::size_t window = 3;
    double noise_floor = 0.0;
    std::string column = "R_overlap";
};

struct CompensationArgs {
    double power = 1.9;       // W
    double trap_nm = 775.0;   // nm
    double tau0_ms = 0.67;    // uncompensated dephasing time
    bool d2_only = false;
    bool simulate_tau0 = false;
    std::size_t tau0_atoms = 4000;
};

struct RenderArgs {
    std::string input;
    std::string out;
    bool log_y = false;
    std::vector<std::string> columns{"R_overlap", "R_total"};
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);
int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err);
int cmd_extrema(const ExtremaArgs& args, std::ostream& out, std::ostream& err);
int cmd_compensation(const CompensationArgs& args, std::ostream& out, std::ostream& err);
int cmd_render(const RenderArgs& args, std::ostream& out, std::ostream& err);

}  // namespace qmem

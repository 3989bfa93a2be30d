#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rvmret/picard.hpp"

namespace rvmret {

struct DiagnosticsConfig {
    std::vector<double> radii{2, 3, 4, 5};
    double v1 = 1.0, v2 = 2.0;    // advanced-time window for incoming flux
    double u1 = -2.0, u2 = -1.0;  // retarded-time window for outgoing flux
    double fsc_eta = 1.0;
    double fsc_alpha = 1.0;
    int samples = 200;            // sampling-based checks (fsc, jacobian, support)
    int energy_nodes = 12;        // spatial Gauss-Legendre nodes per axis for phase integrals
    int momentum_nodes = 8;       // momentum rule of the phase integrals (independent of the run)
    int min_decay_probes = 40;
    double lp_tolerance = 0.02;
    double energy_tolerance = 0.05;
    double radiation_fraction = 0.05;
};

/// Everything a run needs. Parsed from JSON with sections initial_data, grid, quadrature,
/// iteration, diagnostics, output plus top-level seed and threads.
struct RunConfig {
    PicardConfig picard;
    DiagnosticsConfig diagnostics;
    std::string output_dir = "run";
    std::uint64_t seed = 1;
};

/// Throws ConfigError with line and column for syntax errors and with the key path and line
/// for unknown keys, wrong types and out-of-range values.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Full JSON form of a config; parse_config(config_to_json(c)) reproduces c.
std::string config_to_json(const RunConfig& config);

}  // namespace rvmret

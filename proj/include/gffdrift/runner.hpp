#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gffdrift/bound_functions.hpp"
#include "gffdrift/bump_kernel.hpp"
#include "gffdrift/gff_environment.hpp"
#include "gffdrift/sde_engine.hpp"

namespace gffdrift {

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "GFFDRIFT_OUTPUT_ROOT";

struct RunConfig {
    std::string command;
    BumpSpec bump = BumpSpec::gaussian(1.0);
    TorusGrid grid;
    double norm = kDefaultNorm;
    SimConfig sim;
    BoundParams bounds;
    std::vector<double> lambdas;
    std::string output_dir;
    std::uint64_t master_seed = 1;
    /// Full JSON document, for command-specific sections.
    nlohmann::json raw = nlohmann::json::object();

    nlohmann::json section(const std::string& name) const;
};

struct CliOverrides {
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::vector<double>> lambdas;
};

/// Parses and cross-validates (Nyquist, step size, λT where the command
/// needs it). Throws ConfigError.
RunConfig load_run_config(const std::string& command, const nlohmann::json& j, const CliOverrides& ov = {});

/// Executes one subcommand and writes its artifacts plus manifest.json.
/// Throws on faults; see run_cli for the exit-code mapping.
void run_command(const RunConfig& cfg);

/// Entry point: 0 success, 1 numeric/runtime fault, 2 configuration error.
int run_cli(int argc, char** argv);

/// Physical coupling β = √norm / π and prefactor 2c = norm / (2π²) relating
/// E[φ(λ - G)^{-1}φ] of the simulated process to 2c ⟨φ, (2λ - G_β)^{-1} φ⟩.
double physical_coupling(double norm);
double resolvent_prefactor(double norm);

} // namespace gffdrift

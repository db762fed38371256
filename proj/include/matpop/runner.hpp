#ifndef MATPOP_RUNNER_HPP
#define MATPOP_RUNNER_HPP

#include <string>
#include <vector>

#include "matpop/analysis.hpp"
#include "matpop/scenario.hpp"

namespace matpop {

/// Everything needed to run a scenario: coefficients, commitment geometry
/// (with flow and kernels inside), initial data and solver settings.
struct Session {
    ModelCoefficients coeffs;
    CommitmentMaps maps;
    InitialData data;
    GridSpec grid;
    SolverOptions options;
};

ModelCoefficients coefficients_from_scenario(const Scenario& s);
InitialData initial_data_from_scenario(const Scenario& s, const ModelCoefficients& coeffs);
Session build_session(const Scenario& s);

struct RunResult {
    int status = 0;
    std::string diagnostics_json;        // contents of the summary document
    std::vector<std::string> artifacts;  // files written
    std::string error;                   // non-empty on failure
};

/// Output directory precedence: MATPOP_OUT env var, then cli_out (if
/// non-empty), then the scenario's own setting.
std::string resolve_output_dir(const std::string& cli_out, const Scenario& s);

RunResult run_validate(const Scenario& s, const std::string& out_dir);
RunResult run_simulation(const Scenario& s, const std::string& out_dir);
RunResult run_audit(const Scenario& s, const std::string& out_dir);
RunResult run_sweep(const Scenario& s, const std::string& out_dir);
RunResult run_dump_maps(const Scenario& s, const std::string& out_dir);

/// Dispatch on the scenario's run mode.
RunResult run_scenario(const Scenario& s, const std::string& out_dir);

/// CSV columns t, m, N, P; one row per (t >= 0) grid node; 17 significant
/// digits, unix line endings. Written atomically (temp file + rename).
void write_fields_csv(const std::string& path, const SolutionField& N, const SolutionField& P);
void write_maps_csv(const std::string& path, const CommitmentMaps& maps);

}  // namespace matpop

#endif

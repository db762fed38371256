// Batch front end: loads a scenario, runs it, writes CSV fields and JSON
// diagnostics. See README for the scenario file format.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "matpop/runner.hpp"

namespace {

struct CommonArgs {
    std::string scenario;
    std::string out;
    double horizon = 0.0;
    int threads = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--scenario", args.scenario, "scenario file path or bundled preset name")
        ->required();
    cmd->add_option("--out", args.out, "output directory (MATPOP_OUT env var overrides)");
    cmd->add_option("--horizon", args.horizon, "override the scenario horizon");
    cmd->add_option("--threads", args.threads, "worker threads for sweeps and solver rows");
    cmd->add_option("--seed", args.seed, "seed for randomized audit sampling")
        ->each([&args](const std::string&) { args.seed_set = true; });
}

int run_mode(const CommonArgs& args, const std::string& mode) {
    try {
        matpop::Scenario s = matpop::load_scenario(args.scenario);
        s.mode = mode;
        if (args.horizon > 0.0) s.horizon = args.horizon;
        if (args.threads > 0) s.threads = args.threads;
        if (args.seed_set) s.seed = args.seed;
        const std::string out_dir = matpop::resolve_output_dir(args.out, s);
        const matpop::RunResult r = matpop::run_scenario(s, out_dir);
        for (const auto& a : r.artifacts) std::printf("wrote %s\n", a.c_str());
        if (r.status != 0) std::fprintf(stderr, "error: %s\n", r.error.c_str());
        return r.status;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"maturity-structured two-phase cell population simulator"};
    app.require_subcommand(1);

    CommonArgs validate_args, simulate_args, audit_args, sweep_args, maps_args;
    CLI::App* validate = app.add_subcommand("validate", "check coefficient hypotheses");
    add_common(validate, validate_args);
    CLI::App* simulate = app.add_subcommand("simulate", "solve and write fields + diagnostics");
    add_common(simulate, simulate_args);
    CLI::App* audit = app.add_subcommand("audit", "solve and run positivity/stability audits");
    add_common(audit, audit_args);
    CLI::App* sweep = app.add_subcommand("sweep", "stability sweep over parameter axes");
    add_common(sweep, sweep_args);
    CLI::App* dump = app.add_subcommand("dump-maps", "tabulate commitment maps to CSV");
    add_common(dump, maps_args);

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) return run_mode(validate_args, "validate");
    if (simulate->parsed()) return run_mode(simulate_args, "simulate");
    if (audit->parsed()) return run_mode(audit_args, "audit");
    if (sweep->parsed()) return run_mode(sweep_args, "sweep");
    if (dump->parsed()) return run_mode(maps_args, "dump-maps");
    return 2;
}

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dpmtl/sim.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed differentially private receding-horizon control simulator"};
    std::string config;
    int runs = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_dir = "out";
    std::string confidence;
    std::string objective;
    bool dump_milp = false;
    int threads = 1;
    bool quiet = false;
    bool verbose = false;

    app.add_option("--config", config, "Scenario JSON file")->required();
    app.add_option("--runs", runs, "Number of seeded runs (default: from the scenario)")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "Master seed (default: from the scenario, else 0)");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--confidence-mode", confidence, "Confidence recursion")->check(CLI::IsMember({"paper", "sound"}));
    app.add_option("--objective", objective, "Input cost")->check(CLI::IsMember({"one-norm", "inf-norm"}));
    app.add_flag("--dump-milp", dump_milp, "Write every Diff-MILP in LP format under <out>/milp");
    app.add_option("--threads", threads, "Concurrent runs")->check(CLI::PositiveNumber);
    app.add_flag("-q,--quiet", quiet, "Only print the summary");
    app.add_flag("-v,--verbose", verbose, "Print one line per Diff-MILP solve (single run only)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }
    seed_given = seed_opt->count() > 0;

    using namespace dpmtl;
    sim::Prepared prep;
    try {
        sim::ScenarioConfig cfg = sim::load_scenario(config);
        if (!confidence.empty()) {
            cfg.confidence_mode =
                confidence == "sound" ? encode::ConfidenceMode::Sound : encode::ConfidenceMode::PaperFaithful;
        }
        if (!objective.empty()) {
            cfg.objective = objective == "inf-norm" ? rhc::Objective::InfNorm : rhc::Objective::OneNorm;
        }
        if (runs > 0) cfg.runs = runs;
        if (seed_given) cfg.seed = seed;
        prep = sim::prepare(cfg);
    } catch (const std::exception& e) {
        std::cerr << "simulate: invalid configuration: " << e.what() << '\n';
        return kExitValidation;
    }

    const auto& cfg = prep.cfg;
    if (!quiet) {
        std::cerr << "scenario " << (cfg.name.empty() ? config : cfg.name) << ": " << cfg.agents << " agents, H=" << cfg.H
                  << ", tau=" << cfg.tau << ", planning length " << prep.shared.planning_length() << ", lambda2 "
                  << prep.shared.gossip.lambda2 << '\n';
    }

    sim::BatchResult batch;
    try {
        const std::filesystem::path dump_dir = dump_milp ? std::filesystem::path(out_dir) / "milp" : "";
        if (verbose) {
            sim::RunOptions opts;
            opts.on_solve = [](const rhc::SolveRecord& r) {
                const auto& s = r.result;
                std::cerr << "t=" << r.t << " agent=" << r.agent + 1 << (s.feasible ? " ok" : " FAIL") << " thr=" << s.system_threshold
                          << " obj=" << s.objective << " nodes=" << s.nodes << " bin=" << s.binaries << " rows=" << s.rows
                          << " sec=" << s.seconds << " margins=" << s.agent_margin << "/" << s.system_margin
                          << (s.reason.empty() ? "" : " " + s.reason) << '\n';
            };
            sim::RunResult r = sim::run_simulation(prep, cfg.seed, 0, opts);
            batch.metrics = sim::aggregate(prep, {r.metrics});
            batch.runs.push_back(std::move(r));
        } else {
            batch = sim::run_batch(prep, cfg.runs, cfg.seed, dump_milp ? 1 : threads, dump_dir);
        }
        sim::emit_outputs(out_dir, batch.runs, batch.metrics, prep);
    } catch (const std::exception& e) {
        std::cerr << "simulate: " << e.what() << '\n';
        return 1;
    }

    const auto& m = batch.metrics;
    bool infeasible = false;
    for (const auto& r : m.runs) {
        if (!r.feasible) {
            infeasible = true;
            std::cerr << "run " << r.run << ": infeasible at t=" << r.stopped_at << ": " << r.reason << '\n';
        }
    }
    for (const auto& e : m.errors) std::cerr << e << '\n';
    std::cout << "runs " << (m.runs.size() + m.errors.size()) << ", feasible " << m.feasible_runs << ", P(phi_s) "
              << m.p_system << '\n';
    for (std::size_t i = 0; i < m.mean_error_mean.size(); ++i) {
        std::cout << "agent " << i + 1 << " mean abs error";
        for (double v : m.mean_error_mean[i]) std::cout << ' ' << v;
        std::cout << '\n';
    }
    std::cout << "outputs written to " << out_dir << '\n';
    if (!m.errors.empty()) return 1;
    return infeasible ? kExitInfeasible : 0;
}

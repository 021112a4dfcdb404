#pragma once

// Scenario files, seeded simulation runs, Monte-Carlo batches and output files.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpmtl/encode.hpp"
#include "dpmtl/estimation.hpp"
#include "dpmtl/mtl.hpp"
#include "dpmtl/privacy.hpp"
#include "dpmtl/rhc.hpp"

namespace dpmtl::sim {

using dynamics::Vec;

/// Invalid scenario; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& path, const std::string& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One splitmix64 step; advances state.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seed of an independent substream. Stream 0 is an agent's privacy noise;
/// stream 1 with agent = N drives the communication schedule.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run, std::uint64_t agent, std::uint64_t stream);

/// Initial gossip matrix, identical in every agent's copy: all zeros, or row j
/// set to agent j's initial state.
enum class ZetaInit { Zeros, OwnState };

struct ScenarioConfig {
    std::string name;
    int agents = 0;
    int dims = 0;
    std::vector<std::pair<int, int>> edges;  // 0-based
    Vec a, b, c;
    double u_min = -1.0;
    double u_max = 1.0;
    std::vector<Vec> initial_states;     // [agent][dim]
    std::vector<Vec> initial_estimates;  // [agent][dim], shared by every agent
    ZetaInit zeta_init = ZetaInit::Zeros;

    std::vector<privacy::PrivacyParams> privacy;  // per agent

    double sigma0 = 1.0;  // initial covariance is sigma0 * I
    double L1 = 1.0;
    double L2 = 1.0;
    double zeta_max = 0.0;
    double s_max = 1.0;
    std::optional<double> v_max;  // defaults to the largest noise variance
    bool multiplicative_bound = false;
    int gossip_refine_iterations = 0;

    mtl::PredicateTable predicates;
    std::string phi_system_text;
    std::vector<std::string> phi_agent_text;
    mtl::FormulaPtr phi_system;
    std::vector<mtl::FormulaPtr> phi_agent;

    int H = 0;
    int tau = 0;
    double r_min = 0.1;
    double gamma_min = 0.9;
    double big_M = 1000.0;
    rhc::Objective objective = rhc::Objective::OneNorm;
    rhc::Encoding encoding = rhc::Encoding::Threshold;
    encode::ConfidenceMode confidence_mode = encode::ConfidenceMode::PaperFaithful;

    std::uint64_t seed = 0;
    int runs = 1;

    void validate() const;
};

ScenarioConfig parse_scenario(std::string_view json_text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Everything derived once per scenario: noise levels, Kalman gains, gossip
/// matrix and the error bound trace.
struct Prepared {
    ScenarioConfig cfg;
    std::vector<privacy::NoiseSpec> noise;
    rhc::SharedModel shared;
};

Prepared prepare(const ScenarioConfig& cfg);

enum class Kind { State, Zeta, Eta, Input, NoisyOutput };
const char* to_string(Kind k);

struct Record {
    int run = 0;
    int t = 0;
    int agent = 0;  // -1 for eta
    Kind kind = Kind::State;
    int dim = 0;
    double value = 0.0;
};

struct RunMetrics {
    int run = 0;
    std::uint64_t seed = 0;
    bool feasible = true;
    std::string reason;
    int stopped_at = -1;
    int last_time = 0;
    std::vector<Vec> mean_abs_error;  // [agent][dim], over t = 1..last_time
    bool phi_system_satisfied = false;
    double phi_system_robustness = 0.0;  // at t = 0; -inf when the trajectory is too short
    std::vector<bool> phi_agent_satisfied;
    std::vector<double> phi_agent_robustness;
    std::vector<double> system_robustness_trace;  // rho(eta, phi_s, t)
    std::vector<std::vector<double>> agent_robustness_trace;
    int solves = 0;
    double max_solve_seconds = 0.0;
    double total_solve_seconds = 0.0;
    long max_nodes = 0;
};

struct RunResult {
    RunMetrics metrics;
    rhc::LoopResult loop;
    std::vector<Vec> eta;  // [t][dim]
    std::vector<Record> records() const;
};

struct RunOptions {
    std::ostream* dump = nullptr;  // LP text of every Diff-MILP
    std::function<void(const rhc::SolveRecord&)> on_solve;
};

RunResult run_simulation(const Prepared& prep, std::uint64_t master_seed, int run_index = 0,
                         const RunOptions& opts = {});
RunResult run_simulation(const ScenarioConfig& cfg, std::uint64_t master_seed, int run_index = 0);

struct BatchMetrics {
    std::vector<RunMetrics> runs;
    std::vector<std::string> errors;  // per-run exceptions, "run k: ..."
    int feasible_runs = 0;
    double p_system = 0.0;             // over all runs
    std::vector<double> p_agent;       // over feasible runs
    std::vector<Vec> mean_error_mean;  // [agent][dim] across feasible runs
    std::vector<Vec> mean_error_std;
    std::vector<double> eps_trace;
    double lambda2 = 0.0;
    std::vector<double> sigma;
};

BatchMetrics aggregate(const Prepared& prep, std::vector<RunMetrics> runs, std::vector<std::string> errors = {});

struct BatchResult {
    BatchMetrics metrics;
    std::vector<RunResult> runs;  // successful runs, in run order
};

/// Runs 0..runs-1. A non-empty dump_dir receives milp_run<k>.lp per run.
BatchResult run_batch(const Prepared& prep, int runs, std::uint64_t master_seed, int threads = 1,
                      const std::filesystem::path& dump_dir = {});

void write_trajectories_csv(std::ostream& os, const std::vector<Record>& records);

/// trajectories.csv, metrics.json and plotdata/ under dir (created if needed).
void emit_outputs(const std::filesystem::path& dir, const std::vector<RunResult>& runs, const BatchMetrics& metrics,
                  const Prepared& prep);

}  // namespace dpmtl::sim

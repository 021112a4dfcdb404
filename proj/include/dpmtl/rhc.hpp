#pragma once

// Receding-horizon control: per-agent Diff-MILP assembly and the lock-step
// loop in which agents privatise outputs, gossip, estimate and re-plan.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dpmtl/dynamics.hpp"
#include "dpmtl/encode.hpp"
#include "dpmtl/estimation.hpp"
#include "dpmtl/milp.hpp"
#include "dpmtl/mtl.hpp"
#include "dpmtl/privacy.hpp"

namespace dpmtl::rhc {

using dynamics::Vec;
using estimation::Matrix;

class RhcError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Objective { OneNorm, InfNorm };
enum class Encoding { Threshold, Exact };

struct RhcConfig {
    int H = 1;
    std::vector<double> r_min;      // length H
    std::vector<double> gamma_min;  // length H
    double big_M = 1000.0;
    Objective objective = Objective::OneNorm;
    Encoding encoding = Encoding::Threshold;
    encode::ConfidenceMode confidence_mode = encode::ConfidenceMode::PaperFaithful;
    milp::SolverOptions solver;

    void validate() const;
};

/// Data every agent knows and nobody mutates during a run.
struct SharedModel {
    dynamics::LinearDynamics dyn;
    dynamics::Graph graph;
    estimation::KalmanSchedule kalman;
    estimation::GossipMatrix gossip;
    std::vector<double> eps;  // error bound by absolute time step
    mtl::FormulaPtr phi_system;
    std::vector<mtl::FormulaPtr> phi_agent;
    RhcConfig cfg;

    int agents() const noexcept { return dyn.agents(); }
    int dims() const noexcept { return static_cast<int>(dyn.dims); }
    /// Number of planned steps: H plus the longest specification horizon.
    int planning_length() const;
    void validate() const;
};

/// Agent i's private view at the current time step.
struct AgentContext {
    int id = 0;
    Vec x;                // own true state
    Matrix xhat;          // N x D estimates, current
    Matrix zeta;          // N x D gossip vector, current
    Matrix u_prev;        // inputs at t-1 as known to this agent
    Matrix u_prev2;       // inputs at t-2
    privacy::NoiseSpec noise;
    std::vector<Matrix> plan;  // inputs planned at plan_start for all agents
    int plan_start = -1;

    /// Planned input matrix for absolute time t (zero outside the plan).
    Matrix planned_input(int t, int N, int D) const;
};

/// One-step-ahead prediction of the noisy output vector:
/// C (xhat + u) + (C B A / 2)(u - u_prev), all diagonal.
Matrix predict_output(const Matrix& xhat, const Matrix& u, const Matrix& u_prev, const dynamics::LinearDynamics& dyn);

struct DiffMilp {
    milp::Model model;
    std::vector<std::vector<milp::VarId>> pos, neg;  // [k][agent * D + d]
    std::vector<std::vector<milp::LinearExpr>> own_state;  // [k][d], k = 0..L
    std::vector<std::vector<milp::LinearExpr>> zeta_row;   // [k][d], own row of zeta
    std::vector<milp::VarId> rho_agent, rho_system;        // exact encoding only
    double system_threshold = 0.0;
    bool trivially_infeasible = false;
    int start = 0;
    int length = 0;
};

/// Threshold for the system-level specification over the window [t, t+H-1]:
/// the largest of r_min and the confidence-derived robustness requirement.
double system_threshold(const SharedModel& shared, int t);

DiffMilp assemble_diff_milp(const SharedModel& shared, const AgentContext& ctx, int t);

struct StepResult {
    bool feasible = false;
    std::string reason;
    std::vector<Matrix> plan;
    double objective = 0.0;
    long nodes = 0;
    double seconds = 0.0;
    double system_threshold = 0.0;
    std::size_t binaries = 0;
    std::size_t rows = 0;
    double agent_margin = 0.0;   // min_j rho(own plan, phi_i, t+j) - r_min_j
    double system_margin = 0.0;  // min_j rho(zeta plan, phi_s, t+j) - threshold
    std::vector<double> rho_agent_milp, rho_system_milp;  // exact encoding only
    std::vector<double> rho_agent_check, rho_system_check;
};

/// Assembles and solves the Diff-MILP at time t; on success stores the plan in ctx.
StepResult rhc_step(const SharedModel& shared, AgentContext& ctx, int t);

struct Message {
    int from = -1;
    Vec y_noisy;   // sender's privatised output at t
    Vec zeta_row;  // sender's own gossip row at t-1
};

/// Estimation part of a round at t >= 1: builds the output vector from
/// predictions, the own measurement and an optional message, runs the Kalman
/// update and advances the gossip vector.
void observe(const SharedModel& shared, AgentContext& ctx, int t, const Vec& own_noisy,
             const std::optional<Message>& msg);

/// Active pair (agent, neighbour) per time step; index 0 is never used.
using Schedule = std::vector<std::optional<std::pair<int, int>>>;

/// Privatised output of agent i at time t given its clean output.
using NoiseSource = std::function<Vec(int agent, int t, const Vec& clean)>;

struct SolveRecord {
    int t = 0;
    int agent = 0;
    StepResult result;
};

struct LoopResult {
    bool feasible = true;
    int stopped_at = -1;  // time step of the failing solve
    int failed_agent = -1;
    std::string reason;
    int last_time = 0;  // states recorded for t = 0..last_time
    std::vector<std::vector<Vec>> states;   // [t][agent]
    std::vector<std::vector<Vec>> zeta;     // [t][agent] own row
    std::vector<std::vector<Vec>> inputs;   // [t][agent], t < last_time
    std::vector<std::vector<Vec>> noisy;    // [t][agent], empty at t = 0
    std::vector<SolveRecord> solves;
};

/// Runs all agents in lock-step rounds up to tau. Solves happen while
/// t < tau - H and every solve so far was feasible; the remaining steps
/// apply the last plans.
LoopResult agent_loop(const SharedModel& shared, std::vector<AgentContext>& agents, const Schedule& schedule,
                      int tau, const NoiseSource& noise,
                      const std::function<void(const SolveRecord&)>& on_solve = {});

}  // namespace dpmtl::rhc

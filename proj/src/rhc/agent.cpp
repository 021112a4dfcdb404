#include <algorithm>
#include <chrono>

#include "dpmtl/rhc.hpp"

namespace dpmtl::rhc {

namespace {

mtl::Trajectory evaluate_path(const std::vector<std::vector<milp::LinearExpr>>& path, const milp::Solution& sol) {
    std::vector<mtl::State> samples;
    samples.reserve(path.size());
    for (const auto& row : path) {
        mtl::State s;
        for (const auto& e : row) s.push_back(sol.value(e));
        samples.push_back(std::move(s));
    }
    return mtl::Trajectory(std::move(samples));
}

}  // namespace

StepResult rhc_step(const SharedModel& shared, AgentContext& ctx, int t) {
    const auto started = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };
    StepResult res;
    DiffMilp dm;
    try {
        dm = assemble_diff_milp(shared, ctx, t);
    } catch (const encode::EncodeError& e) {
        res.reason = std::string("confidence pre-check failed: ") + e.what();
        res.seconds = elapsed();
        return res;
    }
    res.system_threshold = dm.system_threshold;
    res.binaries = dm.model.num_binaries();
    res.rows = dm.model.num_constraints();
    if (dm.trivially_infeasible) {
        res.reason = "specification cannot hold on the fixed part of the trajectory";
        res.seconds = elapsed();
        return res;
    }

    milp::Solution sol;
    try {
        sol = milp::solve_milp(dm.model, shared.cfg.solver);
    } catch (const milp::NodeLimitError& e) {
        if (!e.has_incumbent()) {
            res.reason = e.what();
            res.seconds = elapsed();
            return res;
        }
        sol = e.incumbent();
    }
    res.nodes = sol.nodes;
    res.seconds = elapsed();
    if (!sol.optimal()) {
        res.reason = std::string("Diff-MILP ") + milp::to_string(sol.status);
        return res;
    }
    res.feasible = true;
    res.objective = sol.objective;

    const int N = shared.agents();
    const int D = shared.dims();
    const auto& dyn = shared.dyn;
    res.plan.assign(static_cast<std::size_t>(dm.length), Matrix::Zero(N, D));
    for (int k = 0; k < dm.length; ++k) {
        for (int j = 0; j < N; ++j) {
            for (int d = 0; d < D; ++d) {
                const auto c = static_cast<std::size_t>(j * D + d);
                const double u = sol.value(dm.pos[static_cast<std::size_t>(k)][c]) -
                                 sol.value(dm.neg[static_cast<std::size_t>(k)][c]);
                res.plan[static_cast<std::size_t>(k)](j, d) = std::clamp(u, dyn.u_min, dyn.u_max);
            }
        }
    }

    // Re-check the plan with the recursive semantics.
    const mtl::Trajectory own = evaluate_path(dm.own_state, sol);
    const mtl::Trajectory sys = evaluate_path(dm.zeta_row, sol);
    const auto& phi_i = *shared.phi_agent[static_cast<std::size_t>(ctx.id)];
    res.agent_margin = milp::kInfinity;
    res.system_margin = milp::kInfinity;
    for (int j = 0; j < shared.cfg.H; ++j) {
        const double ra = mtl::robustness(own, phi_i, j);
        const double rs = mtl::robustness(sys, *shared.phi_system, j);
        res.rho_agent_check.push_back(ra);
        res.rho_system_check.push_back(rs);
        res.agent_margin = std::min(res.agent_margin, ra - shared.cfg.r_min[static_cast<std::size_t>(j)]);
        res.system_margin = std::min(res.system_margin, rs - dm.system_threshold);
    }
    for (auto v : dm.rho_agent) res.rho_agent_milp.push_back(sol.value(v));
    for (auto v : dm.rho_system) res.rho_system_milp.push_back(sol.value(v));

    ctx.plan = res.plan;
    ctx.plan_start = t;
    return res;
}

void observe(const SharedModel& shared, AgentContext& ctx, int t, const Vec& own_noisy,
             const std::optional<Message>& msg) {
    const int i = ctx.id;
    const auto D = static_cast<Eigen::Index>(shared.dims());
    if (static_cast<Eigen::Index>(own_noisy.size()) != D) throw RhcError("noisy output has wrong dimension");
    auto to_row = [D](const Vec& v) {
        Eigen::RowVectorXd r(D);
        for (Eigen::Index d = 0; d < D; ++d) r(d) = v[static_cast<std::size_t>(d)];
        return r;
    };

    Matrix y = predict_output(ctx.xhat, ctx.u_prev, ctx.u_prev2, shared.dyn);
    y.row(i) = to_row(own_noisy);
    if (msg) {
        if (msg->from == i || !shared.graph.adjacent(i, msg->from)) throw RhcError("message from a non-neighbour");
        y.row(msg->from) = to_row(msg->y_noisy);
    }
    const Matrix xnew = estimation::kalman_update(ctx.xhat, ctx.u_prev, y, shared.kalman.gain(t), shared.dyn.A(),
                                                  shared.dyn.B());
    const Matrix delta = xnew - ctx.xhat;
    Matrix znew = shared.gossip.V * ctx.zeta + delta;
    if (msg) {
        const Eigen::RowVectorXd avg = 0.5 * (ctx.zeta.row(i) + to_row(msg->zeta_row));
        znew.row(i) = avg + delta.row(i);
        znew.row(msg->from) = avg + delta.row(msg->from);
    } else {
        znew.row(i) = ctx.zeta.row(i) + delta.row(i);
    }
    // Rows of other agents are only predictions here. Shift the unobserved ones
    // so the column means keep following the estimate change, as in V zeta + dx.
    const Eigen::Index N = znew.rows();
    const Eigen::Index fixed = msg ? 2 : 1;
    if (N > fixed) {
        const Eigen::RowVectorXd target = ctx.zeta.colwise().mean() + delta.colwise().mean();
        const Eigen::RowVectorXd shift =
            (target - znew.colwise().mean()) * static_cast<double>(N) / static_cast<double>(N - fixed);
        for (Eigen::Index j = 0; j < N; ++j) {
            if (j == i || (msg && j == msg->from)) continue;
            znew.row(j) += shift;
        }
    }
    ctx.xhat = xnew;
    ctx.zeta = znew;
}

LoopResult agent_loop(const SharedModel& shared, std::vector<AgentContext>& agents, const Schedule& schedule,
                      int tau, const NoiseSource& noise, const std::function<void(const SolveRecord&)>& on_solve) {
    shared.validate();
    const int N = shared.agents();
    const int D = shared.dims();
    const int H = shared.cfg.H;
    if (static_cast<int>(agents.size()) != N) throw RhcError("one context per agent is required");
    if (tau <= H) throw RhcError("tau must exceed H");
    for (int i = 0; i < N; ++i) {
        if (agents[static_cast<std::size_t>(i)].id != i) throw RhcError("agent contexts must be ordered by id");
    }

    LoopResult res;
    auto row_of = [D](const Matrix& m, int r) {
        Vec v(static_cast<std::size_t>(D));
        for (int d = 0; d < D; ++d) v[static_cast<std::size_t>(d)] = m(r, d);
        return v;
    };
    std::vector<Vec> x(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) x[static_cast<std::size_t>(i)] = agents[static_cast<std::size_t>(i)].x;
    res.states.push_back(x);

    for (int t = 0;; ++t) {
        std::vector<Vec> noisy;
        if (t >= 1) {
            for (int i = 0; i < N; ++i) {
                noisy.push_back(noise(i, t, dynamics::output(x[static_cast<std::size_t>(i)], shared.dyn, i)));
            }
            std::optional<std::pair<int, int>> pair;
            if (static_cast<std::size_t>(t) < schedule.size()) pair = schedule[static_cast<std::size_t>(t)];
            std::vector<std::optional<Message>> inbox(static_cast<std::size_t>(N));
            if (pair) {
                const auto [a, l] = *pair;
                if (a < 0 || l < 0 || a >= N || l >= N || !shared.graph.adjacent(a, l)) {
                    throw RhcError("scheduled pair at t=" + std::to_string(t) + " is not an edge");
                }
                const auto& ca = agents[static_cast<std::size_t>(a)];
                const auto& cl = agents[static_cast<std::size_t>(l)];
                inbox[static_cast<std::size_t>(a)] = Message{l, noisy[static_cast<std::size_t>(l)], row_of(cl.zeta, l)};
                inbox[static_cast<std::size_t>(l)] = Message{a, noisy[static_cast<std::size_t>(a)], row_of(ca.zeta, a)};
            }
            for (int i = 0; i < N; ++i) {
                observe(shared, agents[static_cast<std::size_t>(i)], t, noisy[static_cast<std::size_t>(i)],
                        inbox[static_cast<std::size_t>(i)]);
            }
        }
        res.noisy.push_back(noisy);
        std::vector<Vec> zrow;
        for (int i = 0; i < N; ++i) zrow.push_back(row_of(agents[static_cast<std::size_t>(i)].zeta, i));
        res.zeta.push_back(std::move(zrow));
        res.last_time = t;
        if (t == tau) break;

        if (t < tau - H) {
            for (int i = 0; i < N; ++i) {
                auto& ctx = agents[static_cast<std::size_t>(i)];
                ctx.x = x[static_cast<std::size_t>(i)];
                SolveRecord rec{t, i, {}};
                try {
                    rec.result = rhc_step(shared, ctx, t);
                } catch (const std::exception& e) {
                    throw RhcError("agent " + std::to_string(i) + " at t=" + std::to_string(t) + ": " + e.what());
                }
                if (on_solve) on_solve(rec);
                const bool ok = rec.result.feasible;
                std::string reason = rec.result.reason;
                res.solves.push_back(std::move(rec));
                if (!ok) {
                    res.feasible = false;
                    res.stopped_at = t;
                    res.failed_agent = i;
                    res.reason = reason;
                    return res;
                }
            }
        }

        std::vector<Vec> applied(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i) {
            auto& ctx = agents[static_cast<std::size_t>(i)];
            Matrix u = ctx.planned_input(t, N, D);
            Vec ui = row_of(u, i);
            for (double& v : ui) v = std::clamp(v, shared.dyn.u_min, shared.dyn.u_max);
            for (int d = 0; d < D; ++d) u(i, d) = ui[static_cast<std::size_t>(d)];
            ctx.u_prev2 = ctx.u_prev;
            ctx.u_prev = u;
            x[static_cast<std::size_t>(i)] = dynamics::step_agent(x[static_cast<std::size_t>(i)], ui, shared.dyn, i);
            ctx.x = x[static_cast<std::size_t>(i)];
            applied[static_cast<std::size_t>(i)] = std::move(ui);
        }
        res.inputs.push_back(std::move(applied));
        res.states.push_back(x);
    }
    return res;
}

}  // namespace dpmtl::rhc

#include <algorithm>
#include <cmath>

#include "dpmtl/rhc.hpp"

namespace dpmtl::rhc {

using milp::LinearExpr;
using milp::Relation;
using milp::VarId;

void RhcConfig::validate() const {
    if (H < 1) throw RhcError("H must be at least 1");
    if (static_cast<int>(r_min.size()) != H) throw RhcError("r_min vector must have H entries");
    if (static_cast<int>(gamma_min.size()) != H) throw RhcError("gamma_min vector must have H entries");
    for (double r : r_min) {
        if (!(r >= 0.0)) throw RhcError("r_min entries must be non-negative");
    }
    for (double g : gamma_min) {
        if (!(g > 0.0 && g < 1.0)) throw RhcError("gamma_min entries must lie in (0, 1)");
    }
    if (!(big_M > 0.0)) throw RhcError("big_M must be positive");
}

int SharedModel::planning_length() const {
    int h = phi_system ? mtl::horizon(*phi_system) : 0;
    for (const auto& f : phi_agent) h = std::max(h, mtl::horizon(*f));
    return cfg.H + h;
}

void SharedModel::validate() const {
    dyn.validate();
    cfg.validate();
    if (graph.size() != agents()) throw RhcError("graph and dynamics disagree on the agent count");
    if (!phi_system) throw RhcError("system-level specification missing");
    if (static_cast<int>(phi_agent.size()) != agents()) throw RhcError("need one agent-level specification per agent");
    if (dyn.u_min > 0.0 || dyn.u_max < 0.0) throw RhcError("input bounds must contain zero");
    if (gossip.V.rows() != agents()) throw RhcError("gossip matrix size mismatch");
}

Matrix AgentContext::planned_input(int t, int N, int D) const {
    const int k = t - plan_start;
    if (plan_start < 0 || k < 0 || k >= static_cast<int>(plan.size())) return Matrix::Zero(N, D);
    return plan[static_cast<std::size_t>(k)];
}

Matrix predict_output(const Matrix& xhat, const Matrix& u, const Matrix& u_prev, const dynamics::LinearDynamics& dyn) {
    const auto N = xhat.rows();
    if (u.rows() != N || u_prev.rows() != N || u.cols() != xhat.cols() || u_prev.cols() != xhat.cols() ||
        N != dyn.agents()) {
        throw RhcError("predict_output dimension mismatch");
    }
    Matrix y(N, xhat.cols());
    for (Eigen::Index j = 0; j < N; ++j) {
        const auto k = static_cast<std::size_t>(j);
        const double c = dyn.c[k];
        const double cba = c * dyn.b[k] * dyn.a[k] / 2.0;
        y.row(j) = c * (xhat.row(j) + u.row(j)) + cba * (u.row(j) - u_prev.row(j));
    }
    return y;
}

double system_threshold(const SharedModel& shared, int t) {
    const auto& cfg = shared.cfg;
    double thr = 0.0;
    for (int j = 0; j < cfg.H; ++j) {
        const auto k = static_cast<std::size_t>(j);
        const double req = encode::required_rmin(*shared.phi_system, shared.eps, cfg.gamma_min[k],
                                                 cfg.confidence_mode, t + j, t + j);
        thr = std::max({thr, cfg.r_min[k], req});
    }
    return thr;
}

DiffMilp assemble_diff_milp(const SharedModel& shared, const AgentContext& ctx, int t) {
    const int N = shared.agents();
    const int D = shared.dims();
    const int L = shared.planning_length();
    const int H = shared.cfg.H;
    const int i = ctx.id;
    const auto& dyn = shared.dyn;
    if (ctx.xhat.rows() != N || ctx.xhat.cols() != D || ctx.zeta.rows() != N || ctx.zeta.cols() != D ||
        ctx.u_prev.rows() != N || static_cast<int>(ctx.x.size()) != D) {
        throw RhcError("agent context dimensions are inconsistent");
    }
    if (t + L > shared.kalman.horizon()) throw RhcError("Kalman schedule too short for the planning window");

    DiffMilp out;
    out.start = t;
    out.length = L;
    out.system_threshold = system_threshold(shared, t);
    auto& model = out.model;

    const double pmax = dyn.u_max;
    const double nmax = -dyn.u_min;
    out.pos.resize(static_cast<std::size_t>(L));
    out.neg.resize(static_cast<std::size_t>(L));
    LinearExpr objective;
    for (int k = 0; k < L; ++k) {
        std::vector<VarId> slot_max;
        for (int j = 0; j < N; ++j) {
            for (int d = 0; d < D; ++d) {
                const std::string tag = std::to_string(t + k) + "_" + std::to_string(j) + "_" + std::to_string(d);
                const VarId p = model.add_continuous("up" + tag, 0.0, pmax);
                const VarId n = model.add_continuous("un" + tag, 0.0, nmax);
                out.pos[static_cast<std::size_t>(k)].push_back(p);
                out.neg[static_cast<std::size_t>(k)].push_back(n);
            }
        }
        if (shared.cfg.objective == Objective::OneNorm) {
            for (VarId v : out.pos[static_cast<std::size_t>(k)]) objective.add(v, 1.0);
            for (VarId v : out.neg[static_cast<std::size_t>(k)]) objective.add(v, 1.0);
        } else {
            const VarId bound = model.add_continuous("uinf" + std::to_string(t + k), 0.0, std::max(pmax, nmax));
            objective.add(bound, 1.0);
            for (std::size_t c = 0; c < out.pos[static_cast<std::size_t>(k)].size(); ++c) {
                LinearExpr row(bound);
                row.add(out.pos[static_cast<std::size_t>(k)][c], -1.0);
                row.add(out.neg[static_cast<std::size_t>(k)][c], -1.0);
                model.add_constraint(row, Relation::GreaterEqual, 0.0);
            }
        }
    }
    model.set_objective(objective);

    auto input = [&](int k, int j, int d) -> LinearExpr {
        if (k < 0) return LinearExpr(ctx.u_prev(j, d));
        const auto c = static_cast<std::size_t>(j * D + d);
        LinearExpr e(out.pos[static_cast<std::size_t>(k)][c]);
        e.add(out.neg[static_cast<std::size_t>(k)][c], -1.0);
        return e;
    };

    // Own state.
    out.own_state.assign(static_cast<std::size_t>(L) + 1, std::vector<LinearExpr>(static_cast<std::size_t>(D)));
    for (int d = 0; d < D; ++d) out.own_state[0][static_cast<std::size_t>(d)] = LinearExpr(ctx.x[static_cast<std::size_t>(d)]);
    const double ai = dyn.a[static_cast<std::size_t>(i)];
    const double bi = dyn.b[static_cast<std::size_t>(i)];
    for (int k = 0; k < L; ++k) {
        for (int d = 0; d < D; ++d) {
            LinearExpr next = out.own_state[static_cast<std::size_t>(k)][static_cast<std::size_t>(d)] * ai;
            next.add_scaled(input(k, i, d), bi);
            out.own_state[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(d)] = std::move(next);
        }
    }

    // Stacked estimate and gossip recursions.
    using Stack = std::vector<LinearExpr>;  // index j * D + d
    auto at = [D](int j, int d) { return static_cast<std::size_t>(j * D + d); };
    Stack xh(static_cast<std::size_t>(N * D)), zt(static_cast<std::size_t>(N * D));
    for (int j = 0; j < N; ++j) {
        for (int d = 0; d < D; ++d) {
            xh[at(j, d)] = LinearExpr(ctx.xhat(j, d));
            zt[at(j, d)] = LinearExpr(ctx.zeta(j, d));
        }
    }
    out.zeta_row.assign(static_cast<std::size_t>(L) + 1, std::vector<LinearExpr>(static_cast<std::size_t>(D)));
    for (int d = 0; d < D; ++d) out.zeta_row[0][static_cast<std::size_t>(d)] = zt[at(i, d)];
    const Matrix& V = shared.gossip.V;
    for (int k = 0; k < L; ++k) {
        const Matrix& K = shared.kalman.gain(t + k + 1);
        Stack innov(static_cast<std::size_t>(N * D)), pred(static_cast<std::size_t>(N * D));
        for (int j = 0; j < N; ++j) {
            const auto js = static_cast<std::size_t>(j);
            const double a = dyn.a[js], b = dyn.b[js], c = dyn.c[js];
            for (int d = 0; d < D; ++d) {
                const LinearExpr u = input(k, j, d);
                LinearExpr p = xh[at(j, d)] * a;
                p.add_scaled(u, b);
                // Predicted noisy output of agent j at t+k+1.
                LinearExpr y = xh[at(j, d)] * c;
                y.add_scaled(u, c + c * b * a / 2.0);
                y.add_scaled(input(k - 1, j, d), -c * b * a / 2.0);
                innov[at(j, d)] = y - p;
                pred[at(j, d)] = std::move(p);
            }
        }
        Stack xn = pred;
        for (int j = 0; j < N; ++j) {
            for (int m = 0; m < N; ++m) {
                const double g = K(j, m);
                if (g == 0.0) continue;
                for (int d = 0; d < D; ++d) xn[at(j, d)].add_scaled(innov[at(m, d)], g);
            }
        }
        Stack zn(static_cast<std::size_t>(N * D));
        for (int j = 0; j < N; ++j) {
            for (int d = 0; d < D; ++d) {
                LinearExpr z = xn[at(j, d)] - xh[at(j, d)];
                for (int m = 0; m < N; ++m) {
                    if (V(j, m) != 0.0) z.add_scaled(zt[at(m, d)], V(j, m));
                }
                zn[at(j, d)] = std::move(z);
            }
        }
        xh = std::move(xn);
        zt = std::move(zn);
        for (int d = 0; d < D; ++d) out.zeta_row[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(d)] = zt[at(i, d)];
    }

    encode::StateTable own(static_cast<std::size_t>(D)), sys(static_cast<std::size_t>(D));
    for (int k = 0; k <= L; ++k) {
        own.set(t + k, out.own_state[static_cast<std::size_t>(k)]);
        sys.set(t + k, out.zeta_row[static_cast<std::size_t>(k)]);
    }
    const auto& phi_i = *shared.phi_agent[static_cast<std::size_t>(i)];
    const auto& phi_s = *shared.phi_system;
    if (shared.cfg.encoding == Encoding::Threshold) {
        encode::ThresholdEncoder agent_enc(model, own, shared.cfg.big_M);
        encode::ThresholdEncoder system_enc(model, sys, shared.cfg.big_M);
        for (int j = 0; j < H; ++j) {
            agent_enc.require_at_least(phi_i, t + j, shared.cfg.r_min[static_cast<std::size_t>(j)]);
            system_enc.require_at_least(phi_s, t + j, out.system_threshold);
        }
        out.trivially_infeasible = agent_enc.trivially_infeasible() || system_enc.trivially_infeasible();
    } else {
        encode::EncodingConfig ecfg;
        ecfg.big_M = shared.cfg.big_M;
        encode::RobustnessEncoder agent_enc(model, own, ecfg);
        encode::RobustnessEncoder system_enc(model, sys, ecfg);
        for (int j = 0; j < H; ++j) {
            const VarId ra = agent_enc.encode(phi_i, t + j);
            model.add_constraint(LinearExpr(ra), Relation::GreaterEqual, shared.cfg.r_min[static_cast<std::size_t>(j)]);
            out.rho_agent.push_back(ra);
            const VarId rs = system_enc.encode(phi_s, t + j);
            model.add_constraint(LinearExpr(rs), Relation::GreaterEqual, out.system_threshold);
            out.rho_system.push_back(rs);
        }
    }
    return out;
}

}  // namespace dpmtl::rhc

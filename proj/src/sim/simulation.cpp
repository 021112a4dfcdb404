#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "dpmtl/sim.hpp"

namespace dpmtl::sim {

namespace {

// Keeps the Kalman recursion well defined when an agent adds no noise.
constexpr double kMinVariance = 1e-12;

int pick(privacy::GaussianStream& rng, int n) {
    const int k = static_cast<int>(rng.uniform() * static_cast<double>(n));
    return std::min(k, n - 1);
}

rhc::Schedule make_schedule(const dynamics::Graph& graph, int tau, std::uint64_t seed) {
    rhc::Schedule s(static_cast<std::size_t>(tau) + 1);
    if (graph.size() < 2) return s;
    privacy::GaussianStream rng(seed);
    for (int t = 1; t <= tau; ++t) {
        const int a = pick(rng, graph.size());
        const auto& nb = graph.neighbors(a);
        const int l = nb[static_cast<std::size_t>(pick(rng, static_cast<int>(nb.size())))];
        s[static_cast<std::size_t>(t)] = std::make_pair(a, l);
    }
    return s;
}

double robustness_at(const std::vector<Vec>& samples, const mtl::Formula& f, int t) {
    if (t + mtl::horizon(f) >= static_cast<int>(samples.size())) return -std::numeric_limits<double>::infinity();
    return mtl::robustness(mtl::Trajectory(samples), f, t);
}

std::vector<double> robustness_trace(const std::vector<Vec>& samples, const mtl::Formula& f) {
    std::vector<double> out;
    if (samples.empty()) return out;
    const mtl::Trajectory traj(samples);
    for (int t = 0; t + mtl::horizon(f) < static_cast<int>(samples.size()); ++t) out.push_back(mtl::robustness(traj, f, t));
    return out;
}

}  // namespace

Prepared prepare(const ScenarioConfig& cfg) {
    cfg.validate();
    Prepared p;
    p.cfg = cfg;
    const int N = cfg.agents;
    auto& sh = p.shared;
    sh.dyn.a = cfg.a;
    sh.dyn.b = cfg.b;
    sh.dyn.c = cfg.c;
    sh.dyn.dims = static_cast<std::size_t>(cfg.dims);
    sh.dyn.u_min = cfg.u_min;
    sh.dyn.u_max = cfg.u_max;
    sh.dyn.validate();
    sh.graph = dynamics::Graph(N, cfg.edges);

    double vmax = 0.0;
    estimation::Matrix W = estimation::Matrix::Zero(N, N);
    for (int i = 0; i < N; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double sens = privacy::sensitivity_upper(cfg.c[k], cfg.privacy[k].nu);
        p.noise.push_back(privacy::calibrate_sigma(sens, cfg.privacy[k]));
        const double var = std::max(p.noise.back().sigma * p.noise.back().sigma, kMinVariance);
        W(i, i) = var;
        vmax = std::max(vmax, var);
    }

    sh.cfg.H = cfg.H;
    sh.cfg.r_min.assign(static_cast<std::size_t>(cfg.H), cfg.r_min);
    sh.cfg.gamma_min.assign(static_cast<std::size_t>(cfg.H), cfg.gamma_min);
    sh.cfg.big_M = cfg.big_M;
    sh.cfg.objective = cfg.objective;
    sh.cfg.encoding = cfg.encoding;
    sh.cfg.confidence_mode = cfg.confidence_mode;
    sh.phi_system = cfg.phi_system;
    sh.phi_agent = cfg.phi_agent;

    const int T = cfg.tau + sh.planning_length();
    sh.kalman = estimation::kalman_schedule(cfg.sigma0 * estimation::Matrix::Identity(N, N), W, T);

    estimation::Matrix P = estimation::build_gossip_probabilities(sh.graph);
    if (cfg.gossip_refine_iterations > 0) {
        P = estimation::refine_gossip_probabilities(sh.graph, P, cfg.gossip_refine_iterations, 0);
    }
    sh.gossip = estimation::expected_gossip_matrix(P);

    estimation::ErrorBoundParams eb;
    eb.lambda = sh.gossip.lambda2;
    eb.L1 = cfg.L1;
    eb.L2 = cfg.L2;
    eb.zeta_max = cfg.zeta_max;
    eb.s_max = cfg.s_max;
    eb.v_max = cfg.v_max.value_or(vmax);
    eb.u_max = std::max(std::abs(cfg.u_min), std::abs(cfg.u_max));
    eb.N = N;
    eb.multiplicative = cfg.multiplicative_bound;
    sh.eps = estimation::error_bound_trace(T, eb);
    sh.validate();
    return p;
}

RunResult run_simulation(const Prepared& prep, std::uint64_t master_seed, int run_index, const RunOptions& opts) {
    const auto& cfg = prep.cfg;
    const int N = cfg.agents;
    const int D = cfg.dims;
    const auto run = static_cast<std::uint64_t>(run_index);

    rhc::SharedModel shared = prep.shared;
    shared.cfg.solver.dump = opts.dump;

    estimation::Matrix xhat0(N, D);
    for (int j = 0; j < N; ++j) {
        for (int d = 0; d < D; ++d) {
            xhat0(j, d) = cfg.initial_estimates[static_cast<std::size_t>(j)][static_cast<std::size_t>(d)];
        }
    }
    std::vector<rhc::AgentContext> agents;
    for (int i = 0; i < N; ++i) {
        rhc::AgentContext ctx;
        ctx.id = i;
        ctx.x = cfg.initial_states[static_cast<std::size_t>(i)];
        ctx.xhat = xhat0;
        ctx.zeta = estimation::Matrix::Zero(N, D);
        if (cfg.zeta_init == ZetaInit::OwnState) {
            for (int j = 0; j < N; ++j) {
                for (int d = 0; d < D; ++d) {
                    ctx.zeta(j, d) = cfg.initial_states[static_cast<std::size_t>(j)][static_cast<std::size_t>(d)];
                }
            }
        }
        ctx.u_prev = estimation::Matrix::Zero(N, D);
        ctx.u_prev2 = estimation::Matrix::Zero(N, D);
        ctx.noise = prep.noise[static_cast<std::size_t>(i)];
        agents.push_back(std::move(ctx));
    }

    const rhc::Schedule schedule =
        make_schedule(shared.graph, cfg.tau, derive_seed(master_seed, run, static_cast<std::uint64_t>(N), 1));
    std::vector<privacy::GaussianStream> streams;
    for (int i = 0; i < N; ++i) streams.emplace_back(derive_seed(master_seed, run, static_cast<std::uint64_t>(i), 0));
    const rhc::NoiseSource noise = [&](int i, int, const Vec& clean) {
        return privacy::gaussian_mechanism(clean, prep.noise[static_cast<std::size_t>(i)],
                                           streams[static_cast<std::size_t>(i)]);
    };

    RunResult out;
    out.loop = rhc::agent_loop(shared, agents, schedule, cfg.tau, noise, opts.on_solve);
    const auto& loop = out.loop;
    for (const auto& s : loop.states) out.eta.push_back(dynamics::system_average(s));

    auto& m = out.metrics;
    m.run = run_index;
    m.seed = master_seed;
    m.feasible = loop.feasible;
    m.reason = loop.reason;
    m.stopped_at = loop.stopped_at;
    m.last_time = loop.last_time;

    m.mean_abs_error.assign(static_cast<std::size_t>(N), Vec(static_cast<std::size_t>(D), 0.0));
    const int T = std::min<int>(loop.last_time, static_cast<int>(loop.zeta.size()) - 1);
    for (int t = 1; t <= T; ++t) {
        for (int i = 0; i < N; ++i) {
            for (int d = 0; d < D; ++d) {
                const auto ts = static_cast<std::size_t>(t);
                m.mean_abs_error[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] +=
                    std::abs(loop.zeta[ts][static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] -
                             out.eta[ts][static_cast<std::size_t>(d)]);
            }
        }
    }
    if (T >= 1) {
        for (auto& row : m.mean_abs_error) {
            for (double& v : row) v /= static_cast<double>(T);
        }
    }

    m.phi_system_robustness = robustness_at(out.eta, *cfg.phi_system, 0);
    m.phi_system_satisfied = static_cast<int>(out.eta.size()) > mtl::horizon(*cfg.phi_system) &&
                             mtl::boolean_sat(mtl::Trajectory(out.eta), *cfg.phi_system, 0);
    m.system_robustness_trace = robustness_trace(out.eta, *cfg.phi_system);
    for (int i = 0; i < N; ++i) {
        std::vector<Vec> own;
        for (const auto& s : loop.states) own.push_back(s[static_cast<std::size_t>(i)]);
        const auto& f = *cfg.phi_agent[static_cast<std::size_t>(i)];
        const double r = robustness_at(own, f, 0);
        const bool sat = static_cast<int>(own.size()) > mtl::horizon(f) && mtl::boolean_sat(mtl::Trajectory(own), f, 0);
        m.phi_agent_robustness.push_back(r);
        m.phi_agent_satisfied.push_back(sat);
        m.agent_robustness_trace.push_back(robustness_trace(own, f));
    }

    for (const auto& rec : loop.solves) {
        ++m.solves;
        m.total_solve_seconds += rec.result.seconds;
        m.max_solve_seconds = std::max(m.max_solve_seconds, rec.result.seconds);
        m.max_nodes = std::max(m.max_nodes, rec.result.nodes);
    }
    return out;
}

RunResult run_simulation(const ScenarioConfig& cfg, std::uint64_t master_seed, int run_index) {
    return run_simulation(prepare(cfg), master_seed, run_index);
}

std::vector<Record> RunResult::records() const {
    std::vector<Record> out;
    const int run = metrics.run;
    auto emit = [&](int t, int agent, Kind kind, const Vec& v) {
        for (std::size_t d = 0; d < v.size(); ++d) out.push_back({run, t, agent, kind, static_cast<int>(d), v[d]});
    };
    for (std::size_t t = 0; t < loop.states.size(); ++t) {
        const int ti = static_cast<int>(t);
        const auto& states = loop.states[t];
        for (std::size_t i = 0; i < states.size(); ++i) emit(ti, static_cast<int>(i), Kind::State, states[i]);
        if (t < loop.zeta.size()) {
            for (std::size_t i = 0; i < loop.zeta[t].size(); ++i) emit(ti, static_cast<int>(i), Kind::Zeta, loop.zeta[t][i]);
        }
        if (t < eta.size()) emit(ti, -1, Kind::Eta, eta[t]);
        if (t < loop.inputs.size()) {
            for (std::size_t i = 0; i < loop.inputs[t].size(); ++i) emit(ti, static_cast<int>(i), Kind::Input, loop.inputs[t][i]);
        }
        if (t < loop.noisy.size()) {
            for (std::size_t i = 0; i < loop.noisy[t].size(); ++i) {
                emit(ti, static_cast<int>(i), Kind::NoisyOutput, loop.noisy[t][i]);
            }
        }
    }
    return out;
}

BatchMetrics aggregate(const Prepared& prep, std::vector<RunMetrics> runs, std::vector<std::string> errors) {
    BatchMetrics b;
    const auto N = static_cast<std::size_t>(prep.cfg.agents);
    const auto D = static_cast<std::size_t>(prep.cfg.dims);
    b.runs = std::move(runs);
    b.errors = std::move(errors);
    b.lambda2 = prep.shared.gossip.lambda2;
    for (const auto& n : prep.noise) b.sigma.push_back(n.sigma);
    b.eps_trace.assign(prep.shared.eps.begin(),
                       prep.shared.eps.begin() + std::min<std::ptrdiff_t>(prep.cfg.tau + 1,
                                                                           static_cast<std::ptrdiff_t>(prep.shared.eps.size())));
    b.p_agent.assign(N, 0.0);
    b.mean_error_mean.assign(N, Vec(D, 0.0));
    b.mean_error_std.assign(N, Vec(D, 0.0));

    const std::size_t total = b.runs.size() + b.errors.size();
    int sys_ok = 0;
    for (const auto& r : b.runs) {
        if (r.phi_system_satisfied) ++sys_ok;
        if (!r.feasible) continue;
        ++b.feasible_runs;
        for (std::size_t i = 0; i < N; ++i) {
            if (r.phi_agent_satisfied[i]) b.p_agent[i] += 1.0;
            for (std::size_t d = 0; d < D; ++d) b.mean_error_mean[i][d] += r.mean_abs_error[i][d];
        }
    }
    b.p_system = total == 0 ? 0.0 : static_cast<double>(sys_ok) / static_cast<double>(total);
    if (b.feasible_runs > 0) {
        const double f = static_cast<double>(b.feasible_runs);
        for (std::size_t i = 0; i < N; ++i) {
            b.p_agent[i] /= f;
            for (std::size_t d = 0; d < D; ++d) b.mean_error_mean[i][d] /= f;
        }
        for (const auto& r : b.runs) {
            if (!r.feasible) continue;
            for (std::size_t i = 0; i < N; ++i) {
                for (std::size_t d = 0; d < D; ++d) {
                    const double e = r.mean_abs_error[i][d] - b.mean_error_mean[i][d];
                    b.mean_error_std[i][d] += e * e / f;
                }
            }
        }
        for (auto& row : b.mean_error_std) {
            for (double& v : row) v = std::sqrt(v);
        }
    }
    return b;
}

BatchResult run_batch(const Prepared& prep, int runs, std::uint64_t master_seed, int threads,
                      const std::filesystem::path& dump_dir) {
    if (runs < 1) throw ConfigError("runs", "must be at least 1");
    threads = std::clamp(threads, 1, runs);
    if (!dump_dir.empty()) std::filesystem::create_directories(dump_dir);

    std::vector<std::optional<RunResult>> results(static_cast<std::size_t>(runs));
    std::vector<std::string> failures(static_cast<std::size_t>(runs));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k = next++; k < runs; k = next++) {
            try {
                RunOptions opts;
                std::ofstream dump;
                if (!dump_dir.empty()) {
                    const auto path = dump_dir / ("milp_run" + std::to_string(k) + ".lp");
                    dump.open(path);
                    if (!dump) throw OutputError("cannot write " + path.string());
                    opts.dump = &dump;
                }
                results[static_cast<std::size_t>(k)] = run_simulation(prep, master_seed, k, opts);
            } catch (const std::exception& e) {
                failures[static_cast<std::size_t>(k)] = "run " + std::to_string(k) + ": " + e.what();
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    BatchResult out;
    std::vector<RunMetrics> metrics;
    std::vector<std::string> errors;
    for (int k = 0; k < runs; ++k) {
        auto& r = results[static_cast<std::size_t>(k)];
        if (r) {
            metrics.push_back(r->metrics);
            out.runs.push_back(std::move(*r));
        } else {
            errors.push_back(failures[static_cast<std::size_t>(k)]);
        }
    }
    out.metrics = aggregate(prep, std::move(metrics), std::move(errors));
    return out;
}

}  // namespace dpmtl::sim

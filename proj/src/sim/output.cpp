#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "dpmtl/sim.hpp"

namespace dpmtl::sim {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::ofstream open_file(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OutputError("cannot write " + path.string());
    return out;
}

void close_file(std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) throw OutputError("error while writing " + path.string());
}

nlohmann::ordered_json run_json(const RunMetrics& r) {
    nlohmann::ordered_json j;
    j["run"] = r.run;
    j["seed"] = r.seed;
    j["feasible"] = r.feasible;
    if (!r.feasible) {
        j["reason"] = r.reason;
        j["stopped_at"] = r.stopped_at;
    }
    j["last_time"] = r.last_time;
    j["mean_abs_error"] = r.mean_abs_error;
    j["phi_system_satisfied"] = r.phi_system_satisfied;
    j["phi_system_robustness"] = r.phi_system_robustness;
    j["phi_agent_satisfied"] = r.phi_agent_satisfied;
    j["phi_agent_robustness"] = r.phi_agent_robustness;
    j["system_robustness_trace"] = r.system_robustness_trace;
    j["agent_robustness_trace"] = r.agent_robustness_trace;
    j["solves"] = r.solves;
    j["max_solve_seconds"] = r.max_solve_seconds;
    j["total_solve_seconds"] = r.total_solve_seconds;
    j["max_nodes"] = r.max_nodes;
    return j;
}

}  // namespace

const char* to_string(Kind k) {
    switch (k) {
        case Kind::State: return "state";
        case Kind::Zeta: return "zeta";
        case Kind::Eta: return "eta";
        case Kind::Input: return "input";
        case Kind::NoisyOutput: return "noisy_output";
    }
    return "?";
}

void write_trajectories_csv(std::ostream& os, const std::vector<Record>& records) {
    os << "run,t,agent,kind,dim,value\n";
    for (const auto& r : records) {
        os << r.run << ',' << r.t << ',' << r.agent << ',' << to_string(r.kind) << ',' << r.dim << ',' << fmt(r.value)
           << '\n';
    }
}

void emit_outputs(const std::filesystem::path& dir, const std::vector<RunResult>& runs, const BatchMetrics& metrics,
                  const Prepared& prep) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "plotdata", ec);
    if (ec) throw OutputError("cannot create " + (dir / "plotdata").string() + ": " + ec.message());

    {
        const auto path = dir / "trajectories.csv";
        auto out = open_file(path);
        std::vector<Record> all;
        for (const auto& r : runs) {
            auto rec = r.records();
            all.insert(all.end(), rec.begin(), rec.end());
        }
        write_trajectories_csv(out, all);
        close_file(out, path);
    }

    {
        nlohmann::ordered_json j;
        j["scenario"] = prep.cfg.name;
        j["runs"] = metrics.runs.size() + metrics.errors.size();
        j["feasible_runs"] = metrics.feasible_runs;
        j["p_system"] = metrics.p_system;
        j["p_agent"] = metrics.p_agent;
        j["mean_abs_error_mean"] = metrics.mean_error_mean;
        j["mean_abs_error_std"] = metrics.mean_error_std;
        j["lambda2"] = metrics.lambda2;
        j["sigma"] = metrics.sigma;
        j["eps_trace"] = metrics.eps_trace;
        j["errors"] = metrics.errors;
        auto arr = nlohmann::ordered_json::array();
        for (const auto& r : metrics.runs) arr.push_back(run_json(r));
        j["per_run"] = std::move(arr);
        const auto path = dir / "metrics.json";
        auto out = open_file(path);
        out << j.dump(2) << '\n';
        close_file(out, path);
    }

    {
        const auto path = dir / "plotdata" / "eps.dat";
        auto out = open_file(path);
        out << "# t eps\n";
        for (std::size_t t = 0; t < metrics.eps_trace.size(); ++t) out << t << ' ' << fmt(metrics.eps_trace[t]) << '\n';
        close_file(out, path);
    }

    const int N = prep.cfg.agents;
    const int D = prep.cfg.dims;
    for (const auto& r : runs) {
        const std::string stem = "run" + std::to_string(r.metrics.run);
        {
            // Estimated versus actual system-level trajectory.
            const auto path = dir / "plotdata" / (stem + "_system.dat");
            auto out = open_file(path);
            out << "# t";
            for (int d = 0; d < D; ++d) out << " eta_d" << d;
            for (int i = 0; i < N; ++i) {
                for (int d = 0; d < D; ++d) out << " zeta_a" << i << "_d" << d;
            }
            out << '\n';
            for (std::size_t t = 0; t < r.eta.size() && t < r.loop.zeta.size(); ++t) {
                out << t;
                for (double v : r.eta[t]) out << ' ' << fmt(v);
                for (const auto& row : r.loop.zeta[t]) {
                    for (double v : row) out << ' ' << fmt(v);
                }
                out << '\n';
            }
            close_file(out, path);
        }
        {
            const auto path = dir / "plotdata" / (stem + "_agents.dat");
            auto out = open_file(path);
            out << "# t";
            for (int i = 0; i < N; ++i) {
                for (int d = 0; d < D; ++d) out << " x_a" << i << "_d" << d;
            }
            out << '\n';
            for (std::size_t t = 0; t < r.loop.states.size(); ++t) {
                out << t;
                for (const auto& row : r.loop.states[t]) {
                    for (double v : row) out << ' ' << fmt(v);
                }
                out << '\n';
            }
            close_file(out, path);
        }
    }
}

}  // namespace dpmtl::sim

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dpmtl/sim.hpp"

namespace dpmtl::sim {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const json* find(const json& obj, const std::string& key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
    const json* v = find(obj, key);
    if (!v) throw ConfigError(join(path, key), "required field missing");
    return *v;
}

void expect_object(const json& v, const std::string& path) {
    if (!v.is_object()) throw ConfigError(path, "expected an object");
}

double number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
    return x;
}

int integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
    return v.get<int>();
}

std::string text(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path, "expected a string");
    return v.get<std::string>();
}

double number_or(const json& obj, const std::string& key, const std::string& path, double fallback) {
    const json* v = find(obj, key);
    return v ? number(*v, join(path, key)) : fallback;
}

Vec vector_of(const json& v, const std::string& path, std::size_t expected) {
    if (!v.is_array()) throw ConfigError(path, "expected an array");
    if (v.size() != expected) {
        throw ConfigError(path, "expected " + std::to_string(expected) + " entries, got " + std::to_string(v.size()));
    }
    Vec out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], index(path, i)));
    return out;
}

// A scalar shared by every agent or one value per agent.
Vec per_agent(const json& v, const std::string& path, int n) {
    if (v.is_number()) return Vec(static_cast<std::size_t>(n), number(v, path));
    return vector_of(v, path, static_cast<std::size_t>(n));
}

// A scalar, one value per agent, or {"min": lo, "max": hi} spread evenly
// across agents in id order.
Vec spread(const json& v, const std::string& path, int n) {
    if (v.is_object()) {
        const double lo = number(require(v, "min", path), join(path, "min"));
        const double hi = number(require(v, "max", path), join(path, "max"));
        if (lo > hi) throw ConfigError(path, "min exceeds max");
        Vec out;
        for (int i = 0; i < n; ++i) {
            const double w = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
            out.push_back(lo + w * (hi - lo));
        }
        return out;
    }
    return per_agent(v, path, n);
}

std::vector<Vec> matrix_of(const json& v, const std::string& path, int rows, int cols) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of rows");
    if (v.size() != static_cast<std::size_t>(rows)) {
        throw ConfigError(path, "expected " + std::to_string(rows) + " rows, got " + std::to_string(v.size()));
    }
    std::vector<Vec> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(vector_of(v[i], index(path, i), static_cast<std::size_t>(cols)));
    return out;
}

mtl::PredicatePtr parse_predicate(const std::string& name, const json& v, const std::string& path, int dims) {
    expect_object(v, path);
    const auto D = static_cast<std::size_t>(dims);
    if (const json* box = find(v, "box")) {
        const std::string bp = join(path, "box");
        expect_object(*box, bp);
        const Vec lo = vector_of(require(*box, "lo", bp), join(bp, "lo"), D);
        const Vec hi = vector_of(require(*box, "hi", bp), join(bp, "hi"), D);
        for (std::size_t d = 0; d < D; ++d) {
            if (lo[d] > hi[d]) throw ConfigError(bp, "lo exceeds hi in dimension " + std::to_string(d));
        }
        return std::make_shared<const mtl::Predicate>(mtl::Predicate::box(name, lo, hi));
    }
    if (const json* hs = find(v, "halfspaces")) {
        const std::string hp = join(path, "halfspaces");
        if (!hs->is_array() || hs->empty()) throw ConfigError(hp, "expected a non-empty array");
        std::vector<mtl::Halfspace> faces;
        for (std::size_t k = 0; k < hs->size(); ++k) {
            const std::string fp = index(hp, k);
            expect_object((*hs)[k], fp);
            mtl::Halfspace h;
            h.normal = vector_of(require((*hs)[k], "normal", fp), join(fp, "normal"), D);
            h.offset = number(require((*hs)[k], "offset", fp), join(fp, "offset"));
            faces.push_back(std::move(h));
        }
        try {
            return std::make_shared<const mtl::Predicate>(mtl::Predicate(name, std::move(faces)));
        } catch (const mtl::MtlError& e) {
            throw ConfigError(path, e.what());
        }
    }
    throw ConfigError(path, "predicate needs \"box\" or \"halfspaces\"");
}

mtl::FormulaPtr parse_formula(const std::string& src, const mtl::PredicateTable& table, const std::string& path) {
    try {
        return mtl::parse(src, table);
    } catch (const mtl::MtlError& e) {
        throw ConfigError(path, e.what());
    }
}

template <class E>
E choice(const json& obj, const std::string& key, const std::string& path, E fallback,
         std::initializer_list<std::pair<const char*, E>> options) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    const std::string s = text(*v, join(path, key));
    for (const auto& [name, value] : options) {
        if (s == name) return value;
    }
    std::string allowed;
    for (const auto& [name, value] : options) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
    throw ConfigError(join(path, key), "unknown value \"" + s + "\" (expected " + allowed + ")");
}

}  // namespace

void ScenarioConfig::validate() const {
    if (agents < 1) throw ConfigError("agents", "must be at least 1");
    if (dims < 1) throw ConfigError("dims", "must be at least 1");
    const auto N = static_cast<std::size_t>(agents);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto [i, l] = edges[k];
        if (i < 0 || l < 0 || i >= agents || l >= agents) {
            throw ConfigError(index("edges", k), "agent ids must lie in 1.." + std::to_string(agents));
        }
        if (i == l) throw ConfigError(index("edges", k), "self loops are not allowed");
    }
    try {
        if (!dynamics::Graph(agents, edges).connected()) throw ConfigError("edges", "communication graph is not connected");
    } catch (const dynamics::DynamicsError& e) {
        throw ConfigError("edges", e.what());
    }
    if (a.size() != N || b.size() != N || c.size() != N) throw ConfigError("dynamics", "need one coefficient per agent");
    if (u_min > 0.0 || u_max < 0.0) throw ConfigError("dynamics", "input bounds must contain zero");
    if (initial_states.size() != N) throw ConfigError("initial_states", "need one row per agent");
    if (initial_estimates.size() != N) throw ConfigError("initial_estimates", "need one row per agent");
    if (privacy.size() != N) throw ConfigError("privacy", "need parameters for every agent");
    for (std::size_t i = 0; i < N; ++i) {
        const auto& p = privacy[i];
        if (!(p.epsilon > 0.0)) throw ConfigError("privacy.epsilon", "must be positive");
        if (!(p.delta > 0.0 && p.delta < 0.5)) throw ConfigError("privacy.delta", "must lie in (0, 0.5)");
        if (!(p.nu >= 0.0)) throw ConfigError("privacy.nu", "must be non-negative");
    }
    if (!(sigma0 > 0.0)) throw ConfigError("estimation.sigma0", "must be positive");
    if (!(s_max > 0.0)) throw ConfigError("estimation.s_max", "must be positive");
    if (v_max && !(*v_max > 0.0)) throw ConfigError("estimation.v_max", "must be positive");
    if (L1 < 0.0 || L2 < 0.0 || zeta_max < 0.0) throw ConfigError("estimation", "bound constants must be non-negative");
    if (!phi_system) throw ConfigError("specs.system", "missing");
    if (phi_agent.size() != N) throw ConfigError("specs.agents", "need one formula per agent");
    if (H < 1) throw ConfigError("control.H", "must be at least 1");
    if (tau <= H) throw ConfigError("control.tau", "must exceed H");
    if (!(r_min >= 0.0)) throw ConfigError("control.r_min", "must be non-negative");
    if (!(gamma_min > 0.0 && gamma_min < 1.0)) throw ConfigError("control.gamma_min", "must lie in (0, 1)");
    if (!(big_M > 0.0)) throw ConfigError("control.big_M", "must be positive");
    if (runs < 1) throw ConfigError("runs", "must be at least 1");
}

ScenarioConfig parse_scenario(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    expect_object(root, "(root)");

    ScenarioConfig cfg;
    if (const json* v = find(root, "name")) cfg.name = text(*v, "name");
    cfg.agents = integer(require(root, "agents", ""), "agents");
    cfg.dims = integer(require(root, "dims", ""), "dims");
    if (cfg.agents < 1) throw ConfigError("agents", "must be at least 1");
    if (cfg.dims < 1) throw ConfigError("dims", "must be at least 1");
    const int N = cfg.agents;
    const int D = cfg.dims;

    const json& edges = require(root, "edges", "");
    if (!edges.is_array()) throw ConfigError("edges", "expected an array of [i, l] pairs");
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const std::string ep = index("edges", k);
        if (!edges[k].is_array() || edges[k].size() != 2) throw ConfigError(ep, "expected a pair [i, l]");
        const int i = integer(edges[k][0], index(ep, 0));
        const int l = integer(edges[k][1], index(ep, 1));
        if (i < 1 || l < 1 || i > N || l > N) {
            throw ConfigError(ep, "agent ids must lie in 1.." + std::to_string(N));
        }
        cfg.edges.emplace_back(i - 1, l - 1);
    }

    const json& dyn = require(root, "dynamics", "");
    expect_object(dyn, "dynamics");
    cfg.a = per_agent(require(dyn, "a", "dynamics"), "dynamics.a", N);
    cfg.b = per_agent(require(dyn, "b", "dynamics"), "dynamics.b", N);
    cfg.c = per_agent(require(dyn, "c", "dynamics"), "dynamics.c", N);
    cfg.u_min = number(require(dyn, "u_min", "dynamics"), "dynamics.u_min");
    cfg.u_max = number(require(dyn, "u_max", "dynamics"), "dynamics.u_max");

    cfg.initial_states = matrix_of(require(root, "initial_states", ""), "initial_states", N, D);
    if (const json* v = find(root, "initial_estimates")) {
        cfg.initial_estimates = matrix_of(*v, "initial_estimates", N, D);
    } else {
        cfg.initial_estimates = cfg.initial_states;
    }
    cfg.zeta_init = choice(root, "zeta_init", "", ZetaInit::Zeros,
                           {{"zeros", ZetaInit::Zeros}, {"own_state", ZetaInit::OwnState}});

    const json& priv = require(root, "privacy", "");
    expect_object(priv, "privacy");
    const Vec eps = spread(require(priv, "epsilon", "privacy"), "privacy.epsilon", N);
    const Vec del = spread(require(priv, "delta", "privacy"), "privacy.delta", N);
    const Vec nu = per_agent(require(priv, "nu", "privacy"), "privacy.nu", N);
    for (int i = 0; i < N; ++i) {
        const auto k = static_cast<std::size_t>(i);
        cfg.privacy.push_back({eps[k], del[k], nu[k]});
    }

    if (const json* est = find(root, "estimation")) {
        expect_object(*est, "estimation");
        cfg.s_max = number_or(*est, "s_max", "estimation", cfg.s_max);
        cfg.sigma0 = number_or(*est, "sigma0", "estimation", cfg.s_max);
        cfg.L1 = number_or(*est, "L1", "estimation", cfg.L1);
        cfg.L2 = number_or(*est, "L2", "estimation", cfg.L2);
        cfg.zeta_max = number_or(*est, "zeta_max", "estimation", cfg.zeta_max);
        if (const json* v = find(*est, "v_max")) cfg.v_max = number(*v, "estimation.v_max");
        cfg.multiplicative_bound = choice(*est, "bound_form", "estimation", false,
                                          {{"additive", false}, {"multiplicative", true}});
        if (const json* v = find(*est, "gossip_refine_iterations")) {
            cfg.gossip_refine_iterations = integer(*v, "estimation.gossip_refine_iterations");
            if (cfg.gossip_refine_iterations < 0) throw ConfigError("estimation.gossip_refine_iterations", "must be >= 0");
        }
    } else {
        cfg.sigma0 = cfg.s_max;
    }

    const json& preds = require(root, "predicates", "");
    expect_object(preds, "predicates");
    for (const auto& [name, body] : preds.items()) {
        cfg.predicates.emplace(name, parse_predicate(name, body, join("predicates", name), D));
    }

    const json& specs = require(root, "specs", "");
    expect_object(specs, "specs");
    cfg.phi_system_text = text(require(specs, "system", "specs"), "specs.system");
    cfg.phi_system = parse_formula(cfg.phi_system_text, cfg.predicates, "specs.system");
    const json& agents = require(specs, "agents", "specs");
    if (!agents.is_array() || agents.size() != static_cast<std::size_t>(N)) {
        throw ConfigError("specs.agents", "expected one formula per agent");
    }
    int max_horizon = mtl::horizon(*cfg.phi_system);
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const std::string p = index("specs.agents", i);
        cfg.phi_agent_text.push_back(text(agents[i], p));
        cfg.phi_agent.push_back(parse_formula(cfg.phi_agent_text.back(), cfg.predicates, p));
        max_horizon = std::max(max_horizon, mtl::horizon(*cfg.phi_agent.back()));
    }

    const json& ctl = require(root, "control", "");
    expect_object(ctl, "control");
    cfg.tau = integer(require(ctl, "tau", "control"), "control.tau");
    cfg.H = std::max(1, max_horizon);
    if (const json* v = find(ctl, "H")) cfg.H = integer(*v, "control.H");
    cfg.r_min = number_or(ctl, "r_min", "control", cfg.r_min);
    cfg.gamma_min = number_or(ctl, "gamma_min", "control", cfg.gamma_min);
    cfg.big_M = number_or(ctl, "big_M", "control", cfg.big_M);
    cfg.objective = choice(ctl, "objective", "control", rhc::Objective::OneNorm,
                           {{"one-norm", rhc::Objective::OneNorm}, {"inf-norm", rhc::Objective::InfNorm}});
    cfg.encoding = choice(ctl, "encoding", "control", rhc::Encoding::Threshold,
                          {{"threshold", rhc::Encoding::Threshold}, {"exact", rhc::Encoding::Exact}});
    cfg.confidence_mode = choice(ctl, "confidence_mode", "control", encode::ConfidenceMode::PaperFaithful,
                                 {{"paper", encode::ConfidenceMode::PaperFaithful},
                                  {"sound", encode::ConfidenceMode::Sound}});

    if (const json* v = find(root, "seed")) {
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
            throw ConfigError("seed", "expected a non-negative integer");
        }
        cfg.seed = v->get<std::uint64_t>();
    }
    if (const json* v = find(root, "runs")) cfg.runs = integer(*v, "runs");

    for (const auto& [name, pred] : cfg.predicates) {
        if (pred->dimension() != static_cast<std::size_t>(D)) {
            throw ConfigError(join("predicates", name), "dimension differs from dims");
        }
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open scenario file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

}  // namespace dpmtl::sim

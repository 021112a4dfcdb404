#include <algorithm>
#include <cmath>

#include "dpmtl/detail/overloaded.hpp"
#include "dpmtl/encode.hpp"

namespace dpmtl::encode {

using detail::overloaded;
using milp::LinearExpr;
using milp::Relation;
using milp::VarId;

StateTable::StateTable(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw EncodeError("state table needs at least one dimension");
}

void StateTable::set(int t, const std::vector<LinearExpr>& state) {
    if (state.size() != dimension_) throw EncodeError("state row has wrong dimension");
    rows_[t] = state;
}

void StateTable::set(int t, std::size_t d, LinearExpr e) {
    if (d >= dimension_) throw EncodeError("state dimension out of range");
    auto it = rows_.find(t);
    if (it == rows_.end()) it = rows_.emplace(t, std::vector<LinearExpr>(dimension_)).first;
    it->second[d] = std::move(e);
}

const LinearExpr& StateTable::at(int t, std::size_t d) const {
    auto it = rows_.find(t);
    if (it == rows_.end()) throw EncodeError("state table has no entry for time step " + std::to_string(t));
    if (d >= dimension_) throw EncodeError("state dimension out of range");
    return it->second[d];
}

bool StateTable::has(int t) const { return rows_.count(t) > 0; }

StateTable StateTable::constant(const mtl::Trajectory& traj) {
    StateTable table(traj.dimension());
    for (std::size_t t = 0; t < traj.size(); ++t) {
        std::vector<LinearExpr> row;
        for (double v : traj[t]) row.emplace_back(v);
        table.set(static_cast<int>(t), row);
    }
    return table;
}

LinearExpr face_slack(const mtl::Halfspace& face, const StateTable& states, int t) {
    if (face.normal.size() != states.dimension()) {
        throw EncodeError("predicate dimension does not match the state table");
    }
    double norm = 0.0;
    for (double v : face.normal) norm += v * v;
    norm = std::sqrt(norm);
    LinearExpr e(face.offset / norm);
    for (std::size_t d = 0; d < face.normal.size(); ++d) {
        if (face.normal[d] != 0.0) e.add_scaled(states.at(t, d), -face.normal[d] / norm);
    }
    return e;
}

std::pair<double, double> expression_range(const LinearExpr& e, const milp::Model& model) {
    double lo = e.constant();
    double hi = e.constant();
    for (const auto& [idx, c] : e.terms()) {
        const auto& v = model.variables()[static_cast<std::size_t>(idx)];
        lo += c > 0 ? c * v.lower : c * v.upper;
        hi += c > 0 ? c * v.upper : c * v.lower;
    }
    return {lo, hi};
}

namespace {

void require_coverage(const StateTable& states, const mtl::Formula& f, int t) {
    const int h = mtl::horizon(f);
    for (int k = t; k <= t + h; ++k) {
        if (!states.has(k)) {
            throw EncodeError("state table gap at time step " + std::to_string(k) + " while encoding '" +
                              mtl::to_string(f) + "' at t=" + std::to_string(t));
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Exact encoding

RobustnessEncoder::RobustnessEncoder(milp::Model& model, const StateTable& states, EncodingConfig cfg)
    : model_(model), states_(states), cfg_(cfg) {
    if (!(cfg_.big_M > 0.0)) throw EncodeError("big_M must be positive");
    if (cfg_.r_min && *cfg_.r_min < 0.0) throw EncodeError("r_min must be non-negative");
}

RobustnessEncoder::Value RobustnessEncoder::extremum(std::vector<Value> operands, bool is_min) {
    const int absorbing = is_min ? -1 : 1;
    const int neutral = -absorbing;
    std::vector<LinearExpr> exprs;
    std::optional<double> folded;
    for (auto& op : operands) {
        if (op.infinite == absorbing) return op;
        if (op.infinite == neutral) continue;
        if (op.expr.is_constant()) {
            const double c = op.expr.constant();
            folded = folded ? (is_min ? std::min(*folded, c) : std::max(*folded, c)) : c;
        } else {
            exprs.push_back(std::move(op.expr));
        }
    }
    if (folded) exprs.emplace_back(*folded);
    if (exprs.empty()) return Value{LinearExpr(), neutral};
    if (exprs.size() == 1) return Value{std::move(exprs.front()), 0};

    // Drop operands that can never be the extremum: for a min, any z_k whose
    // lower bound reaches the smallest upper bound of another operand.
    std::vector<std::pair<double, double>> range;
    for (const auto& e : exprs) range.push_back(expression_range(e, model_));
    std::size_t pivot = 0;
    for (std::size_t k = 1; k < exprs.size(); ++k) {
        if (is_min ? range[k].second < range[pivot].second : range[k].first > range[pivot].first) pivot = k;
    }
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < exprs.size(); ++k) {
        const bool dominated = is_min ? range[k].first >= range[pivot].second : range[k].second <= range[pivot].first;
        if (k == pivot || !dominated) keep.push_back(k);
    }
    if (keep.size() == 1) return Value{std::move(exprs[keep.front()]), 0};

    double lo = is_min ? milp::kInfinity : -milp::kInfinity;
    double hi = lo;
    for (std::size_t k : keep) {
        lo = is_min ? std::min(lo, range[k].first) : std::max(lo, range[k].first);
        hi = is_min ? std::min(hi, range[k].second) : std::max(hi, range[k].second);
    }
    const VarId rho = model_.add_continuous("rho" + std::to_string(aux_.size()), lo, hi);
    aux_.push_back(rho);
    LinearExpr selectors;
    for (std::size_t k : keep) {
        // Largest gap |rho - z_k| when b_k = 0, padded for rounding.
        double M = is_min ? range[k].second - lo : hi - range[k].first;
        M = std::isfinite(M) ? M + 1e-9 * (1.0 + std::abs(M)) : cfg_.big_M;
        const VarId b = model_.add_binary("sel" + std::to_string(rho.index) + "_" + std::to_string(k));
        ++binaries_;
        selectors.add(b, 1.0);
        const LinearExpr diff = LinearExpr(rho) - exprs[k];
        if (is_min) {
            // rho <= z_k ; rho >= z_k - M(1 - b_k)
            model_.add_constraint(diff, Relation::LessEqual, 0.0);
            model_.add_constraint(diff - LinearExpr(b, M), Relation::GreaterEqual, -M);
        } else {
            // rho >= z_k ; rho <= z_k + M(1 - b_k)
            model_.add_constraint(diff, Relation::GreaterEqual, 0.0);
            model_.add_constraint(diff + LinearExpr(b, M), Relation::LessEqual, M);
        }
    }
    model_.add_constraint(selectors, Relation::Equal, 1.0);
    return Value{LinearExpr(rho), 0};
}

RobustnessEncoder::Value RobustnessEncoder::value(const mtl::Formula& f, int t) {
    const auto key = std::make_pair(&f, t);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    Value result = std::visit(
        overloaded{
            [&](const mtl::TrueNode&) { return Value{LinearExpr(), 1}; },
            [&](const mtl::AtomNode& n) {
                std::vector<Value> faces;
                for (const auto& face : n.predicate->faces()) faces.push_back({face_slack(face, states_, t), 0});
                return extremum(std::move(faces), true);
            },
            [&](const mtl::NotNode& n) {
                Value v = value(*n.child, t);
                v.expr *= -1.0;
                v.infinite = -v.infinite;
                return v;
            },
            [&](const mtl::AndNode& n) { return extremum({value(*n.left, t), value(*n.right, t)}, true); },
            [&](const mtl::OrNode& n) { return extremum({value(*n.left, t), value(*n.right, t)}, false); },
            [&](const mtl::UntilNode& n) {
                std::vector<Value> outer;
                std::vector<Value> lefts;
                for (int tp = t + n.interval.a; tp <= t + n.interval.b; ++tp) {
                    std::vector<Value> inner = lefts;
                    inner.push_back(value(*n.right, tp));
                    outer.push_back(extremum(std::move(inner), true));
                    lefts.push_back(value(*n.left, tp));
                }
                return extremum(std::move(outer), false);
            },
            [&](const mtl::EventuallyNode& n) {
                std::vector<Value> ops;
                for (int tp = t + n.interval.a; tp <= t + n.interval.b; ++tp) ops.push_back(value(*n.child, tp));
                return extremum(std::move(ops), false);
            },
            [&](const mtl::GloballyNode& n) {
                std::vector<Value> ops;
                for (int tp = t + n.interval.a; tp <= t + n.interval.b; ++tp) ops.push_back(value(*n.child, tp));
                return extremum(std::move(ops), true);
            },
        },
        f.node());
    memo_.emplace(key, result);
    return result;
}

VarId RobustnessEncoder::encode(const mtl::Formula& f, int t) {
    require_coverage(states_, f, t);
    Value v = value(f, t);
    if (v.infinite != 0) {
        throw EncodeError("robustness of '" + mtl::to_string(f) + "' is unbounded (" +
                          (v.infinite > 0 ? "+inf" : "-inf") + ")");
    }
    const auto& terms = v.expr.terms();
    if (terms.size() == 1 && terms.front().second == 1.0 && v.expr.constant() == 0.0) {
        return VarId{terms.front().first};
    }
    const VarId rho = model_.add_continuous("rho" + std::to_string(aux_.size()), -milp::kInfinity, milp::kInfinity);
    aux_.push_back(rho);
    model_.add_constraint(LinearExpr(rho) - v.expr, Relation::Equal, 0.0);
    return rho;
}

void RobustnessEncoder::check_big_m(const milp::Solution& sol) const {
    if (!sol.optimal()) return;
    for (VarId v : aux_) {
        const double x = sol.value(v);
        if (std::abs(x) >= cfg_.big_M - 1e-3) {
            throw BigMError("robustness variable " + model_.variables()[static_cast<std::size_t>(v.index)].name +
                            " = " + std::to_string(x) + " reaches big-M " + std::to_string(cfg_.big_M));
        }
    }
}

VarId encode_robustness(const mtl::Formula& f, const StateTable& states, int t, milp::Model& model,
                        const EncodingConfig& cfg) {
    RobustnessEncoder enc(model, states, cfg);
    const VarId rho = enc.encode(f, t);
    if (cfg.r_min) model.add_constraint(LinearExpr(rho), Relation::GreaterEqual, *cfg.r_min, "rmin");
    return rho;
}

// ---------------------------------------------------------------------------
// Threshold encoding

ThresholdEncoder::ThresholdEncoder(milp::Model& model, const StateTable& states, double big_M)
    : model_(model), states_(states), big_M_(big_M) {
    if (!(big_M > 0.0)) throw EncodeError("big_M must be positive");
}

void ThresholdEncoder::require_at_least(const mtl::Formula& f, int t, double r) {
    require_coverage(states_, f, t);
    imply(f, t, r, true, std::nullopt);
}

void ThresholdEncoder::mark_infeasible() {
    if (infeasible_) return;
    infeasible_ = true;
    model_.add_constraint(LinearExpr(0.0), Relation::GreaterEqual, 1.0, "unsatisfiable");
    ++rows_;
}

void ThresholdEncoder::imply_face(const LinearExpr& slack, double r, bool geq, Literal lit) {
    auto never = [&] {
        if (lit) model_.set_bounds(*lit, 0.0, 0.0);
        else mark_infeasible();
    };
    if (slack.is_constant()) {
        const double c = slack.constant();
        if (geq ? c < r : c > r) never();
        return;
    }
    const auto [lo, hi] = expression_range(slack, model_);
    if (geq) {
        if (lo >= r) return;
        if (hi < r) return never();
        if (!lit) {
            model_.add_constraint(slack, Relation::GreaterEqual, r);
        } else {
            const double M = std::isfinite(lo) ? r - lo : big_M_;
            model_.add_constraint(slack - LinearExpr(*lit, M), Relation::GreaterEqual, r - M);
        }
    } else {
        if (hi <= r) return;
        if (lo > r) return never();
        if (!lit) {
            model_.add_constraint(slack, Relation::LessEqual, r);
        } else {
            const double M = std::isfinite(hi) ? hi - r : big_M_;
            model_.add_constraint(slack + LinearExpr(*lit, M), Relation::LessEqual, r + M);
        }
    }
    ++rows_;
}

VarId ThresholdEncoder::branch_literal(const mtl::Formula* f, int t, double r, bool geq) {
    const auto key = std::make_tuple(f, t, r, geq);
    if (auto it = literals_.find(key); it != literals_.end()) return it->second;
    const VarId d = model_.add_binary("lit" + std::to_string(binaries_));
    ++binaries_;
    literals_.emplace(key, d);
    imply(*f, t, r, geq, d);
    return d;
}

void ThresholdEncoder::any_of(const std::vector<std::tuple<const mtl::Formula*, int, bool>>& branches, double r,
                              Literal lit) {
    if (branches.empty()) {
        if (lit) model_.set_bounds(*lit, 0.0, 0.0);
        else mark_infeasible();
        return;
    }
    if (branches.size() == 1) {
        const auto& [f, t, geq] = branches.front();
        imply(*f, t, r, geq, lit);
        return;
    }
    LinearExpr sum;
    for (const auto& [f, t, geq] : branches) sum.add(branch_literal(f, t, r, geq), 1.0);
    if (lit) {
        sum.add(*lit, -1.0);
        model_.add_constraint(sum, Relation::GreaterEqual, 0.0);
    } else {
        model_.add_constraint(sum, Relation::GreaterEqual, 1.0);
    }
    ++rows_;
}

void ThresholdEncoder::imply(const mtl::Formula& f, int t, double r, bool geq, Literal lit) {
    if (!done_.emplace(&f, t, r, geq, lit ? lit->index : -1).second) return;
    std::visit(
        overloaded{
            [&](const mtl::TrueNode&) {
                if (!geq) {
                    if (lit) model_.set_bounds(*lit, 0.0, 0.0);
                    else mark_infeasible();
                }
            },
            [&](const mtl::AtomNode& n) {
                const auto& faces = n.predicate->faces();
                if (geq || faces.size() == 1) {
                    for (const auto& face : faces) imply_face(face_slack(face, states_, t), r, geq, lit);
                    return;
                }
                // min over faces <= r: some face must be <= r.
                LinearExpr sum;
                for (const auto& face : faces) {
                    const VarId d = model_.add_binary("lit" + std::to_string(binaries_));
                    ++binaries_;
                    imply_face(face_slack(face, states_, t), r, false, d);
                    sum.add(d, 1.0);
                }
                if (lit) {
                    sum.add(*lit, -1.0);
                    model_.add_constraint(sum, Relation::GreaterEqual, 0.0);
                } else {
                    model_.add_constraint(sum, Relation::GreaterEqual, 1.0);
                }
                ++rows_;
            },
            [&](const mtl::NotNode& n) { imply(*n.child, t, -r, !geq, lit); },
            [&](const mtl::AndNode& n) {
                if (geq) {
                    imply(*n.left, t, r, true, lit);
                    imply(*n.right, t, r, true, lit);
                } else {
                    any_of({{n.left.get(), t, false}, {n.right.get(), t, false}}, r, lit);
                }
            },
            [&](const mtl::OrNode& n) {
                if (geq) {
                    any_of({{n.left.get(), t, true}, {n.right.get(), t, true}}, r, lit);
                } else {
                    imply(*n.left, t, r, false, lit);
                    imply(*n.right, t, r, false, lit);
                }
            },
            [&](const mtl::GloballyNode& n) {
                if (geq) {
                    for (int tp = t + n.interval.a; tp <= t + n.interval.b; ++tp) imply(*n.child, tp, r, true, lit);
                } else {
                    std::vector<std::tuple<const mtl::Formula*, int, bool>> br;
                    for (int tp = t + n.interval.a; tp <= t + n.interval.b; ++tp) br.emplace_back(n.child.get(), tp, false);
                    any_of(br, r, lit);
                }
            },
            [&](const mtl::EventuallyNode& n) {
                if (geq) {
                    std::vector<std::tuple<const mtl::Formula*, int, bool>> br;
                    for (int tp = t + n.interval.a; tp <= t + n.interval.b; ++tp) br.emplace_back(n.child.get(), tp, true);
                    any_of(br, r, lit);
                } else {
                    for (int tp = t + n.interval.a; tp <= t + n.interval.b; ++tp) imply(*n.child, tp, r, false, lit);
                }
            },
            [&](const mtl::UntilNode& n) {
                const int lo = t + n.interval.a;
                const int hi = t + n.interval.b;
                if (geq) {
                    // Some t' with right(t') >= r and left >= r on [lo, t').
                    LinearExpr sum;
                    for (int tp = lo; tp <= hi; ++tp) {
                        const VarId d = model_.add_binary("lit" + std::to_string(binaries_));
                        ++binaries_;
                        imply(*n.right, tp, r, true, d);
                        for (int tpp = lo; tpp < tp; ++tpp) imply(*n.left, tpp, r, true, d);
                        sum.add(d, 1.0);
                    }
                    if (lit) {
                        sum.add(*lit, -1.0);
                        model_.add_constraint(sum, Relation::GreaterEqual, 0.0);
                    } else {
                        model_.add_constraint(sum, Relation::GreaterEqual, 1.0);
                    }
                    ++rows_;
                } else {
                    // Every t' has right(t') <= r or some left(t'') <= r on [lo, t').
                    for (int tp = lo; tp <= hi; ++tp) {
                        std::vector<std::tuple<const mtl::Formula*, int, bool>> br;
                        br.emplace_back(n.right.get(), tp, false);
                        for (int tpp = lo; tpp < tp; ++tpp) br.emplace_back(n.left.get(), tpp, false);
                        any_of(br, r, lit);
                    }
                }
            },
        },
        f.node());
}

}  // namespace dpmtl::encode

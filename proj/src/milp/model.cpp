#include "dpmtl/milp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace dpmtl::milp {

LinearExpr::LinearExpr(VarId v, double coeff) {
    if (v.index < 0) throw SolverError("invalid variable handle");
    if (coeff != 0.0) terms_.emplace_back(v.index, coeff);
}

LinearExpr& LinearExpr::add(VarId v, double coeff) {
    if (v.index < 0) throw SolverError("invalid variable handle");
    if (coeff == 0.0) return *this;
    auto it = std::lower_bound(terms_.begin(), terms_.end(), v.index,
                               [](const Term& t, int idx) { return t.first < idx; });
    if (it != terms_.end() && it->first == v.index) {
        it->second += coeff;
        if (it->second == 0.0) terms_.erase(it);
    } else {
        terms_.insert(it, {v.index, coeff});
    }
    return *this;
}

LinearExpr& LinearExpr::add_scaled(const LinearExpr& other, double s) {
    constant_ += s * other.constant_;
    if (s == 0.0 || other.terms_.empty()) return *this;
    std::vector<Term> merged;
    merged.reserve(terms_.size() + other.terms_.size());
    auto a = terms_.begin();
    auto b = other.terms_.begin();
    while (a != terms_.end() || b != other.terms_.end()) {
        if (b == other.terms_.end() || (a != terms_.end() && a->first < b->first)) {
            merged.push_back(*a++);
        } else if (a == terms_.end() || b->first < a->first) {
            merged.emplace_back(b->first, s * b->second);
            ++b;
        } else {
            const double c = a->second + s * b->second;
            if (c != 0.0) merged.emplace_back(a->first, c);
            ++a;
            ++b;
        }
    }
    terms_ = std::move(merged);
    return *this;
}

LinearExpr& LinearExpr::operator+=(const LinearExpr& other) { return add_scaled(other, 1.0); }
LinearExpr& LinearExpr::operator-=(const LinearExpr& other) { return add_scaled(other, -1.0); }

LinearExpr& LinearExpr::operator*=(double s) {
    constant_ *= s;
    if (s == 0.0) {
        terms_.clear();
        return *this;
    }
    for (auto& t : terms_) t.second *= s;
    return *this;
}

double LinearExpr::evaluate(const std::vector<double>& values) const {
    double v = constant_;
    for (const auto& [idx, c] : terms_) v += c * values.at(static_cast<std::size_t>(idx));
    return v;
}

LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return a += b; }
LinearExpr operator-(LinearExpr a, const LinearExpr& b) { return a -= b; }
LinearExpr operator-(LinearExpr a) { return a *= -1.0; }
LinearExpr operator*(LinearExpr a, double s) { return a *= s; }
LinearExpr operator*(double s, LinearExpr a) { return a *= s; }

VarId Model::add_variable(std::string name, VarKind kind, double lower, double upper) {
    if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
        throw SolverError("variable '" + name + "' has invalid bounds");
    }
    if (kind == VarKind::Binary && (lower < 0.0 || upper > 1.0)) {
        throw SolverError("binary variable '" + name + "' must be bounded within [0,1]");
    }
    if (name.empty()) name = "x" + std::to_string(variables_.size());
    variables_.push_back({std::move(name), kind, lower, upper});
    return VarId{static_cast<int>(variables_.size() - 1)};
}

void Model::check_var(VarId v) const {
    if (v.index < 0 || static_cast<std::size_t>(v.index) >= variables_.size()) {
        throw SolverError("variable index " + std::to_string(v.index) + " is not declared");
    }
}

void Model::set_bounds(VarId v, double lower, double upper) {
    check_var(v);
    auto& var = variables_[static_cast<std::size_t>(v.index)];
    if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
        throw SolverError("variable '" + var.name + "' has invalid bounds");
    }
    if (var.kind == VarKind::Binary && (lower < 0.0 || upper > 1.0)) {
        throw SolverError("binary variable '" + var.name + "' must be bounded within [0,1]");
    }
    var.lower = lower;
    var.upper = upper;
}

void Model::add_constraint(const LinearExpr& expr, Relation relation, double rhs, std::string name) {
    for (const auto& t : expr.terms()) check_var(VarId{t.first});
    if (!std::isfinite(rhs) || !std::isfinite(expr.constant())) {
        throw SolverError("constraint right-hand side must be finite");
    }
    if (name.empty()) name = "c" + std::to_string(constraints_.size());
    constraints_.push_back({expr.terms(), relation, rhs - expr.constant(), std::move(name)});
}

void Model::set_objective(LinearExpr objective) {
    for (const auto& t : objective.terms()) check_var(VarId{t.first});
    objective_ = std::move(objective);
}

std::size_t Model::num_binaries() const {
    return static_cast<std::size_t>(std::count_if(variables_.begin(), variables_.end(),
                                                  [](const Variable& v) { return v.kind == VarKind::Binary; }));
}

namespace {

void write_terms(std::ostream& os, const std::vector<LinearExpr::Term>& terms, const Model& m) {
    if (terms.empty()) {
        os << "0";
        return;
    }
    bool first = true;
    for (const auto& [idx, c] : terms) {
        if (!first || c < 0) os << (c < 0 ? " - " : " + ");
        os << std::abs(c) << " " << m.variables()[static_cast<std::size_t>(idx)].name;
        first = false;
    }
}

}  // namespace

void Model::write_lp(std::ostream& os) const {
    const auto old_precision = os.precision(17);
    os << "Minimize\n obj: ";
    write_terms(os, objective_.terms(), *this);
    if (objective_.constant() != 0.0) os << " + " << objective_.constant() << " constant";
    os << "\nSubject To\n";
    for (const auto& c : constraints_) {
        os << " " << c.name << ": ";
        write_terms(os, c.terms, *this);
        os << (c.relation == Relation::LessEqual ? " <= " : c.relation == Relation::Equal ? " = " : " >= ") << c.rhs
           << "\n";
    }
    os << "Bounds\n";
    for (const auto& v : variables_) {
        if (v.kind == VarKind::Binary) continue;
        os << " ";
        if (v.lower == -kInfinity) os << "-inf"; else os << v.lower;
        os << " <= " << v.name << " <= ";
        if (v.upper == kInfinity) os << "+inf"; else os << v.upper;
        os << "\n";
    }
    if (num_binaries() > 0) {
        os << "Binaries\n";
        for (const auto& v : variables_) {
            if (v.kind == VarKind::Binary) os << " " << v.name << "\n";
        }
    }
    os << "End\n";
    os.precision(old_precision);
}

const char* to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
    }
    return "unknown";
}

NodeLimitError::NodeLimitError(long nodes, Solution incumbent, bool has_incumbent)
    : SolverError("branch-and-bound node limit of " + std::to_string(nodes) + " exceeded" +
                  (has_incumbent ? " (incumbent available)" : " (no incumbent)")),
      incumbent_(std::move(incumbent)),
      has_incumbent_(has_incumbent) {}

double max_violation(const Model& model, const std::vector<double>& values) {
    if (values.size() != model.num_variables()) throw SolverError("value vector size mismatch");
    double worst = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
        const auto& v = model.variables()[j];
        worst = std::max({worst, v.lower - values[j], values[j] - v.upper});
    }
    for (const auto& c : model.constraints()) {
        double lhs = 0.0;
        for (const auto& [idx, coeff] : c.terms) lhs += coeff * values[static_cast<std::size_t>(idx)];
        switch (c.relation) {
            case Relation::LessEqual: worst = std::max(worst, lhs - c.rhs); break;
            case Relation::GreaterEqual: worst = std::max(worst, c.rhs - lhs); break;
            case Relation::Equal: worst = std::max(worst, std::abs(lhs - c.rhs)); break;
        }
    }
    return worst;
}

}  // namespace dpmtl::milp

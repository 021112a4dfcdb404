#include "dpmtl/mtl.hpp"

#include "dpmtl/detail/overloaded.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dpmtl::mtl {

using detail::overloaded;

ParseError::ParseError(const std::string& message, std::size_t position)
    : MtlError(message + " at position " + std::to_string(position)), position_(position) {}

Interval::Interval(int lo, int hi) : a(lo), b(hi) {
    if (lo < 0 || hi < 0) {
        throw MtlError("interval bounds must be non-negative");
    }
    if (lo > hi) {
        throw MtlError("malformed interval [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
    }
}

Predicate::Predicate(std::string name, std::vector<Halfspace> faces)
    : name_(std::move(name)), faces_(std::move(faces)) {
    if (faces_.empty()) {
        throw MtlError("predicate '" + name_ + "' needs at least one halfspace");
    }
    const std::size_t dim = faces_.front().normal.size();
    for (const auto& face : faces_) {
        if (face.normal.size() != dim || dim == 0) {
            throw MtlError("predicate '" + name_ + "' has inconsistent halfspace dimensions");
        }
        if (std::all_of(face.normal.begin(), face.normal.end(), [](double v) { return v == 0.0; })) {
            throw MtlError("predicate '" + name_ + "' has a zero normal");
        }
    }
}

Predicate Predicate::box(std::string name, const State& lo, const State& hi) {
    if (lo.size() != hi.size() || lo.empty()) {
        throw MtlError("box bounds must share a non-zero dimension");
    }
    std::vector<Halfspace> faces;
    for (std::size_t d = 0; d < lo.size(); ++d) {
        if (lo[d] > hi[d]) {
            throw MtlError("box '" + name + "' has lo > hi");
        }
        State up(lo.size(), 0.0), down(lo.size(), 0.0);
        up[d] = 1.0;
        down[d] = -1.0;
        faces.push_back({up, hi[d]});
        faces.push_back({down, -lo[d]});
    }
    return Predicate(std::move(name), std::move(faces));
}

bool Predicate::contains(const State& point) const {
    for (const auto& face : faces_) {
        double dot = 0.0;
        for (std::size_t d = 0; d < point.size(); ++d) dot += face.normal[d] * point[d];
        if (dot > face.offset) return false;
    }
    return true;
}

FormulaPtr make_true() { return std::make_shared<Formula>(TrueNode{}); }

FormulaPtr make_atom(PredicatePtr predicate) {
    if (!predicate) throw MtlError("atom requires a predicate");
    return std::make_shared<Formula>(AtomNode{std::move(predicate)});
}

FormulaPtr make_not(FormulaPtr child) { return std::make_shared<Formula>(NotNode{std::move(child)}); }

FormulaPtr make_and(FormulaPtr left, FormulaPtr right) {
    return std::make_shared<Formula>(AndNode{std::move(left), std::move(right)});
}

FormulaPtr make_or(FormulaPtr left, FormulaPtr right) {
    return std::make_shared<Formula>(OrNode{std::move(left), std::move(right)});
}

FormulaPtr make_until(Interval interval, FormulaPtr left, FormulaPtr right) {
    return std::make_shared<Formula>(UntilNode{interval, std::move(left), std::move(right)});
}

FormulaPtr make_eventually(Interval interval, FormulaPtr child) {
    return std::make_shared<Formula>(EventuallyNode{interval, std::move(child)});
}

FormulaPtr make_globally(Interval interval, FormulaPtr child) {
    return std::make_shared<Formula>(GloballyNode{interval, std::move(child)});
}

bool structurally_equal(const Formula& lhs, const Formula& rhs) {
    if (lhs.node().index() != rhs.node().index()) return false;
    const auto& r = rhs.node();
    return std::visit(
        overloaded{
            [](const TrueNode&) { return true; },
            [&](const AtomNode& n) { return n.predicate->name() == std::get<AtomNode>(r).predicate->name(); },
            [&](const NotNode& n) { return structurally_equal(*n.child, *std::get<NotNode>(r).child); },
            [&](const AndNode& n) {
                const auto& o = std::get<AndNode>(r);
                return structurally_equal(*n.left, *o.left) && structurally_equal(*n.right, *o.right);
            },
            [&](const OrNode& n) {
                const auto& o = std::get<OrNode>(r);
                return structurally_equal(*n.left, *o.left) && structurally_equal(*n.right, *o.right);
            },
            [&](const UntilNode& n) {
                const auto& o = std::get<UntilNode>(r);
                return n.interval == o.interval && structurally_equal(*n.left, *o.left) &&
                       structurally_equal(*n.right, *o.right);
            },
            [&](const EventuallyNode& n) {
                const auto& o = std::get<EventuallyNode>(r);
                return n.interval == o.interval && structurally_equal(*n.child, *o.child);
            },
            [&](const GloballyNode& n) {
                const auto& o = std::get<GloballyNode>(r);
                return n.interval == o.interval && structurally_equal(*n.child, *o.child);
            },
        },
        lhs.node());
}

namespace {

std::string interval_text(const Interval& i) {
    return "[" + std::to_string(i.a) + "," + std::to_string(i.b) + "]";
}

}  // namespace

std::string to_string(const Formula& f) {
    return std::visit(
        overloaded{
            [](const TrueNode&) { return std::string("true"); },
            [](const AtomNode& n) { return n.predicate->name(); },
            [](const NotNode& n) { return "!(" + to_string(*n.child) + ")"; },
            [](const AndNode& n) { return "(" + to_string(*n.left) + " & " + to_string(*n.right) + ")"; },
            [](const OrNode& n) { return "(" + to_string(*n.left) + " | " + to_string(*n.right) + ")"; },
            [](const UntilNode& n) {
                return "(" + to_string(*n.left) + " U" + interval_text(n.interval) + " " + to_string(*n.right) + ")";
            },
            [](const EventuallyNode& n) { return "F" + interval_text(n.interval) + "(" + to_string(*n.child) + ")"; },
            [](const GloballyNode& n) { return "G" + interval_text(n.interval) + "(" + to_string(*n.child) + ")"; },
        },
        f.node());
}

int horizon(const Formula& f) {
    return std::visit(
        overloaded{
            [](const TrueNode&) { return 0; },
            [](const AtomNode&) { return 0; },
            [](const NotNode& n) { return horizon(*n.child); },
            [](const AndNode& n) { return std::max(horizon(*n.left), horizon(*n.right)); },
            [](const OrNode& n) { return std::max(horizon(*n.left), horizon(*n.right)); },
            [](const UntilNode& n) { return n.interval.b + std::max(horizon(*n.left), horizon(*n.right)); },
            [](const EventuallyNode& n) { return n.interval.b + horizon(*n.child); },
            [](const GloballyNode& n) { return n.interval.b + horizon(*n.child); },
        },
        f.node());
}

double signed_distance(const State& point, const Predicate& p) {
    if (point.size() != p.dimension()) {
        throw MtlError("point dimension " + std::to_string(point.size()) + " does not match predicate '" +
                       p.name() + "' dimension " + std::to_string(p.dimension()));
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& face : p.faces()) {
        double dot = 0.0, norm2 = 0.0;
        for (std::size_t d = 0; d < point.size(); ++d) {
            dot += face.normal[d] * point[d];
            norm2 += face.normal[d] * face.normal[d];
        }
        best = std::min(best, (face.offset - dot) / std::sqrt(norm2));
    }
    return best;
}

Trajectory::Trajectory(std::vector<State> samples) : samples_(std::move(samples)) {
    if (samples_.empty()) throw MtlError("trajectory must be non-empty");
    const std::size_t dim = samples_.front().size();
    for (const auto& s : samples_) {
        if (s.size() != dim) throw MtlError("trajectory samples have mixed dimensions");
    }
}

}  // namespace dpmtl::mtl

#pragma once

// Metric temporal logic over affine-region predicates: formula trees, a
// text parser with a canonical printer, and discrete-time Boolean and
// robust semantics.

#include <cstddef>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dpmtl::mtl {

using State = std::vector<double>;

class MtlError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by the parser; `position` is the byte offset of the offending token.
class ParseError : public MtlError {
public:
    ParseError(const std::string& message, std::size_t position);
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Closed discrete interval [a, b] of time steps.
struct Interval {
    int a = 0;
    int b = 0;

    Interval() = default;
    Interval(int lo, int hi);

    bool operator==(const Interval&) const = default;
};

/// normal . s <= offset
struct Halfspace {
    std::vector<double> normal;
    double offset = 0.0;
};

/// Named convex region given as an intersection of closed halfspaces.
class Predicate {
public:
    Predicate(std::string name, std::vector<Halfspace> faces);

    /// Axis-aligned box lo <= s <= hi.
    static Predicate box(std::string name, const State& lo, const State& hi);

    const std::string& name() const noexcept { return name_; }
    const std::vector<Halfspace>& faces() const noexcept { return faces_; }
    std::size_t dimension() const noexcept { return faces_.front().normal.size(); }

    bool contains(const State& point) const;

private:
    std::string name_;
    std::vector<Halfspace> faces_;
};

using PredicatePtr = std::shared_ptr<const Predicate>;
using PredicateTable = std::map<std::string, PredicatePtr, std::less<>>;

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct TrueNode {};
struct AtomNode { PredicatePtr predicate; };
struct NotNode { FormulaPtr child; };
struct AndNode { FormulaPtr left, right; };
struct OrNode { FormulaPtr left, right; };
struct UntilNode { Interval interval; FormulaPtr left, right; };
struct EventuallyNode { Interval interval; FormulaPtr child; };
struct GloballyNode { Interval interval; FormulaPtr child; };

using FormulaNode = std::variant<TrueNode, AtomNode, NotNode, AndNode, OrNode,
                                 UntilNode, EventuallyNode, GloballyNode>;

/// Immutable formula tree node. Children are shared, so identical subtrees
/// may appear more than once without copying.
class Formula {
public:
    explicit Formula(FormulaNode node) : node_(std::move(node)) {}
    const FormulaNode& node() const noexcept { return node_; }

private:
    FormulaNode node_;
};

FormulaPtr make_true();
FormulaPtr make_atom(PredicatePtr predicate);
FormulaPtr make_not(FormulaPtr child);
FormulaPtr make_and(FormulaPtr left, FormulaPtr right);
FormulaPtr make_or(FormulaPtr left, FormulaPtr right);
FormulaPtr make_until(Interval interval, FormulaPtr left, FormulaPtr right);
FormulaPtr make_eventually(Interval interval, FormulaPtr child);
FormulaPtr make_globally(Interval interval, FormulaPtr child);

/// Structural equality; atoms compare by predicate name.
bool structurally_equal(const Formula& lhs, const Formula& rhs);

/// Canonical text form, accepted back by `parse`.
std::string to_string(const Formula& f);

/// Grammar (loosest binding first):
///   formula := and ('|' and)*
///   and     := until ('&' until)*
///   until   := unary ('U' interval until)?
///   unary   := '!' unary | ('F'|'G') interval unary | primary
///   primary := 'true' | 'false' | identifier | '(' formula ')'
///   interval:= '[' int ',' int (']' | ')')
/// A half-open interval [a,b) is stored as [a, b-1].
FormulaPtr parse(std::string_view text, const PredicateTable& predicates);

/// Minimum number of future steps needed to evaluate `f`.
int horizon(const Formula& f);

/// min over faces of (offset - normal.s) / |normal|; positive strictly inside.
double signed_distance(const State& point, const Predicate& p);

/// Sequence of equally sized state vectors indexed from time 0.
class Trajectory {
public:
    Trajectory() = default;
    explicit Trajectory(std::vector<State> samples);

    std::size_t size() const noexcept { return samples_.size(); }
    std::size_t dimension() const noexcept { return samples_.empty() ? 0 : samples_.front().size(); }
    const State& operator[](std::size_t t) const { return samples_[t]; }
    const std::vector<State>& samples() const noexcept { return samples_; }

private:
    std::vector<State> samples_;
};

/// Robust semantics at step t. `true` evaluates to +infinity.
double robustness(const Trajectory& traj, const Formula& f, int t);

bool boolean_sat(const Trajectory& traj, const Formula& f, int t);

}  // namespace dpmtl::mtl

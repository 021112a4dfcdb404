#include <algorithm>
#include <cmath>
#include <limits>

#include "dpmtl/detail/overloaded.hpp"
#include "dpmtl/encode.hpp"

namespace dpmtl::encode {
namespace {

using detail::overloaded;

class Confidence {
public:
    Confidence(const std::vector<double>& eps, double r, ConfidenceMode mode) : eps_(eps), r_(r), mode_(mode) {}

    // `negated` evaluates the bound for !f, pushing the negation towards the atoms.
    double gamma(const mtl::Formula& f, int t, bool negated) const {
        return std::visit(
            overloaded{
                [&](const mtl::TrueNode&) { return negated ? 0.0 : 1.0; },
                [&](const mtl::AtomNode&) { return 1.0 - eps_at(t) / r_; },
                [&](const mtl::NotNode& n) { return gamma(*n.child, t, !negated); },
                [&](const mtl::AndNode& n) {
                    return negated ? disjunction(*n.left, *n.right, t, true) : conjunction(*n.left, *n.right, t, false);
                },
                [&](const mtl::OrNode& n) {
                    return negated ? conjunction(*n.left, *n.right, t, true) : disjunction(*n.left, *n.right, t, false);
                },
                [&](const mtl::GloballyNode& n) {
                    return negated ? eventually(*n.child, n.interval, t, true) : globally(*n.child, n.interval, t, false);
                },
                [&](const mtl::EventuallyNode& n) {
                    return negated ? globally(*n.child, n.interval, t, true) : eventually(*n.child, n.interval, t, false);
                },
                [&](const mtl::UntilNode& n) {
                    if (negated) throw EncodeError("confidence bound for a negated until is not supported");
                    return until(n, t);
                },
            },
            f.node());
    }

private:
    double eps_at(int t) const {
        if (t < 0 || static_cast<std::size_t>(t) >= eps_.size()) {
            throw EncodeError("error bound sequence does not cover time step " + std::to_string(t));
        }
        return eps_[static_cast<std::size_t>(t)];
    }

    double conjunction(const mtl::Formula& a, const mtl::Formula& b, int t, bool neg) const {
        return gamma(a, t, neg) + gamma(b, t, neg) - 1.0;
    }

    double disjunction(const mtl::Formula& a, const mtl::Formula& b, int t, bool neg) const {
        return 1.0 - std::min(1.0 - gamma(a, t, neg), 1.0 - gamma(b, t, neg));
    }

    double globally(const mtl::Formula& f, const mtl::Interval& i, int t, bool neg) const {
        if (mode_ == ConfidenceMode::Sound) {
            double miss = 0.0;
            for (int tp = t + i.a; tp <= t + i.b; ++tp) miss += 1.0 - gamma(f, tp, neg);
            return 1.0 - miss;
        }
        return eventually(f, i, t, neg);
    }

    double eventually(const mtl::Formula& f, const mtl::Interval& i, int t, bool neg) const {
        double least = std::numeric_limits<double>::infinity();
        for (int tp = t + i.a; tp <= t + i.b; ++tp) least = std::min(least, 1.0 - gamma(f, tp, neg));
        return 1.0 - least;
    }

    double until(const mtl::UntilNode& n, int t) const {
        const int lo = t + n.interval.a;
        double least = std::numeric_limits<double>::infinity();
        for (int tp = lo; tp <= t + n.interval.b; ++tp) {
            double miss = 1.0 - gamma(*n.right, tp, false);
            // The printed rule sums the left operand up to and including t'.
            const int last = mode_ == ConfidenceMode::PaperFaithful ? tp : tp - 1;
            for (int tpp = lo; tpp <= last; ++tpp) miss += 1.0 - gamma(*n.left, tpp, false);
            least = std::min(least, miss);
        }
        return 1.0 - least;
    }

    const std::vector<double>& eps_;
    double r_;
    ConfidenceMode mode_;
};

}  // namespace

double confidence_lower_bound(const mtl::Formula& f, const std::vector<double>& eps, double r_min, int t,
                              ConfidenceMode mode) {
    if (!(r_min > 0.0)) throw EncodeError("r_min must be positive for the confidence bound");
    if (t < 0) throw EncodeError("time step must be non-negative");
    return Confidence(eps, r_min, mode).gamma(f, t, false);
}

double required_rmin(const mtl::Formula& f, const std::vector<double>& eps, double gamma_min, ConfidenceMode mode,
                     int t_first, int t_last) {
    if (!(gamma_min > 0.0 && gamma_min < 1.0)) throw EncodeError("gamma_min must lie in (0, 1)");
    if (t_first < 0 || t_last < t_first) throw EncodeError("invalid evaluation window");
    for (double e : eps) {
        if (!std::isfinite(e) || e < 0.0) throw EncodeError("error bounds must be finite and non-negative");
    }
    auto worst = [&](double r) {
        double g = std::numeric_limits<double>::infinity();
        for (int t = t_first; t <= t_last; ++t) g = std::min(g, confidence_lower_bound(f, eps, r, t, mode));
        return g;
    };
    if (worst(std::numeric_limits<double>::min()) >= gamma_min) return 0.0;

    double hi = 1.0;
    while (worst(hi) < gamma_min) {
        hi *= 2.0;
        if (hi > 1e12) {
            throw EncodeError("confidence target " + std::to_string(gamma_min) + " is unreachable for '" +
                              mtl::to_string(f) + "'");
        }
    }
    double lo = 0.0;
    for (int it = 0; it < 4000 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (worst(mid) >= gamma_min) hi = mid; else lo = mid;
    }
    return hi;
}

}  // namespace dpmtl::encode

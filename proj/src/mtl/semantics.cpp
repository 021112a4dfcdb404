#include "dpmtl/mtl.hpp"

#include <algorithm>
#include <limits>

#include "dpmtl/detail/overloaded.hpp"

namespace dpmtl::mtl {
namespace {

using detail::overloaded;

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_length(const Trajectory& traj, const Formula& f, int t) {
    if (t < 0) throw MtlError("evaluation time must be non-negative");
    const long needed = static_cast<long>(t) + horizon(f);
    if (needed >= static_cast<long>(traj.size())) {
        throw MtlError("trajectory of length " + std::to_string(traj.size()) + " too short to evaluate '" +
                       to_string(f) + "' at t=" + std::to_string(t));
    }
}

double rho(const Trajectory& traj, const Formula& f, int t) {
    return std::visit(
        overloaded{
            [](const TrueNode&) { return kInf; },
            [&](const AtomNode& n) { return signed_distance(traj[static_cast<std::size_t>(t)], *n.predicate); },
            [&](const NotNode& n) { return -rho(traj, *n.child, t); },
            [&](const AndNode& n) { return std::min(rho(traj, *n.left, t), rho(traj, *n.right, t)); },
            [&](const OrNode& n) { return std::max(rho(traj, *n.left, t), rho(traj, *n.right, t)); },
            [&](const UntilNode& n) {
                double best = -kInf;
                double prefix = kInf;  // min of left over [t+a, t')
                for (int tp = t + n.interval.a; tp <= t + n.interval.b; ++tp) {
                    best = std::max(best, std::min(rho(traj, *n.right, tp), prefix));
                    prefix = std::min(prefix, rho(traj, *n.left, tp));
                }
                return best;
            },
            [&](const EventuallyNode& n) {
                double best = -kInf;
                for (int tp = t + n.interval.a; tp <= t + n.interval.b; ++tp) {
                    best = std::max(best, rho(traj, *n.child, tp));
                }
                return best;
            },
            [&](const GloballyNode& n) {
                double worst = kInf;
                for (int tp = t + n.interval.a; tp <= t + n.interval.b; ++tp) {
                    worst = std::min(worst, rho(traj, *n.child, tp));
                }
                return worst;
            },
        },
        f.node());
}

bool sat(const Trajectory& traj, const Formula& f, int t) {
    return std::visit(
        overloaded{
            [](const TrueNode&) { return true; },
            [&](const AtomNode& n) { return n.predicate->contains(traj[static_cast<std::size_t>(t)]); },
            [&](const NotNode& n) { return !sat(traj, *n.child, t); },
            [&](const AndNode& n) { return sat(traj, *n.left, t) && sat(traj, *n.right, t); },
            [&](const OrNode& n) { return sat(traj, *n.left, t) || sat(traj, *n.right, t); },
            [&](const UntilNode& n) {
                for (int tp = t + n.interval.a; tp <= t + n.interval.b; ++tp) {
                    if (sat(traj, *n.right, tp)) return true;
                    if (!sat(traj, *n.left, tp)) return false;
                }
                return false;
            },
            [&](const EventuallyNode& n) {
                for (int tp = t + n.interval.a; tp <= t + n.interval.b; ++tp) {
                    if (sat(traj, *n.child, tp)) return true;
                }
                return false;
            },
            [&](const GloballyNode& n) {
                for (int tp = t + n.interval.a; tp <= t + n.interval.b; ++tp) {
                    if (!sat(traj, *n.child, tp)) return false;
                }
                return true;
            },
        },
        f.node());
}

}  // namespace

double robustness(const Trajectory& traj, const Formula& f, int t) {
    require_length(traj, f, t);
    return rho(traj, f, t);
}

bool boolean_sat(const Trajectory& traj, const Formula& f, int t) {
    require_length(traj, f, t);
    return sat(traj, f, t);
}

}  // namespace dpmtl::mtl

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "superscar/classical/periodic_orbit.hpp"

namespace superscar::classical {

struct BranchSample {
    double energy = 0.0;
    SectionPoint fixed;
    double trace = 0.0;
    double period = 0.0;
    double action = 0.0;
    int maslov = 0;
    double arclength = 0.0;
};

/// Result of following a fixed-point curve through energy.
///
/// `stable_branch` and `unstable_branch` hold the samples on either side of
/// the fold (sorted by energy). `curve` is every accepted sample in
/// arclength order. When the continuation breaks down, `failed` is set and
/// `failure` says where; whatever was traced before is kept.
struct BifurcationScan {
    std::vector<BranchSample> curve;
    std::vector<BranchSample> stable_branch;
    std::vector<BranchSample> unstable_branch;
    std::optional<double> E_bif;
    std::optional<BranchSample> fold;
    std::optional<double> E_loss;
    bool failed = false;
    std::string failure;
};

struct ContinuationOptions {
    double step = 0.05;         // initial arclength step
    double min_step = 1e-5;
    double max_step = 0.2;
    double energy_scale = 1e-3; // hartree per unit arclength in E
    double momentum_scale = 1.0;
    double tolerance = 1e-10;
    double fd_step = 1e-6;
    int max_points = 2000;
    int max_corrector = 8;
    double bisection_tol = 1e-9; // arclength
};

struct EnergyWindow {
    double lo = 0.0, hi = 0.0;
};

namespace detail {

// Scaled coordinates u = (psi, P_psi / p_scale, E / e_scale).
class FixedPointCurve {
public:
    FixedPointCurve(const PoincareSection& sec, const ContinuationOptions& opts) : sec_(sec), opts_(opts) {}

    double energy(const Eigen::Vector3d& u) const { return u[2] * opts_.energy_scale; }

    Eigen::Vector3d to_scaled(const SectionPoint& s, double E) const {
        return {s.psi, s.P_psi / opts_.momentum_scale, E / opts_.energy_scale};
    }

    SectionPoint point(const Eigen::Vector3d& u) const {
        return {u[0], u[1] * opts_.momentum_scale, sec_.options().direction};
    }

    Eigen::Vector2d residual(const Eigen::Vector3d& u) const {
        const Eigen::Vector2d x{u[0], u[1] * opts_.momentum_scale};
        const Eigen::Vector2d r = map_residual(sec_, x, energy(u));
        return {r[0], r[1] / opts_.momentum_scale};
    }

    Eigen::Matrix<double, 2, 3> jacobian(const Eigen::Vector3d& u) const {
        Eigen::Matrix<double, 2, 3> J;
        for (int j = 0; j < 3; ++j) {
            const double h = opts_.fd_step * (1.0 + std::abs(u[j]));
            Eigen::Vector3d up = u, um = u;
            up[j] += h;
            um[j] -= h;
            J.col(j) = (residual(up) - residual(um)) / (2.0 * h);
        }
        return J;
    }

    static Eigen::Vector3d tangent(const Eigen::Matrix<double, 2, 3>& J, const Eigen::Vector3d& previous) {
        Eigen::Vector3d t = J.row(0).transpose().cross(J.row(1).transpose());
        t.normalize();
        if (t.dot(previous) < 0.0) t = -t;
        return t;
    }

    // Corrector on the hyperplane t . (u - pred) = 0.
    std::optional<Eigen::Vector3d> correct(Eigen::Vector3d u, const Eigen::Vector3d& pred,
                                           const Eigen::Vector3d& t) const {
        for (int it = 0; it < opts_.max_corrector; ++it) {
            Eigen::Vector2d F;
            try {
                F = residual(u);
            } catch (const Error&) {
                return std::nullopt;
            }
            const double g = t.dot(u - pred);
            if (F.norm() <= opts_.tolerance && std::abs(g) <= opts_.tolerance) return u;
            Eigen::Matrix3d A;
            try {
                A.topRows<2>() = jacobian(u);
            } catch (const Error&) {
                return std::nullopt;
            }
            A.row(2) = t.transpose();
            const Eigen::Vector3d rhs{-F[0], -F[1], -g};
            const Eigen::Vector3d du = A.fullPivLu().solve(rhs);
            if (!du.allFinite()) return std::nullopt;
            u += du;
        }
        try {
            if (residual(u).norm() <= opts_.tolerance) return u;
        } catch (const Error&) {
        }
        return std::nullopt;
    }

    BranchSample sample(const Eigen::Vector3d& u, double s) const {
        const PeriodicOrbit po = characterize_orbit(point(u), energy(u), sec_);
        return {energy(u), po.section, po.trace(), po.period, po.action, po.maslov, s};
    }

private:
    const PoincareSection& sec_;
    ContinuationOptions opts_;
};

} // namespace detail

/// Pseudo-arclength continuation of the fixed point of `orbit` through
/// energy, restricted to `window`. The curve is followed both ways from the
/// starting orbit. A saddle-node fold shows up as a turning point in E; its
/// location is refined by bisection in arclength on tr M - 2. On the branch
/// with tr M < 2 the first crossing of tr M = -2 gives E_loss.
inline BifurcationScan continue_branch(const PeriodicOrbit& orbit, EnergyWindow window, const PoincareSection& sec,
                                       const ContinuationOptions& opts = {}) {
    if (!(window.lo < window.hi)) throw ContractError("continue_branch: empty energy window");
    if (orbit.energy < window.lo || orbit.energy > window.hi)
        throw ContractError("continue_branch: starting orbit outside the energy window");
    const detail::FixedPointCurve curve(sec, opts);
    BifurcationScan scan;

    struct Node {
        Eigen::Vector3d u;
        Eigen::Vector3d t;
        BranchSample s;
    };

    const Eigen::Vector3d u0 = curve.to_scaled(orbit.section, orbit.energy);
    const Eigen::Vector3d t0 = detail::FixedPointCurve::tangent(curve.jacobian(u0), Eigen::Vector3d(0, 0, -1));

    auto trace_direction = [&](double sign) {
        std::vector<Node> nodes;
        Node cur{u0, sign * t0, BranchSample{}};
        cur.s = curve.sample(u0, 0.0);
        double h = opts.step;
        double s = 0.0;
        while (static_cast<int>(nodes.size()) < opts.max_points) {
            const Eigen::Vector3d pred = cur.u + h * cur.t;
            const auto u = curve.correct(pred, pred, cur.t);
            if (!u) {
                h *= 0.5;
                if (h < opts.min_step) {
                    scan.failed = true;
                    std::ostringstream os;
                    os << "branch lost near E = " << curve.energy(cur.u) << " hartree";
                    scan.failure = os.str();
                    break;
                }
                continue;
            }
            const double E = curve.energy(*u);
            if (E < window.lo || E > window.hi) break;
            Node next;
            next.u = *u;
            try {
                next.t = detail::FixedPointCurve::tangent(curve.jacobian(*u), cur.t);
                s += sign * (*u - cur.u).norm();
                next.s = curve.sample(*u, s);
            } catch (const Error& e) {
                scan.failed = true;
                scan.failure = e.what();
                break;
            }
            nodes.push_back(next);
            cur = next;
            h = std::min(opts.max_step, h * 1.5);
        }
        return nodes;
    };

    std::vector<Node> back = trace_direction(-1.0);
    std::vector<Node> fwd = trace_direction(1.0);
    std::vector<Node> all;
    for (auto it = back.rbegin(); it != back.rend(); ++it) {
        all.push_back(*it);
        all.back().t = -all.back().t; // orient every tangent along increasing arclength
    }
    all.push_back({u0, t0, curve.sample(u0, 0.0)});
    for (auto& n : fwd) all.push_back(n);
    for (auto& n : all) scan.curve.push_back(n.s);

    // Root of a sample quantity between consecutive nodes, by bisection on the
    // arclength from the left node along its tangent.
    auto bisect = [&](const Node& a, const Node& b, auto&& q) -> std::optional<BranchSample> {
        double lo = 0.0, hi = (b.u - a.u).norm();
        double qlo = q(a.s);
        std::optional<BranchSample> best;
        Eigen::Vector3d dir = (b.u - a.u).normalized();
        while (hi - lo > opts.bisection_tol) {
            const double mid = 0.5 * (lo + hi);
            const Eigen::Vector3d pred = a.u + mid * dir;
            const auto u = curve.correct(pred, pred, dir);
            if (!u) return best;
            const BranchSample m = curve.sample(*u, a.s.arclength + mid);
            best = m;
            if ((q(m) > 0.0) == (qlo > 0.0)) {
                lo = mid;
                qlo = q(m);
            } else {
                hi = mid;
            }
        }
        return best;
    };

    // Fold: sign change of the energy component of the tangent.
    std::optional<std::size_t> fold_at;
    for (std::size_t i = 0; i + 1 < all.size(); ++i) {
        if ((all[i].t[2] > 0.0) != (all[i + 1].t[2] > 0.0)) {
            fold_at = i;
            break;
        }
    }
    if (fold_at) {
        std::size_t i = *fold_at;
        // the trace crosses 2 within a node or two of the tangent flip
        std::optional<BranchSample> f;
        for (std::size_t j = (i > 0 ? i - 1 : i); j + 1 < all.size() && j <= i + 1 && !f; ++j) {
            if ((all[j].s.trace > 2.0) != (all[j + 1].s.trace > 2.0))
                f = bisect(all[j], all[j + 1], [](const BranchSample& b) { return b.trace - 2.0; });
        }
        if (f) {
            scan.fold = f;
            scan.E_bif = f->energy;
        }
        // the side whose trace near the fold is below 2 is the stable one
        std::vector<BranchSample> left(scan.curve.begin(), scan.curve.begin() + static_cast<long>(i + 1));
        std::vector<BranchSample> right(scan.curve.begin() + static_cast<long>(i + 1), scan.curve.end());
        const bool left_stable = all[i].s.trace < all[i + 1].s.trace;
        scan.stable_branch = left_stable ? left : right;
        scan.unstable_branch = left_stable ? right : left;
    } else {
        const bool stable = std::abs(orbit.trace()) < 2.0;
        (stable ? scan.stable_branch : scan.unstable_branch) = scan.curve;
    }
    auto by_energy = [](const BranchSample& a, const BranchSample& b) { return a.energy < b.energy; };
    std::sort(scan.stable_branch.begin(), scan.stable_branch.end(), by_energy);
    std::sort(scan.unstable_branch.begin(), scan.unstable_branch.end(), by_energy);

    // Stability loss: first tr = -2 crossing on the stable side, walking away from the fold.
    auto loss_q = [](const BranchSample& b) { return b.trace + 2.0; };
    auto search_loss = [&](auto first, auto last, int stride) {
        for (auto k = first; k != last; k += stride) {
            const auto& a = all[static_cast<std::size_t>(k)];
            const auto& b = all[static_cast<std::size_t>(k + stride)];
            if (std::abs(a.s.trace) < 2.0 && (a.s.trace > -2.0) != (b.s.trace > -2.0)) {
                const auto r = stride > 0 ? bisect(a, b, loss_q) : bisect(b, a, loss_q);
                if (r) scan.E_loss = r->energy;
                return;
            }
        }
    };
    const long n = static_cast<long>(all.size());
    if (fold_at) {
        const long i = static_cast<long>(*fold_at);
        const bool left_stable = all[static_cast<std::size_t>(i)].s.trace < all[static_cast<std::size_t>(i + 1)].s.trace;
        if (left_stable)
            search_loss(i, 0L, -1);
        else
            search_loss(i + 1, n - 1, 1);
    } else {
        search_loss(0L, n - 1, 1);
    }
    return scan;
}

} // namespace superscar::classical

#pragma once

#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "superscar/classical/section.hpp"
#include "superscar/errors.hpp"
#include "superscar/units.hpp"

namespace superscar::classical {

enum class Stability { stable, unstable, marginal };

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::stable: return "stable";
        case Stability::unstable: return "unstable";
        default: return "marginal";
    }
}

inline Stability classify_trace(double trace, double band = 1e-6) {
    if (std::abs(trace) < 2.0 - band) return Stability::stable;
    if (std::abs(trace) > 2.0 + band) return Stability::unstable;
    return Stability::marginal;
}

/// Closed orbit through a fixed point of the return map.
///
/// `action` is the full loop integral of P_R dR + P_theta dtheta (a.u.).
/// `monodromy` is the 2x2 linearised return map in (psi, P_psi).
///
/// Maslov convention: `maslov` is the number of sign changes, over one period
/// starting at the section point, of delta_q x q_dot, where delta_q is the
/// configuration part of the variational solution launched with
/// delta_psi = 0, delta_P_psi = 1. Each turning point of the orbit (q_dot
/// reversing) contributes one, and each self-focal point (delta_q parallel to
/// q_dot) contributes one more. A brake orbit without focal points has
/// index 2.
struct PeriodicOrbit {
    PhasePoint initial;
    SectionPoint section;
    double energy = 0.0;
    double period = 0.0;
    double action = 0.0;
    int maslov = 0;
    Eigen::Matrix2d monodromy = Eigen::Matrix2d::Identity();
    Stability stability = Stability::marginal;
    std::vector<PhasePoint> turning_points;
    std::vector<PhasePoint> path;
    double closure = 0.0;

    double trace() const { return monodromy.trace(); }

    /// Largest |eigenvalue| of the monodromy.
    double largest_multiplier() const {
        const Eigen::EigenSolver<Eigen::Matrix2d> es(monodromy);
        return std::max(std::abs(es.eigenvalues()[0]), std::abs(es.eigenvalues()[1]));
    }

    /// ln |largest multiplier| / period; zero for stable and marginal orbits.
    double stability_exponent() const {
        if (stability != Stability::unstable) return 0.0;
        return std::log(largest_multiplier()) / period;
    }

    /// Action divided by 2 pi, the quantity that sets hbar in the
    /// Bohr-Sommerfeld ladder.
    double reduced_action() const { return action / (2.0 * units::kPi); }

    /// Turning point with the largest R.
    const PhasePoint& outer_turning_point() const {
        if (turning_points.empty()) throw ContractError("orbit has no turning points");
        const PhasePoint* best = &turning_points.front();
        for (const auto& p : turning_points) {
            if (p.R > best->R) best = &p;
        }
        return *best;
    }
};

struct OrbitSearchOptions {
    double tolerance = 1e-10;
    int max_iterations = 40;
    double fd_step = 1e-6;
};

/// Return-map residual F(x) = P(x) - x.
inline Eigen::Vector2d map_residual(const PoincareSection& sec, const Eigen::Vector2d& x, double E) {
    const SectionPoint s = poincare_map({x[0], x[1], sec.options().direction}, E, sec);
    return {s.psi - x[0], s.P_psi - x[1]};
}

/// Central finite-difference Jacobian of the return map.
inline Eigen::Matrix2d map_jacobian_fd(const PoincareSection& sec, const SectionPoint& at, double E,
                                       double h = 1e-6) {
    Eigen::Matrix2d J;
    const Eigen::Vector2d x{at.psi, at.P_psi};
    for (int j = 0; j < 2; ++j) {
        const double step = h * (1.0 + std::abs(x[j]));
        Eigen::Vector2d xp = x, xm = x;
        xp[j] += step;
        xm[j] -= step;
        const SectionPoint a = poincare_map({xp[0], xp[1], at.direction}, E, sec);
        const SectionPoint b = poincare_map({xm[0], xm[1], at.direction}, E, sec);
        J(0, j) = (a.psi - b.psi) / (2 * step);
        J(1, j) = (a.P_psi - b.P_psi) / (2 * step);
    }
    return J;
}

namespace detail {

using Extended = std::array<double, 21>; // phase(4), variational(16, row-major), action(1)

struct SectionFrame {
    double slope = 0.0, curvature = 0.0;
};

inline SectionFrame frame(const pes::MinimumEnergyPath& mep, double theta) {
    const auto p = mep.at(theta);
    return {p.slope, p.curvature};
}

// Energy-preserving lift of a section tangent vector (dpsi, dP_psi).
inline Eigen::Vector4d lift_tangent(const State& y, const State& f, const SectionFrame& fr, double dpsi,
                                    double dPpsi) {
    const double dR = fr.slope * dpsi, dth = dpsi;
    const double rate = f[0] - fr.slope * f[1];
    const double dPR = (f[2] * dR + f[3] * dth - f[1] * (dPpsi - fr.curvature * y[2] * dpsi)) / rate;
    const double dPth = dPpsi - fr.curvature * y[2] * dpsi - fr.slope * dPR;
    return {dR, dth, dPR, dPth};
}

// Project a full tangent vector at a crossing onto the section coordinates.
inline Eigen::Vector2d project_tangent(const State& y, const State& f, const pes::MinimumEnergyPath& mep,
                                       Eigen::Vector4d dy, double sign) {
    const SectionFrame fr = frame(mep, y[1]);
    const double rate = f[0] - fr.slope * f[1];
    const double dt = -(dy[0] - fr.slope * dy[1]) / rate;
    for (int i = 0; i < 4; ++i) dy[i] += f[static_cast<std::size_t>(i)] * dt;
    return {sign * dy[1], sign * (dy[3] + fr.curvature * y[2] * dy[1] + fr.slope * dy[2])};
}

// +1 if theta_end is theta_start modulo 2 pi, -1 if it is the mirror image.
// Orbits lying on a symmetry line (0 or pi) always count as unreflected.
inline double branch_sign(double theta_start, double theta_end) {
    const auto dist = [](double a) {
        const double t = std::fmod(std::abs(a), 2.0 * units::kPi);
        return std::min(t, 2.0 * units::kPi - t);
    };
    return dist(theta_end - theta_start) <= dist(theta_end + theta_start) + 1e-9 ? 1.0 : -1.0;
}

} // namespace detail

/// Integrate once around the orbit through the fixed point `fixed` and fill
/// in period, action, monodromy (variational equations), Maslov index and
/// turning points.
inline PeriodicOrbit characterize_orbit(const SectionPoint& fixed, double E, const PoincareSection& sec) {
    const Hamiltonian& H = sec.hamiltonian();
    const auto& mep = sec.path();
    const PhasePoint p0 = sec.lift(fixed, E);
    const State y0 = to_state(p0);
    const State f0 = H.velocity(y0);
    const auto fr0 = detail::frame(mep, y0[1]);

    detail::Extended z{};
    for (int i = 0; i < 4; ++i) z[static_cast<std::size_t>(i)] = y0[static_cast<std::size_t>(i)];
    for (int i = 0; i < 4; ++i) z[static_cast<std::size_t>(4 + 5 * i)] = 1.0;

    auto sys = [&H](const detail::Extended& x, detail::Extended& dx, double) {
        const State y{x[0], x[1], x[2], x[3]};
        Eigen::Matrix4d J;
        const State f = H.field_and_jacobian(y, J);
        Eigen::Map<const Eigen::Matrix<double, 4, 4, Eigen::RowMajor>> M(x.data() + 4);
        Eigen::Map<Eigen::Matrix<double, 4, 4, Eigen::RowMajor>> dM(dx.data() + 4);
        dM = J * M;
        for (int i = 0; i < 4; ++i) dx[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i)];
        dx[20] = H.twice_kinetic(y);
    };

    std::vector<std::pair<detail::Extended, double>> steps;
    steps.emplace_back(z, 0.0);
    auto obs = [&steps](const detail::Extended& x, double t) { steps.emplace_back(x, t); };
    auto [zT, T] = sec.to_next_crossing<21>(sys, z, obs);
    steps.back() = {zT, T};

    PeriodicOrbit po;
    po.initial = p0;
    po.section = fixed;
    po.energy = E;
    po.period = T;
    po.action = zT[20];
    const State yT{zT[0], zT[1], zT[2], zT[3]};
    po.closure = std::sqrt(std::pow(yT[0] - y0[0], 2) + std::pow(yT[1] - y0[1], 2) + std::pow(yT[2] - y0[2], 2) +
                           std::pow(yT[3] - y0[3], 2));

    Eigen::Map<const Eigen::Matrix<double, 4, 4, Eigen::RowMajor>> MT(zT.data() + 4);
    const State fT = H.velocity(yT);
    const double branch = detail::branch_sign(y0[1], yT[1]);
    for (int j = 0; j < 2; ++j) {
        const Eigen::Vector4d d0 = detail::lift_tangent(y0, f0, fr0, j == 0 ? 1.0 : 0.0, j == 1 ? 1.0 : 0.0);
        po.monodromy.col(j) = detail::project_tangent(yT, fT, mep, MT * d0, branch);
    }
    po.stability = classify_trace(po.trace());

    // Maslov count and turning points from the recorded steps.
    const Eigen::Vector4d probe = detail::lift_tangent(y0, f0, fr0, 0.0, 1.0);
    AdaptiveStepper<4> stepper(sec.options().integrator);
    auto phase_sys = [&H](const State& y, State& dy, double) { dy = H.velocity(y); };
    int sign_changes = 0;
    int last_sign = 0;
    for (std::size_t k = 1; k < steps.size(); ++k) {
        const auto& x = steps[k].first;
        const State y{x[0], x[1], x[2], x[3]};
        const State f = H.velocity(y);
        Eigen::Map<const Eigen::Matrix<double, 4, 4, Eigen::RowMajor>> M(x.data() + 4);
        const Eigen::Vector4d d = M * probe;
        const double c = d[0] * f[1] - d[1] * f[0];
        const int s = c > 0 ? 1 : (c < 0 ? -1 : 0);
        if (s != 0) {
            if (last_sign != 0 && s != last_sign) ++sign_changes;
            last_sign = s;
        }
        po.path.push_back(to_point(y, steps[k].second));

        const auto& xa = steps[k - 1].first;
        if ((xa[2] > 0.0) != (x[2] > 0.0) && k + 1 < steps.size()) {
            // P_R changes sign: polish the turning point on exact sub-steps.
            const State ya{xa[0], xa[1], xa[2], xa[3]};
            const double ta = steps[k - 1].second, h = steps[k].second - ta;
            double tau = h * xa[2] / (xa[2] - x[2]);
            State yt = ya;
            for (int it = 0; it < 20; ++it) {
                yt = stepper.sub_step(phase_sys, ya, ta, tau);
                if (std::abs(yt[2]) < 1e-13) break;
                tau -= yt[2] / H.velocity(yt)[2];
            }
            po.turning_points.push_back(to_point(yt, ta + tau));
        }
    }
    po.path.insert(po.path.begin(), p0);
    po.maslov = sign_changes;
    return po;
}

/// Newton iteration on P(x) - x with a finite-difference Jacobian, followed
/// by `characterize_orbit`. Throws ConvergenceError with the residual
/// history if |F| does not drop below the tolerance.
inline PeriodicOrbit find_periodic_orbit(const SectionPoint& guess, double E, const PoincareSection& sec,
                                         const OrbitSearchOptions& opts = {}) {
    Eigen::Vector2d x{guess.psi, guess.P_psi};
    std::vector<double> history;
    auto residual = [&](const Eigen::Vector2d& at) -> std::optional<Eigen::Vector2d> {
        try {
            return map_residual(sec, at, E);
        } catch (const ForbiddenError&) {
            return std::nullopt;
        } catch (const EscapeError&) {
            return std::nullopt;
        }
    };
    auto F = residual(x);
    if (!F) throw ConvergenceError("orbit guess is forbidden or escapes", history);
    for (int it = 0; it < opts.max_iterations; ++it) {
        const double r = F->norm();
        history.push_back(r);
        if (r <= opts.tolerance) {
            PeriodicOrbit po = characterize_orbit({x[0], x[1], sec.options().direction}, E, sec);
            return po;
        }
        Eigen::Matrix2d J;
        try {
            J = map_jacobian_fd(sec, {x[0], x[1], sec.options().direction}, E, opts.fd_step);
        } catch (const Error&) {
            break;
        }
        J -= Eigen::Matrix2d::Identity();
        Eigen::Vector2d step = -J.fullPivLu().solve(*F);
        if (!step.allFinite()) break;
        bool accepted = false;
        for (int k = 0; k < 12; ++k) {
            const Eigen::Vector2d trial = x + step;
            const auto Ft = residual(trial);
            if (Ft && Ft->norm() < r * (1.0 + 1e-9) + 1e-14) {
                x = trial;
                F = Ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    std::ostringstream os;
    os << "periodic orbit search did not converge at E = " << E << " (last residual "
       << (history.empty() ? -1.0 : history.back()) << ")";
    throw ConvergenceError(os.str(), history);
}

} // namespace superscar::classical

#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "superscar/classical/flow.hpp"
#include "superscar/classical/hamiltonian.hpp"
#include "superscar/errors.hpp"
#include "superscar/pes/mep.hpp"

namespace superscar::classical {

/// How P_psi is formed from (P_R, P_theta) on the section R = R_e(theta).
///
/// `canonical` is P_psi = P_theta + R_e' P_R, the momentum conjugate to psi
/// once R - R_e(theta) is taken as the other coordinate; the return map is
/// area preserving in (psi, P_psi). `literal` is P_theta - R_e' P_R, kept for
/// comparison with published section plots; it is not area preserving away
/// from fixed points and is never used by the orbit machinery.
enum class MomentumConvention { canonical, literal };

/// Reduced coordinates of a section crossing. `direction` is the sign of
/// d/dt (R - R_e(theta)) at the crossing: +1 outward, -1 inward.
struct SectionPoint {
    double psi = 0.0;
    double P_psi = 0.0;
    int direction = +1;
};

struct SectionOptions {
    int direction = +1;          // which crossings count
    double max_time = 2.0e5;     // a.u. budget per return
    double on_section_tol = 1e-9;
    double polish_tol = 1e-12;   // |R - R_e| after root polish
    IntegratorOptions integrator{};
};

/// Signed distance from the section and its time derivative.
inline double section_offset(const State& y, const pes::MinimumEnergyPath& mep) {
    return y[0] - mep.radius(y[1]);
}

inline double section_rate(const State& y, const State& f, const pes::MinimumEnergyPath& mep) {
    return f[0] - mep.slope(y[1]) * f[1];
}

/// psi = theta, P_psi = P_theta +- (dR_e/dtheta) P_R, with theta folded onto
/// [0, pi] (the fold flips P_theta). Throws ContractError if p is not on the
/// section within `tol`.
inline SectionPoint section_transform(const PhasePoint& p, const pes::MinimumEnergyPath& mep,
                                      MomentumConvention conv = MomentumConvention::canonical,
                                      double tol = 1e-9, const Hamiltonian* H = nullptr) {
    const double off = p.R - mep.radius(p.theta);
    if (std::abs(off) > tol) {
        std::ostringstream os;
        os << "phase point is off the section by " << off << " bohr (tolerance " << tol << ")";
        throw ContractError(os.str());
    }
    const auto [psi, sign] = pes::PotentialSurface::fold_angle(p.theta);
    const double p_theta = sign * p.P_theta;
    const double slope = mep.slope(psi);
    SectionPoint s;
    s.psi = psi;
    s.P_psi = conv == MomentumConvention::canonical ? p_theta + slope * p.P_R : p_theta - slope * p.P_R;
    if (H) {
        const State y = to_state(p);
        s.direction = section_rate(y, H->velocity(y), mep) >= 0.0 ? +1 : -1;
    } else {
        s.direction = p.P_R >= 0.0 ? +1 : -1;
    }
    return s;
}

struct Crossing {
    SectionPoint point;
    PhasePoint phase;
    double time = 0.0; // time since the start of the map
};

/// Area-preserving return map on the section R = R_e(psi) at fixed energy.
class PoincareSection {
public:
    PoincareSection(Hamiltonian H, pes::MinimumEnergyPath mep, SectionOptions opts = {})
        : H_(std::move(H)), mep_(std::move(mep)), opts_(opts) {}

    const Hamiltonian& hamiltonian() const { return H_; }
    const pes::MinimumEnergyPath& path() const { return mep_; }
    const SectionOptions& options() const { return opts_; }

    /// Radial momentum that puts (psi, P_psi) on the energy shell, moving in
    /// the configured direction. Throws ForbiddenError when none is real.
    PhasePoint lift(const SectionPoint& s, double E) const {
        const auto rp = mep_.at(s.psi);
        const double R = rp.value, d = rp.slope;
        const double B = H_.angular_coefficient(R);
        const double V = H_.surface().local_extended(R, s.psi).v;
        const double a = 0.5 / H_.masses().mu1 + 0.5 * B * d * d;
        const double b = -B * d * s.P_psi;
        const double c = 0.5 * B * s.P_psi * s.P_psi + V - E;
        const double disc = b * b - 4.0 * a * c;
        if (disc < 0.0) {
            std::ostringstream os;
            os << "section point (psi=" << s.psi << ", P_psi=" << s.P_psi << ") is energetically forbidden at E=" << E;
            throw ForbiddenError(os.str());
        }
        const double pr = (-b + opts_.direction * std::sqrt(disc)) / (2.0 * a);
        return {R, s.psi, pr, s.P_psi - d * pr, 0.0};
    }

    /// Largest |P_psi| that lifts to a real P_R at angle psi (0 if the section
    /// point is above the energy).
    double momentum_bound(double psi, double E) const {
        const auto rp = mep_.at(psi);
        const double B = H_.angular_coefficient(rp.value);
        const double V = H_.surface().local_extended(rp.value, psi).v;
        if (V >= E) return 0.0;
        const double a = 0.5 / H_.masses().mu1 + 0.5 * B * rp.slope * rp.slope;
        return std::sqrt(4.0 * a * H_.masses().mu1 * (E - V) / B);
    }

    bool allowed(const SectionPoint& s, double E) const {
        try {
            lift(s, E);
            return true;
        } catch (const ForbiddenError&) {
            return false;
        }
    }

    /// Flow an N-component extended state (first four entries are the phase
    /// point) to its next crossing in the configured direction. `sys` is the
    /// odeint system for the extended state; `observer(y, t)` sees every
    /// accepted step. Returns the state exactly on the section and the time.
    template <std::size_t N, class System, class Observer>
    std::pair<std::array<double, N>, double> to_next_crossing(System& sys, std::array<double, N> y,
                                                              Observer&& observer) const {
        AdaptiveStepper<N> stepper(opts_.integrator);
        const double dir = opts_.direction;
        auto phase = [](const std::array<double, N>& z) { return State{z[0], z[1], z[2], z[3]}; };
        double t = 0.0, dt = opts_.integrator.initial_step;
        double g = section_offset(phase(y), mep_);
        bool armed = false;
        while (t < opts_.max_time) {
            const auto y0 = y;
            const double t0 = t, g0 = g;
            stepper.step(sys, y, t, dt, opts_.max_time);
            observer(y, t);
            g = section_offset(phase(y), mep_);
            if (dir * g < 0.0) armed = true;
            if (!(armed && dir * g0 < 0.0 && dir * g >= 0.0)) continue;

            // Bracketed: cubic Hermite guess, then Newton on exact sub-steps.
            const double h = t - t0;
            const State ya = phase(y0), yb = phase(y);
            const double ga = g0, gb = g;
            const double ra = section_rate(ya, H_.velocity(ya), mep_) * h;
            const double rb = section_rate(yb, H_.velocity(yb), mep_) * h;
            auto hermite = [&](double s) {
                const double s2 = s * s, s3 = s2 * s;
                return (2 * s3 - 3 * s2 + 1) * ga + (s3 - 2 * s2 + s) * ra + (-2 * s3 + 3 * s2) * gb +
                       (s3 - s2) * rb;
            };
            double lo = 0.0, hi = 1.0;
            for (int k = 0; k < 60; ++k) {
                const double mid = 0.5 * (lo + hi);
                if (dir * hermite(mid) < 0.0) lo = mid;
                else hi = mid;
            }
            double tau = 0.5 * (lo + hi) * h;
            std::array<double, N> z = y0;
            for (int k = 0; k < 20; ++k) {
                z = stepper.sub_step(sys, y0, t0, tau);
                const State zs = phase(z);
                const double gz = section_offset(zs, mep_);
                if (std::abs(gz) <= opts_.polish_tol) break;
                const double rz = section_rate(zs, H_.velocity(zs), mep_);
                tau -= gz / rz;
            }
            return {z, t0 + tau};
        }
        std::ostringstream os;
        os << "no section crossing within " << opts_.max_time << " a.u.";
        throw EscapeError(os.str());
    }

    /// Next same-direction crossing of the section starting from `start`.
    Crossing map(const SectionPoint& start, double E, std::vector<PhasePoint>* path = nullptr) const {
        const PhasePoint p0 = lift(start, E);
        auto sys = [this](const State& y, State& dy, double) { dy = H_.velocity(y); };
        if (path) path->push_back(p0);
        auto obs = [path](const State& y, double t) {
            if (path) path->push_back(to_point(y, t));
        };
        auto [y, t] = to_next_crossing<4>(sys, to_state(p0), obs);
        Crossing c;
        c.time = t;
        c.phase = to_point(y, t);
        c.point = section_transform(c.phase, mep_, MomentumConvention::canonical, 1e-9, &H_);
        if (path) path->back() = c.phase;
        return c;
    }

private:
    Hamiltonian H_;
    pes::MinimumEnergyPath mep_;
    SectionOptions opts_;
};

/// One application of the return map.
inline SectionPoint poincare_map(const SectionPoint& start, double E, const PoincareSection& section) {
    return section.map(start, E).point;
}

} // namespace superscar::classical

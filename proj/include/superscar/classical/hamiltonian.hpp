#pragma once

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "superscar/pes/masses.hpp"
#include "superscar/pes/surface.hpp"

namespace superscar::classical {

/// Point in the (R, theta, P_R, P_theta) phase space at time t.
struct PhasePoint {
    double R = 0.0;
    double theta = 0.0;
    double P_R = 0.0;
    double P_theta = 0.0;
    double t = 0.0;
};

using State = std::array<double, 4>;

inline State to_state(const PhasePoint& p) { return {p.R, p.theta, p.P_R, p.P_theta}; }
inline PhasePoint to_point(const State& s, double t) { return {s[0], s[1], s[2], s[3], t}; }

/// Two-mode vibrational Hamiltonian
///
///     H = P_R^2 / 2 mu1 + 1/2 (1 / mu1 R^2 + 1 / mu2 r_e^2) P_theta^2 + V(R, theta)
///
/// with its flow field and the Jacobian of the flow field (for variational
/// equations). Theta is allowed to leave [0, pi]; the surface is extended
/// evenly through the linear configurations.
class Hamiltonian {
public:
    Hamiltonian(pes::PotentialSurface surface, pes::MassParameters masses)
        : surface_(std::move(surface)), masses_(masses) {}

    const pes::PotentialSurface& surface() const { return surface_; }
    const pes::MassParameters& masses() const { return masses_; }

    double angular_coefficient(double R) const { return masses_.angular_coefficient(R); }

    double energy(const State& y) const {
        const double B = angular_coefficient(y[0]);
        return 0.5 * y[2] * y[2] / masses_.mu1 + 0.5 * B * y[3] * y[3] + surface_.local_extended(y[0], y[1]).v;
    }
    double energy(const PhasePoint& p) const { return energy(to_state(p)); }

    State velocity(const State& y) const {
        const Jet2 v = surface_.local_extended(y[0], y[1]);
        return field(y, v);
    }

    /// Flow field and its Jacobian at y.
    State field_and_jacobian(const State& y, Eigen::Matrix4d& J) const {
        const Jet2 v = surface_.local_extended(y[0], y[1]);
        const double mu1 = masses_.mu1, R = y[0], pt = y[3];
        const double B = angular_coefficient(R);
        const double R3 = R * R * R;
        J.setZero();
        J(0, 2) = 1.0 / mu1;
        J(1, 0) = -2.0 * pt / (mu1 * R3);
        J(1, 3) = B;
        J(2, 0) = -3.0 * pt * pt / (mu1 * R3 * R) - v.h00;
        J(2, 1) = -v.h01;
        J(2, 3) = 2.0 * pt / (mu1 * R3);
        J(3, 0) = -v.h01;
        J(3, 1) = -v.h11;
        return field(y, v);
    }

    /// Twice the kinetic energy, the integrand of the action P.dq.
    double twice_kinetic(const State& y) const {
        return y[2] * y[2] / masses_.mu1 + angular_coefficient(y[0]) * y[3] * y[3];
    }

private:
    State field(const State& y, const Jet2& v) const {
        const double mu1 = masses_.mu1, R = y[0], pt = y[3];
        return {y[2] / mu1, angular_coefficient(R) * pt, pt * pt / (mu1 * R * R * R) - v.d0, -v.d1};
    }

    pes::PotentialSurface surface_;
    pes::MassParameters masses_;
};

} // namespace superscar::classical

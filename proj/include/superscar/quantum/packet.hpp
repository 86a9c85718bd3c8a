#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include "superscar/classical/periodic_orbit.hpp"
#include "superscar/quantum/wavefield.hpp"

namespace superscar::quantum {

/// How the packet covariance is chosen.
///
/// `coherent`: widths of the local harmonic ground state at the launch point,
///     sigma_R^2 = hbar / (2 sqrt(mu1 V_RR)), sigma_theta^2 = hbar sqrt(B / |V_thth|) / 2,
///     so both shrink as sqrt(hbar).
/// `fixed`: sigma_R and sigma_theta taken as given (bohr, radians).
/// `scale` multiplies whichever widths result.
struct WidthPolicy {
    enum class Kind { coherent, fixed };
    Kind kind = Kind::coherent;
    double sigma_R = 0.1;
    double sigma_theta = 0.1;
    double scale = 1.0;
};

inline const char* to_string(WidthPolicy::Kind k) { return k == WidthPolicy::Kind::coherent ? "coherent" : "fixed"; }

enum class TurningPointChoice { outer, inner };

struct PacketWidths {
    double sigma_R = 0.0;
    double sigma_theta = 0.0;
};

inline PacketWidths packet_widths(const classical::PhasePoint& at, double hbar, const pes::PotentialSurface& surf,
                                  const pes::MassParameters& m, const WidthPolicy& policy) {
    PacketWidths w;
    if (policy.kind == WidthPolicy::Kind::fixed) {
        w = {policy.sigma_R, policy.sigma_theta};
    } else {
        const Jet2 v = surf.local_extended(at.R, at.theta);
        if (!(v.h00 > 0.0)) throw GridError("coherent width needs a radially confining potential at the launch point");
        if (v.h11 == 0.0) throw GridError("coherent width undefined: flat angular potential at the launch point");
        const double B = m.angular_coefficient(at.R);
        w.sigma_R = std::sqrt(hbar / (2.0 * std::sqrt(m.mu1 * v.h00)));
        w.sigma_theta = std::sqrt(hbar * std::sqrt(B / std::abs(v.h11)) / 2.0);
    }
    w.sigma_R *= policy.scale;
    w.sigma_theta *= policy.scale;
    if (!(w.sigma_R > 0.0 && w.sigma_theta > 0.0)) throw ContractError("packet widths must be positive");
    return w;
}

/// Normalised Gaussian centred on `at`, with the momentum of `at` imprinted
/// as a phase:
///
///     phi = exp(-(R-R0)^2 / 4 sR^2 - (th-th0)^2 / 4 sth^2 + i (P_R (R-R0) + P_th (th-th0)) / hbar)
///
/// sR and sth are the standard deviations of |phi|^2. Momenta whose phase
/// varies by less than 1e-10 across the packet are dropped. Throws GridError if
/// more than `tail_limit` of the packet lies outside the grid.
inline WaveField gaussian_packet(const GridSpec& g, double hbar, const pes::MassParameters& m,
                                 const classical::PhasePoint& at, const PacketWidths& w, double tail_limit = 1e-8) {
    g.validate();
    const auto [th0, sign] = pes::PotentialSurface::fold_angle(at.theta);
    const double R0 = at.R;
    double PR = at.P_R, Pth = sign * at.P_theta;
    // round-off momenta at brake points would only spoil the field's reality
    if ((std::abs(PR) * w.sigma_R + std::abs(Pth) * w.sigma_theta) / hbar < 1e-10) PR = Pth = 0.0;
    auto outside = [](double x0, double s, double lo, double hi) {
        return 0.5 * std::erfc((x0 - lo) / (std::sqrt(2.0) * s)) + 0.5 * std::erfc((hi - x0) / (std::sqrt(2.0) * s));
    };
    const double tail = outside(R0, w.sigma_R, g.R_lo, g.R_hi) + outside(th0, w.sigma_theta, 0.0, units::kPi);
    if (tail > tail_limit) {
        std::ostringstream os;
        os << "packet at (R=" << R0 << ", theta=" << th0 << ") has " << tail << " of its mass outside the grid";
        throw GridError(os.str());
    }
    WaveField f(g, hbar, m);
    for (int i = 0; i < g.N_R; ++i) {
        const double dR = g.R(i) - R0;
        for (int j = 0; j < g.N_theta; ++j) {
            const double dT = g.theta(j) - th0;
            const double amp = std::exp(-dR * dR / (4.0 * w.sigma_R * w.sigma_R) -
                                        dT * dT / (4.0 * w.sigma_theta * w.sigma_theta));
            const double phase = (PR * dR + Pth * dT) / hbar;
            f(i, j) = phase == 0.0 ? cplx(amp, 0.0) : amp * std::exp(cplx(0.0, phase));
        }
    }
    f.normalize();
    return f;
}

/// Launch point selected by `choice`, folded onto [0, pi].
inline classical::PhasePoint launch_point(const classical::PeriodicOrbit& po, TurningPointChoice choice) {
    if (po.turning_points.empty()) throw ContractError("orbit has no turning points");
    classical::PhasePoint tp = po.turning_points.front();
    for (const auto& p : po.turning_points)
        if (choice == TurningPointChoice::outer ? p.R > tp.R : p.R < tp.R) tp = p;
    const auto [th, sign] = pes::PotentialSurface::fold_angle(tp.theta);
    tp.theta = th;
    tp.P_theta *= sign;
    tp.P_R = 0.0;
    return tp;
}

/// Packet launched at a turning point (P_R = 0) of a periodic orbit.
inline WaveField build_packet(const classical::PeriodicOrbit& po, double hbar, const GridSpec& g,
                              const pes::PotentialSurface& surf, const pes::MassParameters& m,
                              const WidthPolicy& policy = {}, TurningPointChoice choice = TurningPointChoice::outer) {
    if (!(hbar > 0.0)) throw ContractError("hbar must be positive");
    const classical::PhasePoint at = launch_point(po, choice);
    return gaussian_packet(g, hbar, m, at, packet_widths(at, hbar, surf, m, policy));
}

} // namespace superscar::quantum

#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "superscar/quantum/diagonalize.hpp"
#include "superscar/quantum/spectrum.hpp"

namespace superscar::quantum {

/// Gaussian-windowed energy projection of a launched packet,
///
///     psi_n = int dt exp(-t^2 / T_E^2) exp(i (E - H) t / hbar) phi(0),
///
/// renormalised to unit norm.
struct ScarFunction {
    WaveField field;
    std::optional<int> band;   // excitation number n when built by a sweep
    double energy = 0.0;       // target energy E (hartree)
    double T_E = 0.0;          // window (a.u.)
    std::string orbit;         // label of the launching orbit
    double mean_energy = 0.0;  // <psi|H|psi>
    std::vector<std::string> warnings;
};

struct ScarOptions {
    double half_width = 3.0; // quadrature over [-a T_E, a T_E]
    double dt = 0.0;         // 0 picks a step resolving the packet's energy content
    double reach = 12.0;     // standard deviations of the packet energy the step must resolve
    PropagatorOptions propagation{};
};

/// Accumulates the windowed transform sample by sample. With a real phi(0),
/// phi(-t) = conj phi(t) and the negative half of the integral is the
/// complex conjugate of the positive half, so only t >= 0 is propagated and
/// the result is real.
class ScarAccumulator {
public:
    ScarAccumulator(const WaveField& f0, double E, double T_E, double dt, int steps)
        : E_(E), T_(T_E), dt_(dt), steps_(steps), real_(f0.is_real()), sum_(f0.grid, f0.hbar, f0.masses) {}

    bool real() const { return real_; }

    /// Positive-time sample phi(k dt).
    void operator()(int k, const WaveField& f) { add(k, f, false); }

    /// Sample of the conjugate-launched field chi(k dt) = U(k dt) conj(phi(0)),
    /// giving phi(-k dt) = conj chi(k dt). Only needed for complex phi(0).
    void negative(int k, const WaveField& chi) {
        if (k == 0) return;
        add(k, chi, true);
    }

    WaveField result() const { return sum_; }

private:
    void add(int k, const WaveField& f, bool negative_side) {
        const double t = k * dt_;
        double w = dt_ * std::exp(-(t * t) / (T_ * T_));
        if (k == steps_) w *= 0.5;
        const cplx ph = std::exp(cplx(0.0, E_ * t / f.hbar));
        if (k == 0) {
            for (std::size_t i = 0; i < f.a.size(); ++i) sum_.a[i] += w * f.a[i];
            return;
        }
        if (real_) {
            for (std::size_t i = 0; i < f.a.size(); ++i) sum_.a[i] += 2.0 * w * (ph * f.a[i]).real();
        } else if (!negative_side) {
            for (std::size_t i = 0; i < f.a.size(); ++i) sum_.a[i] += w * ph * f.a[i];
        } else {
            for (std::size_t i = 0; i < f.a.size(); ++i) sum_.a[i] += w * std::conj(ph * f.a[i]);
        }
    }

    double E_, T_, dt_;
    int steps_;
    bool real_;
    WaveField sum_;
};

/// Time step and count for the scar quadrature.
struct ScarSchedule {
    double dt = 0.0;
    int steps = 0;
};

inline ScarSchedule scar_schedule(const GridHamiltonian& H, const WaveField& f0, double E, double T_E,
                                  const ScarOptions& opts) {
    if (!(T_E > 0.0)) throw ContractError("scar function window T_E must be positive");
    if (!(opts.half_width >= 3.0)) throw ContractError("scar quadrature half width must be at least 3 T_E");
    const auto m = energy_moments(H, f0);
    double dt = opts.dt > 0.0 ? opts.dt : nyquist_step(H, f0, opts.reach, E - m.mean);
    const int steps = std::max(1, static_cast<int>(std::ceil(opts.half_width * T_E / dt)));
    dt = opts.half_width * T_E / steps;
    return {dt, steps};
}

/// Time-domain construction. `E` is the target (Bohr-Sommerfeld) energy.
inline ScarFunction scar_function(const GridHamiltonian& H, const WaveField& f0, double E, double T_E,
                                  const ScarOptions& opts = {}) {
    const ScarSchedule s = scar_schedule(H, f0, E, T_E, opts);
    ScarAccumulator acc(f0, E, T_E, s.dt, s.steps);
    evolve(H, f0, s.dt, s.steps, acc, opts.propagation);
    if (!acc.real()) {
        WaveField c = f0;
        for (auto& z : c.a) z = std::conj(z);
        evolve(H, c, s.dt, s.steps, [&](int k, const WaveField& chi) { acc.negative(k, chi); }, opts.propagation);
    }
    ScarFunction sf;
    sf.field = acc.result();
    sf.field.normalize();
    sf.energy = E;
    sf.T_E = T_E;
    sf.mean_energy = H.expectation(sf.field);
    if (std::abs(sf.mean_energy - E) > H.hbar() / T_E) {
        std::ostringstream os;
        os << "scar function mean energy is " << sf.mean_energy - E << " hartree from its target, more than hbar/T_E";
        sf.warnings.push_back(os.str());
    }
    return sf;
}

/// Same object from an eigenbasis:
///
///     sqrt(pi) T_E sum_m exp(-(E_m - E)^2 T_E^2 / (4 hbar^2)) <m|phi(0)> |m>,
///
/// unnormalised. Used as an oracle on small grids.
inline WaveField scar_from_eigenpairs(const Eigenpairs& eig, const WaveField& f0, double E, double T_E) {
    const auto c = eig.project(f0);
    WaveField out(eig.grid, eig.hbar, eig.masses);
    const double hb = eig.hbar;
    for (std::size_t m = 0; m < eig.size(); ++m) {
        const double d = (eig.values[m] - E) * T_E / (2.0 * hb);
        const cplx w = std::sqrt(units::kPi) * T_E * std::exp(-d * d) * c[m];
        for (std::size_t k = 0; k < eig.grid.size(); ++k)
            out.a[k] += w * eig.vectors(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m));
    }
    return out;
}

} // namespace superscar::quantum

#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "superscar/errors.hpp"
#include "superscar/pes/masses.hpp"
#include "superscar/pes/surface.hpp"
#include "superscar/units.hpp"

namespace superscar::quantum {

/// Angular boundary condition at theta = 0 and pi. `neumann` keeps states
/// even through the linear configurations, `dirichlet` keeps them odd.
enum class ThetaBoundary { neumann, dirichlet };

inline const char* to_string(ThetaBoundary b) { return b == ThetaBoundary::neumann ? "neumann" : "dirichlet"; }

/// Tensor grid on [R_lo, R_hi] x [0, pi].
///
/// R: hard walls at R_lo and R_hi, N_R interior nodes
///     R_i = R_lo + (i + 1) L / (N_R + 1).
/// theta: N_theta midpoint nodes theta_j = (j + 1/2) pi / N_theta.
///
/// Both node sets are the natural ones for sine (R) and cosine or sine
/// (theta) transforms, so the kinetic operators are applied exactly in their
/// eigenbases.
struct GridSpec {
    int N_R = 0;
    int N_theta = 0;
    double R_lo = 0.0;
    double R_hi = 0.0;
    ThetaBoundary theta_boundary = ThetaBoundary::neumann;

    double length() const { return R_hi - R_lo; }
    double dR() const { return length() / (N_R + 1); }
    double dtheta() const { return units::kPi / N_theta; }
    double R(int i) const { return R_lo + (i + 1) * dR(); }
    double theta(int j) const { return (j + 0.5) * dtheta(); }
    std::size_t size() const { return static_cast<std::size_t>(N_R) * static_cast<std::size_t>(N_theta); }
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(N_theta) + static_cast<std::size_t>(j);
    }

    void validate() const {
        if (N_R < 2 || N_theta < 2) throw GridError("grid needs at least 2 points per axis");
        if (!(R_lo > 0.0 && R_hi > R_lo)) throw GridError("grid needs 0 < R_lo < R_hi");
    }

    bool operator==(const GridSpec&) const = default;
};

/// Parameters for sizing a grid from a working energy and hbar.
struct GridSizing {
    double points_per_wavelength = 4.0; // at the working energy
    double allowed_factor = 1.3;        // R range covers V < allowed_factor * E
    double margin = 0.3;                // bohr added past the allowed region
    int scan_R = 2000;
    int scan_theta = 200;
    int min_points = 16;
};

/// Classically allowed radial extent at energy E (plus margin), clipped to the
/// surface domain.
inline std::pair<double, double> allowed_radial_range(const pes::PotentialSurface& surf, double E,
                                                      const GridSizing& opts) {
    const auto dom = surf.domain();
    double lo = dom.hi, hi = dom.lo;
    for (int i = 0; i <= opts.scan_R; ++i) {
        const double R = dom.lo + (dom.hi - dom.lo) * i / opts.scan_R;
        for (int j = 0; j <= opts.scan_theta; ++j) {
            const double th = units::kPi * j / opts.scan_theta;
            if (surf.evaluate(R, th) < opts.allowed_factor * E) {
                lo = std::min(lo, R);
                hi = std::max(hi, R);
                break;
            }
        }
    }
    if (!(hi > lo)) {
        std::ostringstream os;
        os << "no classically allowed region at E = " << E << " hartree";
        throw GridError(os.str());
    }
    return {std::max(dom.lo, lo - opts.margin), std::min(dom.hi, hi + opts.margin)};
}

/// Smallest n' >= n with only factors 2, 3, 5 and 7.
inline int next_smooth(int n) {
    for (int k = std::max(n, 1);; ++k) {
        int r = k;
        for (int p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return k;
    }
}

/// Grid resolving the largest classical momenta at energy E with the
/// requested points per de Broglie wavelength.
inline GridSpec size_grid(const pes::PotentialSurface& surf, const pes::MassParameters& m, double E, double hbar,
                          const GridSizing& opts = {}) {
    if (!(hbar > 0.0)) throw ContractError("hbar must be positive");
    const auto [lo, hi] = allowed_radial_range(surf, E, opts);
    double vmin = surf.evaluate(0.5 * (lo + hi), 0.0);
    for (int i = 0; i <= opts.scan_R; ++i) {
        const double R = lo + (hi - lo) * i / opts.scan_R;
        for (int j = 0; j <= opts.scan_theta; ++j) vmin = std::min(vmin, surf.evaluate(R, units::kPi * j / opts.scan_theta));
    }
    const double ke = E - vmin;
    if (!(ke > 0.0)) throw GridError("working energy is below the potential minimum");
    const double pR = std::sqrt(2.0 * m.mu1 * ke);
    const double pT = std::sqrt(2.0 * ke / m.angular_coefficient(hi));
    // points per wavelength: 2 pi hbar / (p dx)
    const double L = hi - lo;
    GridSpec g;
    g.R_lo = lo;
    g.R_hi = hi;
    // sizes rounded up to transform-friendly lengths (the R sine transform has length N_R + 1)
    const int nR = std::max(opts.min_points,
                            static_cast<int>(std::ceil(opts.points_per_wavelength * L * pR / (2.0 * units::kPi * hbar))) - 1);
    const int nT = std::max(opts.min_points, static_cast<int>(std::ceil(opts.points_per_wavelength * pT / (2.0 * hbar))));
    g.N_R = next_smooth(nR + 1) - 1;
    g.N_theta = next_smooth(nT);
    return g;
}

/// Widen the R range of `g` so that [R0 - reach s, R0 + reach s] lies inside,
/// keeping the spacing (N_R grows, rounded to a transform-friendly length).
/// The range stays inside `dom`.
inline GridSpec pad_radial(GridSpec g, double R0, double s, double reach, const pes::RadialDomain& dom) {
    const double h = g.dR();
    const double lo = std::max(dom.lo, std::min(g.R_lo, R0 - reach * s));
    const double hi = std::min(dom.hi, std::max(g.R_hi, R0 + reach * s));
    if (lo == g.R_lo && hi == g.R_hi) return g;
    const int n = next_smooth(static_cast<int>(std::ceil((hi - lo) / h))) - 1;
    g.R_lo = lo;
    g.R_hi = hi;
    g.N_R = n;
    return g;
}

} // namespace superscar::quantum

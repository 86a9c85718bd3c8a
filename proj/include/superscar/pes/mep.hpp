#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "superscar/errors.hpp"
#include "superscar/pes/spline.hpp"
#include "superscar/pes/surface.hpp"
#include "superscar/units.hpp"

namespace superscar::pes {

struct PathSample {
    double theta = 0.0;
    double radius = 0.0; // R_e(theta)
    double energy = 0.0; // V(R_e(theta), theta)
};

/// Radial minimum R_e(theta) connecting the two linear isomers.
///
/// Samples are exact radial minima; between samples R_e is a C2 cubic spline
/// whose end slopes are pinned to zero when the grid reaches theta = 0 or pi
/// (R_e is even through the linear configurations). The spline, not the
/// samples, defines the sectioning curve used by the classical module.
class MinimumEnergyPath {
public:
    MinimumEnergyPath() = default;
    explicit MinimumEnergyPath(std::vector<PathSample> samples) : samples_(std::move(samples)) {
        std::vector<double> t, r;
        for (const auto& s : samples_) {
            t.push_back(s.theta);
            r.push_back(s.radius);
        }
        constexpr double eps = 1e-12;
        std::optional<double> lo, hi;
        if (std::abs(t.front()) < eps) lo = 0.0;
        if (std::abs(t.back() - units::kPi) < eps) hi = 0.0;
        spline_ = CubicSpline(std::move(t), std::move(r), lo, hi);
    }

    const std::vector<PathSample>& samples() const { return samples_; }

    /// R_e and its theta-derivatives at any real angle (even extension).
    CurvePoint at(double theta) const {
        const auto [folded, sign] = PotentialSurface::fold_angle(theta);
        CurvePoint p = spline_(folded);
        p.slope *= sign;
        return p;
    }
    double radius(double theta) const { return at(theta).value; }
    double slope(double theta) const { return at(theta).slope; }

private:
    std::vector<PathSample> samples_;
    CubicSpline spline_;
};

namespace detail {

// Safeguarded Newton for dV/dR = 0 inside [lo, hi], starting from r0.
inline double radial_minimum(const PotentialSurface& s, double theta, double r0, double lo, double hi) {
    double r = std::clamp(r0, lo, hi);
    for (int it = 0; it < 200; ++it) {
        const Jet2 j = s.local(r, theta);
        const double g = j.d0, h = j.h00;
        if (std::abs(g) <= 1e-13) {
            if (h > 0.0) return r;
            break;
        }
        double step = h > 0.0 ? -g / h : (g > 0.0 ? -0.05 : 0.05) * (hi - lo);
        // Backtrack until V decreases.
        const double v0 = j.v;
        double next = std::clamp(r + step, lo, hi);
        for (int k = 0; k < 60 && s.evaluate(next, theta) > v0 + 1e-16 * std::abs(v0); ++k) {
            step *= 0.5;
            next = std::clamp(r + step, lo, hi);
        }
        if (next == r) {
            if (std::abs(g) <= 1e-10 && h > 0.0) return r;
            break;
        }
        r = next;
        if ((r == lo && g > 0.0) || (r == hi && g < 0.0)) break;
    }
    std::ostringstream os;
    os << "no bracketed radial minimum at theta = " << theta;
    throw PathError(theta, os.str());
}

} // namespace detail

/// Trace R_e(theta) over `theta_grid` (ascending, inside [0, pi]) by 1-D
/// minimisation of V in R, warm-starting each solve from its neighbour.
inline MinimumEnergyPath minimum_energy_path(const PotentialSurface& surface, const std::vector<double>& theta_grid) {
    if (theta_grid.size() < 2) throw ContractError("theta grid needs at least two points");
    const double lo = surface.domain().lo, hi = surface.domain().hi;
    std::vector<PathSample> out;
    out.reserve(theta_grid.size());
    double guess = 0.0;
    for (std::size_t i = 0; i < theta_grid.size(); ++i) {
        const double th = theta_grid[i];
        if (i == 0) {
            // Coarse scan for the first start.
            double best = lo, vbest = surface.evaluate(lo, th);
            for (int k = 1; k <= 400; ++k) {
                const double r = lo + (hi - lo) * k / 400.0;
                const double v = surface.evaluate(r, th);
                if (v < vbest) {
                    vbest = v;
                    best = r;
                }
            }
            guess = best;
        }
        const double r = detail::radial_minimum(surface, th, guess, lo, hi);
        out.push_back({th, r, surface.evaluate(r, th)});
        guess = r;
    }
    return MinimumEnergyPath(std::move(out));
}

/// Uniform grid of n points over [0, pi].
inline std::vector<double> uniform_theta_grid(int n) {
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = units::kPi * i / (n - 1);
    return g;
}

} // namespace superscar::pes

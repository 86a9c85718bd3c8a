#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "superscar/classical/periodic_orbit.hpp"
#include "superscar/quantum/scar_function.hpp"

namespace superscar::scar {

/// Angular spread of a field, resolved in R and then averaged:
///
///     W(R)      = int |psi|^2 dtheta
///     sigma_R^2 = int theta^2 rho dtheta - (int theta rho dtheta)^2,  rho = |psi|^2 / W(R)
///     sigma^2   = int W(R) sigma_R^2 dR,  with W normalised to unit integral
///
/// Rows whose W falls below `floor` times the largest W are left out.
struct WidthSample {
    std::optional<int> n;
    double sigma = 0.0;          // radians
    std::vector<double> R;       // bohr, rows kept
    std::vector<double> variance; // sigma_R^2 on those rows
    std::vector<double> weight;   // W(R), unit integral over the kept rows
};

inline WidthSample transverse_width(const quantum::WaveField& f, double floor = 1e-12) {
    const auto& g = f.grid;
    const double dth = g.dtheta(), dR = g.dR();
    std::vector<double> W(static_cast<std::size_t>(g.N_R), 0.0);
    for (int i = 0; i < g.N_R; ++i) {
        double s = 0.0;
        for (int j = 0; j < g.N_theta; ++j) s += std::norm(f(i, j));
        W[static_cast<std::size_t>(i)] = s * dth;
    }
    const double wmax = *std::max_element(W.begin(), W.end());
    if (!(wmax > 0.0)) throw DataError("transverse width undefined: the field vanishes");

    WidthSample out;
    double total = 0.0;
    for (int i = 0; i < g.N_R; ++i) {
        const double w = W[static_cast<std::size_t>(i)];
        if (w < floor * wmax) continue;
        double m1 = 0.0, m2 = 0.0;
        for (int j = 0; j < g.N_theta; ++j) {
            const double rho = std::norm(f(i, j)) / w;
            const double th = g.theta(j);
            m1 += th * rho * dth;
            m2 += th * th * rho * dth;
        }
        out.R.push_back(g.R(i));
        out.variance.push_back(std::max(0.0, m2 - m1 * m1));
        out.weight.push_back(w);
        total += w * dR;
    }
    if (out.R.empty() || !(total > 0.0)) throw DataError("transverse width undefined: every row is below the floor");
    double s2 = 0.0;
    for (std::size_t k = 0; k < out.R.size(); ++k) {
        out.weight[k] /= total;
        s2 += out.weight[k] * out.variance[k] * dR;
    }
    out.sigma = std::sqrt(s2);
    return out;
}

/// Width of a scar function. The orbit has to pass through the grid; the
/// variance itself is taken in theta at fixed R whatever the orbit's shape.
inline WidthSample transverse_width(const quantum::ScarFunction& sf, const classical::PeriodicOrbit& po,
                                    double floor = 1e-12) {
    const auto& g = sf.field.grid;
    bool inside = false;
    for (const auto& tp : po.turning_points) inside = inside || (tp.R > g.R_lo && tp.R < g.R_hi);
    if (!inside) inside = po.initial.R > g.R_lo && po.initial.R < g.R_hi;
    if (!inside) {
        std::ostringstream os;
        os << "orbit at E = " << po.energy << " does not overlap the grid [" << g.R_lo << ", " << g.R_hi << "]";
        throw ContractError(os.str());
    }
    WidthSample w = transverse_width(sf.field, floor);
    w.n = sf.band;
    return w;
}

} // namespace superscar::scar

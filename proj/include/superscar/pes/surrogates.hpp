#pragma once

#include <cmath>
#include <map>
#include <string>

#include "superscar/errors.hpp"
#include "superscar/jet.hpp"
#include "superscar/pes/surface.hpp"
#include "superscar/units.hpp"

namespace superscar::pes {

/// Bundled desk-scale stand-in for the LiNC/LiCN surface.
///
///     V = U(theta) + 1/2 k(theta) (R - Re0(theta))^2
///     U = A sin^2(theta) + C (1 + cos theta) / 2
///     k = k0 (1 - d exp(-(cos theta - cos theta_d)^2 / (2 w^2)))^2
///     Re0 = R0 + dR cos theta
///
/// Wells sit at theta = pi (depth 0) and theta = 0 (height C) with a barrier
/// between. The dip in radial stiffness near theta_d lowers the radial
/// frequency locally; once the radial excitation is large enough the dip
/// binds a pair of nearly radial periodic orbits, born together in a
/// saddle-node bifurcation.
struct IsomerSurrogate {
    double barrier = units::cm_to_hartree(1500.0);   // A
    double asymmetry = units::cm_to_hartree(2000.0); // C
    double k0 = 0.13383;                             // hartree/bohr^2
    double dip_depth = 0.25;                         // d
    double dip_center = 1.8;                         // theta_d, radians
    double dip_width = 0.25;                         // w, in cos(theta)
    double R0 = 4.4;
    double dR = 0.3;

    template <class T>
    T operator()(const T& R, const T& theta) const {
        using std::cos;
        using std::exp;
        using std::sin;
        const T c = cos(theta);
        const T s = sin(theta);
        const T u = barrier * s * s + 0.5 * asymmetry * (1.0 + c);
        const T z = (c - std::cos(dip_center)) / dip_width;
        const T soft = 1.0 - dip_depth * exp(-0.5 * z * z);
        const T x = R - (R0 + dR * c);
        return u + 0.5 * k0 * soft * soft * x * x;
    }
};

/// a (R - R0)^2 + b cos(theta): minimum energy path R_e = R0 everywhere.
struct SeparableSurrogate {
    double a = 0.05, R0 = 4.0, b = 0.01;
    template <class T>
    T operator()(const T& R, const T& theta) const {
        using std::cos;
        const T x = R - R0;
        return a * x * x + b * cos(theta);
    }
};

/// 1/2 k (R - R0 - dR cos theta)^2 + b cos(theta): path R_e = R0 + dR cos theta.
struct ShiftedPathSurrogate {
    double k = 0.1, R0 = 4.0, dR = 0.5, b = 0.01;
    template <class T>
    T operator()(const T& R, const T& theta) const {
        using std::cos;
        const T x = R - (R0 + dR * cos(theta));
        return 0.5 * k * x * x + b * cos(theta);
    }
};

/// 1/2 kR (R - R0)^2 + 1/2 ktheta (theta - theta0)^2. Only meaningful for
/// motion that stays away from the linear configurations.
struct HarmonicSurrogate {
    double kR = 0.1, R0 = 4.0, ktheta = 0.01, theta0 = units::kPi / 2;
    template <class T>
    T operator()(const T& R, const T& theta) const {
        const T x = R - R0;
        const T y = theta - theta0;
        return 0.5 * kR * x * x + 0.5 * ktheta * y * y;
    }
};

/// Named surrogate with numeric overrides, as selected from a run config.
/// Unknown names or parameters raise ConfigError.
inline PotentialSurface make_surrogate(const std::string& name, const std::map<std::string, double>& params,
                                       RadialDomain domain) {
    auto take = [&](const std::map<std::string, double*>& fields) {
        for (const auto& [key, v] : params) {
            const auto it = fields.find(key);
            if (it == fields.end()) throw ConfigError("surface.params." + key, "unknown parameter for " + name);
            *it->second = v;
        }
    };
    if (name == "licn-surrogate") {
        IsomerSurrogate m;
        double A_cm = units::hartree_to_cm(m.barrier), C_cm = units::hartree_to_cm(m.asymmetry);
        take({{"barrier_cm", &A_cm}, {"asymmetry_cm", &C_cm}, {"k0", &m.k0}, {"dip_depth", &m.dip_depth},
              {"dip_center", &m.dip_center}, {"dip_width", &m.dip_width}, {"R0", &m.R0}, {"dR", &m.dR}});
        m.barrier = units::cm_to_hartree(A_cm);
        m.asymmetry = units::cm_to_hartree(C_cm);
        return make_analytic_surface(m, name, domain);
    }
    if (name == "separable") {
        SeparableSurrogate m;
        take({{"a", &m.a}, {"R0", &m.R0}, {"b", &m.b}});
        return make_analytic_surface(m, name, domain);
    }
    if (name == "shifted-path") {
        ShiftedPathSurrogate m;
        take({{"k", &m.k}, {"R0", &m.R0}, {"dR", &m.dR}, {"b", &m.b}});
        return make_analytic_surface(m, name, domain);
    }
    if (name == "harmonic") {
        HarmonicSurrogate m;
        take({{"kR", &m.kR}, {"R0", &m.R0}, {"ktheta", &m.ktheta}, {"theta0", &m.theta0}});
        return make_analytic_surface(m, name, domain);
    }
    throw ConfigError("surface.surrogate", "unknown surrogate '" + name + "'");
}

} // namespace superscar::pes

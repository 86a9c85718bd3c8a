#pragma once

#include <string>

#include "superscar/errors.hpp"
#include "superscar/units.hpp"

namespace superscar::pes {

/// Atomic masses of Li, C, N and the frozen C-N distance.
///
/// Atom masses are held in amu; the reduced masses `mu1` (Li against the CN
/// centre of mass) and `mu2` (C against N) are in electron masses.
struct MassParameters {
    double m_li = 7.016003;
    double m_c = 12.0;
    double m_n = 14.003074;
    double r_e = 2.186; // bohr
    double mu1 = 0.0;
    double mu2 = 0.0;

    static MassParameters make(double m_li, double m_c, double m_n, double r_e) {
        auto check = [](const char* name, double v) {
            if (!(v > 0.0)) throw ConfigError(std::string("masses.") + name, "must be strictly positive");
        };
        check("m_li", m_li);
        check("m_c", m_c);
        check("m_n", m_n);
        check("r_e", r_e);
        MassParameters p;
        p.m_li = m_li;
        p.m_c = m_c;
        p.m_n = m_n;
        p.r_e = r_e;
        p.mu1 = units::amu_to_me(m_li * (m_c + m_n) / (m_li + m_c + m_n));
        p.mu2 = units::amu_to_me(m_c * m_n / (m_c + m_n));
        return p;
    }

    static MassParameters licn() { return make(7.016003, 12.0, 14.003074, 2.186); }

    /// Coefficient of P_theta^2 in the kinetic energy, without the 1/2.
    double angular_coefficient(double R) const { return 1.0 / (mu1 * R * R) + 1.0 / (mu2 * r_e * r_e); }
};

} // namespace superscar::pes

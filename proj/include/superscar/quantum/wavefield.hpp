#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "superscar/errors.hpp"
#include "superscar/pes/masses.hpp"
#include "superscar/quantum/grid.hpp"

namespace superscar::quantum {

using cplx = std::complex<double>;

/// Complex amplitudes on a grid, row-major in (R, theta).
///
/// Measure is flat: <f|g> = sum conj(f) g dR dtheta. The angular volume
/// factor is absorbed into the amplitudes, which is what makes the
/// vibrational Hamiltonian Hermitian in this representation.
struct WaveField {
    GridSpec grid;
    double hbar = 1.0;
    pes::MassParameters masses;
    std::vector<cplx> a;

    WaveField() = default;
    WaveField(const GridSpec& g, double h, const pes::MassParameters& m) : grid(g), hbar(h), masses(m), a(g.size()) {}

    double cell() const { return grid.dR() * grid.dtheta(); }
    cplx& operator()(int i, int j) { return a[grid.index(i, j)]; }
    const cplx& operator()(int i, int j) const { return a[grid.index(i, j)]; }

    double norm2() const {
        double s = 0.0;
        for (const auto& z : a) s += std::norm(z);
        return s * cell();
    }
    double norm() const { return std::sqrt(norm2()); }

    void normalize() {
        const double n = norm();
        if (!(n > 0.0)) throw DataError("cannot normalise a zero field");
        for (auto& z : a) z /= n;
    }

    bool is_real(double tol = 0.0) const {
        for (const auto& z : a)
            if (std::abs(z.imag()) > tol) return false;
        return true;
    }
};

inline void check_compatible(const WaveField& f, const WaveField& g) {
    if (!(f.grid == g.grid)) throw ContractError("fields live on different grids");
}

/// <f|g> with the flat measure.
inline cplx inner(const WaveField& f, const WaveField& g) {
    check_compatible(f, g);
    cplx s = 0.0;
    for (std::size_t k = 0; k < f.a.size(); ++k) s += std::conj(f.a[k]) * g.a[k];
    return s * f.cell();
}

/// |<f|g>| / (|f| |g|), insensitive to global phase.
inline double overlap(const WaveField& f, const WaveField& g) { return std::abs(inner(f, g)) / (f.norm() * g.norm()); }

} // namespace superscar::quantum

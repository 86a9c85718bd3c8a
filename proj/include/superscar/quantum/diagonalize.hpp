#pragma once

#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "superscar/quantum/operator.hpp"

namespace superscar::quantum {

/// Lowest eigenpairs of a discretised Hamiltonian. Columns of `vectors` are
/// grid amplitudes normalised with the flat measure.
struct Eigenpairs {
    GridSpec grid;
    double hbar = 1.0;
    pes::MassParameters masses;
    std::vector<double> values;
    Eigen::MatrixXd vectors;

    std::size_t size() const { return values.size(); }

    WaveField field(std::size_t m) const {
        WaveField f(grid, hbar, masses);
        for (std::size_t k = 0; k < grid.size(); ++k) f.a[k] = vectors(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m));
        return f;
    }

    /// <m|f> for every stored eigenvector.
    std::vector<cplx> project(const WaveField& f) const {
        if (!(f.grid == grid)) throw ContractError("field grid differs from the eigenbasis grid");
        std::vector<cplx> c(values.size());
        for (std::size_t m = 0; m < values.size(); ++m) {
            cplx s = 0.0;
            for (std::size_t k = 0; k < grid.size(); ++k)
                s += vectors(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) * f.a[k];
            c[m] = s * f.cell();
        }
        return c;
    }
};

struct DiagonalizeOptions {
    std::size_t max_size = 10000;
    double residual_limit = 1e-8;
};

/// Dense diagonalisation of the grid Hamiltonian, built column by column
/// from `apply` so it is exactly the operator used for propagation.
inline Eigenpairs diagonalize_small(const GridHamiltonian& H, std::size_t k, const DiagonalizeOptions& opts = {}) {
    const GridSpec& g = H.grid();
    const std::size_t n = g.size();
    if (n > opts.max_size) {
        std::ostringstream os;
        os << "grid has " << n << " points; dense diagonalisation is limited to " << opts.max_size;
        throw ContractError(os.str());
    }
    k = std::min(k, n);
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd M(N, N);
    std::vector<cplx> e(n, 0.0), he(n);
    for (std::size_t q = 0; q < n; ++q) {
        e[q] = 1.0;
        H.apply(e.data(), he.data());
        for (std::size_t p = 0; p < n; ++p) M(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = he[p].real();
        e[q] = 0.0;
    }
    M = 0.5 * (M + M.transpose()).eval();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed", {});

    Eigenpairs out;
    out.grid = g;
    out.hbar = H.hbar();
    out.masses = H.masses();
    const double scale = 1.0 / std::sqrt(g.dR() * g.dtheta());
    out.vectors = es.eigenvectors().leftCols(static_cast<Eigen::Index>(k)) * scale;
    out.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + k);

    std::vector<double> residuals;
    double worst = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
        const WaveField f = out.field(m);
        WaveField r = H.apply(f);
        for (std::size_t p = 0; p < n; ++p) r.a[p] -= out.values[m] * f.a[p];
        residuals.push_back(r.norm());
        worst = std::max(worst, residuals.back());
    }
    if (worst > opts.residual_limit) {
        std::ostringstream os;
        os << "eigenpair residual " << worst << " exceeds " << opts.residual_limit;
        throw ConvergenceError(os.str(), residuals);
    }
    return out;
}

} // namespace superscar::quantum

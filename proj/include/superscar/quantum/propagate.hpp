#pragma once

#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "superscar/quantum/operator.hpp"

namespace superscar::quantum {

struct PropagatorOptions {
    double tolerance = 1e-14;    // truncation of the Chebyshev series
    double max_step = 0.0;       // a.u.; 0 = one step per call
    double tail_limit = 1e-6;    // spectral tail allowed in the field (see GridHamiltonian::spectral_tail)
    bool check_resolution = true;
};

/// exp(-i H dt / hbar) as a Chebyshev series in the scaled Hamiltonian
/// (H - c) / h, whose spectrum lies in [-1, 1]. Coefficients are
/// (2 - delta_k0) (-i)^k J_k(h dt / hbar), times the phase exp(-i c dt / hbar).
class ChebyshevPropagator {
public:
    ChebyshevPropagator(const GridHamiltonian& H, double dt, double tolerance = 1e-14) : H_(H), dt_(dt) {
        const double lo = H.spectral_min(), hi = H.spectral_max();
        center_ = 0.5 * (hi + lo);
        half_ = 0.5 * (hi - lo) * 1.001 + 1e-300;
        const double alpha = half_ * std::abs(dt) / H.hbar();
        const cplx phase = std::exp(cplx(0.0, -center_ * dt / H.hbar()));
        const double sgn = dt >= 0.0 ? 1.0 : -1.0;
        cplx ik = 1.0;
        for (int k = 0;; ++k) {
            const double j = boost::math::cyl_bessel_j(k, alpha);
            // J_k(-x) = (-1)^k J_k(x) for negative steps
            const double jk = (sgn < 0.0 && (k % 2)) ? -j : j;
            coeff_.push_back((k == 0 ? 1.0 : 2.0) * ik * jk * phase);
            ik *= cplx(0.0, -1.0);
            if (k > alpha && std::abs(j) < tolerance) break;
            if (k > 10 * alpha + 1000) throw ResolutionError("Chebyshev series failed to converge");
        }
        const std::size_t n = H.grid().size();
        t0_.resize(n);
        t1_.resize(n);
        t2_.resize(n);
        acc_.resize(n);
    }

    double step_size() const { return dt_; }
    int degree() const { return static_cast<int>(coeff_.size()) - 1; }

    /// Advance `f` in place by one step.
    void step(std::vector<cplx>& f) const {
        const std::size_t n = f.size();
        auto scaled = [&](const std::vector<cplx>& in, std::vector<cplx>& out) {
            H_.apply(in.data(), out.data());
            for (std::size_t k = 0; k < n; ++k) out[k] = (out[k] - center_ * in[k]) / half_;
        };
        t0_ = f;
        for (std::size_t k = 0; k < n; ++k) acc_[k] = coeff_[0] * t0_[k];
        if (coeff_.size() > 1) {
            scaled(t0_, t1_);
            for (std::size_t k = 0; k < n; ++k) acc_[k] += coeff_[1] * t1_[k];
        }
        for (std::size_t m = 2; m < coeff_.size(); ++m) {
            scaled(t1_, t2_);
            const cplx c = coeff_[m];
            for (std::size_t k = 0; k < n; ++k) {
                t2_[k] = 2.0 * t2_[k] - t0_[k];
                acc_[k] += c * t2_[k];
            }
            std::swap(t0_, t1_);
            std::swap(t1_, t2_);
        }
        f = acc_;
    }

private:
    const GridHamiltonian& H_;
    double dt_;
    double center_ = 0.0, half_ = 1.0;
    std::vector<cplx> coeff_;
    mutable std::vector<cplx> t0_, t1_, t2_, acc_;
};

namespace detail {

inline void check_resolved(const GridHamiltonian& H, const WaveField& f, const PropagatorOptions& opts) {
    if (!opts.check_resolution) return;
    const double tail = H.spectral_tail(f);
    if (tail > opts.tail_limit) {
        std::ostringstream os;
        os << "field carries " << tail << " of its norm in the top 10% of grid modes (limit " << opts.tail_limit
           << "); refine the grid";
        throw ResolutionError(os.str());
    }
}

} // namespace detail

/// exp(-i H t / hbar) f. Steps are equal and no longer than
/// `opts.max_step` when that is set.
inline WaveField propagate(const GridHamiltonian& H, const WaveField& f, double duration,
                           const PropagatorOptions& opts = {}) {
    if (duration < 0.0) throw ContractError("propagation duration must be non-negative");
    if (!(opts.tolerance > 0.0)) throw ContractError("propagation tolerance must be positive");
    detail::check_resolved(H, f, opts);
    WaveField out = f;
    if (duration == 0.0) return out;
    const int steps = opts.max_step > 0.0 ? std::max(1, static_cast<int>(std::ceil(duration / opts.max_step))) : 1;
    const ChebyshevPropagator U(H, duration / steps, opts.tolerance);
    for (int s = 0; s < steps; ++s) U.step(out.a);
    detail::check_resolved(H, out, opts);
    return out;
}

/// Propagate `f0` through `steps` steps of size dt, calling
/// observer(k, field) at t = k dt for k = 0..steps.
template <class Observer>
void evolve(const GridHamiltonian& H, const WaveField& f0, double dt, int steps, Observer&& observer,
            const PropagatorOptions& opts = {}) {
    detail::check_resolved(H, f0, opts);
    WaveField f = f0;
    observer(0, static_cast<const WaveField&>(f));
    if (steps <= 0) return;
    const ChebyshevPropagator U(H, dt, opts.tolerance);
    for (int k = 1; k <= steps; ++k) {
        U.step(f.a);
        observer(k, static_cast<const WaveField&>(f));
    }
    detail::check_resolved(H, f, opts);
}

} // namespace superscar::quantum

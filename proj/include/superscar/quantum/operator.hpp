#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "superscar/pes/surface.hpp"
#include "superscar/quantum/wavefield.hpp"

namespace superscar::quantum {

namespace detail {

// FFTW planning is not thread safe; execution with fftw_execute_r2r is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

class R2RPlan {
public:
    R2RPlan() = default;
    R2RPlan(std::vector<fftw_iodim> dims, std::vector<fftw_iodim> many, fftw_r2r_kind kind, std::size_t doubles) {
        std::vector<double> in(doubles), out(doubles);
        std::vector<fftw_r2r_kind> kinds(dims.size(), kind);
        const std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan_ = fftw_plan_guru_r2r(static_cast<int>(dims.size()), dims.data(), static_cast<int>(many.size()),
                                   many.data(), in.data(), out.data(), kinds.data(),
                                   FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_PRESERVE_INPUT);
        if (!plan_) throw GridError("FFTW could not plan a transform for this grid");
    }
    R2RPlan(const R2RPlan&) = delete;
    R2RPlan& operator=(const R2RPlan&) = delete;
    R2RPlan(R2RPlan&& o) noexcept : plan_(std::exchange(o.plan_, nullptr)) {}
    R2RPlan& operator=(R2RPlan&& o) noexcept {
        std::swap(plan_, o.plan_);
        return *this;
    }
    ~R2RPlan() {
        if (plan_) {
            const std::lock_guard<std::mutex> lock(fftw_planner_mutex());
            fftw_destroy_plan(plan_);
        }
    }

    void operator()(const double* in, double* out) const { fftw_execute_r2r(plan_, const_cast<double*>(in), out); }

private:
    fftw_plan plan_ = nullptr;
};

inline double* as_doubles(cplx* p) { return reinterpret_cast<double*>(p); }
inline const double* as_doubles(const cplx* p) { return reinterpret_cast<const double*>(p); }

} // namespace detail

/// Discretised vibrational Hamiltonian on a GridSpec.
///
///     H = -hbar^2/(2 mu1) d^2/dR^2 - 1/2 B(R) hbar^2 d^2/dtheta^2 + V(R, theta)
///     B(R) = 1/(mu1 R^2) + 1/(mu2 r_e^2)
///
/// Each kinetic term is applied in its exact eigenbasis: sine transform
/// (DST-I) in R, cosine (DCT-II/III) or sine (DST-II/III) transform in theta.
/// B(R) is diagonal in R and commutes with the angular term. The matrix is
/// real symmetric.
///
/// One instance owns scratch buffers, so `apply` on the same instance is not
/// reentrant. Separate instances may be used from separate threads.
class GridHamiltonian {
public:
    GridHamiltonian(const GridSpec& g, double hbar, const pes::MassParameters& m, std::vector<double> potential)
        : grid_(g), hbar_(hbar), masses_(m), V_(std::move(potential)) {
        grid_.validate();
        if (!(hbar > 0.0)) throw ContractError("hbar must be positive");
        if (V_.size() != grid_.size()) throw ContractError("potential does not match the grid");
        setup();
    }

    /// Potential sampled from a surface and capped at `cap` (hartree) where
    /// given. The cap only touches classically far-forbidden regions and keeps
    /// the spectral range small.
    GridHamiltonian(const GridSpec& g, double hbar, const pes::MassParameters& m, const pes::PotentialSurface& surf,
                    std::optional<double> cap = std::nullopt)
        : GridHamiltonian(g, hbar, m, sample_potential(g, surf, cap)) {}

    static std::vector<double> sample_potential(const GridSpec& g, const pes::PotentialSurface& surf,
                                                std::optional<double> cap) {
        std::vector<double> V(g.size());
        for (int i = 0; i < g.N_R; ++i)
            for (int j = 0; j < g.N_theta; ++j) {
                double v = surf.evaluate(g.R(i), g.theta(j));
                if (cap) v = std::min(v, *cap);
                V[g.index(i, j)] = v;
            }
        return V;
    }

    const GridSpec& grid() const { return grid_; }
    double hbar() const { return hbar_; }
    const pes::MassParameters& masses() const { return masses_; }
    const std::vector<double>& potential() const { return V_; }

    /// Bounds enclosing the whole discrete spectrum.
    double spectral_min() const { return emin_; }
    double spectral_max() const { return emax_; }

    /// Radial and angular kinetic eigenvalues, in transform order.
    const std::vector<double>& radial_kinetic() const { return TR_; }
    const std::vector<double>& angular_kinetic() const { return Tth_; }

    void apply(const cplx* in, cplx* out) const {
        const std::size_t n = grid_.size();
        const int NR = grid_.N_R, NT = grid_.N_theta;
        // radial kinetic
        fR_(detail::as_doubles(in), detail::as_doubles(s1_.data()));
        for (int k = 0; k < NR; ++k) {
            const double w = TR_[static_cast<std::size_t>(k)] * r_norm_;
            cplx* row = s1_.data() + grid_.index(k, 0);
            for (int j = 0; j < NT; ++j) row[j] *= w;
        }
        fR_(detail::as_doubles(s1_.data()), detail::as_doubles(out));
        // angular kinetic
        fT_(detail::as_doubles(in), detail::as_doubles(s1_.data()));
        for (int i = 0; i < NR; ++i) {
            cplx* row = s1_.data() + grid_.index(i, 0);
            for (int m = 0; m < NT; ++m) row[m] *= Tth_[static_cast<std::size_t>(m)] * t_norm_;
        }
        bT_(detail::as_doubles(s1_.data()), detail::as_doubles(s2_.data()));
        for (int i = 0; i < NR; ++i) {
            const double b = B_[static_cast<std::size_t>(i)];
            const std::size_t o = grid_.index(i, 0);
            for (int j = 0; j < NT; ++j) out[o + j] += b * s2_[o + j];
        }
        for (std::size_t k = 0; k < n; ++k) out[k] += V_[k] * in[k];
    }

    WaveField apply(const WaveField& f) const {
        check(f);
        WaveField out = f;
        apply(f.a.data(), out.a.data());
        return out;
    }

    /// <f|H|f> / <f|f>.
    double expectation(const WaveField& f) const {
        const WaveField h = apply(f);
        return inner(f, h).real() / f.norm2();
    }

    /// Fraction of |f|^2 carried by the top `fraction` of modes along either
    /// axis. A large value means the grid does not resolve the field.
    double spectral_tail(const WaveField& f, double fraction = 0.1) const {
        check(f);
        const int NR = grid_.N_R, NT = grid_.N_theta;
        const int kR = std::max(1, static_cast<int>(std::ceil(fraction * NR)));
        const int kT = std::max(1, static_cast<int>(std::ceil(fraction * NT)));
        fR_(detail::as_doubles(f.a.data()), detail::as_doubles(s1_.data()));
        double total = 0.0, top = 0.0;
        for (int k = 0; k < NR; ++k)
            for (int j = 0; j < NT; ++j) {
                const double w = std::norm(s1_[grid_.index(k, j)]);
                total += w;
                if (k >= NR - kR) top += w;
            }
        double tail = total > 0.0 ? top / total : 0.0;
        fT_(detail::as_doubles(f.a.data()), detail::as_doubles(s1_.data()));
        total = top = 0.0;
        for (int i = 0; i < NR; ++i)
            for (int m = 0; m < NT; ++m) {
                double w = std::norm(s1_[grid_.index(i, m)]) * angular_weight(m);
                total += w;
                if (m >= NT - kT) top += w;
            }
        if (total > 0.0) tail = std::max(tail, top / total);
        return tail;
    }

private:
    void check(const WaveField& f) const {
        if (!(f.grid == grid_)) throw ContractError("field grid differs from the Hamiltonian grid");
        if (f.hbar != hbar_) throw ContractError("field hbar differs from the Hamiltonian hbar");
    }

    // Squared-norm weight of angular mode m, so that modes add up by Parseval.
    double angular_weight(int m) const {
        const bool neumann = grid_.theta_boundary == ThetaBoundary::neumann;
        if (neumann && m == 0) return 0.5;
        if (!neumann && m == grid_.N_theta - 1) return 0.5;
        return 1.0;
    }

    void setup() {
        const int NR = grid_.N_R, NT = grid_.N_theta;
        const std::size_t doubles = 2 * grid_.size();
        const bool neumann = grid_.theta_boundary == ThetaBoundary::neumann;

        fR_ = detail::R2RPlan({{NR, 2 * NT, 2 * NT}}, {{2 * NT, 1, 1}}, FFTW_RODFT00, doubles);
        fT_ = detail::R2RPlan({{NT, 2, 2}}, {{NR, 2 * NT, 2 * NT}, {2, 1, 1}}, neumann ? FFTW_REDFT10 : FFTW_RODFT10,
                              doubles);
        bT_ = detail::R2RPlan({{NT, 2, 2}}, {{NR, 2 * NT, 2 * NT}, {2, 1, 1}}, neumann ? FFTW_REDFT01 : FFTW_RODFT01,
                              doubles);
        r_norm_ = 1.0 / (2.0 * (NR + 1));
        t_norm_ = 1.0 / (2.0 * NT);

        const double h2 = hbar_ * hbar_;
        TR_.resize(static_cast<std::size_t>(NR));
        for (int k = 0; k < NR; ++k) {
            const double kk = (k + 1) * units::kPi / grid_.length();
            TR_[static_cast<std::size_t>(k)] = h2 * kk * kk / (2.0 * masses_.mu1);
        }
        Tth_.resize(static_cast<std::size_t>(NT));
        for (int m = 0; m < NT; ++m) {
            const double l = neumann ? m : m + 1;
            Tth_[static_cast<std::size_t>(m)] = 0.5 * h2 * l * l;
        }
        B_.resize(static_cast<std::size_t>(NR));
        for (int i = 0; i < NR; ++i) B_[static_cast<std::size_t>(i)] = masses_.angular_coefficient(grid_.R(i));

        s1_.assign(grid_.size(), 0.0);
        s2_.assign(grid_.size(), 0.0);

        const auto [vmin, vmax] = std::minmax_element(V_.begin(), V_.end());
        for (double v : V_)
            if (!std::isfinite(v)) throw GridError("potential is not finite on the grid");
        const double bmax = *std::max_element(B_.begin(), B_.end());
        const double bmin = *std::min_element(B_.begin(), B_.end());
        emin_ = *vmin + TR_.front() + bmin * Tth_.front();
        emax_ = *vmax + TR_.back() + bmax * Tth_.back();
    }

    GridSpec grid_;
    double hbar_;
    pes::MassParameters masses_;
    std::vector<double> V_;
    std::vector<double> TR_, Tth_, B_;
    double r_norm_ = 1.0, t_norm_ = 1.0;
    double emin_ = 0.0, emax_ = 0.0;
    detail::R2RPlan fR_, fT_, bT_;
    mutable std::vector<cplx> s1_, s2_;
};

} // namespace superscar::quantum

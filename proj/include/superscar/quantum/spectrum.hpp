#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "superscar/quantum/propagate.hpp"

namespace superscar::quantum {

/// C(t) = <phi(0)| exp(-i H t / hbar) |phi(0)> on t = k dt, k = 0..N.
/// Negative times follow from C(-t) = conj C(t).
struct Autocorrelation {
    double dt = 0.0;
    double hbar = 1.0;
    double mean_energy = 0.0; // <H> of phi(0); fixes the aliasing branch
    double spread = 0.0;      // energy standard deviation of phi(0)
    std::vector<cplx> values;

    double span() const { return dt * (static_cast<double>(values.size()) - 1.0); }
    double time(std::size_t k) const { return dt * static_cast<double>(k); }
};

/// Builds C(t) from the evolving field one sample at a time. For a real
/// initial field C(2t) = sum phi(t)^2 and C((2k+1) dt) = sum phi(k dt) phi((k+1) dt)
/// (no conjugation), so the span doubles for free.
class AutocorrelationAccumulator {
public:
    AutocorrelationAccumulator(const WaveField& f0, double dt) : f0_(f0), real_(f0.is_real()) {
        ac_.dt = dt;
        ac_.hbar = f0.hbar;
    }

    bool doubling() const { return real_; }

    void operator()(int k, const WaveField& f) {
        const double cell = f.cell();
        if (!real_) {
            ac_.values.push_back(inner(f0_, f));
            return;
        }
        cplx same = 0.0;
        for (const auto& z : f.a) same += z * z;
        if (k > 0) {
            cplx cross = 0.0;
            for (std::size_t i = 0; i < f.a.size(); ++i) cross += prev_[i] * f.a[i];
            ac_.values.push_back(cross * cell);
        }
        ac_.values.push_back(same * cell);
        prev_ = f.a;
    }

    Autocorrelation result() const { return ac_; }

private:
    const WaveField& f0_;
    bool real_;
    Autocorrelation ac_;
    std::vector<cplx> prev_;
};

/// Energy spread of a field from <H> and <H^2>.
struct EnergyMoments {
    double mean = 0.0;
    double spread = 0.0;
};

inline EnergyMoments energy_moments(const GridHamiltonian& H, const WaveField& f) {
    const WaveField h = H.apply(f);
    const double n2 = f.norm2();
    const double e1 = inner(f, h).real() / n2;
    const double e2 = inner(h, h).real() / n2;
    return {e1, std::sqrt(std::max(0.0, e2 - e1 * e1))};
}

/// Largest sampling step that resolves the field's energy content, taken as
/// `reach` standard deviations on either side of the mean plus any offset
/// to a target energy.
inline double nyquist_step(const GridHamiltonian& H, const WaveField& f, double reach = 12.0, double target_offset = 0.0) {
    const auto m = energy_moments(H, f);
    const double band = reach * m.spread + std::abs(target_offset);
    if (!(band > 0.0)) return 1.0;
    return units::kPi * H.hbar() / band;
}

/// Sample C(t) on [0, duration] with step dt. `dt` must resolve the field's
/// energy content (see nyquist_step); the check is advisory.
inline Autocorrelation autocorrelate(const GridHamiltonian& H, const WaveField& f0, double duration, double dt,
                                     const PropagatorOptions& opts = {}) {
    if (!(dt > 0.0) || duration < 0.0) throw ContractError("autocorrelate needs dt > 0 and duration >= 0");
    const int samples = static_cast<int>(std::llround(duration / dt));
    AutocorrelationAccumulator acc(f0, dt);
    const auto m = energy_moments(H, f0);
    const int steps = acc.doubling() ? (samples + 1) / 2 : samples;
    evolve(H, f0, dt, steps, acc, opts);
    Autocorrelation out = acc.result();
    out.values.resize(static_cast<std::size_t>(samples) + 1);
    out.mean_energy = m.mean;
    out.spread = m.spread;
    return out;
}

struct Stick {
    double energy = 0.0;
    double weight = 0.0;
};

struct Band {
    double center = 0.0;
    double weight = 0.0;
    double lo = 0.0, hi = 0.0; // neighbouring minima
};

/// Windowed spectrum as a probability density in energy:
///
///     rho_T(E) = 1/(2 pi hbar) int exp(-t^2/T^2) exp(i E t / hbar) C(t) dt
///              = sum_n w_n T/(2 sqrt(pi) hbar) exp(-(E - E_n)^2 T^2 / (4 hbar^2))
///
/// so it integrates to the total stick weight. `window` is absent for the
/// infinite-resolution variant, whose sticks come from a long window.
struct Spectrum {
    std::vector<double> energy; // hartree
    std::vector<double> density; // per hartree
    std::optional<double> window; // a.u. of time
    double effective_window = 0.0;
    std::vector<Band> bands;
    std::vector<Stick> sticks;
    std::vector<std::string> warnings;

    double total_weight() const {
        double s = 0.0;
        for (std::size_t k = 1; k < energy.size(); ++k)
            s += 0.5 * (density[k] + density[k - 1]) * (energy[k] - energy[k - 1]);
        return s;
    }
};

struct SpectrumOptions {
    std::optional<double> e_lo, e_hi; // energy window; default from the window-limited content
    double resolution = 16.0;          // grid points per line width 2 hbar / T
    double stick_floor = 1e-7;         // weights below this are not reported as sticks
};

namespace detail {

/// Window-weighted samples c_k = w_k exp(-t_k^2/T^2) C(t_k) with trapezoid
/// weights over [-span, span] folded onto t >= 0.
inline std::vector<cplx> windowed_samples(const Autocorrelation& ac, double T) {
    const std::size_t N = ac.values.size();
    std::vector<cplx> c(N);
    for (std::size_t k = 0; k < N; ++k) {
        const double t = ac.time(k);
        double w = std::exp(-(t * t) / (T * T));
        if (k == 0 || k + 1 == N) w *= 0.5;
        c[k] = w * ac.values[k];
    }
    return c;
}

inline double windowed_density(const Autocorrelation& ac, const std::vector<cplx>& c, double E) {
    // exp(i E k dt / hbar) by recurrence, re-seeded every 256 steps
    const double hb = ac.hbar;
    const cplx rot = std::exp(cplx(0.0, E * ac.dt / hb));
    double s = 0.0;
    cplx ph = 1.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        if (k % 256 == 0) ph = std::exp(cplx(0.0, E * ac.time(k) / hb));
        s += (ph * c[k]).real();
        ph *= rot;
    }
    return 2.0 * s * ac.dt / (2.0 * units::kPi * hb);
}

inline double windowed_density(const Autocorrelation& ac, double T, double E) {
    return windowed_density(ac, windowed_samples(ac, T), E);
}

} // namespace detail

/// Windowed spectrum of an autocorrelation. With a finite `T` the result
/// carries bands (local maxima, weight integrated between the adjacent
/// minima). Without `T` the longest window the span supports (span / 6)
/// is used and each isolated Gaussian line is reduced to a stick by
/// log-quadratic interpolation, which is exact for a single line.
inline Spectrum spectrum(const Autocorrelation& ac, std::optional<double> T, const SpectrumOptions& opts = {}) {
    if (ac.values.size() < 2) throw ContractError("autocorrelation needs at least two samples");
    Spectrum sp;
    sp.window = T;
    const double span = ac.span();
    const double Teff = T ? *T : span / 6.0;
    if (!(Teff > 0.0)) throw ContractError("spectral window must be positive");
    sp.effective_window = Teff;
    if (T && span < 3.0 * *T)
        sp.warnings.push_back("autocorrelation span is shorter than 3 window widths; spectrum is truncated");

    const double hb = ac.hbar;
    const double width = 2.0 * hb / Teff;
    const double period = 2.0 * units::kPi * hb / ac.dt; // aliasing period in energy
    double lo, hi;
    if (opts.e_lo && opts.e_hi) {
        lo = *opts.e_lo;
        hi = *opts.e_hi;
    } else {
        double half = 0.5 * period;
        if (ac.spread > 0.0) half = std::min(half, std::max(12.0 * ac.spread, 8.0 * width));
        lo = ac.mean_energy - half;
        hi = ac.mean_energy + half;
    }
    if (hi - lo > period * (1.0 + 1e-12))
        sp.warnings.push_back("energy window is wider than the sampling aliasing period");
    const double de = width / opts.resolution;
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / de)) + 1;
    sp.energy.resize(n);
    sp.density.resize(n);
    const std::vector<cplx> samples = detail::windowed_samples(ac, Teff);
    for (std::size_t k = 0; k < n; ++k) {
        sp.energy[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
        sp.density[k] = detail::windowed_density(ac, samples, sp.energy[k]);
    }

    // local maxima
    std::vector<std::size_t> peaks, troughs{0};
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (sp.density[k] > sp.density[k - 1] && sp.density[k] >= sp.density[k + 1]) peaks.push_back(k);
        if (sp.density[k] < sp.density[k - 1] && sp.density[k] <= sp.density[k + 1]) troughs.push_back(k);
    }
    troughs.push_back(n - 1);

    const double line_peak = Teff / (2.0 * std::sqrt(units::kPi) * hb); // density of a unit stick at its centre
    double dmax = 0.0;
    for (double d : sp.density) dmax = std::max(dmax, d);
    for (std::size_t p : peaks) {
        const double y0 = sp.density[p - 1], y1 = sp.density[p], y2 = sp.density[p + 1];
        if (y1 < 1e-12 * dmax) continue;
        if (!T) {
            if (y0 <= 0.0 || y2 <= 0.0) continue;
            const double l0 = std::log(y0), l1 = std::log(y1), l2 = std::log(y2);
            const double curv = l0 - 2.0 * l1 + l2;
            if (!(curv < 0.0)) continue;
            const double shift = 0.5 * (l0 - l2) / curv;
            const double h = sp.energy[p + 1] - sp.energy[p];
            const double e = sp.energy[p] + shift * h;
            const double peak = std::exp(l1 - 0.25 * (l0 - l2) * shift);
            const double w = peak / line_peak;
            if (w < opts.stick_floor) continue;
            sp.sticks.push_back({e, w});
        } else {
            Band b;
            b.center = sp.energy[p];
            const double l0 = y0, l2 = y2;
            const double curv = l0 - 2.0 * y1 + l2;
            if (curv < 0.0) b.center += 0.5 * (l0 - l2) / curv * (sp.energy[p + 1] - sp.energy[p]);
            auto lo_it = std::upper_bound(troughs.begin(), troughs.end(), p);
            const std::size_t right = *lo_it, left = *(lo_it - 1);
            b.lo = sp.energy[left];
            b.hi = sp.energy[right];
            for (std::size_t k = left + 1; k <= right; ++k)
                b.weight += 0.5 * (sp.density[k] + sp.density[k - 1]) * (sp.energy[k] - sp.energy[k - 1]);
            sp.bands.push_back(b);
        }
    }
    if (!T) {
        for (std::size_t k = 1; k < sp.sticks.size(); ++k)
            if (sp.sticks[k].energy - sp.sticks[k - 1].energy < 4.0 * width) {
                sp.warnings.push_back("sticks closer than twice the line width are not resolved by this span");
                break;
            }
    }
    return sp;
}

/// Band whose centre is nearest to E.
inline std::optional<Band> nearest_band(const Spectrum& sp, double E) {
    std::optional<Band> best;
    for (const auto& b : sp.bands)
        if (!best || std::abs(b.center - E) < std::abs(best->center - E)) best = b;
    return best;
}

} // namespace superscar::quantum

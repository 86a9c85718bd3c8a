#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "superscar/parallel.hpp"
#include "superscar/quantum/packet.hpp"
#include "superscar/quantum/scar_function.hpp"
#include "superscar/scar/fit.hpp"

namespace superscar::scar {

/// Window T_E of the scar-function integral.
///
/// `ehrenfest`: T_E = factor * ln(S/hbar) / lambda with lambda the stability
///     exponent per unit time of an unstable orbit. Stable and marginal
///     orbits (lambda = 0) fall back to marginal_periods * T_PO.
/// `periods`: T_E = periods * T_PO whatever the stability.
struct EhrenfestPolicy {
    enum class Kind { ehrenfest, periods };
    Kind kind = Kind::ehrenfest;
    double factor = 1.0;
    double marginal_periods = 2.0;
    double periods = 2.0;
};

inline const char* to_string(EhrenfestPolicy::Kind k) {
    return k == EhrenfestPolicy::Kind::ehrenfest ? "ehrenfest" : "periods";
}

inline double ehrenfest_time(const classical::PeriodicOrbit& po, double hbar, const EhrenfestPolicy& p) {
    if (!(hbar > 0.0)) throw ContractError("hbar must be positive");
    if (p.kind == EhrenfestPolicy::Kind::periods) return p.periods * po.period;
    const double lambda = po.stability_exponent();
    const double q = std::log(po.reduced_action() / hbar);
    if (lambda > 0.0 && q > 0.0) return p.factor * q / lambda;
    return p.marginal_periods * po.period;
}

struct PipelineOptions {
    quantum::GridSizing sizing{};
    double cap_factor = 2.0;          // potential capped at cap_factor * E on the grid
    quantum::WidthPolicy width{};
    quantum::TurningPointChoice launch = quantum::TurningPointChoice::outer;
    double packet_reach = 7.0;        // R range padded to hold the packet to this many sigma_R
    EhrenfestPolicy window{};
    double band_periods = 1.0;        // low-resolution window, in orbit periods
    double span_windows = 4.0;        // autocorrelation span, in band windows
    double reach = 12.0;              // energy standard deviations resolved by the time step
    double band_tolerance = 1.0;      // band centre within band_tolerance * hbar / T of E
    double half_width = 3.0;          // scar quadrature over [-a T_E, a T_E]
    quantum::PropagatorOptions propagation{};
    double width_floor = 1e-12;
    FitOptions fit{};
    int workers = 1;
};

enum class JobStatus { ok, excluded, failed };

inline const char* to_string(JobStatus s) {
    switch (s) {
    case JobStatus::ok: return "ok";
    case JobStatus::excluded: return "excluded";
    default: return "failed";
    }
}

/// Everything produced for one excitation number.
struct ScarJob {
    int n = 0;
    double hbar = 0.0;
    JobStatus status = JobStatus::failed;
    std::string reason;
    quantum::GridSpec grid;
    double T_E = 0.0;
    double band_window = 0.0;
    double dt = 0.0;
    int steps = 0;
    std::optional<quantum::Band> band;
    std::optional<quantum::Spectrum> spectrum;
    std::optional<quantum::ScarFunction> scar;
    std::optional<WidthSample> width;
    double seconds = 0.0;
};

/// One rung of the sweep: packet at hbar(n), a single propagation that
/// accumulates both the autocorrelation and the scar integral at E, the
/// band check, and the transverse width.
inline ScarJob run_scar_job(const classical::PeriodicOrbit& po, const pes::PotentialSurface& surf,
                            const pes::MassParameters& m, double E, int n, double hbar,
                            const PipelineOptions& opts = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    ScarJob job;
    job.n = n;
    job.hbar = hbar;
    auto finish = [&] {
        job.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return job;
    };
    try {
        if (!(opts.half_width >= 3.0)) throw ContractError("scar quadrature half width must be at least 3 T_E");
        const classical::PhasePoint at = quantum::launch_point(po, opts.launch);
        const quantum::PacketWidths pw = quantum::packet_widths(at, hbar, surf, m, opts.width);
        job.grid = quantum::pad_radial(quantum::size_grid(surf, m, E, hbar, opts.sizing), at.R, pw.sigma_R,
                                       opts.packet_reach, surf.domain());
        const quantum::GridHamiltonian H(job.grid, hbar, m, surf, opts.cap_factor * E);
        const quantum::WaveField f0 = quantum::gaussian_packet(job.grid, hbar, m, at, pw);

        job.T_E = ehrenfest_time(po, hbar, opts.window);
        job.band_window = opts.band_periods * po.period;
        const double span = opts.span_windows * job.band_window;
        const auto mom = quantum::energy_moments(H, f0);
        job.dt = quantum::nyquist_step(H, f0, opts.reach, E - mom.mean);

        const bool real = f0.is_real();
        const int ac_samples = static_cast<int>(std::ceil(span / job.dt));
        const int ac_steps = real ? (ac_samples + 1) / 2 : ac_samples;
        const int scar_steps = std::max(1, static_cast<int>(std::ceil(opts.half_width * job.T_E / job.dt)));
        job.steps = std::max(ac_steps, scar_steps);

        quantum::AutocorrelationAccumulator ac(f0, job.dt);
        quantum::ScarAccumulator sc(f0, E, job.T_E, job.dt, scar_steps);
        quantum::evolve(
            H, f0, job.dt, job.steps,
            [&](int k, const quantum::WaveField& f) {
                if (k <= ac_steps) ac(k, f);
                if (k <= scar_steps) sc(k, f);
            },
            opts.propagation);
        if (!real) {
            quantum::WaveField c = f0;
            for (auto& z : c.a) z = std::conj(z);
            quantum::evolve(H, c, job.dt, scar_steps, [&](int k, const quantum::WaveField& chi) { sc.negative(k, chi); },
                            opts.propagation);
        }

        quantum::Autocorrelation acf = ac.result();
        acf.values.resize(static_cast<std::size_t>(ac_samples) + 1);
        acf.mean_energy = mom.mean;
        acf.spread = mom.spread;
        job.spectrum = quantum::spectrum(acf, job.band_window);
        job.band = quantum::nearest_band(*job.spectrum, E);

        quantum::ScarFunction sf;
        sf.field = sc.result();
        sf.field.normalize();
        sf.band = n;
        sf.energy = E;
        sf.T_E = job.T_E;
        std::ostringstream label;
        label << "PO@" << E;
        sf.orbit = label.str();
        sf.mean_energy = H.expectation(sf.field);
        if (std::abs(sf.mean_energy - E) > hbar / job.T_E) {
            std::ostringstream os;
            os << "scar function mean energy is " << sf.mean_energy - E << " hartree from its target, more than hbar/T_E";
            sf.warnings.push_back(os.str());
        }
        job.scar = std::move(sf);
        job.width = transverse_width(*job.scar, po, opts.width_floor);

        const double tol = opts.band_tolerance * hbar / job.band_window;
        if (!job.band) {
            job.status = JobStatus::excluded;
            job.reason = "no band in the low-resolution spectrum";
        } else if (std::abs(job.band->center - E) > tol) {
            std::ostringstream os;
            os << "nearest band centre is " << job.band->center - E << " hartree from E, beyond hbar/T = " << tol;
            job.status = JobStatus::excluded;
            job.reason = os.str();
        } else {
            job.status = JobStatus::ok;
        }
    } catch (const Error& e) {
        job.status = JobStatus::failed;
        job.reason = e.what();
    }
    return finish();
}

struct PipelineResult {
    BSLadder ladder;
    std::vector<ScarJob> jobs; // sorted by n
    std::optional<ScalingFit> fit;
};

/// Fit over the jobs that passed. Throws PipelineError when too few survive.
inline ScalingFit fit_jobs(const std::vector<ScarJob>& jobs, const BSLadder& ladder, const FitOptions& opts = {}) {
    std::vector<WidthSample> samples;
    for (const auto& j : jobs)
        if (j.status == JobStatus::ok && j.width) samples.push_back(*j.width);
    if (samples.size() < opts.min_samples) {
        std::ostringstream os;
        os << "only " << samples.size() << " of " << jobs.size() << " scar functions survived; the fit needs "
           << opts.min_samples;
        for (const auto& j : jobs)
            if (j.status != JobStatus::ok) os << "\n  n = " << j.n << ": " << to_string(j.status) << ", " << j.reason;
        throw PipelineError(os.str());
    }
    try {
        return scaling_fit(samples, ladder, opts);
    } catch (const ContractError& e) {
        throw PipelineError(e.what());
    }
}

/// Bohr-Sommerfeld sweep at the orbit's energy over n in [n_lo, n_hi].
inline PipelineResult superscar_pipeline(const classical::PeriodicOrbit& po, const pes::PotentialSurface& surf,
                                         const pes::MassParameters& m, double E_working, int n_lo, int n_hi,
                                         const PipelineOptions& opts = {}) {
    if (n_hi - n_lo + 1 < static_cast<int>(opts.fit.min_samples)) {
        std::ostringstream os;
        os << "n range [" << n_lo << ", " << n_hi << "] has fewer than " << opts.fit.min_samples << " entries";
        throw PipelineError(os.str());
    }
    if (std::abs(po.energy - E_working) > 1e-9 * std::max(1.0, std::abs(E_working)))
        throw ContractError("orbit energy differs from the working energy");
    PipelineResult out;
    out.ladder = bs_ladder(po, n_lo, n_hi);
    out.jobs = parallel_map(out.ladder.entries.size(), opts.workers, [&](std::size_t i) {
        const auto& e = out.ladder.entries[i];
        return run_scar_job(po, surf, m, E_working, e.n, e.hbar, opts);
    });
    out.fit = fit_jobs(out.jobs, out.ladder, opts.fit);
    return out;
}

} // namespace superscar::scar

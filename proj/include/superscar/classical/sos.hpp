#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "superscar/classical/flow.hpp"
#include "superscar/classical/section.hpp"
#include "superscar/parallel.hpp"
#include "superscar/units.hpp"

namespace superscar::classical {

struct SosOptions {
    int trajectories = 50;
    int crossings = 500;
    std::uint64_t seed = 0;
    int workers = 1;
    int max_draws = 10000; // rejection-sampling attempts per start
};

struct SosTrace {
    SectionPoint start;
    std::vector<SectionPoint> points;
    std::string stopped; // empty when all crossings were collected
};

struct CompositeSos {
    double energy = 0.0;
    std::uint64_t seed = 0;
    std::vector<SosTrace> traces;

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& t : traces) n += t.points.size();
        return n;
    }
};

/// Uniform random start on the allowed part of the section at energy E.
inline SectionPoint random_section_point(const PoincareSection& sec, double E, std::mt19937_64& rng,
                                         int max_draws = 10000) {
    double pmax = 0.0;
    for (int k = 0; k <= 180; ++k) pmax = std::max(pmax, sec.momentum_bound(units::kPi * k / 180.0, E));
    if (pmax <= 0.0) throw ForbiddenError("section is empty at this energy");
    pmax *= 1.05;
    for (int d = 0; d < max_draws; ++d) {
        const SectionPoint s{units::kPi * uniform01(rng), pmax * (2.0 * uniform01(rng) - 1.0),
                             sec.options().direction};
        if (std::abs(s.P_psi) < sec.momentum_bound(s.psi, E)) return s;
    }
    throw ForbiddenError("no allowed section point found");
}

/// Overlay of many trajectories' crossings. Trajectory i draws its start
/// from its own generator (seed, i), so the result does not depend on the
/// number of workers.
inline CompositeSos composite_sos(double E, const PoincareSection& sec, const SosOptions& opts = {}) {
    CompositeSos out;
    out.energy = E;
    out.seed = opts.seed;
    out.traces = parallel_map(static_cast<std::size_t>(opts.trajectories), opts.workers, [&](std::size_t i) {
        auto rng = item_rng(opts.seed, i);
        SosTrace tr;
        tr.start = random_section_point(sec, E, rng, opts.max_draws);
        SectionPoint s = tr.start;
        tr.points.reserve(static_cast<std::size_t>(opts.crossings));
        for (int k = 0; k < opts.crossings; ++k) {
            try {
                s = poincare_map(s, E, sec);
            } catch (const Error& e) {
                tr.stopped = e.what();
                break;
            }
            tr.points.push_back(s);
        }
        return tr;
    });
    return out;
}

/// Columns: trajectory, crossing, psi, P_psi.
inline void write_sos_csv(std::ostream& os, const CompositeSos& sos) {
    os << "trajectory,crossing,psi,P_psi\n";
    os.precision(17);
    for (std::size_t i = 0; i < sos.traces.size(); ++i) {
        const auto& pts = sos.traces[i].points;
        for (std::size_t k = 0; k < pts.size(); ++k)
            os << i << ',' << k << ',' << pts[k].psi << ',' << pts[k].P_psi << '\n';
    }
}

/// Columns: t, R, theta, P_R, P_theta.
inline void write_trajectory_csv(std::ostream& os, const std::vector<PhasePoint>& pts) {
    os << "t,R,theta,P_R,P_theta\n";
    os.precision(17);
    for (const auto& p : pts) os << p.t << ',' << p.R << ',' << p.theta << ',' << p.P_R << ',' << p.P_theta << '\n';
}

} // namespace superscar::classical

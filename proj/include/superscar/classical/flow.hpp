#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "superscar/classical/hamiltonian.hpp"
#include "superscar/errors.hpp"

namespace superscar::classical {

struct IntegratorOptions {
    double abs_tol = 1e-13;
    double rel_tol = 1e-13;
    double initial_step = 1.0;
    double max_step = 50.0;
};

/// Adaptive Runge-Kutta-Fehlberg 7(8) stepper over a fixed-size state.
///
/// Accepted steps only; step size adapts to the tolerances and never exceeds
/// `max_step` in magnitude. Negative time steps integrate backwards.
template <std::size_t N>
class AdaptiveStepper {
public:
    using StateN = std::array<double, N>;
    using ErrorStepper = boost::numeric::odeint::runge_kutta_fehlberg78<StateN>;

    explicit AdaptiveStepper(const IntegratorOptions& o)
        : opts_(o), controlled_(boost::numeric::odeint::make_controlled<ErrorStepper>(o.abs_tol, o.rel_tol)) {}

    /// Advance (y, t) by one accepted step, never beyond t_end. `dt` carries
    /// the suggested step between calls.
    template <class System>
    void step(System& sys, StateN& y, double& t, double& dt, double t_end) {
        using boost::numeric::odeint::controlled_step_result;
        const double dir = t_end >= t ? 1.0 : -1.0;
        for (int tries = 0; tries < 200; ++tries) {
            dt = dir * std::min({std::abs(dt), opts_.max_step, std::abs(t_end - t)});
            if (controlled_.try_step(sys, y, t, dt) == controlled_step_result::success) return;
        }
        throw ConvergenceError("step size underflow in adaptive integrator", {});
    }

    /// One plain (non-adaptive) step of size h from y; used to land exactly
    /// on events inside an accepted step.
    template <class System>
    StateN sub_step(System& sys, const StateN& y, double t, double h) {
        StateN out = y, err{};
        ErrorStepper plain;
        plain.do_step(sys, out, t, h, err);
        return out;
    }

    const IntegratorOptions& options() const { return opts_; }

private:
    IntegratorOptions opts_;
    boost::numeric::odeint::controlled_runge_kutta<ErrorStepper> controlled_;
};

enum class ExitReason { completed, domain_exit };

struct Trajectory {
    std::vector<PhasePoint> points;
    ExitReason exit = ExitReason::completed;
    std::string message;

    const PhasePoint& back() const { return points.back(); }
};

/// Integrate Hamilton's equations from `start` for `duration` (negative
/// durations run backwards). Every accepted step is recorded. Leaving the
/// surface's radial domain truncates the trajectory and flags the reason.
inline Trajectory flow(const PhasePoint& start, double duration, const Hamiltonian& H,
                       const IntegratorOptions& opts = {}) {
    if (!std::isfinite(H.energy(start))) throw ContractError("start point has non-finite energy");
    auto sys = [&H](const State& y, State& dy, double) { dy = H.velocity(y); };
    AdaptiveStepper<4> stepper(opts);
    Trajectory tr;
    tr.points.push_back(start);
    State y = to_state(start);
    double t = start.t;
    const double t_end = start.t + duration;
    double dt = duration >= 0 ? opts.initial_step : -opts.initial_step;
    try {
        while (std::abs(t_end - t) > 1e-12 * std::max(1.0, std::abs(t_end))) {
            stepper.step(sys, y, t, dt, t_end);
            tr.points.push_back(to_point(y, t));
        }
    } catch (const DomainError& e) {
        tr.exit = ExitReason::domain_exit;
        tr.message = e.what();
    }
    return tr;
}

} // namespace superscar::classical

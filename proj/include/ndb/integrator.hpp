#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "ndb/errors.hpp"
#include "ndb/physics.hpp"

namespace ndb {

enum class StepMethod {
    rk4_doubling,     // classical RK4 with step-doubling error control
    dormand_prince,   // embedded 5(4) pair, same interface
};

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double dt_init = 1e-9;
    double dt_min = 1e-16;
    double dt_max = 1e-7;
    std::uint64_t max_steps = 4'000'000'000ULL;
    StepMethod method = StepMethod::rk4_doubling;

    void validate() const {
        if (!(rel_tol > 0.0 && abs_tol > 0.0)) {
            throw ValidationError("integrator tolerances must be positive");
        }
        if (!(dt_min < dt_init && dt_init < dt_max)) {
            throw ValidationError("integrator requires dt_min < dt_init < dt_max");
        }
        if (max_steps == 0) {
            throw ValidationError("integrator.max_steps must be positive");
        }
    }
};

template <std::size_t N>
struct AdaptiveStep {
    StateVector<N> y{};
    StateVector<N> dydt{};  // derivative at the new point
    double dt_used = 0.0;
    double dt_next = 0.0;
    double error = 0.0;     // normalized; accepted steps have error <= 1
    std::uint64_t rejected = 0;
};

namespace detail {

template <std::size_t N>
inline StateVector<N> add_scaled(const StateVector<N>& y, double h, const StateVector<N>& k) {
    StateVector<N> r;
    for (std::size_t i = 0; i < N; ++i) {
        r[i] = y[i] + h * k[i];
    }
    return r;
}

template <std::size_t N, class Rhs>
StateVector<N> rk4(double t, const StateVector<N>& y, const StateVector<N>& k1, double h, Rhs& rhs) {
    const auto k2 = rhs(t + 0.5 * h, add_scaled(y, 0.5 * h, k1));
    const auto k3 = rhs(t + 0.5 * h, add_scaled(y, 0.5 * h, k2));
    const auto k4 = rhs(t + h, add_scaled(y, h, k3));
    StateVector<N> r;
    for (std::size_t i = 0; i < N; ++i) {
        r[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    }
    return r;
}

template <std::size_t N>
inline double error_norm(const StateVector<N>& delta, const StateVector<N>& y0, const StateVector<N>& y1,
                         const IntegratorConfig& cfg) {
    double worst = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double scale = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        worst = std::max(worst, std::abs(delta[i]) / scale);
    }
    return worst;
}

inline double grow_factor(double err, double order) {
    constexpr double safety = 0.9;
    constexpr double max_growth = 4.0;
    if (err < 1e-30) {
        return max_growth;
    }
    return std::min(max_growth, safety * std::pow(err, -1.0 / order));
}

inline double shrink_factor(double err, double order) {
    return std::max(0.1, 0.9 * std::pow(err, -1.0 / order));
}

// One trial of RK4 step doubling. Returns the extrapolated state and the
// normalized discrepancy between one full step and two half steps.
template <std::size_t N, class Rhs>
std::pair<StateVector<N>, double> rk4_doubling_trial(double t, const StateVector<N>& y,
                                                     const StateVector<N>& f0, double h, Rhs& rhs,
                                                     const IntegratorConfig& cfg) {
    const auto full = rk4(t, y, f0, h, rhs);
    const auto half = rk4(t, y, f0, 0.5 * h, rhs);
    const auto two_half = rk4(t + 0.5 * h, half, rhs(t + 0.5 * h, half), 0.5 * h, rhs);
    StateVector<N> delta, out;
    for (std::size_t i = 0; i < N; ++i) {
        delta[i] = two_half[i] - full[i];
        out[i] = two_half[i] + delta[i] / 15.0;
    }
    return {out, error_norm(delta, y, two_half, cfg) / 15.0};
}

template <std::size_t N, class Rhs>
std::pair<StateVector<N>, double> dormand_prince_trial(double t, const StateVector<N>& y,
                                                       const StateVector<N>& k1, double h, Rhs& rhs,
                                                       const IntegratorConfig& cfg,
                                                       StateVector<N>& k7_out) {
    constexpr double a21 = 1.0 / 5.0;
    constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                     a54 = -212.0 / 729.0;
    constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                     a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                     b6 = 11.0 / 84.0;
    constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                     e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
    StateVector<N> tmp;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    const auto k2 = rhs(t + h / 5.0, tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    const auto k3 = rhs(t + 0.3 * h, tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    const auto k4 = rhs(t + 0.8 * h, tmp);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    const auto k5 = rhs(t + 8.0 / 9.0 * h, tmp);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const auto k6 = rhs(t + h, tmp);
    StateVector<N> out;
    for (std::size_t i = 0; i < N; ++i)
        out[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    k7_out = rhs(t + h, out);
    StateVector<N> delta;
    for (std::size_t i = 0; i < N; ++i)
        delta[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7_out[i]);
    return {out, error_norm(delta, y, out, cfg)};
}

}  // namespace detail

// Takes one accepted adaptive step from (t, y) starting with trial size
// dt_try. `dydt` must be rhs(t, y). Throws StepUnderflow when the controller
// asks for a step below cfg.dt_min.
template <std::size_t N, class Rhs>
AdaptiveStep<N> step_adaptive(double t, const StateVector<N>& y, const StateVector<N>& dydt, double dt_try,
                              Rhs&& rhs, const IntegratorConfig& cfg) {
    AdaptiveStep<N> out;
    double h = std::min(dt_try, cfg.dt_max);
    // RK4 doubling with local extrapolation is effectively fifth order; both
    // methods share the 1/5 growth and 1/4 shrink exponents.
    for (;;) {
        if (h < cfg.dt_min) {
            throw StepUnderflow("adaptive step fell below dt_min at t = " + std::to_string(t));
        }
        double err = 0.0;
        if (cfg.method == StepMethod::rk4_doubling) {
            auto [trial, e] = detail::rk4_doubling_trial(t, y, dydt, h, rhs, cfg);
            err = e;
            if (err <= 1.0) {
                out.y = trial;
                out.dydt = rhs(t + h, trial);
            }
        } else {
            StateVector<N> k7;
            auto [trial, e] = detail::dormand_prince_trial(t, y, dydt, h, rhs, cfg, k7);
            err = e;
            if (err <= 1.0) {
                out.y = trial;
                out.dydt = k7;
            }
        }
        if (err <= 1.0 && std::isfinite(err)) {
            out.dt_used = h;
            out.error = err;
            out.dt_next = std::clamp(h * detail::grow_factor(err, 5.0), cfg.dt_min, cfg.dt_max);
            return out;
        }
        ++out.rejected;
        h *= std::isfinite(err) ? detail::shrink_factor(err, 4.0) : 0.1;
    }
}

// Cubic Hermite interpolation inside an accepted step.
template <std::size_t N>
StateVector<N> hermite(const StateVector<N>& y0, const StateVector<N>& f0, const StateVector<N>& y1,
                       const StateVector<N>& f1, double h, double theta) {
    const double t2 = theta * theta, t3 = t2 * theta;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + theta;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    StateVector<N> r;
    for (std::size_t i = 0; i < N; ++i) {
        r[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    }
    return r;
}

enum class Termination { completed, escaped, singularity, step_underflow, max_steps };

inline const char* to_string(Termination t) {
    switch (t) {
    case Termination::completed: return "completed";
    case Termination::escaped: return "escaped";
    case Termination::singularity: return "singularity";
    case Termination::step_underflow: return "step_underflow";
    case Termination::max_steps: return "max_steps";
    }
    return "unknown";
}

// What a between-steps hook did to the state.
enum class HookResult { unchanged, modified, stop };

struct IntegrationSummary {
    Termination reason = Termination::completed;
    double t_final = 0.0;
    std::uint64_t steps = 0;
    std::uint64_t rejected = 0;
    double dt_next = 0.0;  // controller's proposal for a follow-on run
    std::string message;
};

struct NoHook {
    template <class Y>
    HookResult operator()(double, double, Y&) const { return HookResult::unchanged; }
};

// Drives step_adaptive from t0 to t_end. `observe(t, y)` is called on the
// uniform grid t0 + k dt_out (dense Hermite output) and once at t_end.
// `hook(t, dt, y)` runs after every accepted step. `y` holds the final state
// on return. Physics errors end the run and are reported in the summary.
template <std::size_t N, class Rhs, class Observer, class Hook = NoHook>
IntegrationSummary integrate(double t0, StateVector<N>& y, double t_end, double dt_out, Rhs&& rhs,
                             Observer&& observe, const IntegratorConfig& cfg, Hook&& hook = Hook{}) {
    IntegrationSummary summary;
    summary.t_final = t0;
    summary.dt_next = cfg.dt_init;
    double t = t0;
    std::uint64_t next_sample = 1;
    auto sample_time = [&](std::uint64_t k) { return t0 + static_cast<double>(k) * dt_out; };
    observe(t0, y);
    if (!(t_end > t0)) {
        return summary;
    }
    double last_observed = t0;
    const double end_slop = 1e-12 * std::max(std::abs(t_end), std::abs(t_end - t0));
    // grid points that round to just below t_end are left to the final observe
    const double grid_end = t_end - 1e-9 * dt_out;
    try {
        auto dydt = rhs(t, y);
        double h = cfg.dt_init;
        while (t_end - t > end_slop) {
            if (summary.steps >= cfg.max_steps) {
                summary.reason = Termination::max_steps;
                break;
            }
            const double remaining = t_end - t;
            const bool last = h >= remaining;
            const double trial = last ? remaining : h;
            auto step = step_adaptive<N>(t, y, dydt, trial, rhs, cfg);
            summary.rejected += step.rejected;
            ++summary.steps;
            const double t_new = (last && step.dt_used == trial) ? t_end : t + step.dt_used;
            const double dt = t_new - t;
            if (dt_out > 0.0) {
                while (sample_time(next_sample) <= t_new && sample_time(next_sample) < grid_end) {
                    const double ts = sample_time(next_sample);
                    observe(ts, hermite(y, dydt, step.y, step.dydt, dt, (ts - t) / dt));
                    last_observed = ts;
                    ++next_sample;
                }
            }
            y = step.y;
            dydt = step.dydt;
            t = t_new;
            if (!last || step.dt_used < trial) {
                h = step.dt_next;
            }
            summary.dt_next = h;
            const HookResult action = hook(t, dt, y);
            if (action == HookResult::stop) {
                summary.reason = Termination::escaped;
                break;
            }
            if (action == HookResult::modified) {
                dydt = rhs(t, y);
            }
        }
    } catch (const SingularityGuard& e) {
        summary.reason = Termination::singularity;
        summary.message = e.what();
    } catch (const StepUnderflow& e) {
        summary.reason = Termination::step_underflow;
        summary.message = e.what();
    }
    summary.t_final = t;
    if (t > last_observed) {
        observe(t, y);
    }
    return summary;
}

}  // namespace ndb

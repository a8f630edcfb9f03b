#pragma once

// Trajectories of the competition model: fixed-step classical RK4 or an
// adaptive Dormand-Prince 5(4) pair, halting on convergence or at T_max.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperlv/model.hpp"

namespace hyperlv {

enum class IntegratorMode { Fixed, Adaptive };

inline const char* to_string(IntegratorMode m) { return m == IntegratorMode::Fixed ? "fixed" : "adaptive"; }

inline IntegratorMode integrator_mode_from_string(const std::string& s) {
    if (s == "fixed") return IntegratorMode::Fixed;
    if (s == "adaptive") return IntegratorMode::Adaptive;
    throw std::invalid_argument("unknown integrator mode '" + s + "' (expected fixed|adaptive)");
}

struct IntegratorOptions {
    IntegratorMode mode = IntegratorMode::Fixed;
    double h = 1e-3;          // fixed step; initial step in adaptive mode
    double t_max = 2000.0;
    double tol_conv = 1e-10;  // ||dz/dt||_inf threshold
    double z_floor = 1e-12;   // snapping threshold for the reported final state
    double h_min = 1e-12;
    double rtol = 1e-12;      // adaptive mode
    double atol = 1e-16;
    std::size_t sample_stride = 10;
    // At k = 1 switch to adaptive mode when the two largest inputs differ by
    // less than this (slow ratio decay); <= 0 disables.
    double auto_adaptive_gap = 0.1;

    void validate() const {
        if (!(h > 0.0)) throw std::invalid_argument("integrator: h must be > 0");
        if (!(t_max > 0.0)) throw std::invalid_argument("integrator: T_max must be > 0");
        if (!(tol_conv > 0.0)) throw std::invalid_argument("integrator: tol_conv must be > 0");
        if (!(h_min > 0.0) || h_min > h) throw std::invalid_argument("integrator: need 0 < h_min <= h");
        if (sample_stride < 1) throw std::invalid_argument("integrator: sample_stride must be >= 1");
        if (!(rtol > 0.0) || !(atol >= 0.0)) throw std::invalid_argument("integrator: bad adaptive tolerances");
    }
};

struct IntegratorStats {
    std::size_t steps = 0;
    std::size_t rejected_steps = 0;
    std::optional<double> max_step_error;  // normalized embedded estimate, adaptive mode only
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    bool converged = false;
    Vector final_state;  // components below z_floor snapped to 0
    double final_time = 0.0;
    double final_field_norm = 0.0;
    IntegratorMode mode = IntegratorMode::Fixed;
    IntegratorStats stats;
};

class StepUnderflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

// Vector field without the nonnegativity check; stage states of a step may
// dip below zero before the step is rejected.
inline Vector raw_field(const CompetitionModel& m, const Vector& z) {
    const int p = m.p();
    const double k = m.k();
    const double s = std::pow(z.sum(), p);
    Vector out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = z[i] * (m.b()[i] - k * s + (k - 1.0) * std::pow(z[i], p));
    return out;
}

inline Vector rk4_step(const CompetitionModel& m, const Vector& z, const Vector& f0, double h) {
    const Vector k2 = raw_field(m, z + 0.5 * h * f0);
    const Vector k3 = raw_field(m, z + 0.5 * h * k2);
    const Vector k4 = raw_field(m, z + h * k3);
    return z + (h / 6.0) * (f0 + 2.0 * k2 + 2.0 * k3 + k4);
}

// One fixed step of size h; a step that leaves the orthant is redone as two
// half steps.
inline Vector rk4_positive(const CompetitionModel& m, const Vector& z, const Vector& f0, double h, double h_min,
                           std::size_t& rejected) {
    Vector next = rk4_step(m, z, f0, h);
    if ((next.array() >= 0.0).all()) return next;
    ++rejected;
    const double half = 0.5 * h;
    if (half < h_min) {
        throw StepUnderflow("integrate: step fell below h_min while keeping the state nonnegative (h = " +
                            std::to_string(half) + ")");
    }
    const Vector mid = rk4_positive(m, z, f0, half, h_min, rejected);
    return rk4_positive(m, mid, raw_field(m, mid), half, h_min, rejected);
}

inline bool close_top_two(const Vector& w, double gap) {
    if (w.size() < 2) return false;
    std::vector<double> v(w.data(), w.data() + w.size());
    std::partial_sort(v.begin(), v.begin() + 2, v.end(), std::greater<>());
    return v[0] - v[1] < gap;
}

}  // namespace detail

inline IntegratorMode effective_mode(const CompetitionModel& m, const IntegratorOptions& opts) {
    if (opts.mode == IntegratorMode::Fixed && opts.auto_adaptive_gap > 0.0 && is_unit_k(m.k()) &&
        detail::close_top_two(m.w(), opts.auto_adaptive_gap)) {
        return IntegratorMode::Adaptive;
    }
    return opts.mode;
}

inline Trajectory integrate(const CompetitionModel& m, const Vector& z0, const IntegratorOptions& opts = {}) {
    opts.validate();
    if (static_cast<std::size_t>(z0.size()) != m.n()) {
        throw std::invalid_argument("integrate: initial state has " + std::to_string(z0.size()) + " components, model has " +
                                    std::to_string(m.n()));
    }
    for (Eigen::Index i = 0; i < z0.size(); ++i) {
        if (!(z0[i] > 0.0) || !std::isfinite(z0[i])) {
            throw std::invalid_argument("integrate: initial state must be strictly positive (z0[" + std::to_string(i + 1) +
                                        "])");
        }
    }
    Trajectory tr;
    tr.mode = effective_mode(m, opts);
    double t = 0.0;
    Vector z = z0;
    Vector f = detail::raw_field(m, z);
    tr.times.push_back(t);
    tr.states.push_back(z);
    std::size_t since_sample = 0;
    auto record = [&](bool force) {
        if (++since_sample >= opts.sample_stride || force) {
            tr.times.push_back(t);
            tr.states.push_back(z);
            since_sample = 0;
        }
    };

    if (tr.mode == IntegratorMode::Fixed) {
        while (true) {
            if (f.cwiseAbs().maxCoeff() < opts.tol_conv) {
                tr.converged = true;
                break;
            }
            if (t >= opts.t_max) break;
            const double h = std::min(opts.h, opts.t_max - t);
            z = detail::rk4_positive(m, z, f, h, opts.h_min, tr.stats.rejected_steps);
            t = (h == opts.h) ? opts.h * static_cast<double>(tr.stats.steps + 1) : opts.t_max;
            f = detail::raw_field(m, z);
            ++tr.stats.steps;
            record(false);
        }
    } else {
        // Dormand-Prince 5(4) tableau.
        constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        constexpr double a21 = 1.0 / 5;
        constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                         a65 = -5103.0 / 18656;
        constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                         e6 = 22.0 / 525, e7 = -1.0 / 40;
        (void)c2, (void)c3, (void)c4, (void)c5;  // autonomous system
        double h = opts.h;
        double max_err = 0.0;
        while (true) {
            if (f.cwiseAbs().maxCoeff() < opts.tol_conv) {
                tr.converged = true;
                break;
            }
            if (t >= opts.t_max) break;
            h = std::min(h, opts.t_max - t);
            const Vector& k1 = f;
            const Vector k2 = detail::raw_field(m, z + h * (a21 * k1));
            const Vector k3 = detail::raw_field(m, z + h * (a31 * k1 + a32 * k2));
            const Vector k4 = detail::raw_field(m, z + h * (a41 * k1 + a42 * k2 + a43 * k3));
            const Vector k5 = detail::raw_field(m, z + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            const Vector k6 = detail::raw_field(m, z + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            const Vector next = z + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            const Vector k7 = detail::raw_field(m, next);
            const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            double en = 0.0;
            for (Eigen::Index i = 0; i < z.size(); ++i) {
                const double sc = opts.atol + opts.rtol * std::max(std::abs(z[i]), std::abs(next[i]));
                en = std::max(en, std::abs(err[i]) / sc);
            }
            const bool negative = (next.array() < 0.0).any();
            if (en <= 1.0 && !negative) {
                z = next;
                f = k7;
                t += h;
                ++tr.stats.steps;
                max_err = std::max(max_err, en);
                record(false);
                const double grow = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
                h *= std::clamp(grow, 0.2, 5.0);
            } else {
                ++tr.stats.rejected_steps;
                h *= negative ? 0.5 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 1.0);
                if (h < opts.h_min) {
                    throw StepUnderflow("integrate: adaptive step fell below h_min at t = " + std::to_string(t));
                }
            }
        }
        tr.stats.max_step_error = max_err;
    }
    if (since_sample != 0) record(true);
    tr.final_time = t;
    tr.final_field_norm = f.cwiseAbs().maxCoeff();
    tr.final_state = z;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (tr.final_state[i] < opts.z_floor) tr.final_state[i] = 0.0;
    }
    return tr;
}

}  // namespace hyperlv

#pragma once

// Outcome classification of converged trajectories and the trajectory-level
// verification laws: the k = 1 ratio law and Lyapunov descent toward the
// coexistence point.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hyperlv/equilibrium.hpp"
#include "hyperlv/integrator.hpp"

namespace hyperlv {

enum class Label { WTA, VWTA, WSA, Coexistence, NonConverged };

inline const char* to_string(Label l) {
    switch (l) {
        case Label::WTA: return "WTA";
        case Label::VWTA: return "VWTA";
        case Label::WSA: return "WSA";
        case Label::Coexistence: return "COEXISTENCE";
        default: return "NONCONVERGED";
    }
}

inline Label label_from_string(const std::string& s) {
    if (s == "WTA") return Label::WTA;
    if (s == "VWTA") return Label::VWTA;
    if (s == "WSA") return Label::WSA;
    if (s == "COEXISTENCE") return Label::Coexistence;
    if (s == "NONCONVERGED") return Label::NonConverged;
    throw std::invalid_argument("unknown outcome label '" + s + "'");
}

struct OutcomeReport {
    Label label = Label::NonConverged;
    IndexSet winners;
    Vector final_values;
    std::optional<std::size_t> matched_equilibrium;  // index into the equilibria passed in
    bool low_confidence = false;
    bool tie = false;  // single winner shares the maximal input with another neuron
};

/// Winners are components above winner_threshold * max_j final_j.
inline OutcomeReport classify_outcome(const CompetitionModel& m, const Trajectory& traj,
                                      const std::vector<EquilibriumRecord>& eqs, double winner_threshold = 1e-3) {
    OutcomeReport rep;
    rep.final_values = traj.final_state;
    if (!traj.converged) return rep;
    const Vector& z = traj.final_state;
    const double cut = winner_threshold * z.maxCoeff();
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (z[i] > cut) rep.winners.push_back(static_cast<std::size_t>(i));
        if (z[i] > cut / 10.0 && z[i] < cut * 10.0) rep.low_confidence = true;
    }
    const std::size_t n = m.n();
    if (rep.winners.size() == 1) {
        const double w_max = m.w().maxCoeff();
        const double w_win = m.w()[static_cast<Eigen::Index>(rep.winners[0])];
        const auto at_max = static_cast<std::size_t>((m.w().array() == w_max).count());
        rep.label = w_win == w_max ? Label::WTA : Label::VWTA;
        rep.tie = w_win == w_max && at_max > 1;
    } else if (rep.winners.size() == n) {
        rep.label = Label::Coexistence;
    } else {
        rep.label = Label::WSA;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < eqs.size(); ++q) {
        const double dist = (eqs[q].z_star - z).cwiseAbs().maxCoeff();
        if (dist <= 1e-4 && dist < best) {
            best = dist;
            rep.matched_equilibrium = q;
        }
    }
    return rep;
}

struct RatioLawReport {
    Matrix slope;        // fitted d/dt log(z_i / z_j); NaN where excluded
    Matrix slope_error;  // |slope - (w_i - w_j)|; NaN where excluded
    std::vector<std::pair<std::size_t, std::size_t>> excluded;   // too few samples above the floor
    std::vector<std::pair<std::size_t, std::size_t>> truncated;  // fitted on a prefix before the floor
    double max_error = 0.0;
    std::size_t pairs_fitted = 0;
};

/// At k = 1 every log-ratio log(z_i/z_j) is exactly linear in time with slope
/// w_i - w_j.  Fits each pair by least squares over the samples where both
/// components are still above `floor`.
inline RatioLawReport check_ratio_law(const CompetitionModel& m, const Trajectory& traj, double floor = 1e-10,
                                      std::size_t min_samples = 10) {
    if (!is_unit_k(m.k())) throw std::domain_error("check_ratio_law: requires k == 1");
    if (traj.states.empty() || (traj.states.front().array() <= 0.0).any()) {
        throw std::invalid_argument("check_ratio_law: initial components must be strictly positive");
    }
    const auto n = static_cast<Eigen::Index>(m.n());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    RatioLawReport rep;
    rep.slope = Matrix::Constant(n, n, nan);
    rep.slope_error = Matrix::Constant(n, n, nan);
    // First sample index at which each component drops below the floor.
    std::vector<std::size_t> alive(static_cast<std::size_t>(n), traj.states.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t s = 0; s < traj.states.size(); ++s) {
            if (traj.states[s][i] < floor) {
                alive[static_cast<std::size_t>(i)] = s;
                break;
            }
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const std::size_t len = std::min(alive[static_cast<std::size_t>(i)], alive[static_cast<std::size_t>(j)]);
            const auto pair = std::pair{static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
            if (len < min_samples) {
                rep.excluded.push_back(pair);
                continue;
            }
            if (len < traj.states.size()) rep.truncated.push_back(pair);
            double st = 0.0, sy = 0.0;
            for (std::size_t s = 0; s < len; ++s) {
                st += traj.times[s];
                sy += std::log(traj.states[s][i] / traj.states[s][j]);
            }
            const double tm = st / static_cast<double>(len);
            const double ym = sy / static_cast<double>(len);
            double sxy = 0.0, sxx = 0.0;
            for (std::size_t s = 0; s < len; ++s) {
                const double dt = traj.times[s] - tm;
                sxy += dt * (std::log(traj.states[s][i] / traj.states[s][j]) - ym);
                sxx += dt * dt;
            }
            const double slope = sxy / sxx;
            const double err = std::abs(slope - (m.w()[i] - m.w()[j]));
            rep.slope(i, j) = slope;
            rep.slope(j, i) = -slope;
            rep.slope_error(i, j) = rep.slope_error(j, i) = err;
            rep.max_error = std::max(rep.max_error, err);
            ++rep.pairs_fitted;
        }
    }
    return rep;
}

struct LyapunovReport {
    bool refused = false;
    std::string reason;
    std::size_t samples = 0;
    std::size_t violations = 0;
    double max_violation = 0.0;
    // Same count for min_i ((z_i - z*_i)/z*_i)^2 taken literally; diagnostic only.
    std::size_t literal_violations = 0;
    double literal_max_violation = 0.0;
    std::size_t samples_in_u1 = 0;        // z >= z*
    std::size_t samples_in_u2 = 0;        // min_i z_i / z*_i < 1
    std::optional<bool> left_u3;          // set when the start lies in U3 = {z < z*}
};

/// V(z) = (min_i z_i / z*_i - 1)^2, the deviation measured at the most
/// depleted component relative to z*.
inline double lyapunov_value(const Vector& z, const Vector& z_star) {
    return std::pow(z.cwiseQuotient(z_star).minCoeff() - 1.0, 2);
}

/// Counts increases of V between consecutive samples beyond `tol`.  Requires
/// -A to be an irreducible nonnegative H+-tensor and z* its positive
/// equilibrium.
inline LyapunovReport check_lyapunov_descent(const CompetitionModel& m, const Trajectory& traj, const Vector& z_star,
                                             double tol = 1e-9) {
    LyapunovReport rep;
    const auto neg_a = m.tensor().map_entries([](double v, bool) { return -v; });
    const auto flags = classify_structure(neg_a);
    if (!is_nonnegative(neg_a) || !is_irreducible(neg_a)) {
        rep.refused = true;
        rep.reason = "-A is not an irreducible nonnegative tensor";
        return rep;
    }
    if (flags.h_plus != Tri::True) {
        rep.refused = true;
        rep.reason = std::string("-A is not an H+-tensor (h_plus = ") + to_string(flags.h_plus) +
                     "; need 1 >= k (n^p - 1))";
        return rep;
    }
    if (static_cast<std::size_t>(z_star.size()) != m.n() || (z_star.array() <= 0.0).any()) {
        rep.refused = true;
        rep.reason = "z* must be a strictly positive n-vector";
        return rep;
    }
    if (vector_field(m, z_star).cwiseAbs().maxCoeff() > 1e-8) {
        rep.refused = true;
        rep.reason = "z* is not an equilibrium of the model";
        return rep;
    }
    auto literal = [&](const Vector& z) { return (z - z_star).cwiseQuotient(z_star).array().square().minCoeff(); };
    rep.samples = traj.states.size();
    const bool start_in_u3 = !traj.states.empty() && (traj.states.front().array() < z_star.array()).all();
    if (start_in_u3) rep.left_u3 = false;
    double prev = 0.0, prev_lit = 0.0;
    for (std::size_t s = 0; s < traj.states.size(); ++s) {
        const Vector& z = traj.states[s];
        const double v = lyapunov_value(z, z_star);
        const double lit = literal(z);
        if ((z.array() >= z_star.array()).all()) ++rep.samples_in_u1;
        if (z.cwiseQuotient(z_star).minCoeff() < 1.0) ++rep.samples_in_u2;
        if (start_in_u3 && !(z.array() < z_star.array()).all()) rep.left_u3 = true;
        if (s > 0) {
            if (v - prev > tol) {
                ++rep.violations;
                rep.max_violation = std::max(rep.max_violation, v - prev);
            }
            if (lit - prev_lit > tol) {
                ++rep.literal_violations;
                rep.literal_max_violation = std::max(rep.literal_max_violation, lit - prev_lit);
            }
        }
        prev = v;
        prev_lit = lit;
    }
    return rep;
}

struct SweepCell {
    double k = 0.0;
    int t = 0;
    OutcomeReport outcome;
    double max_final = 0.0;
    std::string error;  // non-empty when the cell failed
};

/// Worker count: HYPERLV_THREADS if set and positive, else hardware concurrency.
inline unsigned sweep_threads() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("HYPERLV_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    return hw;
}

/// Runs every (k, t) cell from z0 with the inputs of `base`.  Cells run in
/// parallel; results are ordered k-major then t, independent of scheduling.
inline std::vector<SweepCell> sweep(const CompetitionModel& base, const std::vector<double>& k_values,
                                    const std::vector<int>& t_values, const Vector& z0,
                                    const IntegratorOptions& opts = {}, const SolverConfig& cfg = {},
                                    double winner_threshold = 1e-3, unsigned threads = 0) {
    std::vector<SweepCell> cells;
    for (double k : k_values) {
        for (int t : t_values) cells.push_back(SweepCell{k, t, {}, 0.0, {}});
    }
    auto run_cell = [&](SweepCell& cell) {
        try {
            const CompetitionModel m(cell.t, cell.k, base.w());
            const auto traj = integrate(m, z0, opts);
            std::vector<EquilibriumRecord> eqs;
            if (m.n() <= 20) eqs = enumerate_equilibria(m, cfg).records;
            cell.outcome = classify_outcome(m, traj, eqs, winner_threshold);
            cell.max_final = traj.final_state.maxCoeff();
        } catch (const std::exception& e) {
            cell.error = e.what();
            cell.outcome = OutcomeReport{};
        }
    };
    if (threads == 0) threads = sweep_threads();
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(cells.size(), 1)));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(cells[i]);
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return cells;
}

}  // namespace hyperlv

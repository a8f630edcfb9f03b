#pragma once

// Equilibria supported on a winner set D.  On D the equilibrium equations
// reduce to  k E x^p + (1 - k) I x^p = b_D  (E the all-ones tensor); with
// tau = k (sum x)^p this is the scalar fixed point tau = H(tau),
//   H(tau) = (a/s) (sum_i (b_i - tau)^{1/p})^p,   a = k, s = 1 - k,
// and x_i = ((b_i - tau)/s)^{1/p}.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "hyperlv/model.hpp"

namespace hyperlv {

enum class Stability { AsymptoticallyStable, Unstable, Marginal };

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::AsymptoticallyStable: return "ASYMPTOTICALLY_STABLE";
        case Stability::Unstable: return "UNSTABLE";
        default: return "MARGINAL";
    }
}

inline Stability stability_from_string(const std::string& s) {
    if (s == "ASYMPTOTICALLY_STABLE") return Stability::AsymptoticallyStable;
    if (s == "UNSTABLE") return Stability::Unstable;
    if (s == "MARGINAL") return Stability::Marginal;
    throw std::invalid_argument("unknown stability verdict '" + s + "'");
}

struct SolverConfig {
    double bisection_tol = 1e-12;
    std::size_t max_d = 0;  // 0: n when k <= 1, 1 when k > 1
    double stability_margin = 1e-9;
    std::size_t max_subsets = std::size_t{1} << 20;
    double residual_tol = 1e-8;

    void validate(std::size_t n) const {
        if (!(bisection_tol > 0.0)) throw std::invalid_argument("solver: bisection_tol must be > 0");
        if (max_d > n) throw std::invalid_argument("solver: max_d must be <= n");
        if (!(stability_margin >= 0.0)) throw std::invalid_argument("solver: stability_margin must be >= 0");
    }
};

/// Equilibria of the k = 1 system with two or more tied winners form a
/// simplex face  sum_{j in D} z_j = c^{1/p}.
struct Continuum {
    double sum = 0.0;
};

struct EquilibriumRecord {
    IndexSet winner_set;
    Vector z_star;
    std::optional<double> tau;
    double residual = 0.0;
    Stability stability = Stability::Marginal;
    double spectrum_summary = 0.0;  // max real part of the Jacobian spectrum
    std::vector<std::complex<double>> eigenvalues;
    std::optional<Continuum> continuum;  // set when z_star represents a continuum
    std::optional<Stability> closed_form_verdict;
    bool closed_form_agrees = true;
    std::string note;
};

struct NoSolution {
    IndexSet winner_set;
    std::string reason;
    bool certified = true;  // false when an iterative search merely failed
};

using WinnerSetResult = std::variant<EquilibriumRecord, NoSolution>;

struct ContinuumReport {
    IndexSet winner_set;
    double sum = 0.0;
    Vector representative;  // equal split over D
};

using UnitKResult = std::variant<EquilibriumRecord, ContinuumReport, NoSolution>;

/// H(tau) for the D-restricted inputs `b`; terms with b_i < tau are clamped
/// to zero, which makes H(b_min) the left limit H(b_min^-).
inline double tau_map(double a, double s, int p, const std::vector<double>& b, double tau) {
    double acc = 0.0;
    for (double bi : b) acc += std::pow(std::max(bi - tau, 0.0), 1.0 / p);
    return a / s * std::pow(acc, p);
}

/// Bisection for tau = H(tau) inside [lo, hi], requiring F(lo) > 0 >= F(hi)
/// with F = H - id.  F is strictly decreasing so the bracket pins the root.
inline double bisect_tau(double a, double s, int p, const std::vector<double>& b, double lo, double hi, double tol) {
    auto f = [&](double tau) { return tau_map(a, s, p, b, tau) - tau; };
    if (!(f(lo) > 0.0) || f(hi) > 0.0) throw std::logic_error("bisect_tau: bracket does not straddle the root");
    for (int it = 0; it < 400 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct TauSolution {
    bool exists = false;
    double tau = 0.0;
    double h_at_bmin = 0.0;  // H(b_min^-)
    double b_min = 0.0;
};

/// Solves a E x^p + s I x^p = b.  Existence iff H(b_min^-) <= b_min.
inline TauSolution solve_tau(double a, double s, int p, const std::vector<double>& b, double tol) {
    if (!(a > 0.0) || !(s > 0.0)) throw std::invalid_argument("solve_tau: requires a > 0 and s > 0");
    if (b.empty()) throw std::invalid_argument("solve_tau: empty input");
    TauSolution out;
    out.b_min = *std::min_element(b.begin(), b.end());
    if (!(out.b_min > 0.0)) throw std::invalid_argument("solve_tau: inputs must be positive");
    out.h_at_bmin = tau_map(a, s, p, b, out.b_min);
    if (out.h_at_bmin > out.b_min) return out;
    out.exists = true;
    out.tau = bisect_tau(a, s, p, b, 0.0, out.b_min, tol);
    return out;
}

namespace detail {

inline std::vector<double> restrict_b(const CompetitionModel& m, const IndexSet& d) {
    std::vector<double> b;
    b.reserve(d.size());
    for (auto i : d) b.push_back(m.b()[static_cast<Eigen::Index>(i)]);
    return b;
}

inline void check_winner_set(const CompetitionModel& m, const IndexSet& d) {
    if (d.empty()) throw std::invalid_argument("winner set must be nonempty");
    for (std::size_t q = 0; q < d.size(); ++q) {
        if (d[q] >= m.n()) throw std::out_of_range("winner set index out of range");
        if (q > 0 && d[q] <= d[q - 1]) throw std::invalid_argument("winner set must be sorted and duplicate free");
    }
}

inline EquilibriumRecord make_record(const CompetitionModel& m, const IndexSet& d, Vector z) {
    EquilibriumRecord rec;
    rec.winner_set = d;
    rec.z_star = std::move(z);
    rec.residual = vector_field(m, rec.z_star).cwiseAbs().maxCoeff();
    return rec;
}

// Damped Newton on g_i(x) = b_i - k (sum x)^p + (k - 1) x_i^p, i in D.
inline std::optional<Vector> newton_restricted(const CompetitionModel& m, const std::vector<double>& b, double tol) {
    const auto d = static_cast<Eigen::Index>(b.size());
    const int p = m.p();
    const double k = m.k();
    double mean_b = 0.0;
    for (double v : b) mean_b += v;
    mean_b /= static_cast<double>(b.size());
    const double denom = k * std::pow(static_cast<double>(d), p) - k + 1.0;
    Vector x = Vector::Constant(d, std::pow(mean_b / denom, 1.0 / p));
    auto residual = [&](const Vector& y) {
        Vector g(d);
        const double s = std::pow(y.sum(), p);
        for (Eigen::Index i = 0; i < d; ++i) g[i] = b[static_cast<std::size_t>(i)] - k * s + (k - 1.0) * std::pow(y[i], p);
        return g;
    };
    Vector g = residual(x);
    for (int it = 0; it < 200; ++it) {
        if (g.cwiseAbs().maxCoeff() < tol) return x;
        Matrix jac(d, d);
        const double ds = p * std::pow(x.sum(), p - 1);
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index c = 0; c < d; ++c) jac(i, c) = -k * ds;
            jac(i, i) += (k - 1.0) * p * std::pow(x[i], p - 1);
        }
        const Vector step = jac.fullPivLu().solve(-g);
        if (!step.allFinite()) return std::nullopt;
        double lambda = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls, lambda *= 0.5) {
            const Vector trial = x + lambda * step;
            if ((trial.array() <= 0.0).any()) continue;
            const Vector gt = residual(trial);
            if (gt.norm() < (1.0 - 1e-4 * lambda) * g.norm()) {
                x = trial;
                g = gt;
                accepted = true;
                break;
            }
        }
        if (!accepted) return std::nullopt;
    }
    return g.cwiseAbs().maxCoeff() < tol ? std::optional<Vector>(x) : std::nullopt;
}

}  // namespace detail

/// Equilibrium supported exactly on D, for k != 1.
inline WinnerSetResult solve_winner_set(const CompetitionModel& m, const IndexSet& d, const SolverConfig& cfg = {}) {
    detail::check_winner_set(m, d);
    if (is_unit_k(m.k())) throw std::domain_error("solve_winner_set: k == 1 is handled by solve_k1");
    const auto b = detail::restrict_b(m, d);
    const int p = m.p();
    const double k = m.k();
    Vector z = Vector::Zero(static_cast<Eigen::Index>(m.n()));

    if (d.size() == 1) {
        z[static_cast<Eigen::Index>(d[0])] = std::pow(b[0], 1.0 / p);
        auto rec = detail::make_record(m, d, std::move(z));
        if (k < 1.0) rec.tau = k * b[0];
        return rec;
    }

    if (k > 1.0) {
        const auto x = detail::newton_restricted(m, b, 1e-13);
        if (!x) return NoSolution{d, "damped Newton found no positive solution (k > 1, not a certificate)", false};
        for (std::size_t q = 0; q < d.size(); ++q) z[static_cast<Eigen::Index>(d[q])] = (*x)[static_cast<Eigen::Index>(q)];
        return detail::make_record(m, d, std::move(z));
    }

    const double a = k;
    const double s = 1.0 - k;
    const auto sol = solve_tau(a, s, p, b, cfg.bisection_tol);
    if (!sol.exists) {
        return NoSolution{d, "H(b_min^-) = " + std::to_string(sol.h_at_bmin) + " > b_min = " + std::to_string(sol.b_min),
                          true};
    }
    for (std::size_t q = 0; q < d.size(); ++q) {
        const double xi = std::pow(std::max(b[q] - sol.tau, 0.0) / s, 1.0 / p);
        if (!(xi > 0.0)) return NoSolution{d, "fixed point sits on the boundary tau = b_min", true};
        z[static_cast<Eigen::Index>(d[q])] = xi;
    }
    auto rec = detail::make_record(m, d, std::move(z));
    rec.tau = sol.tau;
    return rec;
}

/// Equilibria of the k = 1 system: a single winner is always an isolated
/// point; two or more winners need equal inputs and then form a continuum.
inline UnitKResult solve_k1(const CompetitionModel& m, const IndexSet& d) {
    detail::check_winner_set(m, d);
    if (!is_unit_k(m.k())) throw std::domain_error("solve_k1: requires k == 1");
    const auto b = detail::restrict_b(m, d);
    const int p = m.p();
    if (d.size() == 1) {
        Vector z = Vector::Zero(static_cast<Eigen::Index>(m.n()));
        z[static_cast<Eigen::Index>(d[0])] = std::pow(b[0], 1.0 / p);
        return detail::make_record(m, d, std::move(z));
    }
    const auto [lo, hi] = std::minmax_element(b.begin(), b.end());
    if (*hi - *lo > 1e-12 * std::max(1.0, std::abs(*hi))) {
        return NoSolution{d, "k = 1 with unequal inputs on the winner set", true};
    }
    ContinuumReport rep;
    rep.winner_set = d;
    rep.sum = std::pow(b[0], 1.0 / p);
    rep.representative = Vector::Zero(static_cast<Eigen::Index>(m.n()));
    for (auto i : d) rep.representative[static_cast<Eigen::Index>(i)] = rep.sum / static_cast<double>(d.size());
    return rep;
}

/// Stability verdict predicted by the sign analysis of the block Jacobian
/// (coexistence stable iff k < 1; multi-winner unstable for k > 1; loser
/// diagonals 1 + w_i - k r^p must be negative).
inline Stability closed_form_stability(const CompetitionModel& m, const IndexSet& d, const Vector& z_star,
                                       double margin) {
    if (d.empty()) return Stability::Unstable;  // J(0) = diag(b) > 0
    const double k = m.k();
    const bool unit = is_unit_k(k);
    Stability winner = Stability::AsymptoticallyStable;
    if (d.size() >= 2) {
        if (unit) {
            winner = Stability::Marginal;
        } else if (k > 1.0) {
            winner = Stability::Unstable;
        }
    }
    const double load = k * std::pow(z_star.sum(), m.p());
    double worst = -std::numeric_limits<double>::infinity();
    std::vector<char> in_d(m.n(), 0);
    for (auto i : d) in_d[i] = 1;
    for (std::size_t i = 0; i < m.n(); ++i) {
        if (!in_d[i]) worst = std::max(worst, m.b()[static_cast<Eigen::Index>(i)] - load);
    }
    if (winner == Stability::Unstable || worst > margin) return Stability::Unstable;
    if (winner == Stability::Marginal || worst >= -margin) return Stability::Marginal;
    return Stability::AsymptoticallyStable;
}

/// Full Jacobian spectrum at z*, verdict by the sign of the largest real part
/// with a dead band of +/- stability_margin, cross-checked against
/// closed_form_stability.
inline EquilibriumRecord classify_stability(const CompetitionModel& m, EquilibriumRecord rec, const SolverConfig& cfg = {}) {
    if (!(rec.residual < cfg.residual_tol)) {
        throw std::invalid_argument("classify_stability: residual " + std::to_string(rec.residual) +
                                    " exceeds tolerance");
    }
    rec.eigenvalues = eigenvalues(jacobian(m, rec.z_star));
    double max_re = -std::numeric_limits<double>::infinity();
    for (const auto& ev : rec.eigenvalues) max_re = std::max(max_re, ev.real());
    rec.spectrum_summary = max_re;
    if (max_re < -cfg.stability_margin) {
        rec.stability = Stability::AsymptoticallyStable;
    } else if (max_re > cfg.stability_margin) {
        rec.stability = Stability::Unstable;
    } else {
        rec.stability = Stability::Marginal;
    }
    rec.closed_form_verdict = closed_form_stability(m, rec.winner_set, rec.z_star, cfg.stability_margin);
    rec.closed_form_agrees = *rec.closed_form_verdict == rec.stability;
    if (is_unit_k(m.k()) && rec.winner_set.size() == 1 && rec.stability == Stability::Marginal) {
        rec.note = "tied maximal input: loser diagonal vanishes; global convergence follows from the ratio law";
    } else if (rec.continuum) {
        rec.note = "representative point of a continuum of equilibria";
    }
    return rec;
}

struct Enumeration {
    std::vector<EquilibriumRecord> records;  // sorted by (|D|, D lexicographic)
    std::vector<NoSolution> rejected;
    std::size_t subsets_visited = 0;
    bool truncated = false;
};

namespace detail {

// Next d-combination of {0..n-1} in lexicographic order.
inline bool next_combination(IndexSet& c, std::size_t n) {
    const std::size_t d = c.size();
    for (std::size_t q = d; q-- > 0;) {
        if (c[q] < n - d + q) {
            ++c[q];
            for (std::size_t r = q + 1; r < d; ++r) c[r] = c[r - 1] + 1;
            return true;
        }
    }
    return false;
}

}  // namespace detail

inline std::size_t effective_max_d(const CompetitionModel& m, const SolverConfig& cfg) {
    if (cfg.max_d != 0) return cfg.max_d;
    return (m.k() > 1.0 && !is_unit_k(m.k())) ? 1 : m.n();
}

/// Extinction point plus every equilibrium supported on a winner set of size
/// <= max_d, each stability classified.
inline Enumeration enumerate_equilibria(const CompetitionModel& m, const SolverConfig& cfg = {}) {
    cfg.validate(m.n());
    Enumeration out;
    const std::size_t n = m.n();
    {
        auto zero = detail::make_record(m, {}, Vector::Zero(static_cast<Eigen::Index>(n)));
        out.records.push_back(classify_stability(m, std::move(zero), cfg));
    }
    const std::size_t max_d = effective_max_d(m, cfg);
    const bool unit = is_unit_k(m.k());
    for (std::size_t d = 1; d <= max_d; ++d) {
        IndexSet set(d);
        for (std::size_t q = 0; q < d; ++q) set[q] = q;
        do {
            if (out.subsets_visited >= cfg.max_subsets) {
                out.truncated = true;
                return out;
            }
            ++out.subsets_visited;
            std::optional<EquilibriumRecord> rec;
            if (unit) {
                auto res = solve_k1(m, set);
                if (auto* r = std::get_if<EquilibriumRecord>(&res)) {
                    rec = std::move(*r);
                } else if (auto* c = std::get_if<ContinuumReport>(&res)) {
                    rec = detail::make_record(m, set, c->representative);
                    rec->continuum = Continuum{c->sum};
                } else {
                    out.rejected.push_back(std::get<NoSolution>(std::move(res)));
                }
            } else {
                auto res = solve_winner_set(m, set, cfg);
                if (auto* r = std::get_if<EquilibriumRecord>(&res)) {
                    rec = std::move(*r);
                } else {
                    out.rejected.push_back(std::get<NoSolution>(std::move(res)));
                }
            }
            if (rec) {
                if (!(rec->residual < cfg.residual_tol)) {
                    out.rejected.push_back(NoSolution{set, "solution residual above tolerance", false});
                } else {
                    out.records.push_back(classify_stability(m, std::move(*rec), cfg));
                }
            }
        } while (detail::next_combination(set, n));
    }
    return out;
}

struct WinnerCountBound {
    bool applicable = false;        // k < 1
    std::optional<double> bound;    // absent when b_max == b_min (unbounded)
    bool ok = false;                // d below the bound
};

struct ExistenceCertificates {
    std::size_t d = 0;
    bool diag_dominant = false;  // strict diagonal dominance: 1 > k (d^p - 1)
    WinnerCountBound winner_bound;
    std::optional<std::pair<double, double>> tau_bounds;  // k < 1 only
};

inline ExistenceCertificates existence_certificates(const CompetitionModel& m, std::size_t d) {
    if (d < 1 || d > m.n()) throw std::invalid_argument("existence_certificates: need 1 <= d <= n");
    ExistenceCertificates c;
    c.d = d;
    const int p = m.p();
    const double k = m.k();
    const double dp = std::pow(static_cast<double>(d), p);
    c.diag_dominant = 1.0 > k * (dp - 1.0);
    const double b_min = m.b().minCoeff();
    const double b_max = m.b().maxCoeff();
    if (k < 1.0 && !is_unit_k(k)) {
        c.winner_bound.applicable = true;
        if (b_max > b_min) {
            c.winner_bound.bound = std::pow((1.0 - k) * b_min / (k * (b_max - b_min)), 1.0 / p);
            c.winner_bound.ok = static_cast<double>(d) < *c.winner_bound.bound;
        } else {
            c.winner_bound.ok = true;
        }
        const double a = k;
        const double s = 1.0 - k;
        c.tau_bounds = std::pair{a * dp * b_min / (s + a * dp), a * dp * b_max / (s + a * dp)};
    }
    return c;
}

}  // namespace hyperlv

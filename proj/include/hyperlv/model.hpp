#pragma once

// Lotka-Volterra competition on a uniform hypergraph of order t:
//   dz_i/dt = z_i (b_i - k S(z) + (k - 1) z_i^p),  S(z) = (sum_l z_l)^p,
// with p = t - 1 and b_i = 1 + w_i.  Equivalently dz/dt = diag(z)(b + A z^p)
// with A the two-value tensor (diag -1, offdiag -k).

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hyperlv/tensor.hpp"

namespace hyperlv {

/// k within this distance of 1 is treated as exactly 1.
inline constexpr double kUnitKTolerance = 1e-12;

inline bool is_unit_k(double k) { return std::abs(k - 1.0) <= kUnitKTolerance; }

/// Sorted 0-based neuron indices.  Files and reports use 1-based indices.
using IndexSet = std::vector<std::size_t>;

class CompetitionModel {
public:
    CompetitionModel(int order, double k, Vector w) : order_(order), k_(k), w_(std::move(w)) {
        if (order_ < 2) throw std::invalid_argument("model: interaction order t must be >= 2");
        if (w_.size() < 1) throw std::invalid_argument("model: need at least one neuron");
        if (!(k_ > 0.0) || !std::isfinite(k_)) throw std::invalid_argument("model: k must be a positive finite number");
        for (Eigen::Index i = 0; i < w_.size(); ++i) {
            if (!(w_[i] >= 0.0) || !std::isfinite(w_[i])) {
                throw std::invalid_argument("model: w[" + std::to_string(i + 1) + "] must be finite and >= 0");
            }
        }
        b_ = w_.array() + 1.0;
    }

    std::size_t n() const noexcept { return static_cast<std::size_t>(w_.size()); }
    int t() const noexcept { return order_; }
    int p() const noexcept { return order_ - 1; }
    double k() const noexcept { return k_; }
    const Vector& w() const noexcept { return w_; }
    const Vector& b() const noexcept { return b_; }

    /// The interaction tensor A: TwoValue(diag -1, offdiag -k) of order t.
    SymmetricUniformTensor tensor() const { return SymmetricUniformTensor::two_value(order_, n(), -1.0, -k_); }

    CompetitionModel with_k(double k) const { return {order_, k, w_}; }
    CompetitionModel with_order(int t) const { return {t, k_, w_}; }

private:
    int order_;
    double k_;
    Vector w_;
    Vector b_;
};

namespace detail {

inline void check_state(const CompetitionModel& m, const Vector& z, const char* who) {
    if (static_cast<std::size_t>(z.size()) != m.n()) {
        throw std::invalid_argument(std::string(who) + ": state has " + std::to_string(z.size()) +
                                    " components, model has " + std::to_string(m.n()));
    }
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (!(z[i] >= 0.0)) {
            throw std::invalid_argument(std::string(who) + ": negative or NaN state component z[" +
                                        std::to_string(i + 1) + "]");
        }
    }
}

}  // namespace detail

/// Closed-form vector field, O(n).
inline Vector vector_field(const CompetitionModel& m, const Vector& z) {
    detail::check_state(m, z, "vector_field");
    const int p = m.p();
    const double k = m.k();
    const double s = std::pow(z.sum(), p);
    Vector out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        out[i] = z[i] * (m.b()[i] - k * s + (k - 1.0) * std::pow(z[i], p));
    }
    return out;
}

/// diag(z)(b + A z^p) through tensor contraction; `a` may be the dense
/// expansion of m.tensor().
inline Vector vector_field_tensor(const CompetitionModel& m, const SymmetricUniformTensor& a, const Vector& z) {
    detail::check_state(m, z, "vector_field_tensor");
    if (a.order() != m.t() || a.dim() != m.n()) throw std::invalid_argument("vector_field_tensor: tensor shape mismatch");
    return z.cwiseProduct(m.b() + contract(a, z));
}

inline Vector vector_field_tensor(const CompetitionModel& m, const Vector& z) {
    return vector_field_tensor(m, m.tensor(), z);
}

/// Analytic Jacobian of vector_field.
inline Matrix jacobian(const CompetitionModel& m, const Vector& z) {
    detail::check_state(m, z, "jacobian");
    const int p = m.p();
    const double k = m.k();
    const double sum = z.sum();
    const double s = std::pow(sum, p);
    const double ds = p * std::pow(sum, p - 1);  // dS/dz_j
    const Eigen::Index n = z.size();
    Matrix j(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double cross = -k * ds * z[i];
        for (Eigen::Index c = 0; c < n; ++c) j(i, c) = cross;
        j(i, i) = (m.b()[i] - k * s + (k - 1.0) * std::pow(z[i], p)) + cross +
                  z[i] * p * (k - 1.0) * std::pow(z[i], p - 1);
    }
    return j;
}

inline std::vector<std::complex<double>> eigenvalues(const Matrix& a) {
    std::vector<std::complex<double>> out;
    if (a.rows() == 0) return out;
    Eigen::EigenSolver<Matrix> es(a, false);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigenvalues: dense eigensolver failed to converge");
    const auto& ev = es.eigenvalues();
    out.assign(ev.data(), ev.data() + ev.size());
    return out;
}

struct BlockSpectrum {
    std::vector<std::complex<double>> winner_eigs;
    std::vector<double> loser_diags;  // in increasing neuron order of the complement of D
};

/// Eigenvalues of the d x d winner block of the Jacobian at an equilibrium
/// supported on `winners`, plus the loser diagonal 1 + w_i - k r^p.
inline BlockSpectrum winner_block_spectrum(const CompetitionModel& m, const IndexSet& winners, const Vector& z_star,
                                           double residual_tol = 1e-8) {
    const double resid = vector_field(m, z_star).cwiseAbs().maxCoeff();
    if (!(resid < residual_tol)) {
        throw std::invalid_argument("winner_block_spectrum: state is not an equilibrium (residual " +
                                    std::to_string(resid) + ")");
    }
    std::vector<char> in_d(m.n(), 0);
    for (auto i : winners) in_d.at(i) = 1;
    for (std::size_t i = 0; i < m.n(); ++i) {
        if (static_cast<bool>(in_d[i]) != (z_star[static_cast<Eigen::Index>(i)] > 0.0)) {
            throw std::invalid_argument("winner_block_spectrum: support of z* differs from the winner set");
        }
    }
    const Matrix j = jacobian(m, z_star);
    const auto d = static_cast<Eigen::Index>(winners.size());
    Matrix block(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) {
            block(r, c) = j(static_cast<Eigen::Index>(winners[r]), static_cast<Eigen::Index>(winners[c]));
        }
    }
    BlockSpectrum out;
    out.winner_eigs = eigenvalues(block);
    const double r = z_star.sum();
    for (std::size_t i = 0; i < m.n(); ++i) {
        if (!in_d[i]) out.loser_diags.push_back(m.b()[static_cast<Eigen::Index>(i)] - m.k() * std::pow(r, m.p()));
    }
    return out;
}

}  // namespace hyperlv

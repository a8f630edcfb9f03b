#pragma once

// Reference computations written directly from the model definitions, without
// touching the library: brute-force tensor contraction, the dynamics as a
// plain sum over index tuples, central differences, a pairwise Lotka-Volterra
// RK4 integrator and a grid scan of the tau fixed-point residual.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using EntryFn = std::function<double(const std::vector<std::size_t>&)>;

/// (A z^{m-1})_i = sum over i_2..i_m of a(i, i_2, ..., i_m) z_{i_2} ... z_{i_m}.
inline Vec contract(const EntryFn& a, int order, const Vec& z) {
    const std::size_t n = z.size();
    Vec out(n, 0.0);
    std::vector<std::size_t> idx(static_cast<std::size_t>(order), 0);
    for (std::size_t i = 0; i < n; ++i) {
        idx.assign(static_cast<std::size_t>(order), 0);
        idx[0] = i;
        while (true) {
            double prod = a(idx);
            for (int q = 1; q < order; ++q) prod *= z[idx[static_cast<std::size_t>(q)]];
            out[i] += prod;
            int q = order - 1;
            while (q >= 1 && ++idx[static_cast<std::size_t>(q)] == n) idx[static_cast<std::size_t>(q--)] = 0;
            if (q < 1) break;
        }
    }
    return out;
}

/// Entry function of a two-value symmetric tensor.
inline EntryFn two_value(double diag, double offdiag) {
    return [diag, offdiag](const std::vector<std::size_t>& idx) {
        for (auto v : idx) {
            if (v != idx[0]) return offdiag;
        }
        return diag;
    };
}

/// dz_i/dt = z_i (1 + w_i + (A z^{t-1})_i) with A = two-value(-1, -k), by brute force.
inline Vec field_bruteforce(int t, double k, const Vec& w, const Vec& z) {
    const Vec az = contract(two_value(-1.0, -k), t, z);
    Vec out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] * (1.0 + w[i] + az[i]);
    return out;
}

/// Same field, written out directly: z_i (b_i - k (sum z)^p + (k-1) z_i^p).
inline Vec field_direct(int t, double k, const Vec& w, const Vec& z) {
    double sum = 0.0;
    for (double v : z) sum += v;
    const int p = t - 1;
    double sp = 1.0, zp;
    for (int q = 0; q < p; ++q) sp *= sum;
    Vec out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        zp = 1.0;
        for (int q = 0; q < p; ++q) zp *= z[i];
        out[i] = z[i] * (1.0 + w[i] - k * sp + (k - 1.0) * zp);
    }
    return out;
}

/// Central-difference Jacobian of field_direct, column c perturbed by h_c = step * max(1, |z_c|).
inline std::vector<Vec> jacobian_fd(int t, double k, const Vec& w, const Vec& z, double step = 1e-6) {
    const std::size_t n = z.size();
    std::vector<Vec> j(n, Vec(n, 0.0));
    for (std::size_t c = 0; c < n; ++c) {
        const double h = step * std::max(1.0, std::abs(z[c]));
        Vec zp = z, zm = z;
        zp[c] += h;
        zm[c] -= h;
        const Vec fp = field_direct(t, k, w, zp);
        const Vec fm = field_direct(t, k, w, zm);
        for (std::size_t r = 0; r < n; ++r) j[r][c] = (fp[r] - fm[r]) / (2.0 * h);
    }
    return j;
}

/// Classical pairwise Lotka-Volterra competition dz_i/dt = z_i (b_i - sum_j c_ij z_j)
/// with c_ii = 1, c_ij = k; integrated by RK4 for a fixed horizon.
inline Vec pairwise_lv(double k, const Vec& w, Vec z, double horizon, double h) {
    const std::size_t n = z.size();
    auto f = [&](const Vec& x) {
        Vec out(n);
        double sum = 0.0;
        for (double v : x) sum += v;
        for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * (1.0 + w[i] - k * (sum - x[i]) - x[i]);
        return out;
    };
    auto axpy = [&](const Vec& x, double a, const Vec& y) {
        Vec out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + a * y[i];
        return out;
    };
    const auto steps = static_cast<long>(std::llround(horizon / h));
    for (long s = 0; s < steps; ++s) {
        const Vec k1 = f(z);
        const Vec k2 = f(axpy(z, 0.5 * h, k1));
        const Vec k3 = f(axpy(z, 0.5 * h, k2));
        const Vec k4 = f(axpy(z, h, k3));
        for (std::size_t i = 0; i < n; ++i) z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return z;
}

/// F(tau) = (a/s) (sum_i (b_i - tau)^{1/p})^p - tau on [0, b_min].
inline double tau_residual(double a, double s, int p, const Vec& b, double tau) {
    double acc = 0.0;
    for (double bi : b) acc += std::pow(std::max(bi - tau, 0.0), 1.0 / p);
    return a / s * std::pow(acc, p) - tau;
}

struct GridScan {
    bool exists = false;       // F changes sign (or vanishes) on (0, b_min]
    int sign_changes = 0;
    double root_lo = 0.0, root_hi = 0.0;  // grid cell containing the first sign change
};

inline GridScan scan_tau(double a, double s, int p, const Vec& b, int points) {
    double b_min = b[0];
    for (double v : b) b_min = std::min(b_min, v);
    GridScan g;
    double prev_tau = 0.0;
    double prev = tau_residual(a, s, p, b, 0.0);
    for (int q = 1; q <= points; ++q) {
        const double tau = b_min * q / points;
        const double f = tau_residual(a, s, p, b, tau);
        if ((prev > 0.0) != (f > 0.0)) {
            if (g.sign_changes == 0) {
                g.root_lo = prev_tau;
                g.root_hi = tau;
            }
            ++g.sign_changes;
        }
        prev = f;
        prev_tau = tau;
    }
    g.exists = g.sign_changes > 0;
    return g;
}

/// max_ij |a_ij - b_ij| / max_ij |a_ij|.
inline double rel_matrix_error(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t r = 0; r < a.size(); ++r) {
        for (std::size_t c = 0; c < a[r].size(); ++c) {
            num = std::max(num, std::abs(a[r][c] - b[r][c]));
            den = std::max(den, std::abs(a[r][c]));
        }
    }
    return num / den;
}

}  // namespace oracle

#pragma once

// Supersymmetric uniform tensors: storage, contraction A x^{m-1}, structural
// predicates and the Perron H-eigenvalue of nonnegative tensors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace hyperlv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Largest number of entries a dense tensor may hold.
inline constexpr std::size_t kMaxDenseEntries = 10'000'000;

namespace detail {

inline std::size_t checked_pow(std::size_t base, int exp) {
    std::size_t r = 1;
    for (int e = 0; e < exp; ++e) {
        if (base != 0 && r > std::numeric_limits<std::size_t>::max() / base) {
            return std::numeric_limits<std::size_t>::max();
        }
        r *= base;
    }
    return r;
}

// Advances a multi-index in lexicographic order; false once it wraps.
inline bool next_index(std::vector<std::size_t>& idx, std::size_t n) {
    for (std::size_t p = idx.size(); p-- > 0;) {
        if (++idx[p] < n) return true;
        idx[p] = 0;
    }
    return false;
}

inline bool all_equal(std::span<const std::size_t> idx) {
    return std::all_of(idx.begin(), idx.end(), [&](std::size_t v) { return v == idx.front(); });
}

}  // namespace detail

/// Order-m, dimension-n tensor whose entries are invariant under index
/// permutation.  Either a full dense array or the two-value form where every
/// entry off the super-diagonal shares one value.
class SymmetricUniformTensor {
public:
    struct TwoValue {
        double diag = 0.0;
        double offdiag = 0.0;
    };
    struct Dense {
        std::vector<double> entries;  // row-major over (i_1, ..., i_m)
    };

    static SymmetricUniformTensor two_value(int order, std::size_t dim, double diag, double offdiag) {
        validate_shape(order, dim);
        return SymmetricUniformTensor(order, dim, TwoValue{diag, offdiag});
    }

    static SymmetricUniformTensor identity(int order, std::size_t dim) { return two_value(order, dim, 1.0, 0.0); }
    static SymmetricUniformTensor all_ones(int order, std::size_t dim) { return two_value(order, dim, 1.0, 1.0); }

    /// Dense tensor filled by evaluating `gen` on the sorted index multiset,
    /// so the result is symmetric whatever `gen` does.
    static SymmetricUniformTensor from_generator(int order, std::size_t dim,
                                                 const std::function<double(std::span<const std::size_t>)>& gen) {
        validate_shape(order, dim);
        const std::size_t total = dense_size_or_throw(order, dim);
        Dense d;
        d.entries.resize(total);
        std::vector<std::size_t> idx(static_cast<std::size_t>(order), 0);
        std::vector<std::size_t> sorted(idx.size());
        std::size_t flat = 0;
        do {
            std::copy(idx.begin(), idx.end(), sorted.begin());
            std::sort(sorted.begin(), sorted.end());
            d.entries[flat++] = gen(sorted);
        } while (detail::next_index(idx, dim));
        return SymmetricUniformTensor(order, dim, std::move(d));
    }

    /// Dense tensor from raw row-major entries; rejects asymmetric input.
    static SymmetricUniformTensor from_entries(int order, std::size_t dim, std::vector<double> entries,
                                               double sym_tol = 1e-12) {
        validate_shape(order, dim);
        const std::size_t total = dense_size_or_throw(order, dim);
        if (entries.size() != total) {
            throw std::invalid_argument("tensor: expected " + std::to_string(total) + " entries, got " +
                                        std::to_string(entries.size()));
        }
        SymmetricUniformTensor t(order, dim, Dense{std::move(entries)});
        std::vector<std::size_t> idx(static_cast<std::size_t>(order), 0);
        std::vector<std::size_t> sorted(idx.size());
        do {
            std::copy(idx.begin(), idx.end(), sorted.begin());
            std::sort(sorted.begin(), sorted.end());
            if (std::abs(t.entry(idx) - t.entry(sorted)) > sym_tol) {
                throw std::invalid_argument("tensor: entries are not permutation invariant");
            }
        } while (detail::next_index(idx, dim));
        return t;
    }

    int order() const noexcept { return order_; }
    std::size_t dim() const noexcept { return dim_; }
    bool is_two_value() const noexcept { return std::holds_alternative<TwoValue>(storage_); }
    const TwoValue* two_value_storage() const noexcept { return std::get_if<TwoValue>(&storage_); }
    const Dense* dense_storage() const noexcept { return std::get_if<Dense>(&storage_); }

    double entry(std::span<const std::size_t> idx) const {
        if (idx.size() != static_cast<std::size_t>(order_)) throw std::invalid_argument("tensor: index arity mismatch");
        for (auto v : idx) {
            if (v >= dim_) throw std::out_of_range("tensor: index out of range");
        }
        if (const auto* tv = two_value_storage()) return detail::all_equal(idx) ? tv->diag : tv->offdiag;
        return std::get<Dense>(storage_).entries[flat_index(idx)];
    }

    /// Entry A_{i i ... i}.
    double diagonal(std::size_t i) const {
        std::vector<std::size_t> idx(static_cast<std::size_t>(order_), i);
        return entry(idx);
    }

    SymmetricUniformTensor expand() const {
        if (!is_two_value()) return *this;
        const auto tv = *two_value_storage();
        return from_generator(order_, dim_, [tv](std::span<const std::size_t> idx) {
            return detail::all_equal(idx) ? tv.diag : tv.offdiag;
        });
    }

    /// Applies `fn` to every entry (fn receives the value and whether it is diagonal).
    template <class Fn>
    SymmetricUniformTensor map_entries(Fn fn) const {
        if (const auto* tv = two_value_storage()) {
            return SymmetricUniformTensor(order_, dim_, TwoValue{fn(tv->diag, true), fn(tv->offdiag, false)});
        }
        Dense out = std::get<Dense>(storage_);
        std::vector<std::size_t> idx(static_cast<std::size_t>(order_), 0);
        std::size_t flat = 0;
        do {
            out.entries[flat] = fn(out.entries[flat], detail::all_equal(idx));
            ++flat;
        } while (detail::next_index(idx, dim_));
        return SymmetricUniformTensor(order_, dim_, std::move(out));
    }

    /// Visits every (index, value) pair in lexicographic order.
    template <class Fn>
    void for_each_entry(Fn fn) const {
        std::vector<std::size_t> idx(static_cast<std::size_t>(order_), 0);
        do {
            fn(std::span<const std::size_t>(idx), entry(idx));
        } while (detail::next_index(idx, dim_));
    }

private:
    SymmetricUniformTensor(int order, std::size_t dim, std::variant<TwoValue, Dense> storage)
        : order_(order), dim_(dim), storage_(std::move(storage)) {}

    static void validate_shape(int order, std::size_t dim) {
        if (order < 2) throw std::invalid_argument("tensor: order must be >= 2");
        if (dim < 1) throw std::invalid_argument("tensor: dimension must be >= 1");
    }

    static std::size_t dense_size_or_throw(int order, std::size_t dim) {
        const std::size_t total = detail::checked_pow(dim, order);
        if (total > kMaxDenseEntries) {
            throw std::length_error("tensor: dense storage would need more than 1e7 entries; use two-value storage");
        }
        return total;
    }

    std::size_t flat_index(std::span<const std::size_t> idx) const {
        std::size_t f = 0;
        for (auto v : idx) f = f * dim_ + v;
        return f;
    }

    int order_;
    std::size_t dim_;
    std::variant<TwoValue, Dense> storage_;
};

/// (A z^{m-1})_i = sum over i_2..i_m of A_{i i_2 .. i_m} z_{i_2} ... z_{i_m}.
inline Vector contract(const SymmetricUniformTensor& a, const Vector& z) {
    const std::size_t n = a.dim();
    if (static_cast<std::size_t>(z.size()) != n) {
        throw std::invalid_argument("contract: tensor dimension " + std::to_string(n) + " != vector length " +
                                    std::to_string(z.size()));
    }
    const int p = a.order() - 1;
    if (const auto* tv = a.two_value_storage()) {
        const double total = std::pow(z.sum(), p);
        Vector out(n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = tv->offdiag * total + (tv->diag - tv->offdiag) * std::pow(z[i], p);
        }
        return out;
    }
    const auto& e = a.dense_storage()->entries;
    const std::size_t block = e.size() / n;
    // Products z_{i_2}...z_{i_m} for each trailing multi-index, shared by all rows.
    std::vector<double> prod(block);
    std::vector<std::size_t> idx(static_cast<std::size_t>(p), 0);
    std::size_t f = 0;
    do {
        double v = 1.0;
        for (auto j : idx) v *= z[j];
        prod[f++] = v;
    } while (detail::next_index(idx, n));
    Vector out = Vector::Zero(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* row = e.data() + i * block;
        for (std::size_t q = 0; q < block; ++q) acc += row[q] * prod[q];
        out[i] = acc;
    }
    return out;
}

/// Estimate of an H-eigenpair A x^{m-1} = lambda x^{[m-1]}.
struct EigenEstimate {
    double value = 0.0;
    Vector vector;
    double residual = 0.0;  // ||A x^{m-1} - value * x^{[m-1]}||_inf
    int iterations = 0;
    double lower = 0.0;  // Collatz-Wielandt bracket on the spectral radius
    double upper = 0.0;
    bool converged = false;
};

inline double eigen_residual(const SymmetricUniformTensor& a, double value, const Vector& x) {
    const Vector ax = contract(a, x);
    const int p = a.order() - 1;
    double r = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) r = std::max(r, std::abs(ax[i] - value * std::pow(x[i], p)));
    return r;
}

inline bool is_nonnegative(const SymmetricUniformTensor& a) {
    if (const auto* tv = a.two_value_storage()) return tv->diag >= 0.0 && (a.dim() == 1 || tv->offdiag >= 0.0);
    const auto& e = a.dense_storage()->entries;
    return std::all_of(e.begin(), e.end(), [](double v) { return v >= 0.0; });
}

/// Perron root of a nonnegative tensor by the shifted NQZ power iteration on
/// A + I, which is primitive whenever A is irreducible.  The min/max ratio
/// bracket is valid for any nonnegative tensor, so even a non-converged run
/// returns certified bounds.
inline EigenEstimate spectral_radius(const SymmetricUniformTensor& a, double tol = 1e-10, int max_iter = 10'000) {
    if (!is_nonnegative(a)) throw std::invalid_argument("spectral_radius: tensor has negative entries");
    const std::size_t n = a.dim();
    const int p = a.order() - 1;
    EigenEstimate est;
    Vector x = Vector::Ones(static_cast<Eigen::Index>(n));
    for (int it = 0; it <= max_iter; ++it) {
        const Vector ax = contract(a, x);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        Vector y(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const double xp = std::pow(x[i], p);
            const double shifted = ax[i] + xp;
            lo = std::min(lo, shifted / xp);
            hi = std::max(hi, shifted / xp);
            y[i] = std::pow(shifted, 1.0 / p);
        }
        est.lower = std::max(0.0, lo - 1.0);
        est.upper = hi - 1.0;
        est.iterations = it;
        est.vector = x;
        if (est.upper - est.lower < tol) {
            est.converged = true;
            break;
        }
        if (it == max_iter) break;
        x = y / y.maxCoeff();
    }
    est.value = 0.5 * (est.lower + est.upper);
    est.residual = eigen_residual(a, est.value, est.vector);
    return est;
}

/// Strong connectivity of the digraph with an arc i -> j whenever some
/// A_{i i_2 .. i_m} with j among i_2..i_m is nonzero.
inline bool is_irreducible(const SymmetricUniformTensor& a) {
    const std::size_t n = a.dim();
    if (n == 1) return true;
    if (const auto* tv = a.two_value_storage()) return tv->offdiag != 0.0;
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    a.for_each_entry([&](std::span<const std::size_t> idx, double v) {
        if (v == 0.0) return;
        for (std::size_t q = 1; q < idx.size(); ++q) {
            if (idx[q] != idx[0]) adj[idx[0]][idx[q]] = 1;
        }
    });
    auto reaches_all = [&](bool reverse) {
        std::vector<char> seen(n, 0);
        std::vector<std::size_t> stack{0};
        seen[0] = 1;
        std::size_t count = 1;
        while (!stack.empty()) {
            const auto u = stack.back();
            stack.pop_back();
            for (std::size_t v = 0; v < n; ++v) {
                const bool arc = reverse ? adj[v][u] : adj[u][v];
                if (arc && !seen[v]) {
                    seen[v] = 1;
                    ++count;
                    stack.push_back(v);
                }
            }
        }
        return count == n;
    };
    return reaches_all(false) && reaches_all(true);
}

/// |A_{i..i}| >= sum of |A_{i i_2..i_m}| over the remaining entries of row i
/// (strictly greater in strict mode), for every i.
inline bool is_diagonally_dominant(const SymmetricUniformTensor& a, bool strict) {
    const std::size_t n = a.dim();
    std::vector<double> off(n, 0.0), diag(n, 0.0);
    if (const auto* tv = a.two_value_storage()) {
        const double count = static_cast<double>(detail::checked_pow(n, a.order() - 1) - 1);
        std::fill(off.begin(), off.end(), std::abs(tv->offdiag) * count);
        std::fill(diag.begin(), diag.end(), std::abs(tv->diag));
    } else {
        a.for_each_entry([&](std::span<const std::size_t> idx, double v) {
            if (detail::all_equal(idx)) {
                diag[idx[0]] = std::abs(v);
            } else {
                off[idx[0]] += std::abs(v);
            }
        });
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (strict ? !(diag[i] > off[i]) : !(diag[i] >= off[i])) return false;
    }
    return true;
}

/// <A>: |diagonal| on fully repeated indices, -|entry| elsewhere.
inline SymmetricUniformTensor comparison_tensor(const SymmetricUniformTensor& a) {
    return a.map_entries([](double v, bool diagonal) { return diagonal ? std::abs(v) : -std::abs(v); });
}

/// Outcome of a predicate that depends on a spectral-radius comparison.
enum class Tri { False, True, Indeterminate };

inline const char* to_string(Tri t) {
    switch (t) {
        case Tri::True: return "true";
        case Tri::False: return "false";
        default: return "indeterminate";
    }
}

struct StructureFlags {
    bool metzler = false;
    Tri m_tensor = Tri::False;
    Tri nonsingular_m = Tri::False;
    Tri h_tensor = Tri::False;
    Tri h_plus = Tri::False;
    double shift = 0.0;            // s = max diagonal entry
    double rho_lower = 0.0;        // bracket on rho(s I - A) when evaluated
    double rho_upper = 0.0;
};

namespace detail {

struct MTest {
    Tri m = Tri::False;
    Tri nonsingular = Tri::False;
    double shift = 0.0, lower = 0.0, upper = 0.0;
};

inline MTest m_tensor_test(const SymmetricUniformTensor& a) {
    MTest r;
    const std::size_t n = a.dim();
    bool offdiag_nonpositive = true;
    double s = -std::numeric_limits<double>::infinity();
    if (const auto* tv = a.two_value_storage()) {
        offdiag_nonpositive = n == 1 || tv->offdiag <= 0.0;
        s = tv->diag;
    } else {
        a.for_each_entry([&](std::span<const std::size_t> idx, double v) {
            if (all_equal(idx)) {
                s = std::max(s, v);
            } else if (v > 0.0) {
                offdiag_nonpositive = false;
            }
        });
    }
    r.shift = s;
    if (!offdiag_nonpositive) return r;
    // B = s I - A is nonnegative by the choice of s.
    const auto b = a.map_entries([s](double v, bool diagonal) { return diagonal ? s - v : -v; });
    const auto est = spectral_radius(b);
    r.lower = est.lower;
    r.upper = est.upper;
    if (s >= est.upper) {
        r.m = Tri::True;
        r.nonsingular = s > est.upper ? Tri::True : Tri::False;
    } else if (s < est.lower) {
        r.m = Tri::False;
        r.nonsingular = Tri::False;
    } else if (est.converged) {
        // s lies inside a bracket narrower than the tolerance: s == rho to working precision.
        r.m = Tri::True;
        r.nonsingular = Tri::False;
    } else {
        r.m = Tri::Indeterminate;
        r.nonsingular = Tri::Indeterminate;
    }
    return r;
}

}  // namespace detail

inline StructureFlags classify_structure(const SymmetricUniformTensor& a) {
    StructureFlags f;
    if (const auto* tv = a.two_value_storage()) {
        f.metzler = a.dim() == 1 || tv->offdiag >= 0.0;
    } else {
        f.metzler = true;
        a.for_each_entry([&](std::span<const std::size_t> idx, double v) {
            if (!detail::all_equal(idx) && v < 0.0) f.metzler = false;
        });
    }
    const auto direct = detail::m_tensor_test(a);
    f.m_tensor = direct.m;
    f.nonsingular_m = direct.nonsingular;
    const auto cmp = detail::m_tensor_test(comparison_tensor(a));
    f.h_tensor = cmp.m;
    f.shift = cmp.shift;
    f.rho_lower = cmp.lower;
    f.rho_upper = cmp.upper;
    bool diag_positive = true;
    for (std::size_t i = 0; i < a.dim(); ++i) diag_positive = diag_positive && a.diagonal(i) > 0.0;
    f.h_plus = !diag_positive ? Tri::False : f.h_tensor;
    return f;
}

}  // namespace hyperlv

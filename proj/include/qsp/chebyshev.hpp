#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qsp/errors.hpp"

namespace qsp {

enum class Parity { even, odd };
enum class Kind { first, second };

inline Parity parity_of(int n) { return (n % 2 == 0) ? Parity::even : Parity::odd; }
inline int parity_bit(Parity p) { return p == Parity::odd ? 1 : 0; }
inline const char* to_string(Parity p) { return p == Parity::odd ? "odd" : "even"; }

/// Chebyshev series. The nominal degree is coeffs.size()-1; it may carry
/// trailing zeros when the caller fixes d independently (e.g. f = 0).
struct ChebCoeffs {
    Parity parity = Parity::even;
    Kind kind = Kind::first;
    std::vector<double> coeffs{0.0};

    [[nodiscard]] int degree() const { return static_cast<int>(coeffs.size()) - 1; }

    /// Highest index carrying a nonzero coefficient (0 for the zero series).
    [[nodiscard]] int effective_degree() const {
        for (int k = degree(); k > 0; --k)
            if (coeffs[static_cast<size_t>(k)] != 0.0) return k;
        return 0;
    }

    [[nodiscard]] bool is_zero() const {
        return std::all_of(coeffs.begin(), coeffs.end(), [](double c) { return c == 0.0; });
    }

    /// Validates parity. Entries of the wrong parity must be below
    /// 1e-12 relative to the largest coefficient; they are then stored as 0.
    static ChebCoeffs make(std::vector<double> c, Parity p, Kind kind = Kind::first) {
        if (c.empty()) throw invalid_argument("Chebyshev series needs at least one coefficient");
        double big = 0.0;
        for (double v : c) {
            if (!std::isfinite(v)) throw invalid_argument("non-finite Chebyshev coefficient");
            big = std::max(big, std::abs(v));
        }
        for (size_t k = 0; k < c.size(); ++k) {
            if (static_cast<int>(k % 2) == parity_bit(p)) continue;
            if (std::abs(c[k]) > 1e-12 * big)
                throw invalid_argument("coefficient " + std::to_string(k) + " violates declared " +
                                       to_string(p) + " parity");
            c[k] = 0.0;
        }
        return ChebCoeffs{p, kind, std::move(c)};
    }

    /// Parity taken from the degree.
    static ChebCoeffs make(std::vector<double> c, Kind kind = Kind::first) {
        const Parity p = parity_of(static_cast<int>(c.size()) - 1);
        return make(std::move(c), p, kind);
    }

    /// Copy with trailing zeros removed (parity kept).
    [[nodiscard]] ChebCoeffs trimmed() const {
        ChebCoeffs out = *this;
        out.coeffs.resize(static_cast<size_t>(effective_degree()) + 1);
        return out;
    }
};

struct NodeGrid {
    int d_tilde = 0;
    std::vector<double> nodes;
};

/// d~ = ceil((d+1)/2).
[[nodiscard]] inline int reduced_length(int d) { return (d + 2) / 2; }

/// Positive zeros of T_{2 d~}: x_k = cos((2k-1) pi / (4 d~)), strictly decreasing.
[[nodiscard]] inline NodeGrid cheb_nodes(int d_tilde) {
    if (d_tilde < 1) throw invalid_argument("cheb_nodes: d_tilde must be >= 1");
    NodeGrid g{d_tilde, std::vector<double>(static_cast<size_t>(d_tilde))};
    for (int k = 1; k <= d_tilde; ++k)
        g.nodes[static_cast<size_t>(k - 1)] =
            std::cos((2.0 * k - 1.0) * std::numbers::pi / (4.0 * d_tilde));
    return g;
}

namespace detail {

inline void check_domain(double x) {
    if (!(std::abs(x) <= 1.0)) throw domain_error("Chebyshev evaluation needs |x| <= 1");
}

/// Clenshaw summation of sum c_k T_k(x) or sum c_k U_k(x); generic in the scalar type.
template <class Real>
Real clenshaw(std::span<const Real> c, const Real& x, Kind kind) {
    Real b1 = 0, b2 = 0;
    const Real two_x = 2 * x;
    for (size_t k = c.size(); k-- > 1;) {
        Real b0 = c[k] + two_x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    if (c.empty()) return Real(0);
    if (kind == Kind::first) return c[0] + x * b1 - b2;
    return c[0] + two_x * b1 - b2;
}

}  // namespace detail

/// T_n(x) by the three-term recurrence.
[[nodiscard]] inline double eval_T(int n, double x) {
    detail::check_domain(x);
    if (n < 0) throw invalid_argument("eval_T: negative order");
    double t0 = 1.0, t1 = x;
    if (n == 0) return t0;
    for (int k = 1; k < n; ++k) {
        double t2 = 2.0 * x * t1 - t0;
        t0 = t1;
        t1 = t2;
    }
    return t1;
}

/// U_n(x) by the three-term recurrence.
[[nodiscard]] inline double eval_U(int n, double x) {
    detail::check_domain(x);
    if (n < 0) throw invalid_argument("eval_U: negative order");
    double u0 = 1.0, u1 = 2.0 * x;
    if (n == 0) return u0;
    for (int k = 1; k < n; ++k) {
        double u2 = 2.0 * x * u1 - u0;
        u0 = u1;
        u1 = u2;
    }
    return u1;
}

[[nodiscard]] inline double eval_series(const ChebCoeffs& c, double x) {
    detail::check_domain(x);
    return detail::clenshaw<double>(c.coeffs, x, c.kind);
}

/// Recovers first-kind coefficients of a degree <= d, parity-definite function
/// from its values on the d~-point node grid (discrete orthogonality).
[[nodiscard]] inline ChebCoeffs values_to_coeffs(std::span<const double> values, Parity parity,
                                                 int d) {
    if (d < 0) throw invalid_argument("values_to_coeffs: negative degree");
    const int dt = reduced_length(d);
    if (static_cast<int>(values.size()) != dt)
        throw invalid_argument("values_to_coeffs: expected " + std::to_string(dt) + " values, got " +
                               std::to_string(values.size()));
    const NodeGrid grid = cheb_nodes(dt);
    std::vector<double> c(static_cast<size_t>(d) + 1, 0.0);
    for (int n = parity_bit(parity); n <= d; n += 2) {
        double s = 0.0;
        for (int j = 0; j < dt; ++j)
            s += values[static_cast<size_t>(j)] * eval_T(n, grid.nodes[static_cast<size_t>(j)]);
        c[static_cast<size_t>(n)] = (n == 0 ? 1.0 : 2.0) * s / dt;
    }
    return ChebCoeffs{parity, Kind::first, std::move(c)};
}

enum class Direction { to_monomial, from_monomial };

namespace detail {

template <class T>
std::vector<T> monomial_convert(std::span<const T> coeffs, Direction dir, Kind kind, int cap) {
    const int n = static_cast<int>(coeffs.size()) - 1;
    if (n < 0) return {};
    if (n > cap)
        throw precision_error("monomial conversion of degree " + std::to_string(n) +
                              " exceeds cap " + std::to_string(cap));
    const size_t m = coeffs.size();
    std::vector<T> out(m, T(0));
    if (dir == Direction::to_monomial) {
        // b_prev, b_cur hold the monomial coefficients of P_{k-1}, P_k.
        std::vector<T> prev(m, T(0)), cur(m, T(0));
        prev[0] = 1;
        if (m > 1) {
            if (kind == Kind::first) cur[1] = 1;
            else cur[1] = 2;
        }
        out[0] += coeffs[0];
        if (m > 1)
            for (size_t i = 0; i < m; ++i) out[i] += coeffs[1] * cur[i];
        for (size_t k = 2; k < m; ++k) {
            std::vector<T> next(m, T(0));
            for (size_t i = 0; i + 1 < m; ++i) next[i + 1] += 2 * cur[i];
            for (size_t i = 0; i < m; ++i) next[i] -= prev[i];
            for (size_t i = 0; i < m; ++i) out[i] += coeffs[k] * next[i];
            prev = std::move(cur);
            cur = std::move(next);
        }
        return out;
    }
    // Horner in coefficient space: p <- x*p + a_k.
    for (size_t k = m; k-- > 0;) {
        std::vector<T> next(m, T(0));
        for (size_t j = 0; j < m; ++j) {
            const T v = out[j];
            if (v == 0) continue;
            if (kind == Kind::first) {
                if (j == 0) next[1] += v;
                else {
                    next[j + 1] += v / 2;
                    next[j - 1] += v / 2;
                }
            } else {
                next[j + 1] += v / 2;
                if (j >= 1) next[j - 1] += v / 2;
            }
        }
        next[0] += coeffs[k];
        out = std::move(next);
    }
    return out;
}

}  // namespace detail

/// Basis change between Chebyshev (first or second kind) and monomials.
/// Ill-conditioned for large degree, hence the cap.
[[nodiscard]] inline std::vector<double> monomial_cheb_convert(std::span<const double> coeffs,
                                                               Direction dir,
                                                               Kind kind = Kind::first,
                                                               int cap = 64) {
    return detail::monomial_convert<double>(coeffs, dir, kind, cap);
}

/// ||f||_T^2 = f_0^2 + (1/2) sum_{k>=1} f_k^2.
[[nodiscard]] inline double norm_T(const ChebCoeffs& c) {
    if (c.kind != Kind::first) throw invalid_argument("norm_T needs a first-kind series");
    double s = 0.0;
    for (size_t k = 0; k < c.coeffs.size(); ++k)
        s += (k == 0 ? 1.0 : 0.5) * c.coeffs[k] * c.coeffs[k];
    return std::sqrt(s);
}

struct SupEstimate {
    double value = 0.0;
    int points = 0;
};

/// Sampled sup-norm on [-1, 1]: Chebyshev-Lobatto grid (includes both endpoints).
/// A lower bound on the true sup-norm. points <= 0 selects 8(d+1).
[[nodiscard]] inline SupEstimate max_norm_estimate(const ChebCoeffs& c, int points = 0) {
    const int d = c.degree();
    const int n = points > 0 ? points : 8 * (d + 1);
    double best = 0.0;
    for (int j = 0; j <= n; ++j) {
        const double x = std::cos(std::numbers::pi * j / n);
        best = std::max(best, std::abs(eval_series(c, x)));
    }
    return {best, n + 1};
}

[[nodiscard]] inline double max_norm(const ChebCoeffs& c, int points = 0) {
    return max_norm_estimate(c, points).value;
}

}  // namespace qsp

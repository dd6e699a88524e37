#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qsp/chebyshev.hpp"
#include "qsp/errors.hpp"

namespace qsp {

using cplx = std::complex<double>;

/// Left half of a symmetric phase vector. The parity is that of d.
struct ReducedPhases {
    std::vector<double> phases;
    Parity parity = Parity::odd;

    [[nodiscard]] int d_tilde() const { return static_cast<int>(phases.size()); }
    [[nodiscard]] int d() const {
        const int n = d_tilde();
        return parity == Parity::odd ? 2 * n - 1 : 2 * n - 2;
    }

    static ReducedPhases for_degree(int d, std::vector<double> phases) {
        if (d < 0) throw invalid_argument("negative degree");
        if (static_cast<int>(phases.size()) != reduced_length(d))
            throw invalid_argument("reduced phase length " + std::to_string(phases.size()) +
                                   " does not match degree " + std::to_string(d));
        return ReducedPhases{std::move(phases), parity_of(d)};
    }

    /// (pi/4, 0, ..., 0): g(x, .) vanishes identically.
    static ReducedPhases initial(int d) {
        std::vector<double> p(static_cast<size_t>(reduced_length(d)), 0.0);
        p[0] = std::numbers::pi / 4;
        return for_degree(d, std::move(p));
    }
};

struct SU2Matrix {
    std::array<cplx, 4> a{};  // row-major a00 a01 a10 a11

    cplx& operator()(int i, int j) { return a[static_cast<size_t>(2 * i + j)]; }
    const cplx& operator()(int i, int j) const { return a[static_cast<size_t>(2 * i + j)]; }

    friend SU2Matrix operator*(const SU2Matrix& l, const SU2Matrix& r) {
        SU2Matrix o;
        o(0, 0) = l(0, 0) * r(0, 0) + l(0, 1) * r(1, 0);
        o(0, 1) = l(0, 0) * r(0, 1) + l(0, 1) * r(1, 1);
        o(1, 0) = l(1, 0) * r(0, 0) + l(1, 1) * r(1, 0);
        o(1, 1) = l(1, 0) * r(0, 1) + l(1, 1) * r(1, 1);
        return o;
    }

    static SU2Matrix identity() {
        SU2Matrix m;
        m(0, 0) = 1.0;
        m(1, 1) = 1.0;
        return m;
    }
};

/// Full palindromic phase vector (length d+1).
[[nodiscard]] inline std::vector<double> symmetrize(const ReducedPhases& r) {
    const auto& p = r.phases;
    std::vector<double> full(p.begin(), p.end());
    const size_t skip = (r.parity == Parity::even) ? 1 : 0;
    for (size_t i = p.size() - skip; i-- > 0;) full.push_back(p[i]);
    return full;
}

namespace detail {

struct Signal {
    double x;
    double s;  // sqrt(1 - x^2)
};

inline Signal signal(double x) {
    if (!(std::abs(x) <= 1.0)) throw domain_error("QSP evaluation needs |x| <= 1");
    return {x, std::sqrt((1.0 - x) * (1.0 + x))};
}

using Row = std::array<cplx, 2>;

// row * W(x)
inline Row mul_w(const Row& v, const Signal& w) {
    const cplx is(0.0, w.s);
    return {v[0] * w.x + v[1] * is, v[0] * is + v[1] * w.x};
}
// row * e^{i phi Z}
inline Row mul_e(const Row& v, const cplx& e) { return {v[0] * e, v[1] * std::conj(e)}; }
// W(x) * col
inline Row w_mul(const Signal& w, const Row& c) {
    const cplx is(0.0, w.s);
    return {w.x * c[0] + is * c[1], is * c[0] + w.x * c[1]};
}
inline Row e_mul(const cplx& e, const Row& c) { return {e * c[0], std::conj(e) * c[1]}; }
// row * (iZ) * col
inline cplx dot_iz(const Row& v, const Row& c) {
    const cplx i(0.0, 1.0);
    return i * (v[0] * c[0] - v[1] * c[1]);
}
inline cplx dot(const Row& v, const Row& c) { return v[0] * c[0] + v[1] * c[1]; }

/// Prefix rows l_a = e0^T E0 W E1 ... W E_a and suffix columns
/// r_a = W E_{a+1} ... W E_d e0 for one signal value.
struct Chain {
    Signal w;
    std::vector<cplx> e;
    std::vector<Row> left;
    std::vector<Row> right;

    Chain(double x, std::span<const double> full) : w(signal(x)) {
        const size_t n = full.size();
        e.resize(n);
        for (size_t a = 0; a < n; ++a) e[a] = std::polar(1.0, full[a]);
        left.resize(n);
        right.resize(n);
        Row v{e[0], 0.0};
        left[0] = v;
        for (size_t a = 1; a < n; ++a) {
            v = mul_e(mul_w(v, w), e[a]);
            left[a] = v;
        }
        Row c{1.0, 0.0};
        right[n - 1] = c;
        for (size_t a = n - 1; a-- > 0;) {
            c = w_mul(w, e_mul(e[a + 1], c));
            right[a] = c;
        }
    }

    [[nodiscard]] cplx u00() const { return dot(left.back(), right.back()); }

    /// d g / d phi_a at each site (phases treated as independent).
    [[nodiscard]] std::vector<double> site_gradient() const {
        std::vector<double> g(e.size());
        for (size_t a = 0; a < e.size(); ++a) g[a] = dot_iz(left[a], right[a]).real();
        return g;
    }

    /// Second derivatives over site pairs; diagonal is -g.
    [[nodiscard]] Eigen::MatrixXd site_hessian() const {
        const Eigen::Index n = static_cast<Eigen::Index>(e.size());
        Eigen::MatrixXd h(n, n);
        const double gval = u00().real();
        const cplx i(0.0, 1.0);
        for (Eigen::Index a = 0; a < n; ++a) {
            h(a, a) = -gval;
            const Row& la = left[static_cast<size_t>(a)];
            Row v{i * la[0], -i * la[1]};
            for (Eigen::Index b = a + 1; b < n; ++b) {
                v = mul_e(mul_w(v, w), e[static_cast<size_t>(b)]);
                const double val = dot_iz(v, right[static_cast<size_t>(b)]).real();
                h(a, b) = val;
                h(b, a) = val;
            }
        }
        return h;
    }
};

/// Site indices {i, d-i} carried by reduced entry i.
inline std::array<int, 2> mirror_sites(int i, int d) { return {i, d - i}; }

}  // namespace detail

/// U(x, Phi) = e^{i phi_0 Z} W(x) e^{i phi_1 Z} ... W(x) e^{i phi_d Z}.
[[nodiscard]] inline SU2Matrix build_unitary(double x, std::span<const double> full) {
    const detail::Signal w = detail::signal(x);
    if (full.empty()) throw invalid_argument("build_unitary: empty phase vector");
    SU2Matrix W;
    W(0, 0) = w.x;
    W(1, 1) = w.x;
    W(0, 1) = cplx(0.0, w.s);
    W(1, 0) = cplx(0.0, w.s);
    auto rot = [](double phi) {
        SU2Matrix m;
        m(0, 0) = std::polar(1.0, phi);
        m(1, 1) = std::polar(1.0, -phi);
        return m;
    };
    SU2Matrix u = rot(full[0]);
    for (size_t k = 1; k < full.size(); ++k) u = u * W * rot(full[k]);
    return u;
}

/// Re <0| U(x, Phi) |0> for a full (not necessarily symmetric) phase vector.
[[nodiscard]] inline double g_value_full(double x, std::span<const double> full) {
    return detail::Chain(x, full).u00().real();
}

[[nodiscard]] inline double g_value(double x, const ReducedPhases& r) {
    const auto full = symmetrize(r);
    return g_value_full(x, full);
}

/// Gradient of g with respect to the reduced phases: pi/2 shift (insertion
/// of iZ) at both mirror sites of each entry, a single site for the even-d middle.
[[nodiscard]] inline std::vector<double> g_gradient(double x, const ReducedPhases& r) {
    const auto full = symmetrize(r);
    const detail::Chain chain(x, full);
    const auto sg = chain.site_gradient();
    const int d = r.d();
    std::vector<double> g(r.phases.size(), 0.0);
    for (int i = 0; i < r.d_tilde(); ++i) {
        const auto [a, b] = detail::mirror_sites(i, d);
        g[static_cast<size_t>(i)] = sg[static_cast<size_t>(a)];
        if (b != a) g[static_cast<size_t>(i)] += sg[static_cast<size_t>(b)];
    }
    return g;
}

/// g together with its reduced gradient, sharing one prefix/suffix pass.
inline double g_value_gradient(double x, const ReducedPhases& r, std::span<double> grad) {
    const auto full = symmetrize(r);
    const detail::Chain chain(x, full);
    const int d = r.d();
    for (int i = 0; i < r.d_tilde(); ++i) {
        const auto [a, b] = detail::mirror_sites(i, d);
        double v = detail::dot_iz(chain.left[static_cast<size_t>(a)], chain.right[static_cast<size_t>(a)]).real();
        if (b != a)
            v += detail::dot_iz(chain.left[static_cast<size_t>(b)], chain.right[static_cast<size_t>(b)]).real();
        grad[static_cast<size_t>(i)] = v;
    }
    return chain.u00().real();
}

/// Hessian of g in the reduced phases, folded from the site-pair matrix.
[[nodiscard]] inline Eigen::MatrixXd g_hessian(double x, const ReducedPhases& r) {
    const auto full = symmetrize(r);
    const Eigen::MatrixXd s = detail::Chain(x, full).site_hessian();
    const int d = r.d();
    const int n = r.d_tilde();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const auto si = detail::mirror_sites(i, d);
        for (int j = 0; j < n; ++j) {
            const auto sj = detail::mirror_sites(j, d);
            double v = 0.0;
            for (int ia = 0; ia < (si[0] == si[1] ? 1 : 2); ++ia)
                for (int jb = 0; jb < (sj[0] == sj[1] ? 1 : 2); ++jb)
                    v += s(si[static_cast<size_t>(ia)], sj[static_cast<size_t>(jb)]);
            h(i, j) = v;
        }
    }
    return h;
}

/// Gradient with respect to every entry of a full phase vector.
[[nodiscard]] inline std::vector<double> g_gradient_full(double x, std::span<const double> full) {
    return detail::Chain(x, full).site_gradient();
}

struct WrappedPhases {
    ReducedPhases phases;
    // Entry was moved by an odd multiple of pi. For reduced entries that
    // occupy two sites the two sign changes cancel, so g is unchanged.
    std::vector<bool> pi_shifted;
};

/// Canonical representative in D_d: entries in [-pi/2, pi/2), the even-d
/// middle entry in [-pi, pi).
[[nodiscard]] inline WrappedPhases wrap_to_domain(const ReducedPhases& r) {
    constexpr double pi = std::numbers::pi;
    WrappedPhases out{r, std::vector<bool>(r.phases.size(), false)};
    for (size_t i = 0; i < r.phases.size(); ++i) {
        const bool middle = (r.parity == Parity::even) && (i + 1 == r.phases.size());
        const double period = middle ? 2 * pi : pi;
        const double v = r.phases[i];
        const double k = std::floor((v + period / 2) / period);
        double w = v - k * period;
        if (w >= period / 2) w -= period;
        if (w < -period / 2) w += period;
        out.phases.phases[i] = w;
        if (!middle) out.pi_shifted[i] = std::fmod(std::abs(k), 2.0) == 1.0;
    }
    return out;
}

/// Distance that identifies phase vectors equal modulo the D_d periods.
[[nodiscard]] inline double periodic_distance(const ReducedPhases& a, const ReducedPhases& b) {
    constexpr double pi = std::numbers::pi;
    if (a.phases.size() != b.phases.size()) throw invalid_argument("periodic_distance: size mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.phases.size(); ++i) {
        const bool middle = (a.parity == Parity::even) && (i + 1 == a.phases.size());
        const double period = middle ? 2 * pi : pi;
        double t = std::remainder(a.phases[i] - b.phases[i], period);
        s += t * t;
    }
    return std::sqrt(s);
}

}  // namespace qsp

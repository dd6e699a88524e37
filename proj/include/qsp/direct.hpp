#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsp/chebyshev.hpp"
#include "qsp/errors.hpp"
#include "qsp/qsp_eval.hpp"

// Constructive solver: roots of the Laurent polynomial 1 - f((z+1/z)/2)^2,
// admissible pairs (P_Im, Q), and symmetric phases by degree reduction in the
// Chebyshev basis. Generic in the real scalar so it runs in double or in an
// MPFR-backed type (see multiprecision.hpp).

namespace qsp {

template <class Real>
struct Cx {
    Real re{0};
    Real im{0};

    Cx() = default;
    Cx(Real r) : re(std::move(r)), im(0) {}  // NOLINT(google-explicit-constructor)
    Cx(Real r, Real i) : re(std::move(r)), im(std::move(i)) {}

    friend Cx operator+(const Cx& a, const Cx& b) { return {a.re + b.re, a.im + b.im}; }
    friend Cx operator-(const Cx& a, const Cx& b) { return {a.re - b.re, a.im - b.im}; }
    friend Cx operator-(const Cx& a) { return {-a.re, -a.im}; }
    friend Cx operator*(const Cx& a, const Cx& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend Cx operator*(const Real& s, const Cx& a) { return {s * a.re, s * a.im}; }
    friend Cx operator/(const Cx& a, const Cx& b) {
        const Real n = b.re * b.re + b.im * b.im;
        return {(a.re * b.re + a.im * b.im) / n, (a.im * b.re - a.re * b.im) / n};
    }
    Cx& operator+=(const Cx& b) { re += b.re; im += b.im; return *this; }
    Cx& operator-=(const Cx& b) { re -= b.re; im -= b.im; return *this; }

    [[nodiscard]] Cx conj() const { return {re, -im}; }
    [[nodiscard]] Real norm2() const { return re * re + im * im; }
    [[nodiscard]] Real abs() const {
        using std::sqrt;
        return sqrt(norm2());
    }
    [[nodiscard]] Real arg() const {
        using std::atan2;
        return atan2(im, re);
    }
    [[nodiscard]] Cx sqrt() const {
        using std::sqrt;
        const Real r = abs();
        if (r == 0) return {};
        if (re >= 0) {
            const Real t = sqrt((r + re) / 2);
            return {t, im / (2 * t)};
        }
        const Real t = sqrt((r - re) / 2);
        const Real ai = im < 0 ? Real(-im) : Real(im);
        return {ai / (2 * t), im < 0 ? Real(-t) : t};
    }
    static Cx polar(const Real& theta) {
        using std::cos;
        using std::sin;
        return {cos(theta), sin(theta)};
    }
};

template <class Real>
[[nodiscard]] inline double to_double(const Real& v) {
    return static_cast<double>(v);
}

namespace detail {
inline std::string sci(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}
}  // namespace detail

template <class Real>
[[nodiscard]] inline Real pi_value() {
    using std::atan;
    return 4 * atan(Real(1));
}

/// Unit roundoff of the working type.
template <class Real>
[[nodiscard]] inline Real real_epsilon() {
    Real e = 1;
    while (Real(1) + e / 2 != Real(1)) e /= 2;
    return e;
}

struct DirectOptions {
    double unit_circle_tol = 1e-8;   // reject roots with ||r| - 1| below this
    double pairing_tol = 1e-6;       // |r r' - 1| <= tol (1 + |r|)
    double merge_tol = 1e-6;         // coincident orbits merged with multiplicity
    double invariant_tol = 1e-10;    // AdmissiblePair invariants
    int double_degree_cap = 30;      // double mode refuses larger d unless raised
    int enumeration_cap = 8;         // enumerate_admissible refuses larger d
    bool enforce_degree_cap = true;
};

/// One conjugation/negation orbit of roots inside the unit disc, described
/// by w = r^2: a real w gives {r, -r}, a complex w gives {r, conj r, -r, -conj r}.
template <class Real>
struct RootOrbit {
    Cx<Real> w;  // Im w >= 0
    bool real = false;
    int multiplicity = 1;
    std::vector<Cx<Real>> members;  // refined w of each merged copy

    [[nodiscard]] int size() const { return real ? 2 : 4; }
};

/// Roots of h(z) = z^{2d} (1 - f((z+1/z)/2)^2).
template <class Real>
struct RootSet {
    int d = 0;
    std::vector<Real> h;              // monomial coefficients, degree 4d
    std::vector<Cx<Real>> roots;      // all 4d roots of h
    std::vector<RootOrbit<Real>> orbits;  // inside orbits ordered by (|w|, arg w)
};

/// Root multiset D (|D| = 2d) closed under conjugation and negation.
template <class Real>
struct RootMultiset {
    std::vector<Cx<Real>> roots;    // the 2d roots r
    std::vector<Cx<Real>> w;        // the d values r^2, one per {r, -r}
    std::vector<int> outside;       // per orbit: copies taken as reciprocals
    bool is_maximal = true;
};

template <class Real>
struct AdmissiblePair {
    std::vector<Real> f;      // first kind, degree d
    std::vector<Real> p_im;   // first kind, degree d
    std::vector<Real> q;      // second kind, degree d-1
    Real alpha{0};
    RootMultiset<Real> source;
    bool maximal = false;
    bool q_negated = false;   // Q sign flipped to make the leading coefficient positive

    [[nodiscard]] int d() const { return static_cast<int>(f.size()) - 1; }
};

template <class Real>
struct ReductionLevel {
    Cx<Real> p_lead;   // coefficient of T_{d-2l} in P^{(l)}
    Real q_lead{0};    // coefficient of U_{d-1-2l} in Q^{(l)}
    Real phi{0};
};

template <class Real>
struct ReductionTrace {
    std::vector<ReductionLevel<Real>> levels;
    std::optional<Cx<Real>> terminal_p;  // even d: P^{(d~-1)} = e^{i phi_mid}
    bool q_chain_monotone = true;
};

template <class Real>
struct DirectSolution {
    AdmissiblePair<Real> pair;
    int q_sign = 1;                  // +1 for (P, Q), -1 for (P, -Q) (even d only)
    std::vector<Real> phases;        // reduced, wrapped into D_d
    ReductionTrace<Real> trace;
    ReducedPhases as_double;
};

namespace detail {

template <class Real>
std::vector<Real> to_real(std::span<const double> v) {
    std::vector<Real> out;
    out.reserve(v.size());
    for (double x : v) out.emplace_back(x);
    return out;
}

// x * sum c_k T_k
template <class T>
std::vector<T> x_times_T(const std::vector<T>& c) {
    std::vector<T> out(c.size() + 1, T{});
    for (size_t k = 0; k < c.size(); ++k) {
        if (k == 0) out[1] += c[0];
        else {
            out[k + 1] += c[k] / 2;
            out[k - 1] += c[k] / 2;
        }
    }
    return out;
}

// x * sum c_k U_k
template <class T>
std::vector<T> x_times_U(const std::vector<T>& c) {
    std::vector<T> out(c.size() + 1, T{});
    for (size_t k = 0; k < c.size(); ++k) {
        out[k + 1] += c[k] / 2;
        if (k >= 1) out[k - 1] += c[k] / 2;
    }
    return out;
}

// (1 - x^2) sum c_k U_k expressed in T: (1 - x^2) U_k = (T_k - T_{k+2}) / 2
template <class T>
std::vector<T> omx2_U_to_T(const std::vector<T>& c) {
    std::vector<T> out(c.size() + 2, T{});
    for (size_t k = 0; k < c.size(); ++k) {
        out[k] += c[k] / 2;
        out[k + 2] -= c[k] / 2;
    }
    return out;
}

// T_0 = U_0, T_1 = U_1 / 2, T_k = (U_k - U_{k-2}) / 2
template <class T>
std::vector<T> T_to_U(const std::vector<T>& c) {
    std::vector<T> out(c.size(), T{});
    for (size_t k = 0; k < c.size(); ++k) {
        if (k == 0) out[0] += c[0];
        else if (k == 1) out[1] += c[1] / 2;
        else {
            out[k] += c[k] / 2;
            out[k - 2] -= c[k] / 2;
        }
    }
    return out;
}

template <class T>
void add_into(std::vector<T>& acc, const std::vector<T>& v, const T& scale) {
    if (acc.size() < v.size()) acc.resize(v.size(), T{});
    for (size_t i = 0; i < v.size(); ++i) acc[i] += scale * v[i];
}

template <class Real>
Cx<Real> horner(const std::vector<Real>& c, const Cx<Real>& z, Cx<Real>* deriv) {
    Cx<Real> p, dp;
    for (size_t k = c.size(); k-- > 0;) {
        dp = dp * z + p;
        p = p * z + Cx<Real>(c[k]);
    }
    if (deriv) *deriv = dp;
    return p;
}

/// Parlett-Reinsch balancing of a dense matrix, in place (radix 2, 1-norm).
inline void balance(Eigen::MatrixXd& a) {
    const Eigen::Index n = a.rows();
    bool done = false;
    while (!done) {
        done = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            double c = a.col(i).cwiseAbs().sum() - std::abs(a(i, i));
            double r = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
            if (c == 0.0 || r == 0.0) continue;
            const double s = c + r;
            double f = 1.0;
            while (c < r / 2.0) {
                c *= 2.0;
                r /= 2.0;
                f *= 2.0;
            }
            while (c >= r * 2.0) {
                c /= 2.0;
                r *= 2.0;
                f /= 2.0;
            }
            if ((c + r) < 0.95 * s) {
                done = false;
                a.row(i) /= f;
                a.col(i) *= f;
            }
        }
    }
}

/// Roots of sum c_k w^k: balanced companion eigenvalues in double, then
/// simultaneous Aberth-Ehrlich refinement in the working precision.
// Start points on circles whose radii come from the upper convex hull of
// (i, log|c_i|).
template <class Real>
std::vector<Cx<Real>> newton_polygon_start(const std::vector<Real>& c) {
    using std::abs;
    using std::log;
    const int n = static_cast<int>(c.size()) - 1;
    std::vector<int> idx;
    std::vector<double> lg;
    for (int i = 0; i <= n; ++i) {
        if (c[static_cast<size_t>(i)] == 0) continue;
        idx.push_back(i);
        lg.push_back(to_double(Real(log(abs(c[static_cast<size_t>(i)])))));
    }
    std::vector<size_t> hull;
    for (size_t k = 0; k < idx.size(); ++k) {
        while (hull.size() >= 2) {
            const size_t a = hull[hull.size() - 2], b = hull.back();
            const double cross = (idx[b] - idx[a]) * (lg[k] - lg[a]) - (lg[b] - lg[a]) * (idx[k] - idx[a]);
            if (cross >= 0) hull.pop_back();
            else break;
        }
        hull.push_back(k);
    }
    std::vector<Cx<Real>> z;
    const Real two_pi = 2 * pi_value<Real>();
    for (size_t e = 0; e + 1 < hull.size(); ++e) {
        const int i0 = idx[hull[e]], i1 = idx[hull[e + 1]];
        const int m = i1 - i0;
        using std::exp;
        const Real r = exp(Real((lg[hull[e]] - lg[hull[e + 1]]) / m));
        for (int j = 0; j < m; ++j) {
            const Real th = two_pi * (Real(j) / m + Real(e) / (n + 1)) + Real(0.4);
            using std::cos;
            using std::sin;
            z.emplace_back(r * cos(th), r * sin(th));
        }
    }
    // zero low-order coefficients put roots at the origin; nudge them apart
    while (static_cast<int>(z.size()) < n) z.emplace_back(Real(1e-3) * Real(static_cast<int>(z.size()) + 1), Real(0));
    return z;
}

template <class Real>
bool aberth(const std::vector<Real>& c, std::vector<Cx<Real>>& z, int max_iters = 500) {
    using std::sqrt;
    const Real tol = 16 * real_epsilon<Real>();
    const Real floor_zone = sqrt(real_epsilon<Real>());
    Real prev = 0;
    int stalled = 0;
    for (int iter = 0; iter < max_iters; ++iter) {
        Real worst = 0;
        for (size_t i = 0; i < z.size(); ++i) {
            Cx<Real> dp;
            const Cx<Real> p = horner(c, z[i], &dp);
            if (p.re == 0 && p.im == 0) continue;
            const Cx<Real> ratio = p / dp;
            Cx<Real> s;
            for (size_t j = 0; j < z.size(); ++j)
                if (j != i) s += Cx<Real>(Real(1)) / (z[i] - z[j]);
            const Cx<Real> corr = ratio / (Cx<Real>(Real(1)) - ratio * s);
            z[i] -= corr;
            const Real scale = z[i].abs();
            const Real rel = scale > 0 ? Real(corr.abs() / scale) : corr.abs();
            if (!(rel <= worst)) worst = rel;  // also catches NaN
        }
        if (worst <= tol) return true;
        // steps stop shrinking once they reach the roundoff floor
        stalled = (iter > 0 && worst <= floor_zone && worst > prev / 4) ? stalled + 1 : 0;
        if (stalled >= 3) return true;
        prev = worst;
    }
    return false;
}

template <class Real>
bool all_finite(const std::vector<Cx<Real>>& z) {
    using std::isfinite;
    return std::all_of(z.begin(), z.end(), [](const Cx<Real>& v) { return isfinite(v.re) && isfinite(v.im); });
}

/// Roots of sum c_i w^i: balanced companion eigenvalues in double, polished
/// by Aberth iteration in Real. Falls back to Newton-polygon start points
/// when the companion start is unusable (coefficient range beyond double).
template <class Real>
std::vector<Cx<Real>> polynomial_roots(const std::vector<Real>& c) {
    const int n = static_cast<int>(c.size()) - 1;
    if (n < 1) return {};
    if (c.back() == 0) throw invalid_argument("polynomial_roots: zero leading coefficient");
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    const double lead = to_double(c.back());
    for (int i = 0; i < n; ++i) comp(0, n - 1 - i) = -to_double(c[static_cast<size_t>(i)]) / lead;
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    std::vector<Cx<Real>> z;
    if (comp.allFinite()) {
        balance(comp);
        Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
        if (es.info() == Eigen::Success) {
            z.reserve(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                const auto ev = es.eigenvalues()(i);
                z.emplace_back(Real(ev.real()), Real(ev.imag()));
            }
        }
    }
    if (z.size() == static_cast<size_t>(n) && all_finite(z)) {
        const auto start = z;
        if (aberth(c, z) && all_finite(z)) return z;
        // roundoff can stall the relative-step test; keep a finite result
        if (std::is_floating_point_v<Real> && all_finite(z)) return z;
        z = start;
    }
    z = newton_polygon_start(c);
    aberth(c, z, 2000);
    if (!all_finite(z)) throw numerical_failure("polynomial root iteration diverged");
    return z;
}

template <class Real>
Real eval_T_series(const std::vector<Real>& c, const Real& x) {
    return clenshaw<Real>(std::span<const Real>(c), x, Kind::first);
}

template <class Real>
Real eval_U_series(const std::vector<Real>& c, const Real& x) {
    return clenshaw<Real>(std::span<const Real>(c), x, Kind::second);
}

}  // namespace detail

/// Monomial coefficients of h(z) = z^{2d} (1 - f((z+1/z)/2)^2), degree 4d.
template <class Real>
[[nodiscard]] std::vector<Real> build_laurent(const std::vector<Real>& f) {
    const int d = static_cast<int>(f.size()) - 1;
    if (d < 1) throw invalid_argument("build_laurent: degree must be >= 1");
    // f((z+1/z)/2) = f_0 + sum_k (f_k/2)(z^k + z^{-k}); index j+d holds z^j.
    std::vector<Real> lau(static_cast<size_t>(2 * d + 1), Real(0));
    lau[static_cast<size_t>(d)] = f[0];
    for (int k = 1; k <= d; ++k) {
        lau[static_cast<size_t>(d + k)] += f[static_cast<size_t>(k)] / 2;
        lau[static_cast<size_t>(d - k)] += f[static_cast<size_t>(k)] / 2;
    }
    std::vector<Real> h(static_cast<size_t>(4 * d + 1), Real(0));
    for (size_t i = 0; i < lau.size(); ++i) {
        if (lau[i] == 0) continue;
        for (size_t j = 0; j < lau.size(); ++j) h[i + j] -= lau[i] * lau[j];
    }
    h[static_cast<size_t>(2 * d)] += 1;
    return h;
}

/// All 4d roots of h, reciprocal pairing, and the inside orbits.
template <class Real>
[[nodiscard]] RootSet<Real> find_roots(const std::vector<Real>& h, const DirectOptions& opt = {}) {
    using std::abs;
    const int n = static_cast<int>(h.size()) - 1;
    if (n < 4 || n % 4 != 0) throw invalid_argument("find_roots: expected a degree-4d polynomial");
    const int d = n / 4;
    if (h.back() == 0) throw invalid_argument("find_roots: zero leading coefficient");
    // h is even in z: h(z) = H(z^2) with H of degree 2d.
    std::vector<Real> hw(static_cast<size_t>(2 * d + 1));
    for (int j = 0; j <= 2 * d; ++j) hw[static_cast<size_t>(j)] = h[static_cast<size_t>(2 * j)];
    const auto ws = detail::polynomial_roots(hw);

    RootSet<Real> rs;
    rs.d = d;
    rs.h = h;
    for (const auto& w : ws) {
        const Cx<Real> r = w.sqrt();
        rs.roots.push_back(r);
        rs.roots.push_back(-r);
    }

    std::vector<Cx<Real>> inside, outside;
    for (const auto& w : ws) {
        // ||r| - 1| with |r| = sqrt|w|
        using std::sqrt;
        const double mod = to_double(Real(sqrt(w.abs())));
        if (std::abs(mod - 1.0) < opt.unit_circle_tol)
            throw invalid_argument("root on the unit circle: target too close to max-norm 1");
        (mod < 1.0 ? inside : outside).push_back(w);
    }
    if (inside.size() != static_cast<size_t>(d) || outside.size() != static_cast<size_t>(d))
        throw precision_error("unbalanced inside/outside root counts; try extended precision");
    std::vector<bool> used(outside.size(), false);
    for (const auto& w : inside) {
        size_t best = outside.size();
        double best_err = 0.0;
        for (size_t j = 0; j < outside.size(); ++j) {
            if (used[j]) continue;
            const double err = to_double(Real((w * outside[j] - Cx<Real>(Real(1))).abs()));
            if (best == outside.size() || err < best_err) {
                best = j;
                best_err = err;
            }
        }
        using std::sqrt;
        const double rmod = to_double(Real(sqrt(w.abs())));
        if (best == outside.size() || best_err > opt.pairing_tol * (1.0 + rmod))
            throw precision_error("reciprocal root pairing failed (residual " + detail::sci(best_err) +
                                  "); try extended precision");
        used[best] = true;
    }

    // Conjugation orbits among the inside w's.
    std::vector<bool> taken(inside.size(), false);
    std::vector<RootOrbit<Real>> orbits;
    for (size_t i = 0; i < inside.size(); ++i) {
        if (taken[i]) continue;
        taken[i] = true;
        const Cx<Real>& w = inside[i];
        const Real mag = w.abs();
        const Real tol_real = Real(1e-8) * mag;
        if (abs(w.im) <= tol_real) {
            orbits.push_back({Cx<Real>(w.re, Real(0)), true, 1, {Cx<Real>(w.re, Real(0))}});
            continue;
        }
        size_t partner = inside.size();
        Real best = 0;
        for (size_t j = 0; j < inside.size(); ++j) {
            if (taken[j]) continue;
            const Real err = (inside[j] - w.conj()).abs();
            if (partner == inside.size() || err < best) {
                partner = j;
                best = err;
            }
        }
        if (partner == inside.size() || best > Real(opt.pairing_tol) * mag)
            throw precision_error("conjugate root pairing failed; try extended precision");
        taken[partner] = true;
        Cx<Real> rep = Real(0.5) * (w + inside[partner].conj());
        if (rep.im < 0) rep = rep.conj();
        orbits.push_back({rep, false, 1, {rep}});
    }
    // Merge numerically coincident orbits.
    std::vector<RootOrbit<Real>> merged;
    for (const auto& o : orbits) {
        bool joined = false;
        for (auto& m : merged) {
            if (m.real != o.real) continue;
            if (to_double(Real((m.w - o.w).abs())) <= opt.merge_tol * to_double(Real(m.w.abs()))) {
                m.members.push_back(o.w);
                m.multiplicity += 1;
                joined = true;
                break;
            }
        }
        if (!joined) merged.push_back(o);
    }
    std::sort(merged.begin(), merged.end(), [](const RootOrbit<Real>& a, const RootOrbit<Real>& b) {
        const Real ma = a.w.abs(), mb = b.w.abs();
        if (ma != mb) return ma < mb;
        return a.w.arg() < b.w.arg();
    });
    rs.orbits = std::move(merged);
    return rs;
}

namespace detail {

template <class Real>
RootMultiset<Real> multiset_from_choice(const RootSet<Real>& rs, const std::vector<int>& outside) {
    RootMultiset<Real> m;
    m.outside = outside;
    m.is_maximal = std::all_of(outside.begin(), outside.end(), [](int k) { return k == 0; });
    auto push_w = [&](const Cx<Real>& w) {
        m.w.push_back(w);
        const Cx<Real> r = w.sqrt();
        m.roots.push_back(r);
        m.roots.push_back(-r);
    };
    for (size_t o = 0; o < rs.orbits.size(); ++o) {
        const auto& orb = rs.orbits[o];
        for (int c = 0; c < orb.multiplicity; ++c) {
            const Cx<Real>& win = orb.members[static_cast<size_t>(c)];
            const Cx<Real> w = c < outside[o] ? Cx<Real>(Real(1)) / win : win;
            push_w(w);
            if (!orb.real) push_w(w.conj());
        }
    }
    return m;
}

}  // namespace detail

/// D = all roots inside the unit disc.
template <class Real>
[[nodiscard]] RootMultiset<Real> select_maximal(const RootSet<Real>& rs) {
    auto m = detail::multiset_from_choice(rs, std::vector<int>(rs.orbits.size(), 0));
    if (static_cast<int>(m.roots.size()) != 2 * rs.d)
        throw precision_error("maximal root multiset has wrong size");
    return m;
}

/// Every admissible D: per inside orbit of multiplicity m, j = 0..m copies are
/// replaced by their reciprocals. The maximal multiset comes first.
template <class Real>
[[nodiscard]] std::vector<RootMultiset<Real>> enumerate_admissible(const RootSet<Real>& rs,
                                                                   int limit = 0,
                                                                   const DirectOptions& opt = {}) {
    if (rs.d > opt.enumeration_cap)
        throw invalid_argument("enumeration refused: degree " + std::to_string(rs.d) +
                               " exceeds cap " + std::to_string(opt.enumeration_cap) +
                               " (the number of admissible pairs grows combinatorially)");
    std::vector<RootMultiset<Real>> out;
    std::vector<int> choice(rs.orbits.size(), 0);
    while (true) {
        out.push_back(detail::multiset_from_choice(rs, choice));
        if (limit > 0 && static_cast<int>(out.size()) >= limit) break;
        // odometer, last orbit fastest
        size_t k = choice.size();
        while (k > 0) {
            --k;
            if (choice[k] < rs.orbits[k].multiplicity) {
                ++choice[k];
                break;
            }
            choice[k] = 0;
            if (k == 0) return out;
        }
        if (choice.empty()) break;
    }
    return out;
}

/// Complementary polynomials from D: with e(z) = z^{-d} prod (z - r) = sum e_j z^j,
/// P_Im = sqrt(alpha) sum_k (e_k + e_{-k}) T_k (k = 0 counted once) and
/// Q = sqrt(alpha) sum_k (e_k - e_{-k}) U_{k-1}.
template <class Real>
[[nodiscard]] AdmissiblePair<Real> build_pair(const RootMultiset<Real>& D, const std::vector<Real>& f,
                                              const DirectOptions& opt = {}) {
    using std::abs;
    using std::sqrt;
    const int d = static_cast<int>(f.size()) - 1;
    if (static_cast<int>(D.w.size()) != d) throw invalid_argument("build_pair: |D| must equal 2d");
    // prod_{r in D} (z - r) = prod_w (z^2 - w) = E(z^2)
    std::vector<Cx<Real>> E{Cx<Real>(Real(1))};
    for (const auto& w : D.w) {
        std::vector<Cx<Real>> next(E.size() + 1);
        for (size_t i = 0; i < E.size(); ++i) {
            next[i + 1] += E[i];
            next[i] -= w * E[i];
        }
        E = std::move(next);
    }
    // e_j for j = -d..d stored at j + d
    std::vector<Real> e(static_cast<size_t>(2 * d + 1), Real(0));
    for (int m = 0; m <= d; ++m) e[static_cast<size_t>(2 * m)] = E[static_cast<size_t>(m)].re;
    Cx<Real> prod(Real(1));
    for (const auto& w : D.w) prod = prod * (Cx<Real>(Real(1)) - w);
    const Real f1 = detail::eval_T_series(f, Real(1));
    const Real denom = prod.re * prod.re;
    if (!(denom > 0)) throw precision_error("build_pair: degenerate normalization");
    AdmissiblePair<Real> pair;
    pair.f = f;
    pair.alpha = (1 - f1 * f1) / denom;
    pair.source = D;
    pair.maximal = D.is_maximal;
    const Real sa = sqrt(pair.alpha);
    pair.p_im.assign(static_cast<size_t>(d + 1), Real(0));
    pair.q.assign(static_cast<size_t>(d), Real(0));
    pair.p_im[0] = sa * e[static_cast<size_t>(d)];
    for (int k = 1; k <= d; ++k) {
        pair.p_im[static_cast<size_t>(k)] = sa * (e[static_cast<size_t>(d + k)] + e[static_cast<size_t>(d - k)]);
        pair.q[static_cast<size_t>(k - 1)] = sa * (e[static_cast<size_t>(d + k)] - e[static_cast<size_t>(d - k)]);
    }
    if (pair.q.back() < 0) {
        for (auto& v : pair.q) v = -v;
        pair.q_negated = true;
    }

    // Invariants.
    const Real tol(opt.invariant_tol);
    const int samples = 4 * (d + 1);
    const Real pi = pi_value<Real>();
    Real worst = 0;
    for (int j = 0; j < samples; ++j) {
        using std::cos;
        const Real x = cos(pi * (2 * j + 1) / (2 * samples));
        const Real fv = detail::eval_T_series(f, x);
        const Real pv = detail::eval_T_series(pair.p_im, x);
        const Real qv = detail::eval_U_series(pair.q, x);
        const Real r = abs(fv * fv + pv * pv + (1 - x * x) * qv * qv - 1);
        if (r > worst) worst = r;
    }
    if (worst > tol)
        throw precision_error("normalization residual " + detail::sci(to_double(worst)) +
                              " exceeds tolerance; try extended precision");
    Real parseval = f[0] * f[0] + pair.p_im[0] * pair.p_im[0];
    for (int k = 1; k <= d; ++k)
        parseval += (f[static_cast<size_t>(k)] * f[static_cast<size_t>(k)] +
                     pair.p_im[static_cast<size_t>(k)] * pair.p_im[static_cast<size_t>(k)]) / 2;
    for (const auto& v : pair.q) parseval += v * v / 2;
    if (abs(parseval - 1) > tol)
        throw precision_error("Parseval residual " + detail::sci(to_double(Real(parseval - 1))) +
                              " exceeds tolerance");
    const Real lead = f.back() * f.back() + pair.p_im.back() * pair.p_im.back() - pair.q.back() * pair.q.back();
    if (abs(lead) > tol)
        throw precision_error("leading-coefficient identity residual " + detail::sci(to_double(lead)));
    if (!(pair.q.back() > 0)) throw precision_error("leading coefficient of Q is not positive");
    return pair;
}

/// The f = 0 pair (T_d, U_{d-1}).
template <class Real>
[[nodiscard]] AdmissiblePair<Real> zero_pair(int d) {
    AdmissiblePair<Real> pair;
    pair.f.assign(static_cast<size_t>(d + 1), Real(0));
    pair.p_im.assign(static_cast<size_t>(d + 1), Real(0));
    pair.p_im.back() = 1;
    pair.q.assign(static_cast<size_t>(d), Real(0));
    pair.q.back() = 1;
    pair.alpha = 1;
    pair.maximal = true;
    return pair;
}

/// Degree reduction: peel phi_l from the leading-coefficient ratio, then
/// conjugate by W^{-1} e^{-i phi_l Z} as an exact linear map on Chebyshev
/// coefficients. Returns reduced phases wrapped into D_d.
template <class Real>
[[nodiscard]] std::vector<Real> reduce_to_phases(const AdmissiblePair<Real>& pair, int q_sign,
                                                 ReductionTrace<Real>* trace_out = nullptr,
                                                 bool require_monotone = false) {
    using std::abs;
    using std::sqrt;
    const int d = pair.d();
    if (d < 1) throw invalid_argument("reduce_to_phases: degree must be >= 1");
    // 1e-12 in hardware precision; sqrt(eps) in extended precision, where
    // non-maximal classes of tiny targets have tiny leading coefficients
    const Real degenerate_q = std::is_floating_point_v<Real> ? Real(1e-12) : Real(sqrt(real_epsilon<Real>()));
    std::vector<Cx<Real>> P(static_cast<size_t>(d + 1));
    for (int k = 0; k <= d; ++k)
        P[static_cast<size_t>(k)] = Cx<Real>(pair.f[static_cast<size_t>(k)], pair.p_im[static_cast<size_t>(k)]);
    std::vector<Real> Q = pair.q;
    if (q_sign < 0)
        for (auto& v : Q) v = -v;

    const Real pi = pi_value<Real>();
    ReductionTrace<Real> trace;
    std::vector<Real> phases;
    int n = d;
    Real prev_q = 0;
    while (n >= 1) {
        const Cx<Real> pt = P[static_cast<size_t>(n)];
        const Real qt = Q[static_cast<size_t>(n - 1)];
        if (abs(qt) < degenerate_q)
            throw numerical_failure("degenerate pair: vanishing leading coefficient of Q at level " +
                                    std::to_string(phases.size()));
        Real phi = (pt / Cx<Real>(qt)).arg() / 2;
        if (phi >= pi / 2) phi -= pi;
        if (phi < -pi / 2) phi += pi;
        phases.push_back(phi);
        trace.levels.push_back({pt, qt, phi});
        if (!phases.empty() && phases.size() > 1 && qt < prev_q * (1 - Real(1e-9)))
            trace.q_chain_monotone = false;
        prev_q = qt;
        if (n == 1) break;

        const Cx<Real> rot = Cx<Real>::polar(-2 * phi);
        std::vector<Cx<Real>> A(P.size());
        std::vector<Real> reA(P.size());
        for (size_t k = 0; k < P.size(); ++k) {
            A[k] = P[k] * rot;
            reA[k] = A[k].re;
        }
        // P1 = 2 x^2 Re(A) - conj(A) + 2 x (1 - x^2) Q
        std::vector<Cx<Real>> P1;
        {
            const auto x2 = detail::x_times_T(detail::x_times_T(reA));
            for (const auto& v : x2) P1.emplace_back(2 * v, Real(0));
            for (size_t k = 0; k < A.size(); ++k) P1[k] -= A[k].conj();
            const auto xq = detail::x_times_T(detail::omx2_U_to_T(Q));
            for (size_t k = 0; k < xq.size(); ++k) {
                if (k >= P1.size()) P1.resize(k + 1);
                P1[k] += Cx<Real>(2 * xq[k]);
            }
        }
        // Q1 = (2 x^2 - 1) Q - 2 x Re(A), in the U basis
        std::vector<Real> Q1 = detail::x_times_U(detail::x_times_U(Q));
        for (auto& v : Q1) v *= 2;
        detail::add_into(Q1, Q, Real(-1));
        detail::add_into(Q1, detail::x_times_U(detail::T_to_U(reA)), Real(-2));
        n -= 2;
        P1.resize(static_cast<size_t>(n + 1));
        Q1.resize(static_cast<size_t>(std::max(n, 0)));
        P = std::move(P1);
        Q = std::move(Q1);
        if (n == 0) {
            Real mid = P[0].arg();
            if (mid >= pi) mid -= 2 * pi;
            phases.push_back(mid);
            trace.terminal_p = P[0];
            break;
        }
    }
    if (d % 2 == 1 && abs(prev_q - 1) > Real(1e-9) && pair.maximal && q_sign > 0)
        trace.q_chain_monotone = false;
    if (require_monotone && !trace.q_chain_monotone)
        throw precision_error("q-chain of the reduction is not monotone; try extended precision");
    if (trace_out) *trace_out = std::move(trace);
    return phases;
}

template <class Real>
[[nodiscard]] ReducedPhases phases_to_double(const std::vector<Real>& phases, int d) {
    std::vector<double> v;
    v.reserve(phases.size());
    for (const auto& p : phases) v.push_back(to_double(p));
    return wrap_to_domain(ReducedPhases::for_degree(d, std::move(v))).phases;
}

namespace detail {

template <class Real>
std::vector<Real> prepare_target(const ChebCoeffs& f, const DirectOptions& opt, bool is_double) {
    if (f.kind != Kind::first) throw invalid_argument("target must be a first-kind Chebyshev series");
    const ChebCoeffs t = f.trimmed();
    const int d = t.degree();
    if (d < 1) throw invalid_argument("direct solver needs degree >= 1");
    if (t.parity != parity_of(d)) throw invalid_argument("target parity must match its degree");
    if (max_norm(t) >= 1.0) throw invalid_argument("target violates ||f||_inf < 1");
    if (is_double && opt.enforce_degree_cap && d > opt.double_degree_cap)
        throw precision_error("degree " + std::to_string(d) + " exceeds the double-precision cap " +
                              std::to_string(opt.double_degree_cap) + "; use extended precision");
    return to_real<Real>(t.coeffs);
}

template <class Real>
DirectSolution<Real> finish(AdmissiblePair<Real> pair, int q_sign) {
    DirectSolution<Real> s;
    s.q_sign = q_sign;
    s.phases = reduce_to_phases(pair, q_sign, &s.trace, pair.maximal && q_sign > 0);
    s.as_double = phases_to_double(s.phases, pair.d());
    s.pair = std::move(pair);
    return s;
}

}  // namespace detail

/// Maximal solution. Targets with sampled sup-norm below 1e-12 yield Phi~0.
template <class Real = long double>
[[nodiscard]] DirectSolution<Real> solve_direct_maximal(const ChebCoeffs& f, const DirectOptions& opt = {}) {
    if (max_norm(f) < 1e-12) {
        const int d = f.degree();
        if (d < 1) throw invalid_argument("direct solver needs degree >= 1");
        return detail::finish(zero_pair<Real>(d), 1);
    }
    const auto fr = detail::prepare_target<Real>(f, opt, std::is_floating_point_v<Real>);
    const auto rs = find_roots(build_laurent(fr), opt);
    return detail::finish(build_pair(select_maximal(rs), fr, opt), 1);
}

/// Every global minimum: one per admissible pair, doubled by (P, -Q) for even d.
template <class Real = long double>
[[nodiscard]] std::vector<DirectSolution<Real>> solve_direct_all(const ChebCoeffs& f,
                                                                 const DirectOptions& opt = {}) {
    const auto fr = detail::prepare_target<Real>(f, opt, std::is_floating_point_v<Real>);
    const int d = static_cast<int>(fr.size()) - 1;
    const auto rs = find_roots(build_laurent(fr), opt);
    std::vector<DirectSolution<Real>> out;
    for (const auto& D : enumerate_admissible(rs, 0, opt)) {
        auto pair = build_pair(D, fr, opt);
        out.push_back(detail::finish(pair, 1));
        if (d % 2 == 0) out.push_back(detail::finish(std::move(pair), -1));
    }
    return out;
}

/// The pair (P_Im, Q) realized by a phase vector, read off U(x) on the node
/// grid: U00 = f + i P_Im, U01 = i Q sqrt(1 - x^2).
[[nodiscard]] inline AdmissiblePair<double> pair_from_phases(const ReducedPhases& r) {
    const int d = r.d();
    const auto full = symmetrize(r);
    const auto grid = cheb_nodes(reduced_length(d));
    std::vector<double> fv, sv;
    for (double x : grid.nodes) {
        const SU2Matrix u = build_unitary(x, full);
        fv.push_back(u(0, 0).real());
        sv.push_back(u(0, 0).imag());
    }
    AdmissiblePair<double> pair;
    pair.f = values_to_coeffs(fv, parity_of(d), d).coeffs;
    pair.p_im = values_to_coeffs(sv, parity_of(d), d).coeffs;
    std::vector<double> qv;
    for (double x : cheb_nodes(reduced_length(d - 1)).nodes) {
        const SU2Matrix u = build_unitary(x, full);
        qv.push_back(u(0, 1).imag() / std::sqrt((1 - x) * (1 + x)));
    }
    pair.q = detail::T_to_U(values_to_coeffs(qv, parity_of(d - 1), d - 1).coeffs);
    return pair;
}

struct CheckEntry {
    std::string name;
    double residual = 0.0;
    bool checked = false;
};

/// Residual report: normalization, Parseval, leading identity, the two
/// monomial-basis equalities (d <= 20), and with phases the leading-coefficient
/// product formulas and the odd-d sign rule.
template <class Real>
[[nodiscard]] std::vector<CheckEntry> verify_pair(const AdmissiblePair<Real>& pair,
                                                  const ReducedPhases* phases = nullptr,
                                                  int q_sign = 1) {
    const int d = pair.d();
    std::vector<CheckEntry> out;
    auto dbl = [](const std::vector<Real>& v) {
        std::vector<double> o;
        for (const auto& x : v) o.push_back(to_double(x));
        return o;
    };
    const auto f = dbl(pair.f);
    const auto s = dbl(pair.p_im);
    auto q = dbl(pair.q);
    if (q_sign < 0)
        for (double& v : q) v = -v;
    {
        double worst = 0.0;
        const int n = 4 * (d + 1);
        for (int j = 0; j < n; ++j) {
            const double x = std::cos(std::numbers::pi * (2 * j + 1) / (2.0 * n));
            const double fv = detail::clenshaw<double>(f, x, Kind::first);
            const double pv = detail::clenshaw<double>(s, x, Kind::first);
            const double qv = detail::clenshaw<double>(q, x, Kind::second);
            worst = std::max(worst, std::abs(fv * fv + pv * pv + (1 - x * x) * qv * qv - 1));
        }
        out.push_back({"normalization", worst, true});
    }
    {
        double p = f[0] * f[0] + s[0] * s[0];
        for (int k = 1; k <= d; ++k) p += 0.5 * (f[static_cast<size_t>(k)] * f[static_cast<size_t>(k)] + s[static_cast<size_t>(k)] * s[static_cast<size_t>(k)]);
        for (double v : q) p += 0.5 * v * v;
        out.push_back({"parseval", std::abs(p - 1.0), true});
    }
    out.push_back({"leading_identity", std::abs(f.back() * f.back() + s.back() * s.back() - q.back() * q.back()), true});

    if (d <= 20) {
        // long double keeps the 2^d growth of monomial coefficients below the tolerance
        using lcx = std::complex<long double>;
        auto ldv = [](const std::vector<Real>& v, int sign) {
            std::vector<long double> o;
            for (const auto& x : v) o.push_back(sign * static_cast<long double>(x));
            return o;
        };
        const auto fl = ldv(pair.f, 1), sl = ldv(pair.p_im, 1), ql = ldv(pair.q, q_sign < 0 ? -1 : 1);
        const auto fm = detail::monomial_convert<long double>(fl, Direction::to_monomial, Kind::first, 64);
        const auto sm = detail::monomial_convert<long double>(sl, Direction::to_monomial, Kind::first, 64);
        const auto qm = detail::monomial_convert<long double>(ql, Direction::to_monomial, Kind::second, 64);
        auto P = [&](int k) { return k < 0 ? lcx(0.0L) : lcx(fm[static_cast<size_t>(k)], sm[static_cast<size_t>(k)]); };
        auto Qm = [&](int k) { return k < 0 ? 0.0L : qm[static_cast<size_t>(k)]; };
        const lcx e2 = Qm(d - 1) / std::conj(P(d));  // e^{2 i phi_0}
        const lcx rot = 1.0L / e2;
        const long double eq1 = 2.0L * (P(d - 2) * rot).real() + Qm(d - 1) - 2.0L * Qm(d - 3);
        out.push_back({"monomial_equality_1", d >= 2 ? static_cast<double>(std::abs(eq1)) : 0.0, d >= 2});
        if (d >= 3) {
            const long double im = (P(d - 2) * rot).imag();
            const long double lhs = 2.0L * (P(d - 4) * rot).real() + Qm(d - 3) - 2.0L * Qm(d - 5);
            const long double rhs = -Qm(d - 1) / 4.0L - im * im / Qm(d - 1);
            out.push_back({"monomial_equality_2", static_cast<double>(std::abs(lhs - rhs)), true});
        } else {
            out.push_back({"monomial_equality_2", 0.0, false});
        }
    } else {
        out.push_back({"monomial_equality_1", 0.0, false});
        out.push_back({"monomial_equality_2", 0.0, false});
    }

    if (phases) {
        const auto full = symmetrize(*phases);
        double prod = 1.0;
        for (int j = 1; j < d; ++j) prod *= std::cos(full[static_cast<size_t>(j)]);
        const cplx pd = std::polar(prod, full.front() + full.back());
        const cplx qd = std::polar(prod, full.front() - full.back());
        out.push_back({"leading_product_p", std::abs(pd - cplx(f.back(), s.back())), true});
        out.push_back({"leading_product_q", std::abs(qd - q.back()), true});
        // round trip through the unitary at the Chebyshev nodes
        double worst = 0.0;
        for (double x : cheb_nodes(reduced_length(d)).nodes) {
            const SU2Matrix u = build_unitary(x, full);
            const cplx pv(detail::clenshaw<double>(f, x, Kind::first), detail::clenshaw<double>(s, x, Kind::first));
            const double sx = std::sqrt((1 - x) * (1 + x));
            const cplx qv(0.0, detail::clenshaw<double>(q, x, Kind::second) * sx);
            worst = std::max({worst, std::abs(u(0, 0) - pv), std::abs(u(0, 1) - qv)});
        }
        out.push_back({"unitary_round_trip", worst, true});
    }
    if (d % 2 == 1) {
        int deg = -1;
        double big = 0.0;
        for (double v : q) big = std::max(big, std::abs(v));
        for (int k = d - 1; k >= 0; --k)
            if (std::abs(q[static_cast<size_t>(k)]) > 1e-12 * big) {
                deg = k;
                break;
            }
        const double expected = (((d - 1 - deg) / 2) % 2 == 0) ? 1.0 : -1.0;
        const bool ok = deg >= 0 && q[static_cast<size_t>(deg)] * expected > 0;
        out.push_back({"odd_sign_rule", ok ? 0.0 : 1.0, true});
    }
    return out;
}

}  // namespace qsp

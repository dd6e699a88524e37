#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <boost/multiprecision/mpfr.hpp>

#include "qsp/direct.hpp"

namespace qsp {

/// MPFR float whose precision is chosen at run time (expression templates off).
using mp_real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                              boost::multiprecision::et_off>;

/// Sets the working precision of newly created mp_real values, in bits.
/// Returns the previous precision in decimal digits.
inline unsigned set_mp_precision_bits(unsigned bits) {
    if (bits < 64) throw invalid_argument("extended precision needs at least 64 bits");
    const unsigned prev = mp_real::default_precision();
    mp_real::default_precision(static_cast<unsigned>(std::ceil(bits * 0.30102999566398120)) + 1);
    return prev;
}

/// Restores the previous default precision on scope exit.
class MpPrecisionScope {
public:
    explicit MpPrecisionScope(unsigned bits) : prev_(set_mp_precision_bits(bits)) {}
    ~MpPrecisionScope() { mp_real::default_precision(prev_); }
    MpPrecisionScope(const MpPrecisionScope&) = delete;
    MpPrecisionScope& operator=(const MpPrecisionScope&) = delete;

private:
    unsigned prev_;
};

/// 4d log2(d/eps) bits, the growth rate of the precision the construction needs.
[[nodiscard]] inline unsigned default_mp_bits(int d, double eps = 1e-12) {
    const double bits = 4.0 * d * std::log2(std::max(2.0, d / eps));
    return static_cast<unsigned>(std::max(128.0, std::ceil(bits)));
}

namespace detail {

template <class To, class From>
std::vector<To> cast_all(const std::vector<From>& v) {
    std::vector<To> out;
    out.reserve(v.size());
    for (const auto& x : v) out.push_back(static_cast<To>(x));
    return out;
}

template <class To, class From>
Cx<To> cast_cx(const Cx<From>& z) {
    return {static_cast<To>(z.re), static_cast<To>(z.im)};
}

template <class To, class From>
std::vector<Cx<To>> cast_all(const std::vector<Cx<From>>& v) {
    std::vector<Cx<To>> out;
    out.reserve(v.size());
    for (const auto& z : v) out.push_back(cast_cx<To>(z));
    return out;
}

}  // namespace detail

/// Rounds every field of a solution to another working type.
template <class To, class From>
[[nodiscard]] DirectSolution<To> convert_solution(const DirectSolution<From>& s) {
    DirectSolution<To> out;
    out.pair.f = detail::cast_all<To>(s.pair.f);
    out.pair.p_im = detail::cast_all<To>(s.pair.p_im);
    out.pair.q = detail::cast_all<To>(s.pair.q);
    out.pair.alpha = static_cast<To>(s.pair.alpha);
    out.pair.source.roots = detail::cast_all<To>(s.pair.source.roots);
    out.pair.source.w = detail::cast_all<To>(s.pair.source.w);
    out.pair.source.outside = s.pair.source.outside;
    out.pair.source.is_maximal = s.pair.source.is_maximal;
    out.pair.maximal = s.pair.maximal;
    out.pair.q_negated = s.pair.q_negated;
    out.q_sign = s.q_sign;
    out.phases = detail::cast_all<To>(s.phases);
    for (const auto& l : s.trace.levels)
        out.trace.levels.push_back({detail::cast_cx<To>(l.p_lead), static_cast<To>(l.q_lead),
                                    static_cast<To>(l.phi)});
    if (s.trace.terminal_p) out.trace.terminal_p = detail::cast_cx<To>(*s.trace.terminal_p);
    out.trace.q_chain_monotone = s.trace.q_chain_monotone;
    out.as_double = s.as_double;
    return out;
}

/// Maximal solution in long double, redone in MPFR at `bits` when the
/// long double construction misses its invariant tolerances. Near-double
/// roots of h are the usual cause.
struct EscalatedSolution {
    DirectSolution<long double> solution;
    unsigned bits = 0;  // 0: long double sufficed
};

[[nodiscard]] inline EscalatedSolution solve_direct_maximal_escalating(const ChebCoeffs& f,
                                                                       const DirectOptions& opt = {},
                                                                       unsigned bits = 256) {
    try {
        return {solve_direct_maximal<long double>(f, opt), 0};
    } catch (const precision_error&) {
    }
    MpPrecisionScope scope(bits);
    return {convert_solution<long double>(solve_direct_maximal<mp_real>(f, opt)), bits};
}

}  // namespace qsp

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsp/direct.hpp"
#include "qsp/multiprecision.hpp"
#include "qsp/objective.hpp"
#include "qsp/optimizer.hpp"
#include "qsp/parallel.hpp"

namespace qsp {

namespace detail {

// Width of the D_d interval holding reduced entry i.
inline double domain_period(Parity parity, size_t i, size_t n) {
    const bool middle = parity == Parity::even && i + 1 == n;
    return middle ? 2 * std::numbers::pi : std::numbers::pi;
}

inline std::vector<double> uniform_in_ball(std::mt19937_64& rng, size_t n, double radius) {
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unit;
    std::vector<double> v(n);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& x : v) {
            x = gauss(rng);
            norm += x * x;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(n));
    for (double& x : v) x *= r / norm;
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hessian spectrum near an optimum

enum class SpectrumMode { symmetric, asymmetric };

inline const char* to_string(SpectrumMode m) {
    return m == SpectrumMode::symmetric ? "symmetric" : "asymmetric";
}

struct SpectrumValue {
    double min = 0.0;  // lambda_min (symmetric) or sigma_min of the Gram matrix
    double max = 0.0;
};

struct SpectrumSample {
    SpectrumMode mode = SpectrumMode::symmetric;
    ReducedPhases solution;
    double solution_cost = 0.0;
    double radius = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> offsets;  // length d~ (symmetric) or d+1 (asymmetric)
    std::vector<double> values;
    std::vector<double> scales;  // matching lambda_max / sigma_max
};

/// Spectrum at solution + offset. Symmetric: eigenvalues of the reduced
/// Hessian. Asymmetric: singular values of (2/d~) A^T A with A the node
/// Jacobian over all d+1 unconstrained phases.
[[nodiscard]] inline SpectrumValue spectrum_value(const ObjectiveContext& ctx, const ReducedPhases& solution,
                                                  SpectrumMode mode, const std::vector<double>& offset) {
    if (mode == SpectrumMode::symmetric) {
        ReducedPhases p = solution;
        if (offset.size() != p.phases.size()) throw invalid_argument("offset length must be d~");
        for (size_t i = 0; i < offset.size(); ++i) p.phases[i] += offset[i];
        const auto ev = hessian(ctx, p).eigenvalues;
        return {ev(ev.size() - 1), ev(0)};
    }
    auto full = symmetrize(solution);
    if (offset.size() != full.size()) throw invalid_argument("offset length must be d+1");
    for (size_t i = 0; i < offset.size(); ++i) full[i] += offset[i];
    const Eigen::MatrixXd a = asymmetric_jacobian(ctx, full);
    const Eigen::MatrixXd gram = (2.0 / ctx.d_tilde()) * a.transpose() * a;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram);
    const auto& s = svd.singularValues();
    return {s(s.size() - 1), s(0)};
}

/// Solution used by the landscape experiments: quasi-Newton from Phi~0 to
/// a tight residual.
[[nodiscard]] inline SolveReport landscape_solution(const ObjectiveContext& ctx) {
    SolverConfig cfg;
    cfg.mode = SolveMode::quasi_newton;
    cfg.epsilon = 1e-28;
    cfg.max_iters = 50000;
    try {
        return solve_quasi_newton(ctx, cfg);
    } catch (const convergence_error& e) {
        // stalled at roundoff; accept if the residual is already negligible
        if (e.report().final_cost <= 1e-24) return e.report();
        throw;
    }
}

[[nodiscard]] inline SpectrumSample spectrum_near_optimum(const ObjectiveContext& ctx,
                                                          const ReducedPhases& solution, SpectrumMode mode,
                                                          double radius, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw invalid_argument("n_samples must be positive");
    if (!(radius >= 0.0)) throw invalid_argument("radius must be nonnegative");
    ctx.check(solution);
    SpectrumSample out;
    out.mode = mode;
    out.solution = solution;
    out.solution_cost = cost(ctx, solution);
    out.radius = radius;
    out.seed = seed;
    const size_t dim = mode == SpectrumMode::symmetric ? solution.phases.size()
                                                       : static_cast<size_t>(ctx.d() + 1);
    std::mt19937_64 rng(seed);
    out.offsets.reserve(static_cast<size_t>(n_samples));
    for (int s = 0; s < n_samples; ++s) out.offsets.push_back(detail::uniform_in_ball(rng, dim, radius));
    out.values.resize(out.offsets.size());
    out.scales.resize(out.offsets.size());
    parallel_for(out.offsets.size(), [&](size_t i) {
        const SpectrumValue v = spectrum_value(ctx, solution, mode, out.offsets[i]);
        out.values[i] = v.min;
        out.scales[i] = v.max;
    });
    return out;
}

[[nodiscard]] inline SpectrumSample spectrum_near_optimum(const ObjectiveContext& ctx, SpectrumMode mode,
                                                          double radius, int n_samples, std::uint64_t seed) {
    return spectrum_near_optimum(ctx, landscape_solution(ctx).phases, mode, radius, n_samples, seed);
}

// ---------------------------------------------------------------------------
// Two-phase landscape grid

struct AnnotatedOptimum {
    ReducedPhases phases;  // wrapped into D_d
    double cost = 0.0;
    bool maximal = false;
    int q_sign = 1;
};

struct LandscapeGrid {
    int d = 0;
    int resolution = 0;
    std::vector<double> phi0;    // axis samples
    std::vector<double> phi1;
    std::vector<double> values;  // F^{1/3}, row-major in (phi0, phi1)
    std::vector<AnnotatedOptimum> optima;

    [[nodiscard]] double at(int i, int j) const {
        return values[static_cast<size_t>(i) * phi1.size() + static_cast<size_t>(j)];
    }
};

[[nodiscard]] inline LandscapeGrid grid_landscape(const ChebCoeffs& f, int resolution) {
    const ObjectiveContext ctx(f);
    if (ctx.d_tilde() != 2)
        throw invalid_argument("grid_landscape needs exactly two reduced phases (d = 2 or 3)");
    if (resolution < 2) throw invalid_argument("resolution must be at least 2");
    constexpr double pi = std::numbers::pi;
    LandscapeGrid g;
    g.d = ctx.d();
    g.resolution = resolution;
    const double span1 = detail::domain_period(ctx.parity(), 1, 2);
    for (int j = 0; j < resolution; ++j) {
        g.phi0.push_back(-pi / 2 + pi * j / resolution);
        g.phi1.push_back(-span1 / 2 + span1 * j / resolution);
    }
    g.values.resize(static_cast<size_t>(resolution) * static_cast<size_t>(resolution));
    parallel_for(static_cast<size_t>(resolution), [&](size_t i) {
        for (size_t j = 0; j < g.phi1.size(); ++j) {
            const ReducedPhases r{{g.phi0[i], g.phi1[j]}, ctx.parity()};
            g.values[i * g.phi1.size() + j] = std::cbrt(cost(ctx, r));
        }
    });
    for (const auto& s : solve_direct_all<long double>(f)) {
        AnnotatedOptimum o;
        o.phases = wrap_to_domain(s.as_double).phases;
        o.cost = cost(ctx, o.phases);
        o.maximal = s.pair.maximal && s.q_sign > 0;
        o.q_sign = s.q_sign;
        g.optima.push_back(std::move(o));
    }
    return g;
}

struct GridCell {
    int i = 0;
    int j = 0;
};

/// Cells no larger than any of their eight periodic neighbours.
[[nodiscard]] inline std::vector<GridCell> grid_minima(const LandscapeGrid& g) {
    const int n0 = static_cast<int>(g.phi0.size());
    const int n1 = static_cast<int>(g.phi1.size());
    std::vector<GridCell> out;
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) {
            const double v = g.at(i, j);
            bool low = true;
            for (int di = -1; di <= 1 && low; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    if (g.at((i + di + n0) % n0, (j + dj + n1) % n1) < v) {
                        low = false;
                        break;
                    }
                }
            if (low) out.push_back({i, j});
        }
    return out;
}

// ---------------------------------------------------------------------------
// Multi-start local minimum probe

struct ProbeCluster {
    ReducedPhases phases;        // wrapped into D_d
    double cost = 0.0;
    Eigen::VectorXd eigenvalues;  // ascending
    int hits = 0;
    bool global = false;      // F <= 1e-16
    bool local_min = false;   // lambda_min > 0; otherwise a saddle
};

struct ProbeOptions {
    double cluster_radius = 1e-6;
    double global_tol = 1e-16;
    double grad_tol = 1e-11;
    int max_iters = 5000;
};

struct ProbeResult {
    std::uint64_t seed = 0;
    int n_starts = 0;
    int unconverged = 0;  // starts whose gradient never fell below 1e-8
    std::vector<ProbeCluster> clusters;
};

[[nodiscard]] inline ProbeResult local_min_probe(const ObjectiveContext& ctx, int n_starts, std::uint64_t seed,
                                                 const ProbeOptions& opt = {}) {
    if (n_starts < 1) throw invalid_argument("n_starts must be positive");
    const size_t n = static_cast<size_t>(ctx.d_tilde());
    const Parity par = ctx.parity();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    std::vector<std::vector<double>> starts(static_cast<size_t>(n_starts), std::vector<double>(n));
    for (auto& s : starts)
        for (size_t i = 0; i < n; ++i) s[i] = unit(rng) * detail::domain_period(par, i, n);

    auto fg = [&](const std::vector<double>& v, std::vector<double>& g) {
        return cost_gradient(ctx, ReducedPhases{v, par}, g);
    };
    std::vector<LbfgsResult> runs(starts.size());
    parallel_for(starts.size(), [&](size_t s) {
        runs[s] = minimize_lbfgs(fg, starts[s], 0.0, opt.grad_tol, opt.max_iters);
    });

    ProbeResult out;
    out.seed = seed;
    out.n_starts = n_starts;
    for (const auto& r : runs) {
        if (r.grad_norm > 1e-8) {
            ++out.unconverged;
            continue;
        }
        const ReducedPhases p = wrap_to_domain(ReducedPhases{r.x, par}).phases;
        auto hit = std::find_if(out.clusters.begin(), out.clusters.end(), [&](const ProbeCluster& c) {
            return periodic_distance(c.phases, p) <= opt.cluster_radius;
        });
        if (hit != out.clusters.end()) {
            ++hit->hits;
            continue;
        }
        ProbeCluster c;
        c.phases = p;
        c.cost = cost(ctx, p);
        c.eigenvalues = hessian(ctx, p).eigenvalues.reverse();
        c.hits = 1;
        c.global = c.cost <= opt.global_tol;
        c.local_min = c.eigenvalues(0) > 0.0;
        out.clusters.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Solution classes under f -> 10^{-k} f

struct ClassLimitOptions {
    int k_limit = 30;       // scale exponent standing in for k -> infinity
    int substeps = 4;       // continuation steps per decade
    unsigned bits = 512;    // MPFR precision of the direct solves
    int qn_max_iters = 5000;
};

struct SolutionClass {
    std::string label;
    ReducedPhases limit;            // Phi_0^class, wrapped
    bool maximal = false;
    std::vector<double> distances;  // ||Phi*(k) - limit|| for k = 1..k_max
    std::vector<ReducedPhases> solutions;
    std::vector<TraceEntry> qn_trace;  // quasi-Newton on 10^{-k_max} f started at the limit
    double qn_final_cost = 0.0;
    double qn_distance = 0.0;          // from the class's direct solution at k_max
};

struct ClassLimitStudy {
    ChebCoeffs f;
    int k_max = 0;
    ClassLimitOptions options;
    std::vector<int> ks;
    std::vector<SolutionClass> classes;  // maximal class first
};

namespace detail {

inline ChebCoeffs scaled(const ChebCoeffs& f, double s) {
    ChebCoeffs g = f;
    for (double& c : g.coeffs) c *= s;
    return g;
}

struct ClassPoint {
    ReducedPhases phases;
    bool maximal = false;
};

inline std::vector<ClassPoint> all_solutions_mp(const ChebCoeffs& f, unsigned bits) {
    MpPrecisionScope scope(bits);
    std::vector<ClassPoint> out;
    for (const auto& s : solve_direct_all<mp_real>(f))
        out.push_back({wrap_to_domain(s.as_double).phases, s.pair.maximal && s.q_sign > 0});
    return out;
}

// Greedy nearest assignment: slot c of the result is the point closest to prev[c].
inline std::vector<ReducedPhases> match_by_continuity(const std::vector<ReducedPhases>& prev,
                                                      const std::vector<ClassPoint>& next) {
    if (prev.size() != next.size()) throw numerical_failure("solution count changed along the continuation");
    struct Cand {
        double dist;
        size_t c, p;
    };
    std::vector<Cand> cands;
    for (size_t c = 0; c < prev.size(); ++c)
        for (size_t p = 0; p < next.size(); ++p) cands.push_back({periodic_distance(prev[c], next[p].phases), c, p});
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        return a.c != b.c ? a.c < b.c : a.p < b.p;
    });
    std::vector<ReducedPhases> out(prev.size());
    std::vector<bool> used_c(prev.size(), false), used_p(next.size(), false);
    for (const auto& k : cands) {
        if (used_c[k.c] || used_p[k.p]) continue;
        used_c[k.c] = used_p[k.p] = true;
        out[k.c] = next[k.p].phases;
    }
    return out;
}

}  // namespace detail

/// Direct-solves 10^{-k} f for every admissible class, k = 1..k_max, and
/// measures each class's distance to its k -> infinity limit. Classes are
/// followed from k_limit downwards by continuity in k.
[[nodiscard]] inline ClassLimitStudy class_limit_study(const ChebCoeffs& f, int k_max,
                                                       const ClassLimitOptions& opt = {}) {
    if (k_max < 1) throw invalid_argument("k_max must be >= 1");
    if (opt.k_limit <= k_max) throw invalid_argument("k_limit must exceed k_max");
    if (opt.substeps < 1) throw invalid_argument("substeps must be >= 1");
    ClassLimitStudy st;
    st.f = f;
    st.k_max = k_max;
    st.options = opt;

    const auto limit_pts = detail::all_solutions_mp(detail::scaled(f, std::pow(10.0, -opt.k_limit)), opt.bits);
    std::vector<size_t> order(limit_pts.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (limit_pts[a].maximal != limit_pts[b].maximal) return limit_pts[a].maximal;
        return limit_pts[a].phases.phases < limit_pts[b].phases.phases;
    });
    std::vector<ReducedPhases> cur;
    for (size_t i = 0; i < order.size(); ++i) {
        SolutionClass c;
        c.label = "class " + std::to_string(i + 1);
        c.limit = limit_pts[order[i]].phases;
        c.maximal = limit_pts[order[i]].maximal;
        c.distances.assign(static_cast<size_t>(k_max), 0.0);
        c.solutions.resize(static_cast<size_t>(k_max));
        cur.push_back(c.limit);
        st.classes.push_back(std::move(c));
    }

    for (int step = opt.k_limit * opt.substeps - 1; step >= opt.substeps; --step) {
        const double k = static_cast<double>(step) / opt.substeps;
        const auto pts = detail::all_solutions_mp(detail::scaled(f, std::pow(10.0, -k)), opt.bits);
        cur = detail::match_by_continuity(cur, pts);
        if (step % opt.substeps != 0) continue;
        const int ki = step / opt.substeps;
        if (ki > k_max) continue;
        for (size_t c = 0; c < st.classes.size(); ++c) {
            auto& cls = st.classes[c];
            cls.solutions[static_cast<size_t>(ki - 1)] = cur[c];
            cls.distances[static_cast<size_t>(ki - 1)] = periodic_distance(cur[c], cls.limit);
        }
    }
    for (int k = 1; k <= k_max; ++k) st.ks.push_back(k);

    const ObjectiveContext ctx(detail::scaled(f, std::pow(10.0, -k_max)));
    const double sup = ctx.sup_norm().value;
    SolverConfig cfg;
    cfg.mode = SolveMode::quasi_newton;
    cfg.epsilon = std::max(1e-30, 1e-12 * sup * sup);
    cfg.max_iters = opt.qn_max_iters;
    parallel_for(st.classes.size(), [&](size_t c) {
        auto& cls = st.classes[c];
        SolveReport rep;
        try {
            rep = solve_quasi_newton(ctx, cfg, cls.limit);
        } catch (const convergence_error& e) {
            rep = e.report();
        }
        cls.qn_trace = rep.trace;
        cls.qn_final_cost = rep.final_cost;
        cls.qn_distance = periodic_distance(wrap_to_domain(rep.phases).phases, cls.solutions.back());
    });
    return st;
}

}  // namespace qsp

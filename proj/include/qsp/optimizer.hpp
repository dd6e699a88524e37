#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qsp/objective.hpp"

namespace qsp {

inline constexpr double kSigma = 0.25;
inline constexpr double kLipschitz = 6.25;

/// Sup-norm below which the local convergence theory applies: sqrt(3)/(20 pi d~).
[[nodiscard]] inline double norm_condition_bound(int d_tilde) {
    return std::sqrt(3.0) / (20.0 * std::numbers::pi * d_tilde);
}

enum class SolveMode { projected_gd, quasi_newton };

struct SolverConfig {
    SolveMode mode = SolveMode::projected_gd;
    double epsilon = 1e-12;
    int max_iters = 100000;
    double step_size = 0.0;    // <= 0: 1/L
    double ball_radius = 0.0;  // <= 0: 1/(20 d~)
    bool enforce_norm_condition = true;
    int lbfgs_memory = 10;
    double armijo = 1e-4;
    double backtrack = 0.5;
};

struct TraceEntry {
    int iter = 0;
    double cost = 0.0;
    double dist_to_phi0 = 0.0;
    bool projected = false;
};

/// Certificate flags; empty optional means not applicable to the run.
struct Certificate {
    std::optional<bool> norm_condition_met;
    std::optional<bool> stayed_in_ball;
    std::optional<bool> rate_bound_satisfied;
};

struct SolveReport {
    ReducedPhases phases;
    double final_cost = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<TraceEntry> trace;
    Certificate certificate;
};

/// Thrown when the iteration limit is hit or the line search breaks down.
class convergence_error : public numerical_failure {
public:
    convergence_error(const std::string& what, SolveReport report)
        : numerical_failure(what), report_(std::move(report)) {}
    [[nodiscard]] const SolveReport& report() const { return report_; }

private:
    SolveReport report_;
};

[[nodiscard]] inline double distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

/// Euclidean projection onto the closed ball.
[[nodiscard]] inline ReducedPhases project_ball(const ReducedPhases& r, const ReducedPhases& center,
                                                double radius) {
    if (!(radius > 0.0)) throw invalid_argument("project_ball: radius must be positive");
    const double dist = distance(r.phases, center.phases);
    if (dist <= radius) return r;
    ReducedPhases out = center;
    for (size_t i = 0; i < r.phases.size(); ++i)
        out.phases[i] = center.phases[i] + radius * (r.phases[i] - center.phases[i]) / dist;
    return out;
}

namespace detail {

inline void check_config(const SolverConfig& cfg) {
    if (!(cfg.epsilon > 0.0)) throw invalid_argument("epsilon must be positive");
    if (cfg.max_iters < 0) throw invalid_argument("max_iters must be nonnegative");
}

/// ||Phi^l - Phi*||^2 <= exp(-(sigma/L) l) ||Phi^0 - Phi*||^2 along the iterates.
inline bool rate_bound_holds(const std::vector<std::vector<double>>& iterates) {
    if (iterates.empty()) return true;
    const auto& last = iterates.back();
    const double d0 = distance(iterates.front(), last);
    for (size_t l = 0; l < iterates.size(); ++l) {
        const double dl = distance(iterates[l], last);
        const double bound = std::exp(-(kSigma / kLipschitz) * static_cast<double>(l)) * d0 * d0;
        if (dl * dl > bound * (1.0 + 1e-12) + 1e-300) return false;
    }
    return true;
}

}  // namespace detail

/// Projected gradient descent from Phi~0 with step 1/L inside the ball of
/// radius 1/(20 d~) around Phi~0.
[[nodiscard]] inline SolveReport solve_projected_gd(const ObjectiveContext& ctx,
                                                    const SolverConfig& cfg = {}) {
    detail::check_config(cfg);
    const int dt = ctx.d_tilde();
    const double step = cfg.step_size > 0.0 ? cfg.step_size : 1.0 / kLipschitz;
    const double radius = cfg.ball_radius > 0.0 ? cfg.ball_radius : 1.0 / (20.0 * dt);
    const ReducedPhases phi0 = ReducedPhases::initial(ctx.d());

    SolveReport rep;
    const bool norm_ok = ctx.sup_norm().value <= norm_condition_bound(dt);
    if (cfg.enforce_norm_condition && !norm_ok)
        throw invalid_argument("target violates the norm condition ||f||_inf <= sqrt(3)/(20 pi d~) = " +
                               std::to_string(norm_condition_bound(dt)) +
                               "; disable enforcement or use quasi-Newton mode");
    rep.certificate.norm_condition_met = norm_ok;

    ReducedPhases cur = phi0;
    std::vector<double> grad;
    std::vector<std::vector<double>> iterates{cur.phases};
    bool in_ball = true;
    double f = cost_gradient(ctx, cur, grad);
    rep.trace.push_back({0, f, 0.0, false});
    int it = 0;
    while (f > cfg.epsilon && it < cfg.max_iters) {
        ReducedPhases next = cur;
        for (size_t i = 0; i < next.phases.size(); ++i) next.phases[i] -= step * grad[i];
        const bool outside = distance(next.phases, phi0.phases) > radius;
        if (outside) next = project_ball(next, phi0, radius);
        cur = std::move(next);
        ++it;
        f = cost_gradient(ctx, cur, grad);
        const double dist = distance(cur.phases, phi0.phases);
        if (dist > radius + 1e-14) in_ball = false;
        rep.trace.push_back({it, f, dist, outside});
        iterates.push_back(cur.phases);
    }
    rep.phases = cur;
    rep.final_cost = f;
    rep.iterations = it;
    rep.converged = f <= cfg.epsilon;
    rep.certificate.stayed_in_ball = in_ball;
    rep.certificate.rate_bound_satisfied = detail::rate_bound_holds(iterates);
    if (!rep.converged)
        throw convergence_error("projected gradient descent did not reach F <= epsilon within " +
                                    std::to_string(cfg.max_iters) + " iterations",
                                std::move(rep));
    return rep;
}

struct LbfgsResult {
    std::vector<double> x;
    double f = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    enum class Status { reached_target, stationary, line_search_failed, max_iters } status{};
    std::vector<double> costs;
};

/// Limited-memory BFGS with Armijo backtracking. Stops when f <= f_target,
/// ||grad|| <= grad_tol, or the line search cannot make progress.
inline LbfgsResult minimize_lbfgs(
    const std::function<double(const std::vector<double>&, std::vector<double>&)>& fg,
    std::vector<double> x, double f_target, double grad_tol, int max_iters, int memory = 10,
    double armijo = 1e-4, double backtrack = 0.5,
    const std::function<void(const std::vector<double>&, double)>& observe = {}) {
    const size_t n = x.size();
    auto dotp = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    LbfgsResult out;
    std::vector<double> g(n), gn(n), xn(n), dir(n);
    double f = fg(x, g);
    out.costs.push_back(f);
    if (observe) observe(x, f);
    std::deque<std::vector<double>> S, Y;
    std::deque<double> rho;
    int it = 0;
    auto finish = [&](LbfgsResult::Status st) {
        out.x = x;
        out.f = f;
        out.grad_norm = std::sqrt(dotp(g, g));
        out.iterations = it;
        out.status = st;
        return out;
    };
    while (true) {
        if (f <= f_target) return finish(LbfgsResult::Status::reached_target);
        if (std::sqrt(dotp(g, g)) <= grad_tol) return finish(LbfgsResult::Status::stationary);
        if (it >= max_iters) return finish(LbfgsResult::Status::max_iters);
        // two-loop recursion
        dir = g;
        std::vector<double> alpha(S.size());
        for (size_t k = S.size(); k-- > 0;) {
            alpha[k] = rho[k] * dotp(S[k], dir);
            for (size_t i = 0; i < n; ++i) dir[i] -= alpha[k] * Y[k][i];
        }
        double gamma = 1.0;
        if (!S.empty()) gamma = dotp(S.back(), Y.back()) / dotp(Y.back(), Y.back());
        for (double& v : dir) v *= gamma;
        for (size_t k = 0; k < S.size(); ++k) {
            const double beta = rho[k] * dotp(Y[k], dir);
            for (size_t i = 0; i < n; ++i) dir[i] += (alpha[k] - beta) * S[k][i];
        }
        for (double& v : dir) v = -v;
        double slope = dotp(g, dir);
        if (!(slope < 0.0)) {
            S.clear();
            Y.clear();
            rho.clear();
            for (size_t i = 0; i < n; ++i) dir[i] = -g[i];
            slope = -dotp(g, g);
        }
        double t = 1.0;
        double fn = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (size_t i = 0; i < n; ++i) xn[i] = x[i] + t * dir[i];
            fn = fg(xn, gn);
            if (std::isfinite(fn) && fn <= f + armijo * t * slope) {
                accepted = true;
                break;
            }
            t *= backtrack;
        }
        if (!accepted || fn >= f) return finish(LbfgsResult::Status::line_search_failed);
        std::vector<double> s(n), y(n);
        for (size_t i = 0; i < n; ++i) {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
        }
        const double sy = dotp(s, y);
        if (sy > 1e-300) {
            S.push_back(std::move(s));
            Y.push_back(std::move(y));
            rho.push_back(1.0 / sy);
            if (static_cast<int>(S.size()) > memory) {
                S.pop_front();
                Y.pop_front();
                rho.pop_front();
            }
        }
        x = xn;
        g = gn;
        f = fn;
        ++it;
        out.costs.push_back(f);
        if (observe) observe(x, f);
    }
}

/// Quasi-Newton solve from Phi~0 (or a supplied start); no convergence guarantee.
[[nodiscard]] inline SolveReport solve_quasi_newton(const ObjectiveContext& ctx,
                                                    const SolverConfig& cfg = {},
                                                    std::optional<ReducedPhases> start = std::nullopt) {
    detail::check_config(cfg);
    const ReducedPhases phi0 = ReducedPhases::initial(ctx.d());
    ReducedPhases x0 = start ? *start : phi0;
    ctx.check(x0);
    const Parity par = ctx.parity();
    auto fg = [&](const std::vector<double>& v, std::vector<double>& g) {
        return cost_gradient(ctx, ReducedPhases{v, par}, g);
    };
    SolveReport rep;
    auto observe = [&](const std::vector<double>& v, double f) {
        rep.trace.push_back({static_cast<int>(rep.trace.size()), f, distance(v, phi0.phases), false});
    };
    const LbfgsResult res = minimize_lbfgs(fg, x0.phases, cfg.epsilon, 0.0, cfg.max_iters,
                                           cfg.lbfgs_memory, cfg.armijo, cfg.backtrack, observe);
    rep.phases = ReducedPhases{res.x, par};
    rep.final_cost = res.f;
    rep.iterations = res.iterations;
    rep.converged = res.status == LbfgsResult::Status::reached_target;
    if (!rep.converged) {
        const char* why = res.status == LbfgsResult::Status::max_iters
                              ? "quasi-Newton hit the iteration limit"
                              : "quasi-Newton line search made no progress";
        throw convergence_error(std::string(why) + " at F = " + std::to_string(res.f), std::move(rep));
    }
    return rep;
}

[[nodiscard]] inline SolveReport solve(const ObjectiveContext& ctx, const SolverConfig& cfg = {}) {
    return cfg.mode == SolveMode::projected_gd ? solve_projected_gd(ctx, cfg)
                                               : solve_quasi_newton(ctx, cfg);
}

struct CertifyReport {
    double distance_to_phi0 = 0.0;
    std::optional<double> distance_bound;  // (pi/sqrt 3) ||f||_inf when ||f||_inf <= 1/2
    std::optional<bool> distance_bound_ok;
    std::optional<double> lambda_min;
    std::optional<double> lambda_max;
    std::optional<bool> hessian_window_ok;  // 1/4 <= lambda <= 25/4 under the norm condition
    double sup_residual = 0.0;              // max |g - f| on an oversampled grid
    int sup_grid = 0;
};

[[nodiscard]] inline CertifyReport certify(const SolveReport& report, const ObjectiveContext& ctx) {
    CertifyReport c;
    const ReducedPhases phi0 = ReducedPhases::initial(ctx.d());
    c.distance_to_phi0 = distance(report.phases.phases, phi0.phases);
    const double sup = ctx.sup_norm().value;
    if (sup <= 0.5) {
        c.distance_bound = std::numbers::pi / std::sqrt(3.0) * sup;
        c.distance_bound_ok = c.distance_to_phi0 <= *c.distance_bound + 1e-10;
    }
    if (sup <= norm_condition_bound(ctx.d_tilde())) {
        const auto ev = hessian(ctx, report.phases).eigenvalues;
        c.lambda_max = ev(0);
        c.lambda_min = ev(ev.size() - 1);
        c.hessian_window_ok = *c.lambda_min >= kSigma && *c.lambda_max <= kLipschitz;
    }
    const int n = 10 * (ctx.d() + 1);
    for (int j = 0; j <= n; ++j) {
        const double x = std::cos(std::numbers::pi * j / n);
        c.sup_residual = std::max(c.sup_residual,
                                  std::abs(g_value(x, report.phases) - eval_series(ctx.target(), x)));
    }
    c.sup_grid = n + 1;
    return c;
}

}  // namespace qsp

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "qsp/direct.hpp"
#include "qsp/optimizer.hpp"

using namespace qsp;

namespace {

ChebCoeffs scaled_target(std::mt19937_64& rng, int d, double sup) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> c(static_cast<size_t>(d) + 1, 0.0);
    for (int k = d % 2; k <= d; k += 2) c[static_cast<size_t>(k)] = u(rng);
    const double m = max_norm(ChebCoeffs::make(c));
    for (double& v : c) v *= sup / m;
    return ChebCoeffs::make(c);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST(ProjectBall, Cases) {
    const auto c = ReducedPhases::for_degree(3, {0.0, 0.0});
    const auto inside = ReducedPhases::for_degree(3, {0.3, 0.4});
    EXPECT_EQ(project_ball(inside, c, 0.5).phases, inside.phases);
    const auto out = project_ball(ReducedPhases::for_degree(3, {3.0, 4.0}), c, 0.5);
    EXPECT_NEAR(out.phases[0], 0.3, 1e-15);
    EXPECT_NEAR(out.phases[1], 0.4, 1e-15);
    EXPECT_THROW((void)project_ball(inside, c, 0.0), qsp::invalid_argument);
    // idempotent and nonexpansive
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        auto a = ReducedPhases::for_degree(5, {n(rng), n(rng), n(rng)});
        auto b = ReducedPhases::for_degree(5, {n(rng), n(rng), n(rng)});
        const auto center = ReducedPhases::initial(5);
        const auto pa = project_ball(a, center, 0.2), pb = project_ball(b, center, 0.2);
        EXPECT_LE(distance(pa.phases, center.phases), 0.2 + 1e-15);
        EXPECT_LE(max_abs_diff(project_ball(pa, center, 0.2).phases, pa.phases), 1e-15);
        EXPECT_LE(distance(pa.phases, pb.phases), distance(a.phases, b.phases) + 1e-15);
    }
}

TEST(ProjectedGD, ZeroTargetReturnsInitialPhases) {
    for (int d = 1; d <= 9; ++d) {
        const ObjectiveContext ctx(ChebCoeffs::make(std::vector<double>(static_cast<size_t>(d) + 1, 0.0), parity_of(d)));
        const auto rep = solve(ctx);
        EXPECT_EQ(rep.iterations, 0);
        EXPECT_TRUE(rep.converged);
        EXPECT_LT(rep.final_cost, 1e-30);
        EXPECT_EQ(rep.phases.phases, ReducedPhases::initial(d).phases);
        ASSERT_EQ(rep.trace.size(), 1u);
        EXPECT_TRUE(*rep.certificate.norm_condition_met);
    }
}

TEST(ProjectedGD, LinearTargetWithoutNormCondition) {
    const ObjectiveContext ctx(ChebCoeffs::make({0.0, 0.3}));
    EXPECT_THROW((void)solve(ctx), qsp::invalid_argument);
    SolverConfig cfg;
    cfg.enforce_norm_condition = false;
    cfg.ball_radius = 1.0;
    cfg.epsilon = 1e-24;
    const auto rep = solve(ctx, cfg);
    EXPECT_NEAR(rep.phases.phases[0], 0.5 * std::acos(0.3), 1e-10);
    EXPECT_NEAR(rep.phases.phases[0], 0.6330518, 1e-7);
    EXPECT_FALSE(*rep.certificate.norm_condition_met);
}

TEST(ProjectedGD, NormConditionTargetMatchesDirectSolution) {
    std::mt19937_64 rng(21);
    const int d = 21;
    const int dt = reduced_length(d);
    const auto f = scaled_target(rng, d, norm_condition_bound(dt) * (1 - 1e-9));
    const ObjectiveContext ctx(f);
    SolverConfig cfg;
    cfg.epsilon = 1e-12;
    const auto rep = solve(ctx, cfg);
    EXPECT_LE(rep.final_cost, 1e-12);
    EXPECT_TRUE(*rep.certificate.norm_condition_met);
    EXPECT_TRUE(*rep.certificate.stayed_in_ball);
    EXPECT_TRUE(*rep.certificate.rate_bound_satisfied);

    const auto oracle = solve_direct_maximal(f).as_double;
    EXPECT_LE(periodic_distance(rep.phases, oracle), 1e-5);
    const double d0 = distance(ReducedPhases::initial(d).phases, oracle.phases);
    const double bound = (kLipschitz / kSigma) * std::log(kLipschitz * d0 * d0 / (2 * cfg.epsilon)) + 1;
    EXPECT_LE(rep.iterations, bound);

    // tighter tolerance lands on the oracle
    cfg.epsilon = 1e-26;
    EXPECT_LE(periodic_distance(solve(ctx, cfg).phases, oracle), 1e-10);
}

TEST(ProjectedGD, TraceAndBall) {
    std::mt19937_64 rng(4);
    for (int d : {5, 8, 13}) {
        const int dt = reduced_length(d);
        const ObjectiveContext ctx(scaled_target(rng, d, 0.5 * norm_condition_bound(dt)));
        const auto rep = solve(ctx);
        EXPECT_EQ(static_cast<int>(rep.trace.size()), rep.iterations + 1);
        for (const auto& e : rep.trace) EXPECT_LE(e.dist_to_phi0, 1.0 / (20.0 * dt) + 1e-14);
        for (size_t k = 1; k < rep.trace.size(); ++k) EXPECT_LE(rep.trace[k].cost, rep.trace[k - 1].cost);
    }
}

TEST(ProjectedGD, ConvergenceErrorCarriesReport) {
    const ObjectiveContext ctx(ChebCoeffs::make({0.0, 0.3}));
    SolverConfig cfg;
    cfg.enforce_norm_condition = false;
    cfg.max_iters = 3;
    try {
        (void)solve(ctx, cfg);
        FAIL() << "expected convergence_error";
    } catch (const convergence_error& e) {
        EXPECT_EQ(e.report().iterations, 3);
        EXPECT_EQ(e.report().trace.size(), 4u);
        EXPECT_FALSE(e.report().converged);
    }
}

TEST(QuasiNewton, HalfT2ClosedForm) {
    // g = 2 cos(phi1) cos(2 phi0) x^2 - cos(2 phi0 - phi1) must equal x^2 - 1/2
    const ObjectiveContext ctx(ChebCoeffs::make({0.0, 0.0, 0.5}));
    SolverConfig cfg;
    cfg.mode = SolveMode::quasi_newton;
    cfg.epsilon = 1e-28;
    const auto rep = solve(ctx, cfg);
    const double p0 = rep.phases.phases[0], p1 = rep.phases.phases[1];
    EXPECT_NEAR(2 * std::cos(p1) * std::cos(2 * p0), 1.0, 1e-12);
    EXPECT_NEAR(std::cos(2 * p0 - p1), 0.5, 1e-12);
    for (double x : {-0.9, 0.1, 0.77}) EXPECT_NEAR(g_value(x, rep.phases), x * x - 0.5, 1e-12);
}

TEST(QuasiNewton, FindsSolutionsBeyondNormCondition) {
    std::mt19937_64 rng(6);
    for (int d : {10, 25, 40}) {
        const ObjectiveContext ctx(scaled_target(rng, d, 0.5));
        SolverConfig cfg;
        cfg.mode = SolveMode::quasi_newton;
        cfg.epsilon = 1e-20;
        const auto rep = solve(ctx, cfg);
        EXPECT_LE(rep.final_cost, 1e-20);
        EXPECT_FALSE(rep.certificate.norm_condition_met.has_value());
        const auto c = certify(rep, ctx);
        EXPECT_LE(c.sup_residual, 1e-8);
    }
}

TEST(Certify, ZeroTarget) {
    for (int d : {3, 4}) {
        const ObjectiveContext ctx(ChebCoeffs::make(std::vector<double>(static_cast<size_t>(d) + 1, 0.0), parity_of(d)));
        const auto c = certify(solve(ctx), ctx);
        EXPECT_EQ(c.distance_to_phi0, 0.0);
        EXPECT_TRUE(*c.distance_bound_ok);
        EXPECT_NEAR(*c.lambda_max, 4.0, 1e-12);
        EXPECT_NEAR(*c.lambda_min, d % 2 ? 4.0 : 2.0, 1e-12);
        EXPECT_TRUE(*c.hessian_window_ok);
        EXPECT_LT(c.sup_residual, 1e-15);
    }
}

TEST(Certify, DistanceBoundOnLargeTargets) {
    std::mt19937_64 rng(8);
    for (int d = 2; d <= 12; ++d) {
        const auto f = scaled_target(rng, d, 0.49);
        const ObjectiveContext ctx(f);
        SolveReport rep;
        rep.phases = solve_direct_maximal(f).as_double;
        const auto c = certify(rep, ctx);
        ASSERT_TRUE(c.distance_bound.has_value());
        EXPECT_NEAR(*c.distance_bound, std::numbers::pi / std::sqrt(3.0) * ctx.sup_norm().value, 1e-15);
        EXPECT_TRUE(*c.distance_bound_ok);
        EXPECT_FALSE(c.hessian_window_ok.has_value());
        EXPECT_LT(c.sup_residual, 1e-10);
    }
}

TEST(Solver, RejectsBadConfig) {
    const ObjectiveContext ctx(ChebCoeffs::make({0.0, 0.001}));
    SolverConfig cfg;
    cfg.epsilon = 0.0;
    EXPECT_THROW((void)solve(ctx, cfg), qsp::invalid_argument);
    cfg.epsilon = 1e-12;
    cfg.max_iters = -1;
    EXPECT_THROW((void)solve(ctx, cfg), qsp::invalid_argument);
}

TEST(RateBound, DetectsViolation) {
    EXPECT_TRUE(detail::rate_bound_holds({{0.0}, {0.5}, {0.7}, {1.0}}));
    // jumping away then back breaks the bound
    EXPECT_FALSE(detail::rate_bound_holds({{0.0}, {2.0}, {1.0}}));
}

TEST(Lbfgs, Rosenbrock) {
    auto fg = [](const std::vector<double>& x, std::vector<double>& g) {
        const double a = 1 - x[0], b = x[1] - x[0] * x[0];
        g = {-2 * a - 400 * x[0] * b, 200 * b};
        return a * a + 100 * b * b;
    };
    const auto r = minimize_lbfgs(fg, {-1.2, 1.0}, 1e-20, 1e-12, 1000);
    EXPECT_NEAR(r.x[0], 1.0, 1e-8);
    EXPECT_NEAR(r.x[1], 1.0, 1e-8);
    EXPECT_EQ(r.costs.size(), static_cast<size_t>(r.iterations) + 1);
}

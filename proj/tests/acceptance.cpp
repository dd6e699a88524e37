// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

#include "qsp/landscape.hpp"
#include "qsp/multiprecision.hpp"
#include "qsp/optimizer.hpp"

using namespace qsp;

namespace {

constexpr double pi = std::numbers::pi;

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail, double seconds) {
    std::printf("%s criterion %d: %s | %s | %.1fs\n", ok ? "PASS" : "FAIL", id, name, detail.c_str(), seconds);
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

ChebCoeffs scaled_target(std::mt19937_64& rng, int d, double sup) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> c(static_cast<size_t>(d) + 1, 0.0);
    for (int k = d % 2; k <= d; k += 2) c[static_cast<size_t>(k)] = u(rng);
    const double m = max_norm(ChebCoeffs::make(c));
    for (double& v : c) v *= sup / m;
    return ChebCoeffs::make(c);
}

double sampled_sup(const ChebCoeffs& f, int points) {
    double m = 0.0;
    for (int j = 0; j < points; ++j) m = std::max(m, std::abs(eval_series(f, std::cos(pi * j / (points - 1)))));
    return m;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// worst violation of the q-coefficient bounds and chain, <= 0 when they hold
double q_violation(const ChebCoeffs& f, const DirectSolution<long double>& sol) {
    const int d = f.degree();
    const double sup = sampled_sup(f, 16 * (d + 1));
    const double nt = norm_T(f);
    const double fd = f.coeffs.back();
    const double qd = static_cast<double>(sol.pair.q.back());
    double worst = std::max(1 - sup * sup - qd * qd, qd * qd - (1 - nt * nt + 0.5 * fd * fd));
    double prev = 0.0;
    for (const auto& l : sol.trace.levels) {
        const double q = static_cast<double>(l.q_lead);
        worst = std::max({worst, -q, prev - q});
        prev = q;
    }
    if (d % 2 == 1) worst = std::max(worst, std::abs(prev - 1.0));
    return worst;
}

// ---------------------------------------------------------------------------

void hessian_identity() {
    Timer t;
    double worst = 0.0;
    std::mt19937_64 rng(1);
    for (int d = 2; d <= 41; ++d) {
        // the identity holds for any target; use a zero one and a random small one
        for (int pass = 0; pass < 2; ++pass) {
            const auto f = pass == 0 ? ChebCoeffs::make(std::vector<double>(static_cast<size_t>(d) + 1, 0.0), parity_of(d))
                                     : scaled_target(rng, d, 0.01);
            const ObjectiveContext ctx(f);
            const auto h = hessian(ctx, ReducedPhases::initial(d));
            const Eigen::Index n = h.hessian.rows();
            Eigen::MatrixXd expect = 4.0 * Eigen::MatrixXd::Identity(n, n);
            if (d % 2 == 0) expect(n - 1, n - 1) = 2.0;
            worst = std::max(worst, (h.hessian - expect).cwiseAbs().maxCoeff());
        }
    }
    report(1, "Hessian at initial phases", worst <= 1e-10, "max entry error " + sci(worst) + " (tol 1e-10)", t.seconds());
}

struct Instance {
    ChebCoeffs f;
    DirectSolution<long double> direct;
};

std::vector<Instance> pgd_guarantee() {
    Timer t;
    std::mt19937_64 rng(2);
    std::vector<Instance> out;
    int bad_cost = 0, bad_ball = 0, bad_rate = 0, bad_match = 0;
    double worst_cost = 0.0, worst_ratio = 0.0;
    for (int i = 0; i < 50; ++i) {
        const int d = 5 + (96 * i) / 49;
        const int dt = reduced_length(d);
        const auto f = scaled_target(rng, d, norm_condition_bound(dt) * (1 - 1e-9));
        const ObjectiveContext ctx(f);
        const auto rep = solve(ctx);
        worst_cost = std::max(worst_cost, rep.final_cost);
        if (rep.final_cost > 1e-12) ++bad_cost;

        // replay the iteration to get every iterate and measure it against the direct solution
        const auto phi0 = ReducedPhases::initial(d);
        const double radius = 1.0 / (20.0 * dt);
        auto sol = solve_direct_maximal_escalating(f).solution;
        const auto& star = sol.as_double.phases;
        ReducedPhases cur = phi0;
        std::vector<double> grad;
        double fc = cost_gradient(ctx, cur, grad);
        const double d0 = distance(phi0.phases, star);
        bool in_ball = true, rate = true;
        for (int l = 0;; ++l) {
            const double dl = distance(cur.phases, star);
            const double bound = std::exp(-(kSigma / kLipschitz) * l) * d0 * d0;
            if (d0 > 0 && l > 0) worst_ratio = std::max(worst_ratio, dl * dl / bound);
            if (dl * dl > bound * (1 + 1e-9)) rate = false;
            if (distance(cur.phases, phi0.phases) > radius + 1e-14) in_ball = false;
            if (fc <= 1e-12) break;
            for (size_t k = 0; k < grad.size(); ++k) cur.phases[k] -= (1.0 / kLipschitz) * grad[k];
            cur = project_ball(cur, phi0, radius);
            fc = cost_gradient(ctx, cur, grad);
        }
        if (cur.phases != rep.phases.phases) ++bad_match;
        if (!in_ball || !*rep.certificate.stayed_in_ball) ++bad_ball;
        if (!rate) ++bad_rate;
        out.push_back({f, std::move(sol)});
    }
    const bool ok = bad_cost + bad_ball + bad_rate + bad_match == 0;
    report(2, "projected GD under the norm condition", ok,
           "50 targets d=5..101: max F " + sci(worst_cost) + ", ball violations " + std::to_string(bad_ball) +
               ", rate violations " + std::to_string(bad_rate) + " (max ratio " + sci(worst_ratio) +
               "), replay mismatches " + std::to_string(bad_match),
           t.seconds());
    return out;
}

double distance_and_q_bounds(const std::vector<Instance>& pgd_set) {
    Timer t;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    int bad = 0;
    double worst_ratio = 0.0, worst_q = -1.0;
    for (int i = 0; i < 100; ++i) {
        const int d = 1 + i % 30;
        const auto f = scaled_target(rng, d, 0.5 * u(rng));
        const auto sol = solve_direct_maximal_escalating(f).solution;
        const double sup = sampled_sup(f, 16 * (d + 1));
        const double dist = distance(sol.as_double.phases, ReducedPhases::initial(d).phases);
        const double bound = pi / std::sqrt(3.0) * sup;
        if (dist > bound + 1e-10) ++bad;
        if (bound > 0) worst_ratio = std::max(worst_ratio, dist / bound);
        worst_q = std::max(worst_q, q_violation(f, sol));
    }
    for (const auto& inst : pgd_set) worst_q = std::max(worst_q, q_violation(inst.f, inst.direct));
    report(3, "distance bound for maximal solutions", bad == 0,
           "100 targets d<=30: violations " + std::to_string(bad) + ", max dist/bound " + sci(worst_ratio), t.seconds());
    return worst_q;
}

void cross_backend(const std::vector<Instance>& pgd_set) {
    Timer t;
    double worst = 0.0;
    int n = 0;
    SolverConfig cfg;
    cfg.epsilon = 1e-26;
    for (const auto& inst : pgd_set) {
        if (inst.f.degree() > 30) continue;
        const auto rep = solve(ObjectiveContext(inst.f), cfg);
        worst = std::max(worst, max_abs_diff(rep.phases.phases, inst.direct.as_double.phases));
        ++n;
    }
    report(4, "direct and projected GD agree", n > 0 && worst <= 1e-8,
           std::to_string(n) + " instances d<=30: max |diff| " + sci(worst) + " (tol 1e-8)", t.seconds());
}

void landscape_counts() {
    Timer t;
    const double s = 1.0 / std::sqrt(3.0);
    const auto quad = ChebCoeffs::make({0.0, 0.0, 0.5});
    const auto cubic = ChebCoeffs::make({0.0, 0.75 * s - 2 * s, 0.0, 0.25 * s});
    const auto a = solve_direct_all(quad), b = solve_direct_all(cubic);
    double worst = 0.0;
    for (const auto& x : a) worst = std::max(worst, cost(ObjectiveContext(quad), x.as_double));
    for (const auto& x : b) worst = std::max(worst, cost(ObjectiveContext(cubic), x.as_double));
    report(6, "optimum counts", a.size() == 8 && b.size() == 4 && worst <= 1e-18,
           "x^2-1/2: " + std::to_string(a.size()) + ", cubic: " + std::to_string(b.size()) + ", max F " + sci(worst),
           t.seconds());
}

void local_min_fingerprint() {
    Timer t;
    const auto f = ChebCoeffs::make({0.1666, 0.0, 0.1231, 0.0, 0.2103});
    const ObjectiveContext ctx(f);
    const auto res = local_min_probe(ctx, 200, 1);
    const double ref_f = 0.0218;
    const double ref_e[3] = {0.1359, 4.5815, 7.7510};
    bool found = false;
    std::string detail = "no matching cluster among " + std::to_string(res.clusters.size());
    for (const auto& c : res.clusters) {
        if (c.eigenvalues.size() != 3) continue;
        bool ok = std::abs(c.cost - ref_f) <= 0.05 * ref_f;
        for (int k = 0; k < 3; ++k) ok = ok && std::abs(c.eigenvalues(k) - ref_e[k]) <= 0.05 * ref_e[k];
        if (ok) {
            found = true;
            detail = "F " + sci(c.cost) + ", eigenvalues (" + sci(c.eigenvalues(0)) + ", " + sci(c.eigenvalues(1)) +
                     ", " + sci(c.eigenvalues(2)) + "), " + std::to_string(c.hits) + " of 200 starts";
            break;
        }
    }
    report(7, "local minimum fingerprint", found, detail, t.seconds());
}

void class_limits() {
    Timer t;
    const auto f = ChebCoeffs::make({-1.0, 0.0, 0.125, 0.0, 1.25, 0.0, 0.25});
    const int k_max = 6;
    const auto st = class_limit_study(f, k_max);
    const double q = pi / 4;
    const std::vector<std::vector<double>> listed{{q, 0, 0, 0}, {q, 0, q, -2 * q}, {q, 0, -q, 2 * q}, {q, q, 0, -2 * q}};
    std::vector<const SolutionClass*> matched;
    double worst = 0.0;
    for (const auto& p : listed) {
        const auto ref = ReducedPhases::for_degree(6, p);
        const SolutionClass* best = nullptr;
        double bd = 1e9;
        for (const auto& c : st.classes) {
            const double dd = periodic_distance(c.limit, ref);
            if (dd < bd) bd = dd, best = &c;
        }
        worst = std::max(worst, bd);
        matched.push_back(best);
    }
    bool smallest = matched[0] && matched[0]->maximal;
    int others_below = 0;
    for (int k = 0; k < k_max; ++k) {
        for (size_t i = 1; i < matched.size(); ++i)
            if (matched[i] && matched[i]->distances[static_cast<size_t>(k)] <= matched[0]->distances[static_cast<size_t>(k)])
                smallest = false;
        for (const auto& c : st.classes)
            if (!c.maximal && c.distances[static_cast<size_t>(k)] < st.classes.front().distances[static_cast<size_t>(k)]) {
                ++others_below;
                break;
            }
    }
    report(8, "class limits", worst <= 1e-6 && smallest,
           std::to_string(st.classes.size()) + " classes: worst limit error " + sci(worst) +
               ", maximal smallest among the four listed classes at k=1..6: " + (smallest ? "yes" : "no") +
               "; k values where some unlisted class is closer: " + std::to_string(others_below),
           t.seconds());
}

void singularity_split() {
    Timer t;
    std::mt19937_64 rng(9);
    double worst_asym = 0.0, min_sym = 1e9;
    for (int d : {61, 80}) {
        const int dt = reduced_length(d);
        const ObjectiveContext ctx(scaled_target(rng, d, 0.5 * norm_condition_bound(dt)));
        const double radius = 1.0 / (40.0 * dt);
        const auto sym = spectrum_near_optimum(ctx, SpectrumMode::symmetric, radius, 100, 11);
        const auto asym = spectrum_near_optimum(ctx, sym.solution, SpectrumMode::asymmetric, radius, 100, 12);
        for (double v : sym.values) min_sym = std::min(min_sym, v);
        for (size_t i = 0; i < asym.values.size(); ++i) worst_asym = std::max(worst_asym, asym.values[i] / asym.scales[i]);
    }
    report(9, "symmetric vs asymmetric spectrum", worst_asym <= 1e-10 && min_sym >= 0.25,
           "d=61,80 x 100 samples: max sigma_min/sigma_max " + sci(worst_asym) + ", min lambda_min " + sci(min_sym),
           t.seconds());
}

void property_suites() {
    Timer t;
    std::mt19937_64 rng(10);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> ux(-1.0, 1.0);
    double unit = 0.0, par = 0.0, checks = 0.0, flip = 0.0, fd_g = 0.0, fd_h = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + trial % 15;
        std::vector<double> full(static_cast<size_t>(d) + 1);
        for (double& v : full) v = n(rng);
        const double x = ux(rng);
        const auto u = build_unitary(x, full);
        const cplx p00 = u(0, 0) * std::conj(u(0, 0)) + u(0, 1) * std::conj(u(0, 1));
        const cplx p01 = u(0, 0) * std::conj(u(1, 0)) + u(0, 1) * std::conj(u(1, 1));
        unit = std::max({unit, std::abs(p00 - 1.0), std::abs(p01)});
        const auto r = ReducedPhases::for_degree(d, std::vector<double>(full.begin(), full.begin() + reduced_length(d)));
        par = std::max(par, std::abs(g_value(-x, r) - (d % 2 ? -1 : 1) * g_value(x, r)));
    }
    for (int d = 1; d <= 10; ++d) {
        const auto f = scaled_target(rng, d, 0.6);
        const auto sol = solve_direct_maximal_escalating(f).solution;
        for (const auto& e : verify_pair(sol.pair, &sol.as_double))
            if (e.checked) checks = std::max(checks, e.residual);

        std::vector<long double> fl(f.coeffs.begin(), f.coeffs.end());
        const auto rs = find_roots(build_laurent(fl));
        const auto inside = build_pair(select_maximal(rs), fl);
        std::vector<int> all(rs.orbits.size());
        for (size_t o = 0; o < all.size(); ++o) all[o] = rs.orbits[o].multiplicity;
        const auto outside = build_pair(detail::multiset_from_choice(rs, all), fl);
        for (int k = 0; k <= d; ++k)
            flip = std::max(flip, static_cast<double>(std::abs(outside.p_im[static_cast<size_t>(k)] + inside.p_im[static_cast<size_t>(k)])));
        for (int k = 0; k < d; ++k)
            flip = std::max(flip, static_cast<double>(std::abs(outside.q[static_cast<size_t>(k)] - inside.q[static_cast<size_t>(k)])));

        const ObjectiveContext ctx(scaled_target(rng, d, 0.4));
        auto r = ReducedPhases::initial(d);
        for (double& v : r.phases) v += 0.3 * n(rng);
        const auto g = gradient(ctx, r);
        const auto h = hessian(ctx, r);
        for (size_t i = 0; i < r.phases.size(); ++i) {
            auto p = r, m = r;
            p.phases[i] += 1e-6;
            m.phases[i] -= 1e-6;
            fd_g = std::max(fd_g, std::abs(g[i] - (cost(ctx, p) - cost(ctx, m)) / 2e-6));
            const auto gp = gradient(ctx, p), gm = gradient(ctx, m);
            for (size_t j = 0; j < r.phases.size(); ++j)
                fd_h = std::max(fd_h, std::abs(h.hessian(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                                               (gp[j] - gm[j]) / 2e-6));
        }
    }
    const bool ok = unit <= 1e-13 && par <= 1e-13 && checks <= 1e-9 && flip <= 1e-9 && fd_g <= 1e-7 && fd_h <= 1e-6;
    report(10, "property suites", ok,
           "unitarity " + sci(unit) + ", parity " + sci(par) + ", pair identities " + sci(checks) + ", inside/outside " +
               sci(flip) + ", FD gradient " + sci(fd_g) + ", FD Hessian " + sci(fd_h) +
               " (full suites: ctest test_* binaries)",
           t.seconds());
}

}  // namespace

int main() {
    hessian_identity();
    const auto set = pgd_guarantee();
    const double worst_q = distance_and_q_bounds(set);
    cross_backend(set);
    report(5, "q-coefficient bounds and chain", worst_q <= 1e-9,
           "150 direct solves (with criteria 2 and 3): worst violation " + sci(worst_q) + " (tol 1e-9)", 0.0);
    landscape_counts();
    local_min_fingerprint();
    class_limits();
    singularity_split();
    property_suites();
    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}

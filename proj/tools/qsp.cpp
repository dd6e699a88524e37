#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qsp/direct.hpp"
#include "qsp/io.hpp"
#include "qsp/landscape.hpp"
#include "qsp/multiprecision.hpp"
#include "qsp/optimizer.hpp"

using namespace qsp;
using io::json;

namespace {

// Exit codes: 0 ok, 1 invalid input, 2 numerical failure.
struct Outcome {
    int code = 0;
    std::string message;
};

struct Run {
    io::RunManifest manifest;
    std::string manifest_path;

    // Output files point at the manifest; the manifest lists the outputs.
    void output(const std::string& path) { manifest.outputs.push_back(path); }
    json stamp(json j) const {
        j["manifest"] = manifest_path;
        return j;
    }
};

std::string default_manifest(const std::string& out) { return out.empty() ? std::string() : out + ".manifest.json"; }

int run_command(Run& run, const std::function<Outcome(Run&)>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome res;
    try {
        res = body(run);
    } catch (const qsp::invalid_argument& e) {
        res = {1, e.what()};
    } catch (const qsp::domain_error& e) {
        res = {1, e.what()};
    } catch (const convergence_error& e) {
        res = {2, e.what()};
    } catch (const precision_error& e) {
        res = {2, std::string(e.what())};
    } catch (const std::exception& e) {
        res = {2, e.what()};
    }
    if (res.code != 0) std::cerr << "error: " << res.message << "\n";
    run.manifest.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run.manifest.exit_code = res.code;
    run.manifest.message = res.message.empty() ? "ok" : res.message;
    if (!run.manifest_path.empty()) {
        try {
            io::write_json(run.manifest_path, io::to_json(run.manifest));
        } catch (const std::exception& e) {
            std::cerr << "warning: manifest not written: " << e.what() << "\n";
        }
    }
    return res.code;
}

std::optional<unsigned> parse_precision(const std::string& p) {
    if (p == "double") return std::nullopt;
    if (p.rfind("big:", 0) == 0) {
        try {
            const long bits = std::stol(p.substr(4));
            if (bits >= 64) return static_cast<unsigned>(bits);
        } catch (const std::exception&) {
        }
    }
    throw qsp::invalid_argument("--precision must be double or big:<bits> with bits >= 64");
}

template <class Real>
json solution_json(const DirectSolution<Real>& s) {
    json j = io::to_json(s.as_double);
    j["q_sign"] = s.q_sign;
    j["maximal"] = s.pair.maximal && s.q_sign > 0;
    j["pair"] = io::to_json(s.pair);
    json chain = json::array();
    for (const auto& l : s.trace.levels) chain.push_back(to_double(l.q_lead));
    j["q_chain"] = chain;
    return j;
}

template <class Real>
json direct_solve(const ChebCoeffs& f, bool enumerate, const DirectOptions& opt) {
    if (!enumerate) return solution_json(solve_direct_maximal<Real>(f, opt));
    const auto all = solve_direct_all<Real>(f, opt);
    json list = json::array();
    for (const auto& s : all) list.push_back(solution_json(s));
    const int d = all.empty() ? f.degree() : all.front().pair.d();
    return {{"d", d}, {"parity", to_string(parity_of(d))}, {"count", all.size()}, {"solutions", list}};
}

void print_row(const std::string& name, double value, const char* status) {
    std::printf("  %-22s %-24s %s\n", name.c_str(), io::fmt17(value).c_str(), status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Symmetric quantum signal processing phase factors"};
    app.require_subcommand(1);
    Run run;
    std::function<int()> action;

    // solve -----------------------------------------------------------------
    std::string target, out, trace, mode = "pgd", manifest;
    double eps = 1e-12;
    int max_iters = 100000;
    int degree = -1;
    double ball_radius = 0.0, step_size = 0.0;
    bool no_enforce = false;
    auto* solve = app.add_subcommand("solve", "optimize the least-squares cost");
    solve->add_option("--target", target, "target polynomial JSON")->required();
    solve->add_option("--mode", mode, "pgd | qn")->check(CLI::IsMember({"pgd", "qn"}));
    solve->add_option("--eps", eps, "stop when F <= eps");
    solve->add_option("--max-iters", max_iters);
    solve->add_option("--degree", degree, "phase degree d (default: nominal degree of the target)");
    solve->add_option("--ball-radius", ball_radius, "projected GD ball radius (default 1/(20 d~))");
    solve->add_option("--step-size", step_size, "projected GD step (default 1/L = 4/25)");
    solve->add_flag("--no-enforce", no_enforce, "run projected GD outside the norm condition");
    solve->add_option("--out", out, "phases JSON");
    solve->add_option("--trace", trace, "trace CSV");
    solve->add_option("--manifest", manifest, "run manifest (default <out>.manifest.json)");
    solve->callback([&] {
        action = [&] {
            return run_command(run, [&](Run& r) -> Outcome {
                r.manifest.add_input(target);
                const ObjectiveContext ctx(io::read_poly(target), degree);
                SolverConfig cfg;
                cfg.mode = mode == "pgd" ? SolveMode::projected_gd : SolveMode::quasi_newton;
                cfg.epsilon = eps;
                cfg.max_iters = max_iters;
                cfg.ball_radius = ball_radius;
                cfg.step_size = step_size;
                cfg.enforce_norm_condition = !no_enforce;
                r.manifest.config = {{"mode", mode}, {"eps", eps}, {"max_iters", max_iters}, {"d", ctx.d()},
                                     {"ball_radius", ball_radius}, {"step_size", step_size},
                                     {"enforce_norm_condition", !no_enforce}};
                SolveReport rep;
                Outcome res;
                try {
                    rep = qsp::solve(ctx, cfg);
                } catch (const convergence_error& e) {
                    rep = e.report();
                    res = {2, e.what()};
                }
                if (!trace.empty()) {
                    io::write_trace_csv(trace, rep.trace, r.manifest_path);
                    r.output(trace);
                }
                if (res.code != 0) return res;
                json j = io::to_json(rep.phases);
                j["final_cost"] = rep.final_cost;
                j["iterations"] = rep.iterations;
                j["mode"] = mode;
                j["certificate"] = io::to_json(rep.certificate);
                j["certify"] = io::to_json(certify(rep, ctx));
                if (!out.empty()) {
                    io::write_json(out, r.stamp(j));
                    r.output(out);
                } else {
                    std::cout << j.dump(2) << "\n";
                }
                std::printf("F = %s after %d iterations\n", io::fmt17(rep.final_cost).c_str(), rep.iterations);
                return {};
            });
        };
    });

    // solve-direct ------------------------------------------------------------
    std::string selection = "maximal", precision = "double";
    auto* sdirect = app.add_subcommand("solve-direct", "root factorization and reduction");
    sdirect->add_option("--target", target, "target polynomial JSON")->required();
    sdirect->add_option("--selection", selection, "maximal | enumerate")->check(CLI::IsMember({"maximal", "enumerate"}));
    sdirect->add_option("--precision", precision, "double | big:<bits>");
    sdirect->add_option("--out", out, "phases JSON (maximal) or phases-list JSON (enumerate)");
    sdirect->add_option("--manifest", manifest);
    sdirect->callback([&] {
        action = [&] {
            return run_command(run, [&](Run& r) -> Outcome {
                r.manifest.add_input(target);
                const ChebCoeffs f = io::read_poly(target);
                const auto bits = parse_precision(precision);
                r.manifest.config = {{"selection", selection}, {"precision", precision}};
                const bool enumerate = selection == "enumerate";
                json j;
                if (bits) {
                    MpPrecisionScope scope(*bits);
                    j = direct_solve<mp_real>(f, enumerate, {});
                } else {
                    j = direct_solve<long double>(f, enumerate, {});
                }
                if (!out.empty()) {
                    io::write_json(out, r.stamp(j));
                    r.output(out);
                } else {
                    std::cout << j.dump(2) << "\n";
                }
                if (enumerate) std::printf("%d solutions\n", j["count"].get<int>());
                return {};
            });
        };
    });

    // verify -------------------------------------------------------------------
    std::string phases_path, against;
    bool invariants = false;
    double agree_tol = 1e-8, invariant_tol = 1e-9;
    auto* verify = app.add_subcommand("verify", "check phases against a target");
    verify->add_option("--phases", phases_path, "phases JSON")->required();
    verify->add_option("--target", target, "target polynomial JSON")->required();
    verify->add_option("--eps", eps, "pass when F <= eps");
    verify->add_flag("--invariants", invariants, "also run the admissible-pair invariant battery");
    verify->add_option("--invariant-tol", invariant_tol);
    verify->add_option("--against", against, "second phases JSON to compare with");
    verify->add_option("--agree-tol", agree_tol, "max-norm agreement tolerance for --against");
    verify->add_option("--manifest", manifest);
    verify->callback([&] {
        action = [&] {
            return run_command(run, [&](Run& r) -> Outcome {
                r.manifest.add_input(phases_path);
                r.manifest.add_input(target);
                const ReducedPhases ph = io::read_phases(phases_path);
                const ChebCoeffs f = io::read_poly(target);
                if (f.effective_degree() > ph.d())
                    throw qsp::invalid_argument("target degree exceeds the phase degree");
                const ObjectiveContext ctx(f, ph.d());
                r.manifest.config = {{"eps", eps}, {"invariants", invariants}, {"against", against}};
                bool ok = true;
                std::printf("verify d=%d parity=%s\n", ph.d(), to_string(ph.parity));
                const double F = cost(ctx, ph);
                print_row("cost F", F, F <= eps ? "ok" : "FAIL");
                ok = ok && F <= eps;
                const auto g = gradient(ctx, ph);
                double gn = 0.0;
                for (double v : g) gn += v * v;
                print_row("|grad F|", std::sqrt(gn), "info");
                const int n = 10 * (ph.d() + 1);
                double sup = 0.0;
                for (int j = 0; j <= n; ++j) {
                    const double x = std::cos(std::numbers::pi * j / n);
                    sup = std::max(sup, std::abs(g_value(x, ph) - eval_series(f, x)));
                }
                const double sup_bound = ph.d() * std::sqrt(eps);
                print_row("sup |g - f|", sup, sup <= sup_bound ? "ok" : "info");
                if (invariants) {
                    const auto pair = pair_from_phases(ph);
                    for (const auto& c : verify_pair(pair, &ph, 1)) {
                        if (!c.checked) {
                            print_row(c.name, 0.0, "skipped");
                            continue;
                        }
                        const bool pass = c.residual <= invariant_tol;
                        ok = ok && pass;
                        print_row(c.name, c.residual, pass ? "ok" : "FAIL");
                    }
                }
                if (!against.empty()) {
                    r.manifest.add_input(against);
                    const ReducedPhases other = io::read_phases(against);
                    if (other.d() != ph.d() || other.parity != ph.parity)
                        throw qsp::invalid_argument("--against phases have a different degree");
                    double worst = 0.0;
                    for (size_t i = 0; i < ph.phases.size(); ++i) {
                        const double period = detail::domain_period(ph.parity, i, ph.phases.size());
                        worst = std::max(worst, std::abs(std::remainder(ph.phases[i] - other.phases[i], period)));
                    }
                    const bool pass = worst <= agree_tol;
                    ok = ok && pass;
                    print_row("max |phase diff|", worst, pass ? "ok" : "FAIL");
                }
                if (!ok) return {2, "verification failed"};
                return {};
            });
        };
    });

    // landscape ----------------------------------------------------------------
    auto* land = app.add_subcommand("landscape", "landscape experiments");
    land->require_subcommand(1);
    std::string smode = "symmetric";
    double radius = -1.0;
    int samples = 100, resolution = 200, starts = 200, k_max = 6, k_limit = 30, substeps = 4;
    unsigned bits_mp = 512;
    std::uint64_t seed = 1;
    std::string optima_out;

    auto* spectrum = land->add_subcommand("spectrum", "Hessian spectrum near the optimum");
    spectrum->add_option("--target", target)->required();
    spectrum->add_option("--mode", smode, "symmetric | asymmetric")->check(CLI::IsMember({"symmetric", "asymmetric"}));
    spectrum->add_option("--radius", radius, "perturbation radius (default 1/(40 d~))");
    spectrum->add_option("--samples", samples);
    spectrum->add_option("--seed", seed);
    spectrum->add_option("--out", out)->required();
    spectrum->add_option("--manifest", manifest);
    spectrum->callback([&] {
        action = [&] {
            return run_command(run, [&](Run& r) -> Outcome {
                r.manifest.add_input(target);
                const ObjectiveContext ctx(io::read_poly(target));
                const double rad = radius >= 0 ? radius : 1.0 / (40.0 * ctx.d_tilde());
                r.manifest.config = {{"mode", smode}, {"radius", rad}, {"samples", samples}, {"seed", seed}};
                const auto s = spectrum_near_optimum(
                    ctx, smode == "symmetric" ? SpectrumMode::symmetric : SpectrumMode::asymmetric, rad, samples, seed);
                io::write_json(out, r.stamp(io::to_json(s)));
                r.output(out);
                const auto [lo, hi] = std::minmax_element(s.values.begin(), s.values.end());
                std::printf("%s min over samples: %s  max: %s\n", smode.c_str(), io::fmt17(*lo).c_str(),
                            io::fmt17(*hi).c_str());
                return {};
            });
        };
    });

    auto* grid = land->add_subcommand("grid", "F^(1/3) over the two reduced phases");
    grid->add_option("--target", target)->required();
    grid->add_option("--resolution", resolution);
    grid->add_option("--out", out, "grid CSV")->required();
    grid->add_option("--optima", optima_out, "annotated optima JSON (default <out>.optima.json)");
    grid->add_option("--manifest", manifest);
    grid->callback([&] {
        action = [&] {
            return run_command(run, [&](Run& r) -> Outcome {
                r.manifest.add_input(target);
                r.manifest.config = {{"resolution", resolution}};
                const auto g = grid_landscape(io::read_poly(target), resolution);
                io::write_grid_csv(out, g, r.manifest_path);
                r.output(out);
                const std::string opath = optima_out.empty() ? out + ".optima.json" : optima_out;
                io::write_json(opath, r.stamp(io::to_json(g)));
                r.output(opath);
                std::printf("%zu annotated optima\n", g.optima.size());
                return {};
            });
        };
    });

    auto* probe = land->add_subcommand("probe", "multi-start local minimum search");
    probe->add_option("--target", target)->required();
    probe->add_option("--starts", starts);
    probe->add_option("--seed", seed);
    probe->add_option("--out", out)->required();
    probe->add_option("--manifest", manifest);
    probe->callback([&] {
        action = [&] {
            return run_command(run, [&](Run& r) -> Outcome {
                r.manifest.add_input(target);
                r.manifest.config = {{"starts", starts}, {"seed", seed}};
                const ObjectiveContext ctx(io::read_poly(target));
                const ProbeOptions popt;
                const auto p = local_min_probe(ctx, starts, seed, popt);
                io::write_json(out, r.stamp(io::to_json(p, popt)));
                r.output(out);
                int local = 0;
                for (const auto& c : p.clusters) local += (!c.global && c.local_min) ? 1 : 0;
                std::printf("%zu clusters, %d non-global local minima\n", p.clusters.size(), local);
                return {};
            });
        };
    });

    auto* classes = land->add_subcommand("classes", "solution classes of 10^-k f");
    classes->add_option("--target", target)->required();
    classes->add_option("--k-max", k_max);
    classes->add_option("--k-limit", k_limit, "exponent standing in for k -> infinity");
    classes->add_option("--substeps", substeps, "continuation steps per decade");
    classes->add_option("--bits", bits_mp, "MPFR precision");
    classes->add_option("--out", out)->required();
    classes->add_option("--manifest", manifest);
    classes->callback([&] {
        action = [&] {
            return run_command(run, [&](Run& r) -> Outcome {
                r.manifest.add_input(target);
                ClassLimitOptions copt;
                copt.k_limit = k_limit;
                copt.substeps = substeps;
                copt.bits = bits_mp;
                r.manifest.config = {{"k_max", k_max}, {"k_limit", k_limit}, {"substeps", substeps}, {"bits", bits_mp}};
                const auto st = class_limit_study(io::read_poly(target), k_max, copt);
                io::write_json(out, r.stamp(io::to_json(st)));
                r.output(out);
                std::printf("%zu classes\n", st.classes.size());
                return {};
            });
        };
    });

    app.add_subcommand("version", "print the tool version")->callback([&] {
        action = [] {
            std::printf("qsp %s\n", io::kToolVersion);
            return 0;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    std::string cmd;
    for (int i = 1; i < argc; ++i) cmd += (i > 1 ? " " : "") + std::string(argv[i]);
    run.manifest.command = cmd;
    if (!manifest.empty())
        run.manifest_path = manifest;
    else if (!out.empty())
        run.manifest_path = default_manifest(out);
    return action ? action() : 0;
}

#pragma once

#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "qsp/direct.hpp"
#include "qsp/landscape.hpp"
#include "qsp/optimizer.hpp"

namespace qsp::io {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// files

[[nodiscard]] inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_argument("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw invalid_argument("cannot write " + path);
    out << text;
    if (!out) throw invalid_argument("write failed for " + path);
}

[[nodiscard]] inline json read_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw invalid_argument(path + ": " + e.what());
    }
}

inline void write_json(const std::string& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

[[nodiscard]] inline std::string sha256_hex(const std::string& data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw numerical_failure("sha256 digest failed");
    std::ostringstream ss;
    for (unsigned i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return ss.str();
}

// 17 significant digits, enough to round-trip any double
[[nodiscard]] inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// polynomials

[[nodiscard]] inline const char* basis_name(Kind k) { return k == Kind::first ? "chebyshev-1" : "chebyshev-2"; }

[[nodiscard]] inline json to_json(const ChebCoeffs& c) {
    return {{"basis", basis_name(c.kind)}, {"parity", to_string(c.parity)}, {"coeffs", c.coeffs}};
}

namespace detail {

template <class T>
T field(const json& j, const char* key, const std::string& what) {
    if (!j.is_object() || !j.contains(key)) throw invalid_argument(what + ": missing \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw invalid_argument(what + ": bad \"" + key + "\" (" + e.what() + ")");
    }
}

inline Parity parse_parity(const std::string& s) {
    if (s == "even") return Parity::even;
    if (s == "odd") return Parity::odd;
    throw invalid_argument("parity must be \"even\" or \"odd\", got \"" + s + "\"");
}

}  // namespace detail

/// Monomial input is converted to the first-kind Chebyshev basis.
[[nodiscard]] inline ChebCoeffs poly_from_json(const json& j) {
    const auto basis = detail::field<std::string>(j, "basis", "polynomial");
    auto coeffs = detail::field<std::vector<double>>(j, "coeffs", "polynomial");
    if (coeffs.empty()) throw invalid_argument("polynomial: empty coefficient list");
    Kind kind = Kind::first;
    if (basis == "monomial") {
        coeffs = monomial_cheb_convert(coeffs, Direction::from_monomial, Kind::first);
    } else if (basis == "chebyshev-2") {
        kind = Kind::second;
    } else if (basis != "chebyshev-1") {
        throw invalid_argument("polynomial: unknown basis \"" + basis + "\"");
    }
    if (j.contains("parity")) return ChebCoeffs::make(std::move(coeffs), detail::parse_parity(j["parity"].get<std::string>()), kind);
    return ChebCoeffs::make(std::move(coeffs), kind);
}

[[nodiscard]] inline ChebCoeffs read_poly(const std::string& path) {
    const json j = read_json(path);
    return poly_from_json(j.contains("target") ? j["target"] : j);
}

// ---------------------------------------------------------------------------
// phases

[[nodiscard]] inline json to_json(const ReducedPhases& r) {
    return {{"d", r.d()},
            {"parity", to_string(r.parity)},
            {"reduced", r.phases},
            {"full", symmetrize(r)},
            {"convention", "symmetric-wx"}};
}

[[nodiscard]] inline ReducedPhases phases_from_json(const json& j) {
    const int d = detail::field<int>(j, "d", "phases");
    auto reduced = detail::field<std::vector<double>>(j, "reduced", "phases");
    if (j.contains("convention") && j["convention"] != "symmetric-wx")
        throw invalid_argument("phases: unsupported convention " + j["convention"].dump());
    auto r = ReducedPhases::for_degree(d, std::move(reduced));
    if (j.contains("parity") && detail::parse_parity(j["parity"].get<std::string>()) != r.parity)
        throw invalid_argument("phases: parity does not match d");
    return r;
}

[[nodiscard]] inline ReducedPhases read_phases(const std::string& path) { return phases_from_json(read_json(path)); }

// ---------------------------------------------------------------------------
// admissible pairs and solver reports

template <class Real>
[[nodiscard]] json to_json(const AdmissiblePair<Real>& p) {
    auto dbl = [](const std::vector<Real>& v) {
        std::vector<double> o;
        for (const auto& x : v) o.push_back(to_double(x));
        return o;
    };
    const int d = p.d();
    json roots = json::array();
    for (const auto& r : p.source.roots) roots.push_back({to_double(r.re), to_double(r.im)});
    return {{"alpha", to_double(p.alpha)},
            {"p_im", to_json(ChebCoeffs{parity_of(d), Kind::first, dbl(p.p_im)})},
            {"q", to_json(ChebCoeffs{parity_of(d + 1), Kind::second, dbl(p.q)})},
            {"roots", roots},
            {"maximal", p.maximal}};
}

/// Reads back the serialized fields; f is not part of the record.
[[nodiscard]] inline AdmissiblePair<double> pair_from_json(const json& j) {
    AdmissiblePair<double> p;
    p.alpha = detail::field<double>(j, "alpha", "pair");
    p.p_im = poly_from_json(detail::field<json>(j, "p_im", "pair")).coeffs;
    p.q = poly_from_json(detail::field<json>(j, "q", "pair")).coeffs;
    for (const auto& r : detail::field<json>(j, "roots", "pair")) p.source.roots.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
    p.maximal = detail::field<bool>(j, "maximal", "pair");
    p.source.is_maximal = p.maximal;
    p.f.assign(p.p_im.size(), 0.0);
    return p;
}

[[nodiscard]] inline json to_json(const Certificate& c) {
    auto opt = [](const std::optional<bool>& b) { return b ? json(*b) : json(nullptr); };
    return {{"norm_condition_met", opt(c.norm_condition_met)},
            {"stayed_in_ball", opt(c.stayed_in_ball)},
            {"rate_bound_satisfied", opt(c.rate_bound_satisfied)}};
}

[[nodiscard]] inline json to_json(const CertifyReport& c) {
    auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
    return {{"distance_to_phi0", c.distance_to_phi0},
            {"distance_bound", opt(c.distance_bound)},
            {"distance_bound_ok", opt(c.distance_bound_ok)},
            {"lambda_min", opt(c.lambda_min)},
            {"lambda_max", opt(c.lambda_max)},
            {"hessian_window_ok", opt(c.hessian_window_ok)},
            {"sup_residual", c.sup_residual},
            {"sup_grid", c.sup_grid}};
}

[[nodiscard]] inline json to_json(const HessianReport& h) {
    auto mat = [](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            std::vector<double> row(static_cast<size_t>(m.cols()));
            for (Eigen::Index k = 0; k < m.cols(); ++k) row[static_cast<size_t>(k)] = m(i, k);
            rows.push_back(row);
        }
        return rows;
    };
    std::vector<double> ev(h.eigenvalues.data(), h.eigenvalues.data() + h.eigenvalues.size());
    return {{"hessian", mat(h.hessian)},
            {"jacobian_part", mat(h.jacobian_part)},
            {"residual_part", mat(h.residual_part)},
            {"eigenvalues", ev},
            {"sigma_min_jacobian", h.sigma_min_jacobian}};
}

// ---------------------------------------------------------------------------
// CSV

inline void write_trace_csv(const std::string& path, const std::vector<TraceEntry>& trace,
                            const std::string& manifest) {
    std::ostringstream ss;
    ss << "# manifest: " << manifest << "\n";
    ss << "iter,cost,dist_to_phi0,projected\n";
    for (const auto& t : trace)
        ss << t.iter << ',' << fmt17(t.cost) << ',' << fmt17(t.dist_to_phi0) << ',' << (t.projected ? 1 : 0) << '\n';
    write_file(path, ss.str());
}

inline void write_grid_csv(const std::string& path, const LandscapeGrid& g, const std::string& manifest) {
    std::ostringstream ss;
    ss << "# manifest: " << manifest << "\n";
    ss << "phi0,phi1,value\n";
    for (size_t i = 0; i < g.phi0.size(); ++i)
        for (size_t j = 0; j < g.phi1.size(); ++j)
            ss << fmt17(g.phi0[i]) << ',' << fmt17(g.phi1[j]) << ',' << fmt17(g.at(static_cast<int>(i), static_cast<int>(j)))
               << '\n';
    write_file(path, ss.str());
}

// ---------------------------------------------------------------------------
// landscape studies

[[nodiscard]] inline json to_json(const SpectrumSample& s) {
    return {{"mode", to_string(s.mode)},
            {"solution", to_json(s.solution)},
            {"solution_cost", s.solution_cost},
            {"radius", s.radius},
            {"offsets", s.offsets},
            {"values", s.values},
            {"scales", s.scales},
            {"metadata", {{"seed", s.seed}, {"resolution", s.values.size()}, {"tolerances", {{"qn_epsilon", 1e-28}}}}}};
}

[[nodiscard]] inline json to_json(const LandscapeGrid& g) {
    json opt = json::array();
    for (const auto& o : g.optima)
        opt.push_back({{"phases", to_json(o.phases)}, {"cost", o.cost}, {"maximal", o.maximal}, {"q_sign", o.q_sign}});
    return {{"d", g.d}, {"optima", opt}, {"metadata", {{"seed", nullptr}, {"resolution", g.resolution}, {"tolerances", json::object()}}}};
}

[[nodiscard]] inline json to_json(const ProbeResult& p, const ProbeOptions& opt) {
    json cl = json::array();
    for (const auto& c : p.clusters) {
        std::vector<double> ev(c.eigenvalues.data(), c.eigenvalues.data() + c.eigenvalues.size());
        cl.push_back({{"phases", to_json(c.phases)},
                      {"cost", c.cost},
                      {"eigenvalues", ev},
                      {"hits", c.hits},
                      {"global", c.global},
                      {"local_min", c.local_min}});
    }
    return {{"n_starts", p.n_starts},
            {"unconverged", p.unconverged},
            {"clusters", cl},
            {"metadata",
             {{"seed", p.seed},
              {"resolution", p.n_starts},
              {"tolerances",
               {{"cluster_radius", opt.cluster_radius}, {"global_tol", opt.global_tol}, {"grad_tol", opt.grad_tol}}}}}};
}

[[nodiscard]] inline json to_json(const ClassLimitStudy& st) {
    json cls = json::array();
    for (const auto& c : st.classes) {
        json sols = json::array();
        for (const auto& s : c.solutions) sols.push_back(s.phases);
        json trace = json::array();
        for (const auto& t : c.qn_trace) trace.push_back({t.iter, t.cost, t.dist_to_phi0});
        cls.push_back({{"label", c.label},
                       {"limit", to_json(c.limit)},
                       {"maximal", c.maximal},
                       {"distances", c.distances},
                       {"solutions", sols},
                       {"qn_trace", trace},
                       {"qn_final_cost", c.qn_final_cost},
                       {"qn_distance", c.qn_distance}});
    }
    return {{"target", to_json(st.f)},
            {"k", st.ks},
            {"classes", cls},
            {"metadata",
             {{"seed", nullptr},
              {"resolution", st.options.substeps},
              {"tolerances", {{"k_limit", st.options.k_limit}, {"bits", st.options.bits}}}}}};
}

// ---------------------------------------------------------------------------
// run manifest

struct RunManifest {
    std::string command;
    json config = json::object();
    std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
    std::vector<std::string> outputs;
    std::string tool_version = kToolVersion;
    double wall_time = 0.0;
    int exit_code = 0;
    std::string message;

    void add_input(const std::string& path) { inputs.emplace_back(path, sha256_hex(read_file(path))); }
};

[[nodiscard]] inline json to_json(const RunManifest& m) {
    json in = json::array();
    for (const auto& [p, h] : m.inputs) in.push_back({{"path", p}, {"sha256", h}});
    return {{"command", m.command},
            {"config", m.config},
            {"inputs", in},
            {"outputs", m.outputs},
            {"tool_version", m.tool_version},
            {"wall_time_s", m.wall_time},
            {"outcome", {{"exit_code", m.exit_code}, {"message", m.message}}}};
}

}  // namespace qsp::io

#include <cmath>
#include <cstdio>
#include <filesystem>

#include <gtest/gtest.h>

#include "qsp/io.hpp"

using namespace qsp;
using qsp::io::json;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("qsp_io_" + name)).string();
}

}  // namespace

TEST(Sha256, KnownVectors) {
    EXPECT_EQ(io::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(io::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Fmt17, RoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300}) EXPECT_EQ(std::stod(io::fmt17(v)), v);
}

TEST(Poly, ChebyshevRoundTrip) {
    const auto c = ChebCoeffs::make({0.0, 0.25, 0.0, -0.125});
    const auto back = io::poly_from_json(io::to_json(c));
    EXPECT_EQ(back.coeffs, c.coeffs);
    EXPECT_EQ(back.parity, c.parity);
    EXPECT_EQ(back.kind, Kind::first);
    const auto u = io::poly_from_json(json{{"basis", "chebyshev-2"}, {"coeffs", {1.0, 0.0, 0.5}}});
    EXPECT_EQ(u.kind, Kind::second);
}

TEST(Poly, MonomialInput) {
    // x^2 - 1/2 = T_2 / 2
    const auto c = io::poly_from_json(json{{"basis", "monomial"}, {"parity", "even"}, {"coeffs", {-0.5, 0.0, 1.0}}});
    ASSERT_EQ(c.coeffs.size(), 3u);
    EXPECT_NEAR(c.coeffs[0], 0.0, 1e-16);
    EXPECT_NEAR(c.coeffs[2], 0.5, 1e-16);
    // (1/sqrt 3) x^3 - (2/sqrt 3) x
    const double s = 1 / std::sqrt(3.0);
    const auto cubic = io::poly_from_json(json{{"basis", "monomial"}, {"coeffs", {0.0, -2 * s, 0.0, s}}});
    EXPECT_NEAR(cubic.coeffs[1], -1.25 * s, 1e-15);
    EXPECT_NEAR(cubic.coeffs[3], 0.25 * s, 1e-15);
}

TEST(Poly, Errors) {
    EXPECT_THROW((void)io::poly_from_json(json{{"coeffs", {1.0}}}), qsp::invalid_argument);
    EXPECT_THROW((void)io::poly_from_json(json{{"basis", "legendre"}, {"coeffs", {1.0}}}), qsp::invalid_argument);
    EXPECT_THROW((void)io::poly_from_json(json{{"basis", "monomial"}, {"coeffs", json::array()}}), qsp::invalid_argument);
    EXPECT_THROW((void)io::poly_from_json(json{{"basis", "chebyshev-1"}, {"coeffs", "x"}}), qsp::invalid_argument);
    EXPECT_THROW((void)io::poly_from_json(json{{"basis", "chebyshev-1"}, {"parity", "both"}, {"coeffs", {1.0}}}),
                 qsp::invalid_argument);
}

TEST(Phases, RoundTrip) {
    const auto r = ReducedPhases::for_degree(6, {0.7, -0.1, 0.2, 2.5});
    const json j = io::to_json(r);
    EXPECT_EQ(j["full"].size(), 7u);
    EXPECT_EQ(j["convention"], "symmetric-wx");
    const auto back = io::phases_from_json(j);
    EXPECT_EQ(back.phases, r.phases);
    EXPECT_EQ(back.parity, r.parity);
    json bad = j;
    bad["convention"] = "wz";
    EXPECT_THROW((void)io::phases_from_json(bad), qsp::invalid_argument);
    bad = j;
    bad["parity"] = "odd";
    EXPECT_THROW((void)io::phases_from_json(bad), qsp::invalid_argument);
    // text round trip keeps every bit
    const auto text = io::phases_from_json(json::parse(j.dump()));
    EXPECT_EQ(text.phases, r.phases);
}

TEST(Pair, RoundTrip) {
    const auto sol = solve_direct_maximal(ChebCoeffs::make({0.0, 0.2, 0.0, 0.1}));
    const json j = io::to_json(sol.pair);
    const auto back = io::pair_from_json(json::parse(j.dump()));
    ASSERT_EQ(back.p_im.size(), sol.pair.p_im.size());
    for (size_t k = 0; k < back.p_im.size(); ++k) EXPECT_EQ(back.p_im[k], static_cast<double>(sol.pair.p_im[k]));
    for (size_t k = 0; k < back.q.size(); ++k) EXPECT_EQ(back.q[k], static_cast<double>(sol.pair.q[k]));
    EXPECT_EQ(back.source.roots.size(), sol.pair.source.roots.size());
    EXPECT_TRUE(back.maximal);
}

TEST(Files, JsonAndCsv) {
    const std::string p = temp_path("poly.json");
    io::write_json(p, json{{"target", io::to_json(ChebCoeffs::make({0.0, 0.3}))}});
    EXPECT_EQ(io::read_poly(p).coeffs, (std::vector<double>{0.0, 0.3}));
    io::write_file(p, "{not json");
    EXPECT_THROW((void)io::read_json(p), qsp::invalid_argument);
    EXPECT_THROW((void)io::read_file(temp_path("missing/none.json")), qsp::invalid_argument);

    const std::string csv = temp_path("trace.csv");
    io::write_trace_csv(csv, {{0, 0.5, 0.0, false}, {1, 0.25, 0.01, true}}, "m.json");
    const std::string text = io::read_file(csv);
    EXPECT_EQ(text.rfind("# manifest: m.json\niter,cost,dist_to_phi0,projected\n", 0), 0u);
    EXPECT_NE(text.find("1,0.25,0.01"), std::string::npos);
    std::remove(p.c_str());
    std::remove(csv.c_str());
}

TEST(Manifest, Fields) {
    const std::string p = temp_path("input.txt");
    io::write_file(p, "abc");
    io::RunManifest m;
    m.command = "solve";
    m.add_input(p);
    m.outputs.push_back("out.json");
    m.exit_code = 2;
    m.message = "did not converge";
    const json j = io::to_json(m);
    EXPECT_EQ(j["inputs"][0]["sha256"], "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(j["outcome"]["exit_code"], 2);
    EXPECT_EQ(j["tool_version"], io::kToolVersion);
    std::remove(p.c_str());
}

TEST(Reports, Serializers) {
    Certificate c;
    c.stayed_in_ball = true;
    const json jc = io::to_json(c);
    EXPECT_TRUE(jc["norm_condition_met"].is_null());
    EXPECT_EQ(jc["stayed_in_ball"], true);

    const ObjectiveContext ctx(ChebCoeffs::make({0.0, 0.001, 0.0, 0.0}));
    const auto h = io::to_json(hessian(ctx, ReducedPhases::initial(3)));
    EXPECT_EQ(h["hessian"].size(), 2u);
    EXPECT_EQ(h["eigenvalues"].size(), 2u);
}

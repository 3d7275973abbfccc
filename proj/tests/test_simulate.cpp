#include <doctest.h>

#include <cmath>

#include "ppdest/simulate.hpp"
#include "test_helpers.hpp"

using namespace ppdest;
using testutil::sup_distance;

TEST_SUITE_BEGIN("simulate");

TEST_CASE("random_warping at zero strength is the identity") {
    Grid g(100);
    Rng rng(1);
    CHECK(random_warping(0.0, rng, g).is_identity());
    CHECK_THROWS_AS(random_warping(-0.1, rng, g), std::invalid_argument);
}

TEST_CASE("random warps average to the identity") {
    Grid g(100);
    Rng rng(2024);
    std::vector<double> mean(g.num_points, 0.0);
    const int draws = 2000;
    for (int d = 0; d < draws; ++d) {
        Warping w = random_warping(0.3, rng, g);
        for (int j = 0; j < g.num_points; ++j) mean[j] += w.values[j];
    }
    for (double& v : mean) v /= draws;
    CHECK(sup_distance(mean, g.points()) < 0.02);
}

TEST_CASE("scenario signals have the documented peak counts") {
    Grid g(200);
    CHECK(find_internal_peaks(scenario_signal(ScenarioId::Bimodal, g)).size() == 2);
    CHECK(find_internal_peaks(scenario_signal(ScenarioId::Sawtooth, g)).size() == 2);
    CHECK(find_internal_peaks(scenario_signal(ScenarioId::FlatMiddle, g)).size() == 2);
    CHECK(find_internal_peaks(scenario_signal(ScenarioId::BroadUnimodal, g)).size() == 1);
    CHECK(find_internal_peaks(scenario_signal(ScenarioId::MixtureB, g)).size() == 3);
}

TEST_CASE("the flat-middle signal really is flat between the bumps") {
    Grid g(400);
    auto s3 = scenario_signal(ScenarioId::FlatMiddle, g);
    auto d = derivative(s3);
    int flat = 0;
    for (double v : d)
        if (std::fabs(v) < 1e-9) ++flat;
    CHECK(flat >= static_cast<int>(0.4 * g.num_points));
}

TEST_CASE("zero noise reproduces the signal exactly") {
    Scenario scn = make_scenario(ScenarioId::Sawtooth, 5, 80, 7);
    scn.noise = NoiseModel{0.0, 0.0, 6, 0.0};
    GeneratedData gen = generate(scn);
    for (const auto& f : gen.data.functions) CHECK(f.values == gen.g_true.values);
}

TEST_CASE("generation is deterministic in the seed") {
    Scenario scn = make_scenario(ScenarioId::Bimodal, 6, 60, 123);
    GeneratedData a = generate(scn);
    GeneratedData b = generate(scn);
    for (int i = 0; i < scn.n; ++i) CHECK(a.data.functions[i].values == b.data.functions[i].values);

    scn.seed = 124;
    GeneratedData c = generate(scn);
    CHECK(a.data.functions[0].values != c.data.functions[0].values);
}

TEST_CASE("additive noise averages away at the law-of-large-numbers rate") {
    Scenario scn = make_scenario(ScenarioId::BroadUnimodal, 2000, 60, 9);
    scn.noise.sigma_a = 0.0;
    scn.noise.warp_strength = 0.0;
    scn.noise.sigma_eps = 0.1;
    GeneratedData gen = generate(scn);
    auto mean = cross_sectional_mean(gen.data);
    CHECK(sup_distance(mean.values, gen.g_true.values) < 0.02);
    CHECK(sup_distance(mean.values, gen.g_true.values) <
          2.0 * 3.0 * scn.noise.sigma_eps / std::sqrt(2000.0));
}

TEST_CASE("mixtures draw the majority and minority signals in order") {
    Scenario scn = make_scenario(ScenarioId::MixtureA, 10, 60, 3);
    scn.noise = NoiseModel{0.0, 0.0, 6, 0.0};
    GeneratedData gen = generate(scn);
    const auto g1 = scenario_signal(ScenarioId::MixtureA, scn.grid);
    const auto g2 = scenario_signal(ScenarioId::MixtureB, scn.grid);
    for (int i = 0; i < 8; ++i) CHECK(gen.data.functions[i].values == g1.values);
    for (int i = 8; i < 10; ++i) CHECK(gen.data.functions[i].values == g2.values);
    CHECK(gen.g_true.values == g1.values);
}

TEST_CASE("scaling noise draws stay positive") {
    Scenario scn = make_scenario(ScenarioId::Bimodal, 200, 60, 77);
    scn.noise.sigma_a = 0.8;  // stress the rejection loop
    scn.noise.sigma_eps = 0.0;
    scn.noise.warp_strength = 0.0;
    GeneratedData gen = generate(scn);
    for (const auto& f : gen.data.functions) {
        const double peak = *std::max_element(f.values.begin(), f.values.end());
        CHECK(peak > 0.0);
    }
}

TEST_CASE("rmse basics") {
    Grid g(50);
    FunctionSample a(g, std::vector<double>(g.num_points, 1.0));
    FunctionSample b(g, std::vector<double>(g.num_points, 3.5));
    CHECK(rmse(a, a) == 0.0);
    CHECK(rmse(a, b) == doctest::Approx(2.5).epsilon(1e-12));

    Rng rng(5);
    auto x = testutil::random_smooth(rng, g, 3, 1.0);
    auto y = testutil::random_smooth(rng, g, 3, 1.0);
    std::vector<double> x2(x.values), y2(y.values);
    for (double& v : x2) v *= 2.0;
    for (double& v : y2) v *= 2.0;
    CHECK(rmse(FunctionSample(g, x2), FunctionSample(g, y2)) ==
          doctest::Approx(2.0 * rmse(x, y)).epsilon(1e-12));
}

TEST_CASE("median helper") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK_THROWS_AS(median({}), std::invalid_argument);
}

TEST_CASE("a clean replication scores every estimator near zero") {
    Scenario scn = make_scenario(ScenarioId::BroadUnimodal, 8, 80, 5);
    scn.noise = NoiseModel{0.0, 0.0, 6, 0.0};
    ExperimentConfig cfg;
    cfg.ppd.lambda_grid = {0.0, 0.05, 0.1};
    cfg.kappa_grid = {0.1};
    ExperimentReport report = run_experiment(scn, 1, cfg);
    REQUIRE(report.rows.size() == 1);
    const RepRecord& row = report.rows[0];
    REQUIRE_FALSE(row.failed);
    CHECK(row.rmse_unaligned < 1e-2);
    CHECK(row.rmse_elastic < 1e-2);
    CHECK(row.rmse_fit < 1e-2);
    for (double v : row.rmse_l2) CHECK(v < 1e-2);
    CHECK(row.m == 1);
    CHECK(row.fit_descent_ok);
    CHECK(row.fit_m_match);
}

TEST_CASE("replication study smoke: shapes recovered and errors ordered") {
    Scenario scn = make_scenario(ScenarioId::Bimodal, 30, 80, 41);
    ExperimentConfig cfg;
    cfg.ppd.lambda_grid = {0.0, 0.01, 0.02, 0.04, 0.06, 0.09, 0.12, 0.16, 0.2};
    ExperimentReport report = run_experiment(scn, 5, cfg);
    REQUIRE(report.rows.size() == 5);
    int m_right = 0;
    for (const RepRecord& row : report.rows) {
        REQUIRE_FALSE(row.failed);
        CHECK(row.fit_descent_ok);
        CHECK(row.rmse_fit >= 0.0);
        if (row.m == 2) ++m_right;
    }
    CHECK(m_right >= 4);
    CHECK(median(report.column(&RepRecord::rmse_fit)) <
          median(report.column(&RepRecord::rmse_unaligned)));
}

TEST_SUITE_END();

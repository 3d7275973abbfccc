#include <doctest.h>

#include <cmath>

#include "ppdest/bootstrap.hpp"
#include "ppdest/simulate.hpp"
#include "test_helpers.hpp"

using namespace ppdest;
using testutil::make_fn;

TEST_SUITE_BEGIN("bootstrap");

TEST_CASE("quantile rank convention: p(B-1)+1 with linear interpolation") {
    std::vector<double> sorted(100);
    for (int i = 0; i < 100; ++i) sorted[i] = i + 1.0;  // order statistics 1..100
    CHECK(quantile_linear(sorted, 0.025) == doctest::Approx(3.475).epsilon(1e-12));
    CHECK(quantile_linear(sorted, 0.975) == doctest::Approx(97.525).epsilon(1e-12));
    CHECK(quantile_linear(sorted, 0.0) == 1.0);
    CHECK(quantile_linear(sorted, 1.0) == 100.0);
    CHECK(quantile_linear(sorted, 0.5) == doctest::Approx(50.5));
}

TEST_CASE("quantiles are monotone in p, so bands nest") {
    Grid g(20);
    Rng rng(8);
    std::vector<std::vector<double>> estimates;
    for (int r = 0; r < 40; ++r) estimates.push_back(testutil::random_smooth(rng, g, 3, 1.0).values);

    auto wide = band_from_replicates(g, estimates, 40, 0.05);
    auto narrow = band_from_replicates(g, estimates, 40, 0.10);
    for (int j = 0; j < g.num_points; ++j) {
        CHECK(narrow.lower[j] >= wide.lower[j]);
        CHECK(narrow.upper[j] <= wide.upper[j]);
        CHECK(wide.lower[j] <= wide.upper[j]);
    }

    // pointwise median replicate sits inside both bands
    for (int j = 0; j < g.num_points; ++j) {
        std::vector<double> col;
        for (const auto& e : estimates) col.push_back(e[j]);
        std::sort(col.begin(), col.end());
        const double med = quantile_linear(col, 0.5);
        CHECK(med >= wide.lower[j]);
        CHECK(med <= wide.upper[j]);
    }
}

TEST_CASE("more than 20% dropped replicates is an error") {
    Grid g(10);
    std::vector<std::vector<double>> estimates(7, std::vector<double>(g.num_points, 1.0));
    CHECK_THROWS_AS(band_from_replicates(g, estimates, 10, 0.05), NumericError);  // 3 of 10 dropped
    CHECK_NOTHROW(band_from_replicates(g, estimates, 8, 0.05));  // 1 of 8 dropped is fine
}

TEST_CASE("identical inputs give a degenerate band equal to the estimate") {
    Grid g(60);
    auto f = make_fn(g, [](double t) {
        return std::exp(-(t - 0.4) * (t - 0.4) / 0.01) + 0.8 * std::exp(-(t - 0.75) * (t - 0.75) / 0.01);
    });
    FunctionSet data(g, std::vector<FunctionSample>(6, f));

    AlignConfig acfg;
    FitConfig fcfg;
    const FunctionSample g_init = initial_estimate(extract_template(f), g);
    BootstrapConfig bcfg;
    bcfg.replicates = 8;
    bcfg.seed = 3;
    auto band = bootstrap_band(data, g_init, 0.0, acfg, fcfg, bcfg);
    CHECK(band.dropped == 0);
    CHECK(band.few_replicates_warning);  // 8 * 0.05 / 2 < 1
    for (int j = 0; j < g.num_points; ++j) {
        CHECK(band.lower[j] == band.upper[j]);
    }
}

TEST_CASE("bands are reproducible bit for bit from the seed") {
    Scenario scn = make_scenario(ScenarioId::Bimodal, 8, 60, 12);
    GeneratedData gen = generate(scn);
    AlignConfig acfg;
    FitConfig fcfg;
    fcfg.max_evals = 800;

    AlignConfig star = acfg;
    star.lambda = 0.05;
    auto aligned = multiple_align(gen.data, star);
    const FunctionSample g_init =
        initial_estimate(simplify_template(extract_template(aligned.mean), 2), gen.data.grid);

    BootstrapConfig bcfg;
    bcfg.replicates = 6;
    bcfg.seed = 99;
    auto band1 = bootstrap_band(gen.data, g_init, 0.05, acfg, fcfg, bcfg);
    auto band2 = bootstrap_band(gen.data, g_init, 0.05, acfg, fcfg, bcfg);
    CHECK(band1.lower == band2.lower);
    CHECK(band1.upper == band2.upper);

    bcfg.seed = 100;
    auto band3 = bootstrap_band(gen.data, g_init, 0.05, acfg, fcfg, bcfg);
    CHECK(band3.lower != band1.lower);
}

TEST_CASE("config validation") {
    Grid g(60);
    auto f = make_fn(g, [](double t) { return t; });
    FunctionSet data(g, {f, f});
    BootstrapConfig bad;
    bad.replicates = 1;
    CHECK_THROWS_AS(bootstrap_band(data, f, 0.0, AlignConfig{}, FitConfig{}, bad),
                    std::invalid_argument);
    bad.replicates = 10;
    bad.alpha = 1.5;
    CHECK_THROWS_AS(bootstrap_band(data, f, 0.0, AlignConfig{}, FitConfig{}, bad),
                    std::invalid_argument);
}

TEST_SUITE_END();

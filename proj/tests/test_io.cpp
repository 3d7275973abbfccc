#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ppdest/io.hpp"
#include "test_helpers.hpp"

using namespace ppdest;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("ppdest_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("csv round trip preserves doubles exactly") {
    TempDir dir;
    CsvTable t;
    t.header = {"t", "x"};
    t.columns = {{0.0, 0.3333333333333333, 1.0}, {1e-17, -2.718281828459045, 123456.789012345678}};
    write_csv(dir.file("x.csv"), t);
    CsvTable back = read_csv(dir.file("x.csv"));
    REQUIRE(back.header == t.header);
    for (std::size_t c = 0; c < t.columns.size(); ++c)
        for (std::size_t r = 0; r < t.columns[c].size(); ++r)
            CHECK(back.columns[c][r] == t.columns[c][r]);
}

TEST_CASE("read_csv reports the offending cell") {
    TempDir dir;
    {
        std::ofstream out(dir.file("bad.csv"));
        out << "t,f1\n0.0,1.0\n0.5,oops\n";
    }
    try {
        read_csv(dir.file("bad.csv"));
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 3") != std::string::npos);
        CHECK(msg.find("column 2") != std::string::npos);
    }

    {
        std::ofstream out(dir.file("ragged.csv"));
        out << "t,f1\n0.0,1.0,9.0\n";
    }
    CHECK_THROWS_AS(read_csv(dir.file("ragged.csv")), DataError);
    CHECK_THROWS_AS(read_csv(dir.file("missing.csv")), DataError);
}

TEST_CASE("function ingestion resamples onto the unit grid") {
    CsvTable t;
    t.header = {"time", "a", "b"};
    t.columns = {{10.0, 11.0, 12.0, 14.0},   // non-uniform, shifted abscissa
                 {0.0, 0.25, 0.5, 1.0},      // linear in t
                 {3.0, 3.0, 3.0, 3.0}};
    Grid g(9);
    FunctionSet set = function_set_from_csv(t, g, "test");
    REQUIRE(set.size() == 2);
    for (int j = 0; j < g.num_points; ++j) {
        CHECK(set.functions[0].values[j] == doctest::Approx(g.point(j)).epsilon(1e-12));
        CHECK(set.functions[1].values[j] == 3.0);
    }

    CsvTable bad = t;
    bad.columns[0] = {10.0, 11.0, 11.0, 14.0};
    CHECK_THROWS_AS(function_set_from_csv(bad, g, "test"), DataError);
}

TEST_CASE("config parsing applies defaults and rejects unknown keys") {
    const auto j = nlohmann::json::parse(R"({
        "grid": {"num_points": 60},
        "align": {"lambda": 0.02, "max_iter": 5},
        "ppd": {"lambda_max": 0.1, "lambda_step": 0.05},
        "seed": 7
    })");
    RunConfig cfg = parse_config(j);
    CHECK(cfg.grid_points == 60);
    CHECK(cfg.align.lambda == 0.02);
    CHECK(cfg.align.max_iter == 5);
    CHECK(cfg.ppd.lambda_grid == std::vector<double>{0.0, 0.05, 0.1});
    CHECK(cfg.seed == 7);
    CHECK(cfg.fit.basis_size == 10);       // untouched defaults
    CHECK(cfg.bootstrap_replicates == 100);

    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"grib": {}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"align": {"lamda": 1}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"ppd": {"lambda_grid": []}})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"ppd": {"lambda_grid": [0.1, 0.2]}})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"bootstrap": {"alpha": 2.0}})")),
                    ConfigError);
}

TEST_SUITE_END();

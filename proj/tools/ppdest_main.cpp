// Command-line front end: dataset ingestion, pipeline orchestration, artifact
// export. Every command is deterministic given config and seed.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ppdest/ppdest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ppdest;

namespace {

struct CommonArgs {
    std::string input;
    std::string output_dir = ".";
    std::string config_path;
    std::string selection_path;
    std::optional<double> lambda;
    std::string scenario = "1";
    int reps = 5;
    std::optional<std::uint64_t> seed;
    std::optional<int> bootstrap_b;
    std::optional<double> alpha;
};

RunConfig effective_config(const CommonArgs& args) {
    RunConfig cfg = args.config_path.empty() ? RunConfig{} : load_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (args.lambda) {
        if (*args.lambda < 0.0) throw ConfigError("--lambda must be >= 0");
        cfg.align.lambda = *args.lambda;
    }
    if (args.bootstrap_b) {
        if (*args.bootstrap_b < 2) throw ConfigError("--bootstrap-B must be >= 2");
        cfg.bootstrap_replicates = *args.bootstrap_b;
    }
    if (args.alpha) {
        if (*args.alpha <= 0.0 || *args.alpha >= 1.0) throw ConfigError("--alpha must be in (0,1)");
        cfg.bootstrap_alpha = *args.alpha;
    }
    return cfg;
}

void ensure_output_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory: " + dir);
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

FunctionSet load_functions(const std::string& path, const Grid& grid) {
    return function_set_from_csv(read_csv(path), grid, path);
}

void write_function_csv(const std::string& path, const FunctionSample& f, const std::string& name) {
    CsvTable t;
    t.header = {"t", name};
    t.columns = {f.grid.points(), f.values};
    write_csv(path, t);
}

json selection_to_json(const PpdResult& ppd) {
    json j;
    j["m"] = ppd.m;
    j["lambda_star"] = ppd.lambda_star;
    j["persistent_labels"] = ppd.persistent_labels;
    j["flagged"] = ppd.flagged;
    return j;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

struct Selection {
    int m = 0;
    double lambda_star = 0.0;
};

Selection read_selection(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open selection: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("selection: invalid JSON in " + path + ": " + e.what());
    }
    if (!j.contains("m") || !j.contains("lambda_star"))
        throw DataError("selection: missing m or lambda_star in " + path);
    return Selection{j.at("m").get<int>(), j.at("lambda_star").get<double>()};
}

void write_alignment(const std::string& dir, const AlignmentResult& res) {
    CsvTable aligned;
    aligned.header.push_back("t");
    aligned.columns.push_back(res.mean.grid.points());
    for (int i = 0; i < res.aligned.size(); ++i) {
        aligned.header.push_back("f" + std::to_string(i + 1));
        aligned.columns.push_back(res.aligned.functions[i].values);
    }
    write_csv(join(dir, "aligned.csv"), aligned);

    CsvTable warps;
    warps.header.push_back("t");
    warps.columns.push_back(res.mean.grid.points());
    for (std::size_t i = 0; i < res.warpings.size(); ++i) {
        warps.header.push_back("gamma" + std::to_string(i + 1));
        warps.columns.push_back(res.warpings[i].values);
    }
    write_csv(join(dir, "warps.csv"), warps);

    write_function_csv(join(dir, "mean.csv"), res.mean, "mean");
}

void write_ppd_artifacts(const std::string& dir, const PpdResult& ppd) {
    CsvTable bar;
    bar.header = {"label", "persistence", "persistent", "lambda_begin", "lambda_end"};
    bar.columns.resize(5);
    for (const PpdBarRow& row : ppd_barchart(ppd)) {
        if (row.intervals.empty()) {
            bar.columns[0].push_back(row.label);
            bar.columns[1].push_back(row.persistence);
            bar.columns[2].push_back(row.persistent ? 1.0 : 0.0);
            bar.columns[3].push_back(std::numeric_limits<double>::quiet_NaN());
            bar.columns[4].push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        for (const auto& [lo, hi] : row.intervals) {
            bar.columns[0].push_back(row.label);
            bar.columns[1].push_back(row.persistence);
            bar.columns[2].push_back(row.persistent ? 1.0 : 0.0);
            bar.columns[3].push_back(lo);
            bar.columns[4].push_back(hi);
        }
    }
    write_csv(join(dir, "ppd_barchart.csv"), bar);

    const PpdSurface surface = ppd_surface(ppd);
    json js;
    js["lambda"] = surface.lambdas;
    js["t"] = surface.ts;
    js["values"] = surface.values;
    js["tracks"] = json::array();
    for (const auto& tr : surface.tracks) {
        json track;
        track["label"] = tr.label;
        json pts = json::array();
        for (const auto& [lambda, loc] : tr.points) pts.push_back({lambda, loc});
        track["points"] = std::move(pts);
        js["tracks"].push_back(std::move(track));
    }
    write_json(join(dir, "ppd_surface.json"), js);
    write_json(join(dir, "selection.json"), selection_to_json(ppd));
}

int cmd_simulate(const CommonArgs& args) {
    const RunConfig cfg = effective_config(args);
    ensure_output_dir(args.output_dir);
    const ScenarioId id = scenario_id_from_string(args.scenario);
    const Scenario scn = scenario_from_config(id, cfg);
    const GeneratedData gen = generate(scn);
    write_csv(join(args.output_dir, "data.csv"), function_set_to_csv(gen.data, {}));
    write_function_csv(join(args.output_dir, "gtrue.csv"), gen.g_true, "g");
    return 0;
}

int cmd_align(const CommonArgs& args) {
    const RunConfig cfg = effective_config(args);
    if (args.input.empty()) throw ConfigError("align: --input is required");
    ensure_output_dir(args.output_dir);
    const Grid grid(cfg.grid_points);
    const FunctionSet data = load_functions(args.input, grid);
    const AlignmentResult res = multiple_align(data, cfg.align);
    write_alignment(args.output_dir, res);
    return 0;
}

int cmd_ppd(const CommonArgs& args) {
    const RunConfig cfg = effective_config(args);
    if (args.input.empty()) throw ConfigError("ppd: --input is required");
    ensure_output_dir(args.output_dir);
    const Grid grid(cfg.grid_points);
    const FunctionSet data = load_functions(args.input, grid);
    const PpdResult ppd = build_ppd(data, cfg.align, cfg.ppd);
    write_ppd_artifacts(args.output_dir, ppd);
    return 0;
}

int cmd_estimate(const CommonArgs& args) {
    const RunConfig cfg = effective_config(args);
    if (args.input.empty()) throw ConfigError("estimate: --input is required");
    ensure_output_dir(args.output_dir);
    const Grid grid(cfg.grid_points);
    const FunctionSet data = load_functions(args.input, grid);

    Selection sel;
    if (!args.selection_path.empty()) {
        sel = read_selection(args.selection_path);
    } else {
        const PpdResult ppd = build_ppd(data, cfg.align, cfg.ppd);
        write_ppd_artifacts(args.output_dir, ppd);
        sel = Selection{ppd.m, ppd.lambda_star};
    }

    AlignConfig star_cfg = cfg.align;
    star_cfg.lambda = sel.lambda_star;
    const AlignmentResult star = multiple_align(data, star_cfg);
    const FunctionSample g_init =
        initial_estimate(simplify_template(extract_template(star.mean), sel.m), grid);
    const FitResult fit = fit_shape(star.aligned, g_init, cfg.fit);
    write_function_csv(join(args.output_dir, "ginit.csv"), g_init, "ginit");
    write_function_csv(join(args.output_dir, "ghat.csv"), fit.estimate, "ghat");
    if (!fit.converged)
        std::cerr << "estimate: optimizer stopped at the evaluation budget; best iterate written\n";
    return 0;
}

int cmd_bootstrap(const CommonArgs& args) {
    const RunConfig cfg = effective_config(args);
    if (args.input.empty()) throw ConfigError("bootstrap: --input is required");
    ensure_output_dir(args.output_dir);
    const Grid grid(cfg.grid_points);
    const FunctionSet data = load_functions(args.input, grid);

    Selection sel;
    if (!args.selection_path.empty()) {
        sel = read_selection(args.selection_path);
    } else {
        const PpdResult ppd = build_ppd(data, cfg.align, cfg.ppd);
        sel = Selection{ppd.m, ppd.lambda_star};
    }
    AlignConfig star_cfg = cfg.align;
    star_cfg.lambda = sel.lambda_star;
    const AlignmentResult star = multiple_align(data, star_cfg);
    const FunctionSample g_init =
        initial_estimate(simplify_template(extract_template(star.mean), sel.m), grid);
    const double lambda_star = sel.lambda_star;

    BootstrapConfig bcfg;
    bcfg.replicates = cfg.bootstrap_replicates;
    bcfg.alpha = cfg.bootstrap_alpha;
    bcfg.seed = cfg.seed;
    const ConfidenceBand band = bootstrap_band(data, g_init, lambda_star, cfg.align, cfg.fit, bcfg);
    if (band.few_replicates_warning)
        std::cerr << "bootstrap: B*alpha/2 < 1; quantiles rest on extreme order statistics\n";
    if (band.dropped > 0)
        std::cerr << "bootstrap: " << band.dropped << " of " << band.replicates
                  << " replicates dropped\n";

    CsvTable t;
    t.header = {"t", "lower", "upper"};
    t.columns = {grid.points(), band.lower, band.upper};
    write_csv(join(args.output_dir, "band.csv"), t);
    return 0;
}

int cmd_compare(const CommonArgs& args) {
    const RunConfig cfg = effective_config(args);
    if (args.reps < 1) throw ConfigError("compare: --reps must be >= 1");
    ensure_output_dir(args.output_dir);
    const ScenarioId id = scenario_id_from_string(args.scenario);
    const Scenario scn = scenario_from_config(id, cfg);

    ExperimentConfig ecfg;
    ecfg.align = cfg.align;
    ecfg.ppd = cfg.ppd;
    ecfg.fit = cfg.fit;
    ecfg.kappa_grid = cfg.kappa_grid;
    const ExperimentReport report = run_experiment(scn, args.reps, ecfg);

    CsvTable t;
    t.header = {"rep", "m", "lambda_star", "rmse_unaligned", "rmse_elastic", "rmse_fit"};
    for (double kappa : report.kappa_grid) t.header.push_back("rmse_l2_kappa" + format_double(kappa));
    t.header.push_back("fit_descent_ok");
    t.header.push_back("fit_m_match");
    t.columns.resize(t.header.size());
    for (const RepRecord& row : report.rows) {
        if (row.failed) {
            std::cerr << "compare: replication " << row.rep << " failed: " << row.error << "\n";
            continue;
        }
        std::size_t c = 0;
        t.columns[c++].push_back(row.rep);
        t.columns[c++].push_back(row.m);
        t.columns[c++].push_back(row.lambda_star);
        t.columns[c++].push_back(row.rmse_unaligned);
        t.columns[c++].push_back(row.rmse_elastic);
        t.columns[c++].push_back(row.rmse_fit);
        for (double v : row.rmse_l2) t.columns[c++].push_back(v);
        t.columns[c++].push_back(row.fit_descent_ok ? 1.0 : 0.0);
        t.columns[c++].push_back(row.fit_m_match ? 1.0 : 0.0);
    }
    write_csv(join(args.output_dir, "report.csv"), t);

    // Wall-clock per stage lives in its own file so report.csv stays
    // byte-identical across reruns of the same seed.
    CsvTable timing;
    timing.header = {"rep", "secs_ppd", "secs_l2", "secs_fit"};
    timing.columns.resize(4);
    for (const RepRecord& row : report.rows) {
        if (row.failed) continue;
        timing.columns[0].push_back(row.rep);
        timing.columns[1].push_back(row.secs_ppd);
        timing.columns[2].push_back(row.secs_l2);
        timing.columns[3].push_back(row.secs_fit);
    }
    write_csv(join(args.output_dir, "timing.csv"), timing);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shape and function estimation from noisy functional data"};
    app.require_subcommand(1);

    CommonArgs args;
    auto add_common = [&](CLI::App* sub, bool with_input) {
        if (with_input) sub->add_option("--input", args.input, "input CSV (t column + functions)");
        sub->add_option("--output-dir", args.output_dir, "output directory");
        sub->add_option("--config", args.config_path, "JSON config file");
        sub->add_option("--seed", args.seed, "seed override");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "generate scenario data");
    simulate->add_option("--scenario", args.scenario, "1|2|3|4|mixture-A|mixture-B");
    add_common(simulate, false);

    CLI::App* align = app.add_subcommand("align", "penalized elastic alignment");
    add_common(align, true);
    align->add_option("--lambda", args.lambda, "elasticity penalty weight");

    CLI::App* ppd = app.add_subcommand("ppd", "peak-persistence diagram and selection");
    add_common(ppd, true);

    CLI::App* estimate = app.add_subcommand("estimate", "peak-constrained estimate");
    add_common(estimate, true);
    estimate->add_option("--selection", args.selection_path, "selection.json from a prior ppd run");

    CLI::App* bootstrap = app.add_subcommand("bootstrap", "pointwise confidence band");
    add_common(bootstrap, true);
    bootstrap->add_option("--selection", args.selection_path, "selection.json from a prior ppd run");
    bootstrap->add_option("--bootstrap-B", args.bootstrap_b, "bootstrap replicates");
    bootstrap->add_option("--alpha", args.alpha, "band level");

    CLI::App* compare = app.add_subcommand("compare", "replication study of all estimators");
    compare->add_option("--scenario", args.scenario, "1|2|3|4|mixture-A|mixture-B");
    compare->add_option("--reps", args.reps, "replications");
    add_common(compare, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 1;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(args);
        if (align->parsed()) return cmd_align(args);
        if (ppd->parsed()) return cmd_ppd(args);
        if (estimate->parsed()) return cmd_estimate(args);
        if (bootstrap->parsed()) return cmd_bootstrap(args);
        if (compare->parsed()) return cmd_compare(args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 1;
}

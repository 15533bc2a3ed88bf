#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "gridfc/agent.hpp"
#include "gridfc/baselines.hpp"
#include "gridfc/env.hpp"
#include "gridfc/errors.hpp"
#include "gridfc/grid.hpp"
#include "gridfc/oracle.hpp"
#include "gridfc/report.hpp"
#include "gridfc/search_common.hpp"

namespace fs = std::filesystem;
using namespace gridfc;

namespace {

/// Auto-enumeration budget: a catalog this size takes well under a minute on
/// one desktop core, so regret reporting never needs a precomputed file.
constexpr double kAutoEnumerateLeaves = 200000.0;
/// Beyond this the run is hours, not minutes; demand an explicit override.
constexpr double kForceLeaves = 1e7;

struct Options {
    std::string case_path;
    std::string format = "auto";
    double load_scale = 1.0;
    int horizon = 3;
    int iterations = 1200;
    int kappa = 3;
    int batch = 32;
    int explore = 250;
    double gamma = 0.99;
    double alpha = 0.005;
    double eps0 = 0.01;
    double threshold_mw = 0.0;
    int hidden = 12;
    int out_features = 12;
    int hops = 3;
    int head_width = 64;
    std::uint64_t seed = 1;
    double budget_seconds = 0.0;
    double max_grad_norm = 0.0;
    double td_clip = 1.0;
    int target_sync_every = 1;
    int mc_repeats = 1;
    std::string catalog_path;
    std::string out_dir = "out";
    bool parallel = false;
    bool parallel_repeats = false;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << content;
}

GridCase load_scaled_case(const Options& opt) {
    CaseFormat format;
    if (opt.format == "matpower") {
        format = CaseFormat::MatpowerM;
    } else if (opt.format == "json") {
        format = CaseFormat::NativeJson;
    } else {
        format = fs::path(opt.case_path).extension() == ".m" ? CaseFormat::MatpowerM
                                                             : CaseFormat::NativeJson;
    }
    GridCase grid = load_case(opt.case_path, format);
    if (opt.load_scale != 1.0) grid = scale_load(grid, opt.load_scale);
    return grid;
}

/// The effective configuration, frozen into every report.
std::vector<std::pair<std::string, std::string>> config_echo(const Options& opt,
                                                             const std::string& extra_key = "",
                                                             const std::string& extra_value = "") {
    std::vector<std::pair<std::string, std::string>> echo = {
        {"case", opt.case_path},
        {"format", opt.format},
        {"load_scale", format_double(opt.load_scale)},
        {"horizon", std::to_string(opt.horizon)},
        {"iterations", std::to_string(opt.iterations)},
        {"kappa", std::to_string(opt.kappa)},
        {"batch", std::to_string(opt.batch)},
        {"explore", std::to_string(opt.explore)},
        {"gamma", format_double(opt.gamma)},
        {"alpha", format_double(opt.alpha)},
        {"eps0", format_double(opt.eps0)},
        {"threshold_mw", format_double(opt.threshold_mw)},
        {"hidden", std::to_string(opt.hidden)},
        {"out_features", std::to_string(opt.out_features)},
        {"hops", std::to_string(opt.hops)},
        {"head_width", std::to_string(opt.head_width)},
        {"max_grad_norm", format_double(opt.max_grad_norm)},
        {"td_clip", format_double(opt.td_clip)},
        {"target_sync_every", std::to_string(opt.target_sync_every)},
        {"seed", std::to_string(opt.seed)},
        {"budget_seconds", format_double(opt.budget_seconds)},
        {"mc_repeats", std::to_string(opt.mc_repeats)},
        {"catalog", opt.catalog_path},
        {"out", opt.out_dir},
    };
    if (!extra_key.empty()) echo.emplace_back(extra_key, extra_value);
    return echo;
}

void add_common_options(CLI::App& cmd, Options& opt) {
    cmd.add_option("--case", opt.case_path, "Grid case file")->required();
    cmd.add_option("--format", opt.format, "Case format: auto, matpower, or json")
        ->check(CLI::IsMember({"auto", "matpower", "json"}));
    cmd.add_option("--load-scale", opt.load_scale, "Multiply every bus load by this factor");
    cmd.add_option("--horizon", opt.horizon, "Stages per fault chain (P)")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--seed", opt.seed, "Base RNG seed");
    cmd.add_option("--out", opt.out_dir, "Output directory");
    cmd.add_flag("--parallel", opt.parallel, "Parallelize enumeration and batch gradients");
    cmd.add_option("--config", "Flat key=value file mirroring the flags; flags win");
}

/// Expands --config <file> into --key=value tokens for every key the command
/// line does not already set, so explicit flags always win.
std::vector<std::string> with_config_applied(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);

    std::string config_path;
    std::vector<std::string> given;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i].rfind("--", 0) != 0) continue;
        const std::size_t eq = args[i].find('=');
        const std::string name = args[i].substr(2, eq == std::string::npos ? eq : eq - 2);
        given.push_back(name);
        if (name != "config") continue;
        if (eq != std::string::npos)
            config_path = args[i].substr(eq + 1);
        else if (i + 1 < args.size())
            config_path = args[i + 1];
    }
    if (config_path.empty()) return args;

    const auto trim = [](std::string s) {
        const auto first = s.find_first_not_of(" \t\r");
        const auto last = s.find_last_not_of(" \t\r");
        return first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
    };
    std::istringstream in(read_file(config_path));
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(config_path + ":" + std::to_string(line_no) +
                                  ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || key == "config")
            throw ValidationError(config_path + ":" + std::to_string(line_no) + ": bad key");
        if (std::find(given.begin(), given.end(), key) == given.end())
            args.push_back("--" + key + "=" + value);
    }
    return args;
}

void add_search_options(CLI::App& cmd, Options& opt) {
    cmd.add_option("--iterations", opt.iterations, "Online search episodes (S)")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--gamma", opt.gamma, "Discount factor");
    cmd.add_option("--eps0", opt.eps0, "Exploration floor");
    cmd.add_option("--threshold-mw", opt.threshold_mw, "Record chains with at least this TLL");
    cmd.add_option("--budget-seconds", opt.budget_seconds,
                   "Wall-clock cap, checked between episodes (0 = unbounded)");
    cmd.add_option("--mc-repeats", opt.mc_repeats, "Independent repeats seeded seed+index")
        ->check(CLI::PositiveNumber);
    cmd.add_flag("--parallel-repeats", opt.parallel_repeats,
                 "Run the Monte-Carlo repeats concurrently");
    cmd.add_option("--catalog", opt.catalog_path,
                   "Precomputed chain catalog (JSONL); auto-enumerated for small cases");
}

std::string top_csv(const ChainCatalog& catalog, int top) {
    std::string out = "rank,tll_mw,actions\n";
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(top), catalog.size());
    for (std::size_t i = 0; i < take; ++i) {
        out += std::to_string(i + 1);
        out += ',';
        out += format_double(catalog.chains[i].tll_mw());
        out += ',';
        out += prefix_key(catalog.chains[i].actions());
        out += '\n';
    }
    return out;
}

std::string chains_jsonl(const std::vector<FaultChain>& chains) {
    std::string out;
    for (const auto& chain : chains) {
        out += chain_to_json(chain);
        out += '\n';
    }
    return out;
}

/// Loads the catalog from --catalog, or enumerates one when the case is small
/// enough that exhaustive ground truth costs less than a coffee.
ChainCatalog obtain_catalog(const GridCase& grid, const Options& opt) {
    if (!opt.catalog_path.empty()) return catalog_from_jsonl(read_file(opt.catalog_path));
    const double estimate = enumeration_leaf_estimate(grid.branch_count(), opt.horizon);
    if (estimate > kAutoEnumerateLeaves)
        throw ValidationError("regret needs ground truth but the chain space has ~" +
                              std::to_string(static_cast<long long>(estimate)) +
                              " leaves; enumerate separately and pass --catalog");
    std::cerr << "auto-enumerating ground truth (~" << static_cast<long long>(estimate)
              << " leaf cascades)\n";
    return enumerate_chains(grid, opt.horizon, opt.parallel);
}

RunReport make_report(const std::string& algorithm, std::uint64_t run_seed,
                      const std::vector<std::pair<std::string, std::string>>& echo,
                      const std::vector<FaultChain>& chains, const std::vector<EpisodeLog>& episodes,
                      int online_episodes, bool exhausted, double wall_seconds,
                      const ChainCatalog& catalog) {
    std::vector<double> found;
    found.reserve(chains.size());
    for (const auto& chain : chains) found.push_back(chain.tll_mw());
    const std::vector<double> series = regret_series(catalog, found);

    RunReport report;
    report.algorithm = algorithm;
    report.seed = run_seed;
    report.config_echo = echo;
    report.episodes_run = static_cast<int>(episodes.size());
    report.online_episodes = online_episodes;
    report.discovered_chains = static_cast<int>(chains.size());
    for (const double tll : found) report.accumulated_tll_mw += tll;
    report.regret_final_mw = series.empty() ? 0.0 : series.back();
    report.regret_series_mw = series;
    report.exhausted = exhausted;
    report.wall_seconds = wall_seconds;
    return report;
}

void write_run_artifacts(const fs::path& dir, const RunReport& report,
                         const std::vector<FaultChain>& chains) {
    std::vector<double> found;
    for (const auto& chain : chains) found.push_back(chain.tll_mw());
    write_file(dir / "chains.jsonl", chains_jsonl(chains));
    write_file(dir / "regret.csv", regret_csv(build_regret_rows(found, report.regret_series_mw)));
    write_file(dir / "report.json", report.to_json() + "\n");
}

void print_run_line(const RunReport& report) {
    std::cout << report.algorithm << " seed=" << report.seed
              << " chains=" << report.discovered_chains
              << " tll_mw=" << format_double(report.accumulated_tll_mw)
              << " regret_mw=" << format_double(report.regret_final_mw) << " wall_s="
              << format_double(0.01 * std::round(report.wall_seconds * 100.0)) << "\n";
}

int cmd_enumerate(const Options& opt, int top, bool force_large) {
    const GridCase grid = load_scaled_case(opt);
    const double estimate = enumeration_leaf_estimate(grid.branch_count(), opt.horizon);
    if (estimate > kForceLeaves && !force_large)
        throw ValidationError("~" + std::to_string(static_cast<long long>(estimate)) +
                              " leaf cascades estimated; rerun with --force-large to proceed");

    EnumerateProgress progress = nullptr;
    if (estimate > kAutoEnumerateLeaves) {
        std::cerr << "enumerating ~" << static_cast<long long>(estimate) << " leaf cascades\n";
        progress = [](int done, int total) {
            if (done % 5 == 0 || done == total)
                std::cerr << "progress: " << done << "/" << total << " first-stage subtrees\n";
        };
    }
    const ChainCatalog catalog = enumerate_chains(grid, opt.horizon, opt.parallel, progress);

    const fs::path dir(opt.out_dir);
    write_file(dir / "catalog.jsonl", catalog_to_jsonl(catalog));
    write_file(dir / "top.csv", top_csv(catalog, top));
    std::cout << "enumerated " << catalog.size() << " chains; top TLL "
              << format_double(catalog.chains.empty() ? 0.0 : catalog.chains.front().tll_mw())
              << " MW; wrote " << (dir / "catalog.jsonl").string() << " and "
              << (dir / "top.csv").string() << "\n";
    return 0;
}

int cmd_train(const Options& opt) {
    const GridCase grid = load_scaled_case(opt);
    const ChainCatalog catalog = obtain_catalog(grid, opt);

    SearchConfig config;
    config.iterations = opt.iterations;
    config.horizon = opt.horizon;
    config.kappa = opt.kappa;
    config.batch = opt.batch;
    config.explore = opt.explore;
    config.gamma = opt.gamma;
    config.alpha = opt.alpha;
    config.eps0 = opt.eps0;
    config.threshold_mw = opt.threshold_mw;
    config.hidden = opt.hidden;
    config.out_features = opt.out_features;
    config.hops = opt.hops;
    config.head_width = opt.head_width;
    config.max_grad_norm = opt.max_grad_norm;
    config.td_clip = opt.td_clip;
    config.target_sync_every = opt.target_sync_every;
    config.budget_seconds = opt.budget_seconds;
    config.parallel_batch = opt.parallel;
    const auto echo = config_echo(opt);

    std::vector<RunReport> reports(static_cast<std::size_t>(opt.mc_repeats));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (opt.parallel_repeats && opt.mc_repeats > 1)
#endif
    for (int r = 0; r < opt.mc_repeats; ++r) {
        const fs::path dir =
            opt.mc_repeats == 1 ? fs::path(opt.out_dir)
                                : fs::path(opt.out_dir) / ("repeat_" + std::to_string(r));
        SearchConfig run_config = config;
        run_config.seed = opt.seed + static_cast<std::uint64_t>(r);

        fs::create_directories(dir);
        std::ofstream episode_log(dir / "episodes.jsonl", std::ios::binary);
        const SearchResult result = run_search(grid, run_config, [&](const EpisodeLog& log) {
            episode_log << episode_jsonl_line(log) << "\n";
        });
        episode_log.close();

        const RunReport report =
            make_report("grqn", run_config.seed, echo, result.chains, result.episodes,
                        result.online_episodes, result.exhausted, result.wall_seconds, catalog);
        write_run_artifacts(dir, report, result.chains);
        write_file(dir / "checkpoint.json", result.params.to_json() + "\n");
        reports[static_cast<std::size_t>(r)] = report;
    }

    for (const auto& report : reports) print_run_line(report);
    if (opt.mc_repeats > 1) {
        write_file(fs::path(opt.out_dir) / "summary.csv", comparison_csv(reports));
        const auto tll = mean_sd([&] {
            std::vector<double> v;
            for (const auto& report : reports) v.push_back(report.accumulated_tll_mw);
            return v;
        }());
        std::cout << "mean tll_mw=" << format_double(tll.mean)
                  << " sd=" << format_double(tll.sd) << " over " << opt.mc_repeats
                  << " repeats\n";
    }
    return 0;
}

int cmd_baseline(const Options& opt, const std::string& algo, double pretrain_scale,
                 int pretrain_iterations, std::uint64_t pretrain_seed,
                 const std::string& pretrain_table_path) {
    const GridCase base = [&] {
        Options unscaled = opt;
        unscaled.load_scale = 1.0;
        return load_scaled_case(unscaled);
    }();
    const GridCase grid = opt.load_scale != 1.0 ? scale_load(base, opt.load_scale) : base;
    const ChainCatalog catalog = obtain_catalog(grid, opt);

    BaselineConfig config;
    config.iterations = opt.iterations;
    config.horizon = opt.horizon;
    config.gamma = opt.gamma;
    config.alpha = opt.alpha;
    config.eps0 = opt.eps0;
    config.threshold_mw = opt.threshold_mw;
    config.budget_seconds = opt.budget_seconds;
    const auto echo = config_echo(opt, "algo", algo);

    TabularQ pretrained;
    const bool transfer = algo == "pfw_rl_te";
    if (transfer) {
        if (!pretrain_table_path.empty()) {
            pretrained = TabularQ::from_json(read_file(pretrain_table_path), grid.branch_count());
        } else {
            std::cerr << "pretraining value table at " << format_double(pretrain_scale)
                      << "x load for " << pretrain_iterations << " episodes\n";
            BaselineConfig pre = config;
            pre.iterations = pretrain_iterations;
            pre.budget_seconds = 0.0;
            pre.seed = pretrain_seed;
            pretrained = te_pretrain(base, pretrain_scale, pre);
            write_file(fs::path(opt.out_dir) / "qtable_pretrain.json", pretrained.to_json() + "\n");
        }
    }

    std::vector<RunReport> reports(static_cast<std::size_t>(opt.mc_repeats));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (opt.parallel_repeats && opt.mc_repeats > 1)
#endif
    for (int r = 0; r < opt.mc_repeats; ++r) {
        const fs::path dir =
            opt.mc_repeats == 1 ? fs::path(opt.out_dir)
                                : fs::path(opt.out_dir) / ("repeat_" + std::to_string(r));
        BaselineConfig run_config = config;
        run_config.seed = opt.seed + static_cast<std::uint64_t>(r);

        fs::create_directories(dir);
        std::ofstream episode_log(dir / "episodes.jsonl", std::ios::binary);
        const BaselineResult result =
            pfw_rl_run(grid, run_config, transfer ? &pretrained : nullptr,
                       [&](const EpisodeLog& log) { episode_log << episode_jsonl_line(log) << "\n"; });
        episode_log.close();

        const RunReport report =
            make_report(algo, run_config.seed, echo, result.chains, result.episodes,
                        result.episodes_run, result.exhausted, result.wall_seconds, catalog);
        write_run_artifacts(dir, report, result.chains);
        write_file(dir / "qtable.json", result.table.to_json() + "\n");
        reports[static_cast<std::size_t>(r)] = report;
    }

    for (const auto& report : reports) print_run_line(report);
    if (opt.mc_repeats > 1)
        write_file(fs::path(opt.out_dir) / "summary.csv", comparison_csv(reports));
    return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    std::vector<RunReport> reports;
    std::vector<std::pair<std::string, std::vector<double>>> curves;
    for (const auto& dir : run_dirs) {
        const fs::path path(dir);
        if (!fs::exists(path / "report.json"))
            throw ReportError("no report.json under " + dir);
        const RunReport report = RunReport::from_json(read_file((path / "report.json").string()));

        std::vector<double> series;
        for (const auto& row : parse_regret_csv(read_file((path / "regret.csv").string())))
            series.push_back(row.regret_mw);

        std::string label = path.filename().string();
        if (label.empty()) label = path.parent_path().filename().string();
        for (const auto& curve : curves) {
            if (curve.first == label) {
                label += "_" + std::to_string(curves.size());
                break;
            }
        }
        reports.push_back(report);
        curves.emplace_back(label, std::move(series));
    }

    const fs::path dir(out_dir);
    const std::string table = comparison_csv(reports);
    write_file(dir / "comparison.csv", table);
    write_file(dir / "merged_regret.csv", merged_regret_csv(curves));
    write_file(dir / "regret.svg", regret_svg(curves));
    std::cout << table;
    std::cout << "wrote comparison.csv, merged_regret.csv, regret.svg in " << dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cascading fault-chain risk search for power grids"};
    app.require_subcommand(1);
    app.failure_message([](const CLI::App*, const CLI::Error& e) {
        return std::string("error: ") + e.what() + "\n";
    });

    Options enum_opt;
    int top = 10;
    bool force_large = false;
    CLI::App* enumerate = app.add_subcommand("enumerate", "Exhaustively catalog fault chains");
    add_common_options(*enumerate, enum_opt);
    enumerate->add_option("--top", top, "Rows in the top-chain summary CSV")
        ->check(CLI::PositiveNumber);
    enumerate->add_flag("--force-large", force_large, "Allow enumerations beyond 1e7 leaves");

    Options train_opt;
    CLI::App* train = app.add_subcommand("train", "Run the graph-recurrent Q search");
    add_common_options(*train, train_opt);
    add_search_options(*train, train_opt);
    train->add_option("--kappa", train_opt.kappa, "Training steps per online action")
        ->check(CLI::PositiveNumber);
    train->add_option("--batch", train_opt.batch, "Episodes per training step")
        ->check(CLI::PositiveNumber);
    train->add_option("--explore", train_opt.explore, "Warm-up episodes before going online")
        ->check(CLI::NonNegativeNumber);
    train->add_option("--alpha", train_opt.alpha, "Optimizer learning rate");
    train->add_option("--hidden", train_opt.hidden, "Latent features per node (H)")
        ->check(CLI::PositiveNumber);
    train->add_option("--out-features", train_opt.out_features, "Output features per node (G)")
        ->check(CLI::PositiveNumber);
    train->add_option("--hops", train_opt.hops, "Graph filter taps (K)")
        ->check(CLI::PositiveNumber);
    train->add_option("--head-width", train_opt.head_width, "Q-head hidden width (D)")
        ->check(CLI::PositiveNumber);
    train->add_option("--max-grad-norm", train_opt.max_grad_norm,
                      "Global-norm gradient clip (0 disables)");
    train->add_option("--td-clip", train_opt.td_clip,
                      "Error magnitude beyond which the loss grows linearly (0 = quadratic)");
    train->add_option("--target-sync-every", train_opt.target_sync_every,
                      "Episodes between target-network refreshes")
        ->check(CLI::PositiveNumber);

    Options base_opt;
    base_opt.alpha = 0.1;
    std::string algo = "pfw_rl";
    double pretrain_scale = 0.6;
    int pretrain_iterations = 5000;
    std::uint64_t pretrain_seed = 1;
    std::string pretrain_table_path;
    CLI::App* baseline = app.add_subcommand("baseline", "Run a tabular flow-weighted baseline");
    add_common_options(*baseline, base_opt);
    add_search_options(*baseline, base_opt);
    baseline->add_option("--algo", algo, "pfw_rl, or pfw_rl_te with experience transfer")
        ->check(CLI::IsMember({"pfw_rl", "pfw_rl_te"}));
    baseline->add_option("--alpha", base_opt.alpha, "Value-update rate");
    baseline->add_option("--pretrain-scale", pretrain_scale, "Load factor for the pretrain phase");
    baseline->add_option("--pretrain-iterations", pretrain_iterations, "Pretrain episodes")
        ->check(CLI::PositiveNumber);
    baseline->add_option("--pretrain-seed", pretrain_seed, "Seed for the pretrain phase");
    baseline->add_option("--pretrain-table", pretrain_table_path,
                         "Reuse a previously saved value table instead of pretraining");

    std::vector<std::string> run_dirs;
    std::string report_out = ".";
    CLI::App* report = app.add_subcommand("report", "Compare finished runs");
    report->add_option("dirs", run_dirs, "Run directories holding report.json + regret.csv")
        ->required()
        ->expected(-1);
    report->add_option("--out", report_out, "Output directory");

    try {
        std::vector<std::string> args = with_config_applied(argc, argv);
        std::reverse(args.begin(), args.end());  // the vector overload pops from the back
        try {
            app.parse(std::move(args));
        } catch (const CLI::ParseError& e) {
            return app.exit(e);
        }
        if (enumerate->parsed()) return cmd_enumerate(enum_opt, top, force_large);
        if (train->parsed()) return cmd_train(train_opt);
        if (baseline->parsed())
            return cmd_baseline(base_opt, algo, pretrain_scale, pretrain_iterations, pretrain_seed,
                                pretrain_table_path);
        if (report->parsed()) return cmd_report(run_dirs, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gridfc/search_common.hpp"

namespace gridfc {

/// Mean and sample standard deviation (n-1 denominator; sd is 0 for n < 2).
struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& values);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// One row of a regret curve: the s-th discovered chain, the running
/// accumulated TLL, and the remaining gap to the best attainable total.
struct RegretRow {
    int iteration = 0;  // 1-based discovery index
    double chain_tll_mw = 0.0;
    double accum_tll_mw = 0.0;
    double regret_mw = 0.0;
};

/// Pairs each discovered-chain TLL with the matching regret value.
/// Throws ShapeError if the two vectors differ in length.
std::vector<RegretRow> build_regret_rows(const std::vector<double>& found_tll_mw,
                                         const std::vector<double>& regret_mw);

/// Columns: iteration,chain_tll_mw,accum_tll_mw,regret_mw.
std::string regret_csv(const std::vector<RegretRow>& rows);
std::vector<RegretRow> parse_regret_csv(const std::string& text);

/// One JSON object per completed episode, in completion order (no newline).
std::string episode_jsonl_line(const EpisodeLog& log);

/// Summary of a single search or baseline run, persisted as report.json.
struct RunReport {
    std::string algorithm;  // "grqn", "pfw_rl", or "pfw_rl_te"
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config_echo;
    int episodes_run = 0;
    int online_episodes = 0;
    int discovered_chains = 0;
    double accumulated_tll_mw = 0.0;
    double regret_final_mw = 0.0;
    std::vector<double> regret_series_mw;
    bool exhausted = false;
    double wall_seconds = 0.0;

    std::string to_json() const;
    static RunReport from_json(const std::string& text);
};

/// Per-algorithm mean +/- sd over a set of runs, grouped in first-appearance
/// order. Columns: algorithm,runs,tll_mean_mw,tll_sd_mw,regret_mean_mw,
/// regret_sd_mw,discovered_mean. Wall time stays out so the table is
/// byte-reproducible across reruns; per-run timing lives in report.json.
std::string comparison_csv(const std::vector<RunReport>& reports);

/// Wide table of regret curves: iteration,<label...>; shorter series leave
/// their trailing cells empty.
std::string merged_regret_csv(
    const std::vector<std::pair<std::string, std::vector<double>>>& series);

/// Line plot of regret curves: one polyline per labelled series, fixed
/// palette, axis labels "iteration" and "regret (MW)", no timestamps.
std::string regret_svg(
    const std::vector<std::pair<std::string, std::vector<double>>>& series);

}  // namespace gridfc

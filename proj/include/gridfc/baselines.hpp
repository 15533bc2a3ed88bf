#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "gridfc/env.hpp"
#include "gridfc/grid.hpp"
#include "gridfc/search_common.hpp"

namespace gridfc {

/// Action values keyed by the dash-joined chain prefix. Values are stored
/// per-unit of the episode's initial served load, which keeps tables from
/// different load levels directly transferable.
class TabularQ {
public:
    TabularQ() = default;
    explicit TabularQ(int num_actions) : num_actions_(num_actions) {}

    int num_actions() const { return num_actions_; }
    std::size_t row_count() const { return table_.size(); }

    /// Unvisited cells read as zero.
    double value(const std::string& key, int action) const;
    /// Whole row for argmax-style selection; a zero vector when unvisited.
    Eigen::VectorXd values(const std::string& key) const;
    /// Mutable row, created zero-filled on first touch.
    Eigen::VectorXd& row(const std::string& key);

    /// One-line JSON object mapping each prefix key to its value array.
    std::string to_json() const;
    static TabularQ from_json(const std::string& text, int num_actions);

private:
    int num_actions_ = 0;
    std::unordered_map<std::string, Eigen::VectorXd> table_;
};

struct BaselineConfig {
    int iterations = 1200;      ///< search episodes; every episode counts
    int horizon = 3;            ///< stages per episode
    double gamma = 0.99;
    double alpha = 0.1;         ///< one-step value-update rate
    double eps0 = 0.01;         ///< exploration floor
    double threshold_mw = 0.0;  ///< record chains with at least this TLL
    std::uint64_t seed = 1;
    double budget_seconds = 0.0;  ///< wall-clock cap checked between episodes; <=0 unbounded
    double force_epsilon = -1.0;  ///< test hook; >=0 pins the exploration probability
};

struct BaselineResult {
    std::vector<FaultChain> chains;  ///< chains above threshold, discovery order
    std::vector<EpisodeLog> episodes;
    TabularQ table;
    int episodes_run = 0;
    bool exhausted = false;
    double wall_seconds = 0.0;
};

/// Flow-weighted search with a tabular value function: the same exploration
/// schedule and availability pruning as the network agent, but exploitation
/// reads a prefix-keyed table updated one step at a time, and visit counting
/// starts with the very first episode (there is no warm-up phase).
/// `warm_start` seeds the table, e.g. from a pretraining run.
BaselineResult pfw_rl_run(const GridCase& prepared_case, const BaselineConfig& config,
                          const TabularQ* warm_start = nullptr,
                          const std::function<void(const EpisodeLog&)>& on_episode = nullptr);

/// Pretrains a value table on the same grid at a different load level
/// (transfer of experience). The returned table feeds pfw_rl_run verbatim.
TabularQ te_pretrain(const GridCase& base_case, double pretrain_load_factor,
                     const BaselineConfig& config);

}  // namespace gridfc

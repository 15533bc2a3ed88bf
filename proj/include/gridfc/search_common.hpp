#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

namespace gridfc {

/// Joins an action prefix into a stable map key ("" for the root,
/// "3-17-42" for a three-stage prefix).
std::string prefix_key(const std::vector<int>& prefix);

/// Per-episode trace shared by the network agent and the tabular baselines.
struct EpisodeLog {
    int episode = 0;  ///< 1-based, across warm-up and online phases
    bool online = false;
    std::vector<int> actions;
    std::vector<double> losses_mw;
    double tll_mw = 0.0;
    std::vector<double> epsilons;      ///< the probability in force at each stage
    std::vector<double> train_losses;  ///< one entry per training step this episode
};

/// Visit counts per (chain-prefix, action). The prefix key captures the
/// decision state exactly because the cascade kernel is deterministic.
class CountTable {
public:
    int get(const std::string& key, int action) const;
    void increment(const std::string& key, int action);
    bool empty() const { return counts_.empty(); }

private:
    std::unordered_map<std::string, std::unordered_map<int, int>> counts_;
};

/// Which actions are no longer worth taking at a prefix because every chain
/// through them has been visited. Pruning only grows; a prefix whose whole
/// action set is pruned propagates the pruning of its own last action to its
/// parent, which is what lets the search drain the chain space completely.
class AvailabilityTree {
public:
    const std::unordered_set<int>& pruned(const std::vector<int>& prefix) const;

    /// Called with a finished episode's action sequence and, per stage, the
    /// number of actions the environment offered there. Prunes the final
    /// action at its parent prefix and walks the exhaustion upward.
    void prune_backwards(const std::vector<int>& actions, const std::vector<int>& offered);

    /// True when every first-stage action is pruned (chain space drained).
    bool exhausted(int root_offered) const;

private:
    std::unordered_map<std::string, std::unordered_set<int>> pruned_;
    std::unordered_set<int> empty_;
};

/// Flow-weighted exploration pick: the admissible action with the largest
/// |flow|/√(count+1), ties to the lowest branch id.
int select_explore(const Eigen::VectorXd& flows_mw, const std::vector<bool>& mask,
                   const CountTable& counts, const std::string& prefix);

/// Count-normalized exploitation pick: the admissible action with the largest
/// value/√(count+1), ties to the lowest branch id.
int select_exploit(const Eigen::VectorXd& values, const std::vector<bool>& mask,
                   const CountTable& counts, const std::string& prefix);

/// Exploration probability: how much first-stage flow weight is still
/// unvisited, floored at eps0. All-zero flows count as fully unvisited.
double update_epsilon(const Eigen::VectorXd& flows_at_start_mw, const CountTable& counts,
                      double eps0);

}  // namespace gridfc

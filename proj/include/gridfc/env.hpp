#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "gridfc/grid.hpp"
#include "gridfc/powerflow.hpp"

namespace gridfc {

/// What the agent sees at one stage: the live topology and the per-bus phase
/// angles. Dead buses keep their (zero) rows so dimensions never change.
struct Observation {
    Topology topology;
    Eigen::MatrixXd node_state;  ///< N×1 angles in radians
};

struct ChainStage {
    int chosen_action = -1;
    std::vector<int> failed_set;  ///< sorted; contains chosen_action
    double load_loss_mw = 0.0;
};

/// One completed (or in-progress) fault chain.
struct FaultChain {
    std::vector<ChainStage> stages;
    int horizon = 0;

    std::vector<int> actions() const;
    double tll_mw() const;
};

/// Total load loss of the chain in MW.
double chain_tll(const FaultChain& chain);

struct StepResult {
    Observation next_observation;
    double reward_mw = 0.0;
    std::vector<int> failed_set;
    bool end = false;
};

/// Episode driver: applies agent removals stage by stage against the cascade
/// engine and tracks the chain built so far. Single-threaded mutable state;
/// copy the instance to branch a what-if.
class FcEnv {
public:
    /// Scales the case's loads by `load_factor` (throws InfeasibleError when
    /// capacity cannot cover it) and prepares the outage-free solution.
    FcEnv(const GridCase& base_case, double load_factor, int horizon);

    /// Wraps an already-prepared case without rescaling.
    FcEnv(GridCase prepared_case, int horizon);

    /// Returns to the outage-free system; clears the chain and stage counter.
    Observation reset();

    /// Applies one removal; the cascade may fail further components in the
    /// same stage. Throws InvalidActionError for masked-off actions and
    /// after the episode has ended.
    StepResult step(int action);

    /// True for in-service branches the agent may still remove.
    std::vector<bool> action_mask() const;
    /// Same, with an extra set of externally pruned branch ids.
    std::vector<bool> action_mask(const std::unordered_set<int>& pruned) const;

    const Observation& observation() const { return obs_; }
    const PowerFlowSolution& solution() const { return sol_; }
    const GridCase& prepared_case() const { return case_; }
    const FaultChain& chain() const { return chain_; }
    double initial_load_mw() const { return initial_load_mw_; }
    int stage() const { return stage_; }
    int horizon() const { return horizon_; }
    bool done() const { return done_; }

private:
    void refresh_observation();

    GridCase case_;
    int horizon_;
    Topology topo_;
    PowerFlowSolution sol_;
    Observation obs_;
    FaultChain chain_;
    double initial_load_mw_ = 0.0;
    int stage_ = 0;
    bool done_ = false;
};

/// Re-executes a chain's chosen actions on a fresh episode and returns the
/// resulting chain (failed sets and losses recomputed).
FaultChain replay_chain(const FcEnv& env_template, const std::vector<int>& actions);

/// One-line JSON record: {"actions":[...],"failed_sets":[[...]],
/// "losses_mw":[...],"tll_mw":...}.
std::string chain_to_json(const FaultChain& chain);
FaultChain chain_from_json(const std::string& line);

}  // namespace gridfc

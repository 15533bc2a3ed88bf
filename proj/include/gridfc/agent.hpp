#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "gridfc/adam.hpp"
#include "gridfc/env.hpp"
#include "gridfc/grnn.hpp"
#include "gridfc/search_common.hpp"

namespace gridfc {

/// One stage of experience. Rewards are stored per-unit of the episode's
/// initial served load so the Q-head trains on O(1) magnitudes regardless
/// of case size.
struct TransitionTuple {
    GraphObs obs;
    int action = -1;
    double reward = 0.0;
    GraphObs next_obs;
    std::vector<bool> next_mask;  ///< branches still removable at next_obs
    bool end = false;
};

using Episode = std::vector<TransitionTuple>;

/// Replay memory over whole episodes; the recurrent network always trains on
/// full sequences unrolled from a zero latent state.
class SequenceBuffer {
public:
    void append(Episode episode) { episodes_.push_back(std::move(episode)); }
    std::size_t size() const { return episodes_.size(); }
    const Episode& episode(std::size_t i) const { return episodes_[i]; }

private:
    std::vector<Episode> episodes_;
};

struct SearchConfig {
    int iterations = 1200;       ///< online search episodes (S)
    int horizon = 3;             ///< stages per episode (P)
    int kappa = 3;               ///< training steps per online action
    int batch = 32;              ///< episodes per training step (B)
    int explore = 250;           ///< offline warm-up episodes before training
    double gamma = 0.99;
    double alpha = 0.005;        ///< Adam learning rate
    double eps0 = 0.01;          ///< exploration floor
    double threshold_mw = 0.0;   ///< record chains with at least this TLL
    int hidden = 12;             ///< latent features per node (H)
    int out_features = 12;       ///< output features per node (G)
    int hops = 3;                ///< filter taps (K)
    int head_width = 64;         ///< Q-head hidden width (D)
    double max_grad_norm = 0.0;  ///< global-norm clip; <=0 disables
    /// Cap on the temporal-difference error magnitude fed back through the
    /// network; the loss grows linearly past it (Huber shape). Keeps the
    /// bootstrap feedback loop from amplifying its own estimates. <=0 gives
    /// the pure quadratic loss.
    double td_clip = 1.0;
    /// Episodes between target-network refreshes (1 = after every episode).
    int target_sync_every = 1;
    std::uint64_t seed = 1;
    double budget_seconds = 0.0;  ///< wall-clock cap checked between episodes; <=0 unbounded
    bool parallel_batch = false;  ///< spread the batch gradient across threads
    // Test hooks.
    double force_epsilon = -1.0;  ///< >=0 pins the exploration probability
    bool ignore_counts = false;   ///< selection and epsilon see an empty count table
};

/// Bootstrap targets r + gamma * max_a' Q(next | target params), with the max
/// over branches still in service at the next observation and dropped entirely
/// on terminal stages. The target net unrolls from a zero latent state.
Eigen::VectorXd compute_targets(const Episode& episode, const GrqnParams& target_params,
                                double gamma);

struct BatchGradient {
    GrqnParams grads;
    double loss = 0.0;  ///< mean per-stage error over every sampled stage
};

/// Loss and exact gradient of the mean per-stage error over the listed
/// episodes (duplicates allowed — sampling is with replacement). The error is
/// quadratic up to `td_clip` and linear beyond (pure quadratic when
/// td_clip <= 0). With `parallel` the per-episode gradients are computed
/// concurrently but reduced in list order, so the result is bitwise identical
/// to the serial path.
BatchGradient batch_gradient(const SequenceBuffer& buffer, const std::vector<std::size_t>& sampled,
                             const GrqnParams& params, const GrqnParams& target_params,
                             double gamma, double td_clip, bool parallel);

/// One optimizer step on `batch` episodes drawn uniformly with replacement.
/// Returns the mean quadratic loss over every sampled stage.
double train_step(const SequenceBuffer& buffer, GrqnParams& params,
                  const GrqnParams& target_params, AdamState& adam, const SearchConfig& config,
                  std::mt19937_64& rng);

struct SearchResult {
    std::vector<FaultChain> chains;  ///< online chains above threshold, discovery order
    std::vector<EpisodeLog> episodes;
    GrqnParams params;  ///< final behavior network
    int online_episodes = 0;
    bool exhausted = false;   ///< chain space fully drained before the budget ran out
    double wall_seconds = 0.0;
};

/// Full search run on an already-scaled case: warm-up episodes steered purely
/// by flow-weighted exploration fill the replay buffer, then the online phase
/// mixes exploration with Q-guided exploitation and trains after every action.
/// The latent state carries across episode boundaries; a fresh target-network
/// copy is taken at every episode end.
SearchResult run_search(const GridCase& prepared_case, const SearchConfig& config,
                        const std::function<void(const EpisodeLog&)>& on_episode = nullptr);

}  // namespace gridfc

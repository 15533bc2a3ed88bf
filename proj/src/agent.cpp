#include "gridfc/agent.hpp"

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <string>
#include <utility>

#include "gridfc/errors.hpp"
#include "gridfc/rng.hpp"

namespace gridfc {

namespace {

int count_true(const std::vector<bool>& mask) {
    return static_cast<int>(std::count(mask.begin(), mask.end(), true));
}

void accumulate(GrqnParams& acc, const GrqnParams& part) {
    auto into = acc.flat_views();
    const auto from = part.flat_views();
    for (std::size_t t = 0; t < into.size(); ++t) into[t] += from[t];
}

struct EpisodeGrad {
    GrqnParams grads;
    double loss_terms = 0.0;
};

/// Loss contribution and gradient of one episode, unrolled from a zero
/// latent state. `inv_total_stages` folds the batch-mean into dL/dq.
EpisodeGrad episode_gradient(const Episode& episode, const GrqnParams& params,
                             const GrqnParams& target_params, double gamma, double td_clip,
                             double inv_total_stages) {
    const Eigen::VectorXd targets = compute_targets(episode, target_params, gamma);

    std::vector<GraphObs> observations;
    observations.reserve(episode.size());
    for (const auto& t : episode) observations.push_back(t.obs);
    const LatentState z0 = LatentState::zero(params.dims.n, params.dims.h);
    const SequenceResult seq = forward_sequence(observations, z0, params);

    EpisodeGrad out;
    std::vector<Eigen::VectorXd> dq(episode.size());
    for (std::size_t j = 0; j < episode.size(); ++j) {
        dq[j] = Eigen::VectorXd::Zero(params.dims.num_actions);
        const double residual = seq.q[j][episode[j].action] - targets[j];
        double term, slope;
        if (td_clip > 0.0 && std::abs(residual) > td_clip) {
            term = td_clip * (2.0 * std::abs(residual) - td_clip);
            slope = residual > 0.0 ? 2.0 * td_clip : -2.0 * td_clip;
        } else {
            term = residual * residual;
            slope = 2.0 * residual;
        }
        dq[j][episode[j].action] = slope * inv_total_stages;
        out.loss_terms += term;
    }
    out.grads = backward(seq.tape, dq, params);
    return out;
}

}  // namespace

Eigen::VectorXd compute_targets(const Episode& episode, const GrqnParams& target_params,
                                double gamma) {
    // The bootstrap value for stage j must score the stage-j+1 observation in
    // the same latent context the behavior pass would give it: the history up
    // to and including that observation. Evaluating each next-observation as
    // the start of a fresh unroll instead puts it one position too early,
    // which lets the per-position value surfaces regress onto themselves and
    // inflate without bound; threading the full history grounds every stage
    // through the terminal.
    std::vector<GraphObs> history;
    history.reserve(episode.size() + 1);
    history.push_back(episode.front().obs);
    for (const auto& t : episode) history.push_back(t.next_obs);
    const LatentState z0 = LatentState::zero(target_params.dims.n, target_params.dims.h);
    const std::vector<Eigen::VectorXd> q = forward_q_only(history, z0, target_params);

    Eigen::VectorXd targets(static_cast<Eigen::Index>(episode.size()));
    for (std::size_t j = 0; j < episode.size(); ++j) {
        double best = 0.0;
        bool any = false;
        if (!episode[j].end) {
            for (std::size_t a = 0; a < episode[j].next_mask.size(); ++a) {
                if (!episode[j].next_mask[a]) continue;
                const double v = q[j + 1][static_cast<Eigen::Index>(a)];
                if (!any || v > best) best = v;
                any = true;
            }
        }
        targets[static_cast<Eigen::Index>(j)] =
            episode[j].reward + (episode[j].end || !any ? 0.0 : gamma * best);
    }
    return targets;
}

BatchGradient batch_gradient(const SequenceBuffer& buffer, const std::vector<std::size_t>& sampled,
                             const GrqnParams& params, const GrqnParams& target_params,
                             double gamma, double td_clip, bool parallel) {
    std::size_t total_stages = 0;
    for (const auto idx : sampled) total_stages += buffer.episode(idx).size();
    const double inv_total = total_stages > 0 ? 1.0 / static_cast<double>(total_stages) : 0.0;

    std::vector<EpisodeGrad> parts(sampled.size());
    if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(sampled.size()); ++b)
            parts[b] = episode_gradient(buffer.episode(sampled[b]), params, target_params, gamma,
                                        td_clip, inv_total);
    } else {
        for (std::size_t b = 0; b < sampled.size(); ++b)
            parts[b] = episode_gradient(buffer.episode(sampled[b]), params, target_params, gamma,
                                        td_clip, inv_total);
    }

    // Reduce in sampling order regardless of which thread finished first, so
    // the parallel path is bitwise identical to the serial one.
    BatchGradient out{GrqnParams::zeros(params.dims), 0.0};
    for (const auto& part : parts) {
        accumulate(out.grads, part.grads);
        out.loss += part.loss_terms;
    }
    out.loss *= inv_total;
    return out;
}

double train_step(const SequenceBuffer& buffer, GrqnParams& params,
                  const GrqnParams& target_params, AdamState& adam, const SearchConfig& config,
                  std::mt19937_64& rng) {
    if (buffer.size() < static_cast<std::size_t>(config.batch))
        throw InsufficientBufferError("insufficient buffer: need " +
                                      std::to_string(config.batch) + " episodes, have " +
                                      std::to_string(buffer.size()));

    std::vector<std::size_t> sampled(static_cast<std::size_t>(config.batch));
    for (auto& idx : sampled) idx = uniform_index(rng, buffer.size());

    BatchGradient batch = batch_gradient(buffer, sampled, params, target_params, config.gamma,
                                         config.td_clip, config.parallel_batch);
    if (config.max_grad_norm > 0.0) clip_grad_norm(batch.grads, config.max_grad_norm);
    adam.update(params, batch.grads);
    return batch.loss;
}

SearchResult run_search(const GridCase& prepared_case, const SearchConfig& config,
                        const std::function<void(const EpisodeLog&)>& on_episode) {
    if (config.iterations < 0 || config.explore < 0)
        throw ValidationError("validation error: episode counts must be non-negative");
    if (config.horizon < 1) throw ValidationError("validation error: horizon must be positive");
    if (config.batch < 1 || config.kappa < 1)
        throw ValidationError("validation error: batch and kappa must be positive");

    FcEnv env(prepared_case, config.horizon);
    const GridCase& grid = env.prepared_case();
    const GrqnDims dims{grid.bus_count(), 1,           config.hidden,      config.out_features,
                        config.hops,      config.head_width, grid.branch_count()};

    std::mt19937_64 rng(config.seed);
    SearchResult result;
    result.params = GrqnParams::init(dims, rng);
    GrqnParams target = result.params;
    AdamState adam(dims, AdamConfig{.alpha = config.alpha});

    CountTable counts;
    const CountTable blind;
    const CountTable& policy_counts = config.ignore_counts ? blind : counts;
    AvailabilityTree tree;
    SequenceBuffer buffer;
    LatentState latent = LatentState::zero(dims.n, dims.h);
    std::shared_ptr<const ShiftOperator> intact_shift;

    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    const int total_episodes = config.explore + config.iterations;
    for (int ep = 1; ep <= total_episodes; ++ep) {
        if (config.budget_seconds > 0.0 && elapsed() >= config.budget_seconds) break;

        const Observation obs0 = env.reset();
        if (!intact_shift)
            intact_shift =
                std::make_shared<ShiftOperator>(ShiftOperator::build(grid, obs0.topology));
        const Eigen::VectorXd start_flows = env.solution().flows_mw;
        if (tree.exhausted(count_true(env.action_mask()))) {
            result.exhausted = true;
            break;
        }

        const bool online = ep > config.explore;
        EpisodeLog log;
        log.episode = ep;
        log.online = online;

        Episode episode;
        std::vector<int> offered;
        std::vector<int> prefix;
        GraphObs current{intact_shift, obs0.node_state};

        while (!env.done()) {
            const int env_offered = count_true(env.action_mask());
            const std::vector<bool> mask = env.action_mask(tree.pruned(prefix));
            if (count_true(mask) == 0) break;  // every continuation already visited

            const LatentState next_latent = grnn_step(current, latent, result.params);
            const Eigen::VectorXd q =
                q_head(grnn_output(next_latent, result.params), result.params);

            const double eps = config.force_epsilon >= 0.0
                                   ? config.force_epsilon
                                   : update_epsilon(start_flows, policy_counts, config.eps0);
            const std::string key = prefix_key(prefix);
            const int action =
                uniform01(rng) < eps
                    ? select_explore(env.solution().flows_mw, mask, policy_counts, key)
                    : select_exploit(q, mask, policy_counts, key);

            const StepResult sr = env.step(action);
            offered.push_back(env_offered);
            log.epsilons.push_back(eps);

            auto next_shift = std::make_shared<ShiftOperator>(
                ShiftOperator::build(grid, sr.next_observation.topology));
            episode.push_back({current, action, sr.reward_mw / env.initial_load_mw(),
                               GraphObs{next_shift, sr.next_observation.node_state},
                               env.action_mask(), sr.end});

            if (online) {
                counts.increment(key, action);
                if (buffer.size() >= static_cast<std::size_t>(config.batch)) {
                    for (int t = 0; t < config.kappa; ++t)
                        log.train_losses.push_back(
                            train_step(buffer, result.params, target, adam, config, rng));
                }
            }

            prefix.push_back(action);
            latent = next_latent;
            current = GraphObs{std::move(next_shift), sr.next_observation.node_state};
        }

        if (!episode.empty()) {
            tree.prune_backwards(prefix, offered);
            buffer.append(std::move(episode));
        }

        const FaultChain& chain = env.chain();
        log.actions = chain.actions();
        for (const auto& st : chain.stages) log.losses_mw.push_back(st.load_loss_mw);
        log.tll_mw = chain.tll_mw();
        if (online) {
            ++result.online_episodes;
            if (log.tll_mw >= config.threshold_mw) result.chains.push_back(chain);
        }
        if (ep % std::max(config.target_sync_every, 1) == 0) target = result.params;
        if (on_episode) on_episode(log);
        result.episodes.push_back(std::move(log));
    }

    result.wall_seconds = elapsed();
    return result;
}

}  // namespace gridfc

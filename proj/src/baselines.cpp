#include "gridfc/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <utility>

#include <json.hpp>

#include "gridfc/errors.hpp"
#include "gridfc/rng.hpp"

namespace gridfc {

double TabularQ::value(const std::string& key, int action) const {
    const auto it = table_.find(key);
    return it == table_.end() ? 0.0 : it->second[action];
}

Eigen::VectorXd TabularQ::values(const std::string& key) const {
    const auto it = table_.find(key);
    return it == table_.end() ? Eigen::VectorXd::Zero(num_actions_) : it->second;
}

Eigen::VectorXd& TabularQ::row(const std::string& key) {
    auto it = table_.find(key);
    if (it == table_.end())
        it = table_.emplace(key, Eigen::VectorXd::Zero(num_actions_)).first;
    return it->second;
}

std::string TabularQ::to_json() const {
    // Keys are emitted sorted so identical tables serialize identically.
    std::vector<const std::string*> keys;
    keys.reserve(table_.size());
    for (const auto& entry : table_) keys.push_back(&entry.first);
    std::sort(keys.begin(), keys.end(),
              [](const std::string* a, const std::string* b) { return *a < *b; });

    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (const auto* key : keys) {
        const Eigen::VectorXd& values = table_.at(*key);
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (Eigen::Index a = 0; a < values.size(); ++a) row.push_back(values[a]);
        out[*key] = std::move(row);
    }
    return out.dump();
}

TabularQ TabularQ::from_json(const std::string& text, int num_actions) {
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("parse error: ") + e.what());
    }
    if (!parsed.is_object()) throw ParseError("parse error: value table must be a JSON object");

    TabularQ table(num_actions);
    for (const auto& [key, values] : parsed.items()) {
        if (!values.is_array() || static_cast<int>(values.size()) != num_actions)
            throw ShapeError("shape mismatch: value row for '" + key + "' must have " +
                             std::to_string(num_actions) + " entries");
        Eigen::VectorXd& row = table.row(key);
        for (int a = 0; a < num_actions; ++a) row[a] = values[a].get<double>();
    }
    return table;
}

namespace {

int count_true(const std::vector<bool>& mask) {
    return static_cast<int>(std::count(mask.begin(), mask.end(), true));
}

}  // namespace

BaselineResult pfw_rl_run(const GridCase& prepared_case, const BaselineConfig& config,
                          const TabularQ* warm_start,
                          const std::function<void(const EpisodeLog&)>& on_episode) {
    if (config.iterations < 0)
        throw ValidationError("validation error: episode count must be non-negative");
    if (config.horizon < 1) throw ValidationError("validation error: horizon must be positive");

    FcEnv env(prepared_case, config.horizon);
    const int num_actions = env.prepared_case().branch_count();

    BaselineResult result;
    result.table = warm_start ? *warm_start : TabularQ(num_actions);
    if (result.table.num_actions() != num_actions)
        throw ShapeError("shape mismatch: warm-start table sized for " +
                         std::to_string(result.table.num_actions()) + " actions, case has " +
                         std::to_string(num_actions));

    std::mt19937_64 rng(config.seed);
    CountTable counts;
    AvailabilityTree tree;

    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    for (int ep = 1; ep <= config.iterations; ++ep) {
        if (config.budget_seconds > 0.0 && elapsed() >= config.budget_seconds) break;

        env.reset();
        const Eigen::VectorXd start_flows = env.solution().flows_mw;
        if (tree.exhausted(count_true(env.action_mask()))) {
            result.exhausted = true;
            break;
        }

        EpisodeLog log;
        log.episode = ep;
        log.online = true;

        std::vector<int> offered;
        std::vector<int> prefix;

        while (!env.done()) {
            const int env_offered = count_true(env.action_mask());
            const std::vector<bool> mask = env.action_mask(tree.pruned(prefix));
            if (count_true(mask) == 0) break;  // every continuation already visited

            const double eps = config.force_epsilon >= 0.0
                                   ? config.force_epsilon
                                   : update_epsilon(start_flows, counts, config.eps0);
            const std::string key = prefix_key(prefix);
            const int action =
                uniform01(rng) < eps
                    ? select_explore(env.solution().flows_mw, mask, counts, key)
                    : select_exploit(result.table.values(key), mask, counts, key);

            const StepResult sr = env.step(action);
            counts.increment(key, action);
            offered.push_back(env_offered);
            log.epsilons.push_back(eps);

            // One-step bootstrapped value update on per-unit rewards.
            prefix.push_back(action);
            const std::string next_key = prefix_key(prefix);
            double best_next = 0.0;
            bool any_next = false;
            if (!sr.end) {
                const std::vector<bool> next_mask = env.action_mask();
                for (int a = 0; a < num_actions; ++a) {
                    if (!next_mask[a]) continue;
                    const double v = result.table.value(next_key, a);
                    if (!any_next || v > best_next) best_next = v;
                    any_next = true;
                }
            }
            const double target = sr.reward_mw / env.initial_load_mw() +
                                  (any_next ? config.gamma * best_next : 0.0);
            double& cell = result.table.row(key)[action];
            cell += config.alpha * (target - cell);
        }

        if (!prefix.empty()) tree.prune_backwards(prefix, offered);

        const FaultChain& chain = env.chain();
        log.actions = chain.actions();
        for (const auto& st : chain.stages) log.losses_mw.push_back(st.load_loss_mw);
        log.tll_mw = chain.tll_mw();
        ++result.episodes_run;
        if (log.tll_mw >= config.threshold_mw) result.chains.push_back(chain);
        if (on_episode) on_episode(log);
        result.episodes.push_back(std::move(log));
    }

    result.wall_seconds = elapsed();
    return result;
}

TabularQ te_pretrain(const GridCase& base_case, double pretrain_load_factor,
                     const BaselineConfig& config) {
    const GridCase pretrain_case = scale_load(base_case, pretrain_load_factor);
    return pfw_rl_run(pretrain_case, config).table;
}

}  // namespace gridfc

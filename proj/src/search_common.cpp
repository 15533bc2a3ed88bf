#include "gridfc/search_common.hpp"

#include <cmath>
#include <cstddef>

#include "gridfc/errors.hpp"

namespace gridfc {

std::string prefix_key(const std::vector<int>& prefix) {
    std::string key;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (i > 0) key += '-';
        key += std::to_string(prefix[i]);
    }
    return key;
}

int CountTable::get(const std::string& key, int action) const {
    const auto row = counts_.find(key);
    if (row == counts_.end()) return 0;
    const auto cell = row->second.find(action);
    return cell == row->second.end() ? 0 : cell->second;
}

void CountTable::increment(const std::string& key, int action) {
    ++counts_[key][action];
}

const std::unordered_set<int>& AvailabilityTree::pruned(const std::vector<int>& prefix) const {
    const auto it = pruned_.find(prefix_key(prefix));
    return it == pruned_.end() ? empty_ : it->second;
}

void AvailabilityTree::prune_backwards(const std::vector<int>& actions,
                                       const std::vector<int>& offered) {
    if (actions.size() != offered.size())
        throw ShapeError("shape mismatch: one offered-action count per stage");
    std::vector<int> prefix(actions.begin(), actions.end());
    for (std::size_t stage = actions.size(); stage-- > 0;) {
        prefix.pop_back();
        auto& dead = pruned_[prefix_key(prefix)];
        dead.insert(actions[stage]);
        // Stop once the prefix still has live actions; otherwise its own
        // last action is exhausted too and the loop prunes it one level up.
        if (static_cast<int>(dead.size()) < offered[stage]) break;
    }
}

bool AvailabilityTree::exhausted(int root_offered) const {
    const auto it = pruned_.find(std::string());
    if (it == pruned_.end()) return root_offered == 0;
    return static_cast<int>(it->second.size()) >= root_offered;
}

namespace {

/// Shared argmax over admissible actions of weight(a)/√(count(prefix,a)+1).
int normalized_argmax(const Eigen::VectorXd& weights, const std::vector<bool>& mask,
                      const CountTable& counts, const std::string& prefix) {
    if (weights.size() != static_cast<Eigen::Index>(mask.size()))
        throw ShapeError("shape mismatch: one weight per action");
    int best = -1;
    double best_score = 0.0;
    for (int a = 0; a < static_cast<int>(mask.size()); ++a) {
        if (!mask[a]) continue;
        const double score = weights[a] / std::sqrt(counts.get(prefix, a) + 1.0);
        if (best < 0 || score > best_score) {
            best = a;
            best_score = score;
        }
    }
    if (best < 0) throw NoAvailableActionError("no admissible action at this prefix");
    return best;
}

}  // namespace

int select_explore(const Eigen::VectorXd& flows_mw, const std::vector<bool>& mask,
                   const CountTable& counts, const std::string& prefix) {
    return normalized_argmax(flows_mw.cwiseAbs(), mask, counts, prefix);
}

int select_exploit(const Eigen::VectorXd& values, const std::vector<bool>& mask,
                   const CountTable& counts, const std::string& prefix) {
    return normalized_argmax(values, mask, counts, prefix);
}

double update_epsilon(const Eigen::VectorXd& flows_at_start_mw, const CountTable& counts,
                      double eps0) {
    const std::string root;
    double visited_weight = 0.0;
    double total_weight = 0.0;
    for (Eigen::Index a = 0; a < flows_at_start_mw.size(); ++a) {
        const double flow = std::abs(flows_at_start_mw[a]);
        visited_weight += flow / std::sqrt(counts.get(root, static_cast<int>(a)) + 1.0);
        total_weight += flow;
    }
    const double eps = total_weight > 0.0 ? visited_weight / total_weight : 1.0;
    return std::max(eps, eps0);
}

}  // namespace gridfc

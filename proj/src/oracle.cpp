#include "gridfc/oracle.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "gridfc/errors.hpp"
#include "gridfc/powerflow.hpp"

namespace gridfc {

namespace {

/// Cascade outcomes are determined by the surviving-branch set and the chosen
/// removal, so that pair is the memo key.
struct MemoKey {
    std::vector<std::uint64_t> words;
    int action = -1;

    bool operator==(const MemoKey&) const = default;
};

struct MemoKeyHash {
    std::size_t operator()(const MemoKey& key) const {
        std::size_t h = std::hash<int>()(key.action);
        for (const auto w : key.words) h = h * 1099511628211ULL ^ std::hash<std::uint64_t>()(w);
        return h;
    }
};

using Memo = std::unordered_map<MemoKey, CascadeOutcome, MemoKeyHash>;

std::vector<std::uint64_t> branch_words(const Topology& topo) {
    std::vector<std::uint64_t> words((topo.branch_in_service.size() + 63) / 64, 0);
    for (std::size_t i = 0; i < topo.branch_in_service.size(); ++i) {
        if (topo.branch_in_service[i]) words[i / 64] |= std::uint64_t{1} << (i % 64);
    }
    return words;
}

/// Depth-first expansion. Leaf cascades are computed without storing: a
/// (state, action) pair at the last stage is visited once, so caching it
/// would only burn memory.
void expand(const GridCase& grid, const Topology& topo, int remaining, FaultChain& chain,
            Memo& memo, std::vector<FaultChain>& out) {
    if (remaining == 0 || topo.in_service_branches() == 0) {
        out.push_back(chain);
        return;
    }
    const std::vector<std::uint64_t> words = branch_words(topo);
    for (int action = 0; action < grid.branch_count(); ++action) {
        if (!topo.branch_live(action)) continue;
        if (remaining == 1) {
            const CascadeOutcome outcome = cascade_step(grid, topo, action);
            chain.stages.push_back({action, outcome.failed_set, outcome.load_loss_mw});
            out.push_back(chain);
            chain.stages.pop_back();
            continue;
        }
        auto it = memo.find(MemoKey{words, action});
        if (it == memo.end())
            it = memo.emplace(MemoKey{words, action}, cascade_step(grid, topo, action)).first;
        const CascadeOutcome& outcome = it->second;
        chain.stages.push_back({action, outcome.failed_set, outcome.load_loss_mw});
        expand(grid, outcome.new_topology, remaining - 1, chain, memo, out);
        chain.stages.pop_back();
    }
}

bool catalog_order(const FaultChain& a, const FaultChain& b) {
    const double ta = a.tll_mw();
    const double tb = b.tll_mw();
    if (ta != tb) return ta > tb;
    return a.actions() < b.actions();
}

}  // namespace

ChainCatalog enumerate_chains(const GridCase& prepared_case, int horizon, bool parallel,
                              const EnumerateProgress& progress) {
    if (horizon < 1) throw ValidationError("validation error: horizon must be positive");

    const Topology root = Topology::full(prepared_case);
    ChainCatalog catalog;

    if ((parallel || progress) && horizon > 1) {
        std::vector<int> roots;
        for (int action = 0; action < prepared_case.branch_count(); ++action) {
            if (root.branch_live(action)) roots.push_back(action);
        }
        std::vector<std::vector<FaultChain>> slots(roots.size());
        int done = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
        for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(roots.size()); ++r) {
            Memo memo;
            FaultChain chain;
            chain.horizon = horizon;
            const CascadeOutcome outcome = cascade_step(prepared_case, root, roots[r]);
            chain.stages.push_back({roots[r], outcome.failed_set, outcome.load_loss_mw});
            expand(prepared_case, outcome.new_topology, horizon - 1, chain, memo, slots[r]);
            if (progress) {
#ifdef _OPENMP
#pragma omp critical
#endif
                progress(++done, static_cast<int>(roots.size()));
            }
        }
        // Concatenating in ascending first-action order reproduces the serial
        // depth-first order exactly.
        for (auto& slot : slots) {
            catalog.chains.insert(catalog.chains.end(), std::make_move_iterator(slot.begin()),
                                  std::make_move_iterator(slot.end()));
        }
    } else {
        Memo memo;
        FaultChain chain;
        chain.horizon = horizon;
        expand(prepared_case, root, horizon, chain, memo, catalog.chains);
    }

    std::sort(catalog.chains.begin(), catalog.chains.end(), catalog_order);
    return catalog;
}

double top_sum(const ChainCatalog& catalog, int s) {
    if (s < 0) throw ValidationError("validation error: top-sum size must be non-negative");
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(s), catalog.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < take; ++i) sum += catalog.chains[i].tll_mw();
    return sum;
}

int count_risky(const ChainCatalog& catalog, double threshold_mw) {
    int n = 0;
    for (const auto& chain : catalog.chains) n += chain.tll_mw() >= threshold_mw ? 1 : 0;
    return n;
}

std::vector<double> regret_series(const ChainCatalog& catalog,
                                  const std::vector<double>& found_tll_mw) {
    const double ideal = top_sum(catalog, static_cast<int>(found_tll_mw.size()));
    std::vector<double> regret(found_tll_mw.size());
    double accumulated = 0.0;
    for (std::size_t s = 0; s < found_tll_mw.size(); ++s) {
        accumulated += found_tll_mw[s];
        regret[s] = ideal - accumulated;
    }
    return regret;
}

double enumeration_leaf_estimate(int branches, int horizon) {
    double leaves = 1.0;
    for (int i = 0; i < horizon; ++i) leaves *= std::max(branches - i, 0);
    return leaves;
}

std::string catalog_to_jsonl(const ChainCatalog& catalog) {
    std::string out;
    for (const auto& chain : catalog.chains) {
        out += chain_to_json(chain);
        out += '\n';
    }
    return out;
}

ChainCatalog catalog_from_jsonl(const std::string& text) {
    ChainCatalog catalog;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        catalog.chains.push_back(chain_from_json(line));
    }
    std::sort(catalog.chains.begin(), catalog.chains.end(), catalog_order);
    return catalog;
}

}  // namespace gridfc

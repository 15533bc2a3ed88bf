#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gridfc/env.hpp"
#include "gridfc/grid.hpp"

namespace gridfc {

/// Every possible fault chain of a case up to a fixed depth, sorted by total
/// load loss (descending), ties broken by ascending action sequence. Chains
/// that run the grid out of removable branches before the depth limit appear
/// with their natural shorter length.
struct ChainCatalog {
    std::vector<FaultChain> chains;

    std::size_t size() const { return chains.size(); }
};

/// Called after each completed first-stage subtree with (done, total).
using EnumerateProgress = std::function<void(int, int)>;

/// Exhaustive depth-first enumeration branching only on the chosen removal;
/// the cascade closure decides everything else. Interior cascade outcomes are
/// memoized on (surviving-branch set, action), which is exact because the
/// cascade is a pure function of those two. With `parallel` the first-stage
/// subtrees run concurrently and merge in ascending action order, giving a
/// catalog bitwise identical to the serial one.
ChainCatalog enumerate_chains(const GridCase& prepared_case, int horizon, bool parallel = false,
                              const EnumerateProgress& progress = nullptr);

/// Sum of the `s` largest chain losses (the whole catalog when s exceeds it).
double top_sum(const ChainCatalog& catalog, int s);

/// How many chains lose at least `threshold_mw`.
int count_risky(const ChainCatalog& catalog, double threshold_mw);

/// Per-iteration regret of a search that found `found_tll_mw[s]` at iteration
/// s: the best achievable total over that many iterations minus the running
/// total actually found. Non-increasing in s; zero exactly when the search
/// found a loss-maximal set of chains.
std::vector<double> regret_series(const ChainCatalog& catalog,
                                  const std::vector<double>& found_tll_mw);

/// Number of depth-`horizon` leaves if no chain ended early — the falling
/// factorial of the branch count. Used to judge whether exhaustive
/// enumeration is affordable.
double enumeration_leaf_estimate(int branches, int horizon);

/// One chain per line, catalog order, in the same record format the episode
/// logs use.
std::string catalog_to_jsonl(const ChainCatalog& catalog);
ChainCatalog catalog_from_jsonl(const std::string& text);

}  // namespace gridfc

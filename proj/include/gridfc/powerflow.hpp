#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gridfc/grid.hpp"

namespace gridfc {

/// Lossless linearized network solution for one topology.
struct PowerFlowSolution {
    Eigen::VectorXd angles_rad;      ///< per bus; zero for de-energized buses
    Eigen::VectorXd flows_mw;        ///< per branch; zero for out-of-service branches
    Eigen::VectorXd served_load_mw;  ///< per bus after any shedding
};

/// Per-bus supply/demand after island-wise rebalancing.
struct Rebalance {
    Eigen::VectorXd served_load_mw;
    Eigen::VectorXd dispatch_mw;
};

/// Result of one stage: the component the agent removed plus everything that
/// overload-tripped in the same stage.
struct CascadeOutcome {
    std::vector<int> failed_set;  ///< sorted branch ids
    Topology new_topology;
    PowerFlowSolution new_solution;
    double load_loss_mw = 0.0;
};

/// Connected components of the in-service branch graph, each sorted by bus id;
/// components are ordered by their smallest bus. Isolated buses form
/// singleton islands.
std::vector<std::vector<int>> islands(const GridCase& grid, const Topology& topo);

/// Per island: if capacity covers load, dispatch the load proportionally to
/// unit capacity; otherwise run every unit at capacity and shed load
/// proportionally. Islands without generation serve nothing.
Rebalance rebalance_islands(const GridCase& grid, const Topology& topo);

/// Solves the angle equations island by island (lowest-id generator bus is
/// each island's reference at angle zero) and derives branch flows.
/// Requires per-island balance of dispatch and served load within 1e-6 MW.
PowerFlowSolution solve_dc(const GridCase& grid, const Topology& topo,
                           const Eigen::VectorXd& served_load_mw,
                           const Eigen::VectorXd& dispatch_mw);

/// rebalance_islands followed by solve_dc.
PowerFlowSolution solve_balanced(const GridCase& grid, const Topology& topo);

/// Removes `removed`, then alternates rebalancing/solving with hard tripping
/// of every branch loaded strictly above its rating until nothing more trips.
/// Marks buses of generator-less islands out of service in the new topology.
CascadeOutcome cascade_step(const GridCase& grid, const Topology& topo, int removed);

/// Total served load of a solution in MW.
double total_load(const PowerFlowSolution& solution);

}  // namespace gridfc

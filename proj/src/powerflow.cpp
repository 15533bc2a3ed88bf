#include "gridfc/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gridfc/errors.hpp"

namespace gridfc {

std::vector<std::vector<int>> islands(const GridCase& grid, const Topology& topo) {
    const int n = topo.bus_count;
    std::vector<std::vector<int>> adj(static_cast<size_t>(n));
    for (const auto& br : grid.branches) {
        if (!topo.branch_live(br.id)) continue;
        adj[static_cast<size_t>(br.from_bus)].push_back(br.to_bus);
        adj[static_cast<size_t>(br.to_bus)].push_back(br.from_bus);
    }
    std::vector<std::vector<int>> out;
    std::vector<bool> seen(static_cast<size_t>(n), false);
    std::vector<int> stack;
    for (int s = 0; s < n; ++s) {
        if (seen[static_cast<size_t>(s)]) continue;
        std::vector<int> comp;
        stack.push_back(s);
        seen[static_cast<size_t>(s)] = true;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            comp.push_back(u);
            for (int v : adj[static_cast<size_t>(u)]) {
                if (!seen[static_cast<size_t>(v)]) {
                    seen[static_cast<size_t>(v)] = true;
                    stack.push_back(v);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
    }
    return out;
}

Rebalance rebalance_islands(const GridCase& grid, const Topology& topo) {
    const int n = topo.bus_count;
    Rebalance r;
    r.served_load_mw = Eigen::VectorXd::Zero(n);
    r.dispatch_mw = Eigen::VectorXd::Zero(n);
    for (const auto& comp : islands(grid, topo)) {
        double load = 0.0, cap = 0.0;
        for (int b : comp) {
            load += grid.buses[static_cast<size_t>(b)].load_mw;
            cap += grid.buses[static_cast<size_t>(b)].gen_max_mw;
        }
        if (cap >= load) {
            // Full service; every unit carries its capacity share of the load.
            const double s = cap > 0.0 ? load / cap : 0.0;
            for (int b : comp) {
                r.served_load_mw(b) = grid.buses[static_cast<size_t>(b)].load_mw;
                r.dispatch_mw(b) = grid.buses[static_cast<size_t>(b)].gen_max_mw * s;
            }
        } else {
            // Shortfall: all units at capacity, load shed proportionally.
            const double s = cap / load;  // load > cap ≥ 0 here
            for (int b : comp) {
                r.served_load_mw(b) = grid.buses[static_cast<size_t>(b)].load_mw * s;
                r.dispatch_mw(b) = grid.buses[static_cast<size_t>(b)].gen_max_mw;
            }
        }
    }
    return r;
}

PowerFlowSolution solve_dc(const GridCase& grid, const Topology& topo,
                           const Eigen::VectorXd& served_load_mw,
                           const Eigen::VectorXd& dispatch_mw) {
    const int n = topo.bus_count;
    if (served_load_mw.size() != n || dispatch_mw.size() != n) {
        throw ShapeError("per-bus vectors must have one entry per bus");
    }
    PowerFlowSolution sol;
    sol.angles_rad = Eigen::VectorXd::Zero(n);
    sol.flows_mw = Eigen::VectorXd::Zero(grid.branch_count());
    sol.served_load_mw = served_load_mw;

    // Branches grouped by from-bus for Laplacian assembly per island.
    for (const auto& comp : islands(grid, topo)) {
        double balance = 0.0;
        int slack = -1;
        for (int b : comp) {
            balance += dispatch_mw(b) - served_load_mw(b);
            if (slack < 0 && grid.buses[static_cast<size_t>(b)].gen_max_mw > 0.0) slack = b;
        }
        if (std::abs(balance) > 1e-6) {
            throw ValidationError("island power imbalance of " + std::to_string(balance) + " MW");
        }
        if (slack < 0 || comp.size() == 1) continue;  // de-energized or trivial: angles stay 0

        // Reduced susceptance Laplacian over the island without its reference bus.
        std::vector<int> local(static_cast<size_t>(n), -1);
        int m = 0;
        for (int b : comp) {
            if (b != slack) local[static_cast<size_t>(b)] = m++;
        }
        Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(m, m);
        for (const auto& br : grid.branches) {
            if (!topo.branch_live(br.id)) continue;
            // Live branches never straddle islands, so one endpoint decides.
            if (!std::binary_search(comp.begin(), comp.end(), br.from_bus)) continue;
            const int lf = local[static_cast<size_t>(br.from_bus)];
            const int lt = local[static_cast<size_t>(br.to_bus)];
            const double b = 1.0 / br.reactance_pu;
            if (lf >= 0) lap(lf, lf) += b;
            if (lt >= 0) lap(lt, lt) += b;
            if (lf >= 0 && lt >= 0) {
                lap(lf, lt) -= b;
                lap(lt, lf) -= b;
            }
        }
        Eigen::VectorXd p(m);
        for (int b : comp) {
            const int l = local[static_cast<size_t>(b)];
            if (l >= 0) p(l) = (dispatch_mw(b) - served_load_mw(b)) / grid.base_mva;
        }
        const Eigen::LDLT<Eigen::MatrixXd> fact(lap);
        if (fact.info() != Eigen::Success) {
            throw SingularSystemError("island angle system failed to factorize");
        }
        const Eigen::VectorXd theta = fact.solve(p);
        if (!theta.allFinite()) {
            throw SingularSystemError("island angle solution is not finite");
        }
        for (int b : comp) {
            const int l = local[static_cast<size_t>(b)];
            sol.angles_rad(b) = l >= 0 ? theta(l) : 0.0;
        }
    }

    for (const auto& br : grid.branches) {
        if (!topo.branch_live(br.id)) continue;
        sol.flows_mw(br.id) = (sol.angles_rad(br.from_bus) - sol.angles_rad(br.to_bus)) /
                              br.reactance_pu * grid.base_mva;
    }
    return sol;
}

PowerFlowSolution solve_balanced(const GridCase& grid, const Topology& topo) {
    const Rebalance r = rebalance_islands(grid, topo);
    return solve_dc(grid, topo, r.served_load_mw, r.dispatch_mw);
}

double total_load(const PowerFlowSolution& solution) { return solution.served_load_mw.sum(); }

namespace {

// Marks buses of generator-less islands as out of service.
void refresh_bus_service(const GridCase& grid, Topology& topo) {
    for (const auto& comp : islands(grid, topo)) {
        double cap = 0.0;
        for (int b : comp) cap += grid.buses[static_cast<size_t>(b)].gen_max_mw;
        const bool live = cap > 0.0;
        for (int b : comp) topo.bus_in_service[static_cast<size_t>(b)] = live;
    }
}

}  // namespace

CascadeOutcome cascade_step(const GridCase& grid, const Topology& topo, int removed) {
    if (removed < 0 || removed >= grid.branch_count() || !topo.branch_live(removed)) {
        throw InvalidActionError("branch " + std::to_string(removed) + " is not in service");
    }
    const double served_before = rebalance_islands(grid, topo).served_load_mw.sum();

    CascadeOutcome out;
    out.new_topology = topo;
    out.new_topology.branch_in_service[static_cast<size_t>(removed)] = false;
    out.failed_set.push_back(removed);

    // Fixed point of {rebalance, solve, trip everything above rating}.
    // Each pass trips at least one branch, so it ends within |branches| passes.
    while (true) {
        out.new_solution = solve_balanced(grid, out.new_topology);
        bool tripped = false;
        for (const auto& br : grid.branches) {
            if (!out.new_topology.branch_live(br.id)) continue;
            if (std::abs(out.new_solution.flows_mw(br.id)) > br.rating_mw) {
                out.new_topology.branch_in_service[static_cast<size_t>(br.id)] = false;
                out.failed_set.push_back(br.id);
                tripped = true;
            }
        }
        if (!tripped) break;
    }
    std::sort(out.failed_set.begin(), out.failed_set.end());
    refresh_bus_service(grid, out.new_topology);

    out.load_loss_mw = served_before - total_load(out.new_solution);
    if (out.load_loss_mw < 0.0) {
        // Service is monotone; anything below zero is rounding noise.
        if (out.load_loss_mw < -1e-6) {
            throw SingularSystemError("served load increased across a stage");
        }
        out.load_loss_mw = 0.0;
    }
    return out;
}

}  // namespace gridfc

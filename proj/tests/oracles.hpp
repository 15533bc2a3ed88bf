#pragma once

// Independent reference implementations used only by tests. Everything here is
// written the slow, obvious way on purpose so production code is checked
// against a second opinion, not against itself.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gridfc/graph_ops.hpp"
#include "gridfc/grid.hpp"
#include "gridfc/grnn.hpp"

namespace gridfc::testing {

/// Flow on every live branch of a forest by leaf stripping: a leaf bus's whole
/// net injection must leave over its only branch; fold the bus into its
/// neighbor and repeat. Flows are oriented from→to like the solver's.
inline Eigen::VectorXd tree_flows_oracle(const GridCase& grid, const Topology& topo,
                                         Eigen::VectorXd injections_mw) {
    const int n = topo.bus_count;
    Eigen::VectorXd flows = Eigen::VectorXd::Zero(grid.branch_count());
    std::vector<std::vector<int>> incident(static_cast<size_t>(n));
    std::vector<bool> branch_alive(grid.branches.size(), false);
    for (const auto& br : grid.branches) {
        if (!topo.branch_live(br.id)) continue;
        branch_alive[static_cast<size_t>(br.id)] = true;
        incident[static_cast<size_t>(br.from_bus)].push_back(br.id);
        incident[static_cast<size_t>(br.to_bus)].push_back(br.id);
    }
    auto degree = [&](int bus) {
        int d = 0;
        for (int id : incident[static_cast<size_t>(bus)]) {
            if (branch_alive[static_cast<size_t>(id)]) ++d;
        }
        return d;
    };
    std::vector<bool> bus_alive(static_cast<size_t>(n), true);
    bool progressed = true;
    while (progressed) {
        progressed = false;
        for (int u = 0; u < n; ++u) {
            if (!bus_alive[static_cast<size_t>(u)] || degree(u) != 1) continue;
            int leaf_branch = -1;
            for (int id : incident[static_cast<size_t>(u)]) {
                if (branch_alive[static_cast<size_t>(id)]) leaf_branch = id;
            }
            const auto& br = grid.branches[static_cast<size_t>(leaf_branch)];
            const int other = br.from_bus == u ? br.to_bus : br.from_bus;
            flows(leaf_branch) = br.from_bus == u ? injections_mw(u) : -injections_mw(u);
            injections_mw(other) += injections_mw(u);
            branch_alive[static_cast<size_t>(leaf_branch)] = false;
            bus_alive[static_cast<size_t>(u)] = false;
            progressed = true;
        }
    }
    return flows;
}

/// Random spanning tree over n buses: one generator bus, loads elsewhere.
inline GridCase make_random_tree_case(std::mt19937_64& rng, int n) {
    GridCase g;
    std::uniform_real_distribution<double> load_dist(5.0, 80.0);
    std::uniform_real_distribution<double> x_dist(0.02, 0.25);
    for (int i = 0; i < n; ++i) {
        Bus b;
        b.id = i;
        b.load_mw = i == 0 ? 0.0 : load_dist(rng);
        g.buses.push_back(b);
    }
    double total = 0.0;
    for (const auto& b : g.buses) total += b.load_mw;
    g.buses[0].gen_max_mw = total * 1.5;
    g.buses[0].gen_mw = total;
    g.slack_bus = 0;
    for (int i = 1; i < n; ++i) {
        Branch br;
        br.id = i - 1;
        br.from_bus = static_cast<int>(rng() % static_cast<unsigned long>(i));
        br.to_bus = i;
        br.reactance_pu = x_dist(rng);
        br.rating_mw = 1e9;
        g.branches.push_back(br);
    }
    g.dmax0 = 1;
    for (int i = 0; i < n; ++i) {
        int d = 0;
        for (const auto& br : g.branches) {
            if (br.from_bus == i || br.to_bus == i) ++d;
        }
        g.dmax0 = std::max(g.dmax0, d);
    }
    return g;
}

/// Random connected case: a spanning tree plus `extra` chords, several
/// generator buses, and ratings tight enough that removals can cascade.
inline GridCase make_random_mesh_case(std::mt19937_64& rng, int n, int extra) {
    GridCase g = make_random_tree_case(rng, n);
    std::uniform_real_distribution<double> x_dist(0.02, 0.25);
    for (int e = 0; e < extra; ++e) {
        Branch br;
        br.id = g.branch_count();
        br.from_bus = static_cast<int>(rng() % static_cast<unsigned long>(n));
        br.to_bus = static_cast<int>(rng() % static_cast<unsigned long>(n));
        if (br.from_bus == br.to_bus) {
            br.to_bus = (br.to_bus + 1) % n;
        }
        br.reactance_pu = x_dist(rng);
        br.rating_mw = 1e9;
        g.branches.push_back(br);
    }
    // Spread generation over three buses so islanding keeps partial service.
    // Dispatch is left to capacity-proportional allocation.
    const double total = g.total_load_mw();
    g.buses[0].gen_max_mw = total * 0.8;
    g.buses[n / 2].gen_max_mw = total * 0.5;
    g.buses[n - 1].gen_max_mw = total * 0.4;
    g.buses[0].gen_mw = 0.0;
    for (int i = 0; i < n; ++i) {
        int d = 0;
        for (const auto& br : g.branches) {
            if (br.from_bus == i || br.to_bus == i) ++d;
        }
        g.dmax0 = std::max(g.dmax0, d);
    }
    return g;
}

/// Tightens every rating to `slack` times the base-topology flow magnitude
/// (with a floor), so single removals can overload neighbours.
inline void tighten_ratings(GridCase& g, const Eigen::VectorXd& base_flows, double slack,
                            double floor_mw) {
    for (auto& br : g.branches) {
        br.rating_mw = std::max(std::abs(base_flows(br.id)) * slack, floor_mw);
    }
}

/// Filter reference that materializes the adjacency powers explicitly.
inline Eigen::MatrixXd dense_power_filter_oracle(const Eigen::MatrixXd& b,
                                                 const Eigen::MatrixXd& x,
                                                 const std::vector<Eigen::MatrixXd>& coeffs) {
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(b.rows(), b.cols());
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(x.rows(), coeffs[0].cols());
    for (const auto& h : coeffs) {
        acc += power * x * h;
        power = b * power;
    }
    return acc;
}

/// Plain-scalar matrix product (no linear-algebra library involved).
inline Eigen::MatrixXd scalar_mm(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(a.rows(), b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            for (Eigen::Index l = 0; l < a.cols(); ++l) c(i, j) += a(i, l) * b(l, j);
        }
    }
    return c;
}

inline Eigen::MatrixXd scalar_filter(const Eigen::MatrixXd& b, const Eigen::MatrixXd& x,
                                     const std::vector<Eigen::MatrixXd>& coeffs) {
    Eigen::MatrixXd shifted = x;
    Eigen::MatrixXd acc = scalar_mm(shifted, coeffs[0]);
    for (size_t k = 1; k < coeffs.size(); ++k) {
        shifted = scalar_mm(b, shifted);
        acc += scalar_mm(shifted, coeffs[k]);
    }
    return acc;
}

/// Naive loop-level re-implementation of the recurrent forward pass. Stage i
/// uses dense adjacency b_seq[i]; the stage-0 recurrence shift is the zero
/// matrix (zero initial latent makes its choice irrelevant).
inline std::vector<Eigen::VectorXd> scalar_forward_oracle(
    const std::vector<Eigen::MatrixXd>& b_seq, const std::vector<Eigen::MatrixXd>& x_seq,
    const GrqnParams& p) {
    const auto& d = p.dims;
    Eigen::MatrixXd z_prev = Eigen::MatrixXd::Zero(d.n, d.h);
    Eigen::MatrixXd b_prev = Eigen::MatrixXd::Zero(d.n, d.n);
    std::vector<Eigen::VectorXd> qs;
    for (size_t i = 0; i < b_seq.size(); ++i) {
        Eigen::MatrixXd a = scalar_filter(b_seq[i], x_seq[i], p.h1) +
                            scalar_filter(b_prev, z_prev, p.h2);
        Eigen::MatrixXd z(d.n, d.h);
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            for (Eigen::Index c = 0; c < z.cols(); ++c) {
                z(r, c) = std::tanh(a(r, c) + p.b_z(c));
            }
        }
        Eigen::MatrixXd ay = scalar_filter(b_seq[i], z, p.h3);
        Eigen::MatrixXd y(d.n, d.g);
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            for (Eigen::Index c = 0; c < y.cols(); ++c) {
                y(r, c) = std::tanh(ay(r, c) + p.b_y(c));
            }
        }
        Eigen::VectorXd v(static_cast<Eigen::Index>(d.n) * d.g);
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            for (Eigen::Index c = 0; c < y.cols(); ++c) v(r * d.g + c) = y(r, c);
        }
        Eigen::VectorXd hid = Eigen::VectorXd::Zero(d.d);
        for (Eigen::Index j = 0; j < d.d; ++j) {
            double s = p.b_hid(j);
            for (Eigen::Index l = 0; l < v.size(); ++l) s += p.w_hid(l, j) * v(l);
            hid(j) = s > 0.0 ? s : 0.0;
        }
        Eigen::VectorXd q = Eigen::VectorXd::Zero(d.num_actions);
        for (Eigen::Index u = 0; u < d.num_actions; ++u) {
            double s = p.b_out(u);
            for (Eigen::Index j = 0; j < d.d; ++j) s += p.w_out(j, u) * hid(j);
            q(u) = s;
        }
        qs.push_back(q);
        z_prev = z;
        b_prev = b_seq[i];
    }
    return qs;
}

/// Random symmetric shift over n nodes, scaled by 1/max-degree.
inline ShiftOperator make_random_shift(std::mt19937_64& rng, int n) {
    ShiftOperator op;
    op.n = n;
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            if (rng() % 3 != 0) continue;
            op.edges.emplace_back(u, v);
        }
    }
    if (op.edges.empty()) op.edges.emplace_back(0, n > 1 ? 1 : 0);
    std::vector<int> deg(static_cast<size_t>(n), 0);
    for (const auto& [u, v] : op.edges) {
        ++deg[static_cast<size_t>(u)];
        ++deg[static_cast<size_t>(v)];
    }
    int dmax = 1;
    for (int d : deg) dmax = std::max(dmax, d);
    op.scale = 1.0 / dmax;
    return op;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols, double amp = 1.0) {
    std::uniform_real_distribution<double> dist(-amp, amp);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
    }
    return m;
}

/// Central finite difference of `loss` over every parameter entry.
template <class Loss>
GrqnParams finite_difference_gradient(GrqnParams params, Loss&& loss, double step = 1e-5) {
    GrqnParams grads = GrqnParams::zeros(params.dims);
    auto pv = params.flat_views();
    auto gv = grads.flat_views();
    for (size_t t = 0; t < pv.size(); ++t) {
        for (Eigen::Index i = 0; i < pv[t].size(); ++i) {
            const double keep = pv[t](i);
            pv[t](i) = keep + step;
            const double up = loss(params);
            pv[t](i) = keep - step;
            const double down = loss(params);
            pv[t](i) = keep;
            gv[t](i) = (up - down) / (2.0 * step);
        }
    }
    return grads;
}

/// Worst relative disagreement between two gradient holders; denominators are
/// floored so near-zero entries compare absolutely.
inline double max_relative_gap(const GrqnParams& a, const GrqnParams& b, double floor = 1e-6) {
    const auto av = a.flat_views();
    const auto bv = b.flat_views();
    double worst = 0.0;
    for (size_t t = 0; t < av.size(); ++t) {
        for (Eigen::Index i = 0; i < av[t].size(); ++i) {
            const double scale = std::max({std::abs(av[t](i)), std::abs(bv[t](i)), floor});
            worst = std::max(worst, std::abs(av[t](i) - bv[t](i)) / scale);
        }
    }
    return worst;
}

}  // namespace gridfc::testing

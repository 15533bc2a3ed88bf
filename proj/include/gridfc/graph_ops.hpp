#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gridfc/grid.hpp"

namespace gridfc {

/// Sparse symmetric adjacency applied as an edge list. Equivalent to
/// multiplying by adjacency(grid, topo), at edge-count cost instead of N².
struct ShiftOperator {
    int n = 0;
    double scale = 1.0;
    /// unique bus pairs (u < v), sorted; parallel branches collapse
    std::vector<std::pair<int, int>> edges;

    static ShiftOperator build(const GridCase& grid, const Topology& topo);

    /// out = B·in. `out` is resized; must not alias `in`.
    void apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const;
    Eigen::MatrixXd apply(const Eigen::MatrixXd& in) const;

    /// Dense N×N form (tests and small-scale checks).
    Eigen::MatrixXd dense() const;
};

/// One-hop aggregation: B·X.
Eigen::MatrixXd graph_shift(const Eigen::MatrixXd& b, const Eigen::MatrixXd& x);

/// Polynomial-in-B feature map Σ_{k=1..K} (B^{k−1}·X)·coeffs[k−1], evaluated
/// by iterated shifts; powers of B are never formed.
Eigen::MatrixXd graph_filter(const Eigen::MatrixXd& b, const Eigen::MatrixXd& x,
                             const std::vector<Eigen::MatrixXd>& coeffs);
Eigen::MatrixXd graph_filter(const ShiftOperator& b, const Eigen::MatrixXd& x,
                             const std::vector<Eigen::MatrixXd>& coeffs);

}  // namespace gridfc

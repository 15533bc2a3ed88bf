#include "gridfc/graph_ops.hpp"

#include <algorithm>

#include "gridfc/errors.hpp"

namespace gridfc {

ShiftOperator ShiftOperator::build(const GridCase& grid, const Topology& topo) {
    ShiftOperator op;
    op.n = topo.bus_count;
    op.scale = 1.0 / static_cast<double>(grid.dmax0);
    op.edges.reserve(grid.branches.size());
    for (const auto& br : grid.branches) {
        if (!topo.branch_live(br.id)) continue;
        op.edges.emplace_back(std::min(br.from_bus, br.to_bus),
                              std::max(br.from_bus, br.to_bus));
    }
    std::sort(op.edges.begin(), op.edges.end());
    op.edges.erase(std::unique(op.edges.begin(), op.edges.end()), op.edges.end());
    return op;
}

void ShiftOperator::apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const {
    if (in.rows() != n) throw ShapeError("shift input must have one row per bus");
    out.setZero(in.rows(), in.cols());
    for (const auto& [u, v] : edges) {
        out.row(u) += in.row(v);
        out.row(v) += in.row(u);
    }
    out *= scale;
}

Eigen::MatrixXd ShiftOperator::apply(const Eigen::MatrixXd& in) const {
    Eigen::MatrixXd out;
    apply(in, out);
    return out;
}

Eigen::MatrixXd ShiftOperator::dense() const {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [u, v] : edges) {
        b(u, v) = scale;
        b(v, u) = scale;
    }
    return b;
}

Eigen::MatrixXd graph_shift(const Eigen::MatrixXd& b, const Eigen::MatrixXd& x) {
    if (b.cols() != x.rows()) throw ShapeError("graph shift dimensions disagree");
    return b * x;
}

Eigen::MatrixXd graph_filter(const Eigen::MatrixXd& b, const Eigen::MatrixXd& x,
                             const std::vector<Eigen::MatrixXd>& coeffs) {
    if (coeffs.empty()) throw ShapeError("filter needs at least one coefficient set");
    if (b.cols() != x.rows()) throw ShapeError("graph filter dimensions disagree");
    Eigen::MatrixXd acc = x * coeffs[0];
    Eigen::MatrixXd shifted = x;
    for (size_t k = 1; k < coeffs.size(); ++k) {
        shifted = b * shifted;
        acc.noalias() += shifted * coeffs[k];
    }
    return acc;
}

Eigen::MatrixXd graph_filter(const ShiftOperator& b, const Eigen::MatrixXd& x,
                             const std::vector<Eigen::MatrixXd>& coeffs) {
    if (coeffs.empty()) throw ShapeError("filter needs at least one coefficient set");
    Eigen::MatrixXd acc = x * coeffs[0];
    Eigen::MatrixXd shifted = x, next;
    for (size_t k = 1; k < coeffs.size(); ++k) {
        b.apply(shifted, next);
        shifted.swap(next);
        acc.noalias() += shifted * coeffs[k];
    }
    return acc;
}

}  // namespace gridfc

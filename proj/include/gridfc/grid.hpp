#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gridfc {

struct Bus {
    int id = -1;
    double load_mw = 0.0;
    double gen_mw = 0.0;
    double gen_max_mw = 0.0;
};

enum class BranchKind { Line, Transformer };

struct Branch {
    int id = -1;
    int from_bus = -1;
    int to_bus = -1;
    double reactance_pu = 0.0;
    double rating_mw = 0.0;
    BranchKind kind = BranchKind::Line;
    bool in_service = true;
};

/// Static grid description. Immutable after load; safe to share across threads.
struct GridCase {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    int slack_bus = -1;
    double base_mva = 100.0;
    /// Maximum degree of the outage-free topology (distinct neighbors);
    /// fixes the global adjacency scale 1/d_max for every later stage.
    int dmax0 = 1;

    int bus_count() const { return static_cast<int>(buses.size()); }
    int branch_count() const { return static_cast<int>(branches.size()); }
    double total_load_mw() const;
    double total_gen_mw() const;
    double total_gen_max_mw() const;
};

/// Set of in-service components at some stage of a cascade.
struct Topology {
    std::vector<bool> branch_in_service;
    std::vector<bool> bus_in_service;
    int bus_count = 0;

    static Topology full(const GridCase& grid);
    int in_service_branches() const;
    bool branch_live(int id) const { return branch_in_service[static_cast<size_t>(id)]; }
};

enum class CaseFormat { MatpowerM, NativeJson };

/// Parses and validates a case file. The dispatch is proportionally rescaled
/// so that total generation equals total load.
GridCase load_case(const std::string& path, CaseFormat format);

/// Parses a native-JSON case from an in-memory string (same validation path).
GridCase load_case_json_text(const std::string& text);

/// Multiplies every bus load by `factor` and rescales dispatch to match.
/// Throws InfeasibleError when capacity cannot cover the scaled load.
GridCase scale_load(const GridCase& grid, double factor);

/// Binary bus-adjacency of the in-service branches, scaled by 1/d_max of the
/// outage-free topology. Symmetric, zero diagonal; parallel branches collapse
/// to a single entry.
Eigen::MatrixXd adjacency(const GridCase& grid, const Topology& topo);

}  // namespace gridfc

#include "gridfc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "gridfc/errors.hpp"

namespace gridfc {

double GridCase::total_load_mw() const {
    double s = 0.0;
    for (const auto& b : buses) s += b.load_mw;
    return s;
}

double GridCase::total_gen_mw() const {
    double s = 0.0;
    for (const auto& b : buses) s += b.gen_mw;
    return s;
}

double GridCase::total_gen_max_mw() const {
    double s = 0.0;
    for (const auto& b : buses) s += b.gen_max_mw;
    return s;
}

Topology Topology::full(const GridCase& grid) {
    Topology t;
    t.bus_count = grid.bus_count();
    t.bus_in_service.assign(grid.buses.size(), true);
    t.branch_in_service.assign(grid.branches.size(), false);
    for (const auto& br : grid.branches) {
        t.branch_in_service[static_cast<size_t>(br.id)] = br.in_service;
    }
    return t;
}

int Topology::in_service_branches() const {
    return static_cast<int>(std::count(branch_in_service.begin(), branch_in_service.end(), true));
}

namespace {

int max_degree(const GridCase& grid) {
    const int n = grid.bus_count();
    std::vector<std::unordered_set<int>> nbrs(static_cast<size_t>(n));
    for (const auto& br : grid.branches) {
        if (!br.in_service) continue;
        nbrs[static_cast<size_t>(br.from_bus)].insert(br.to_bus);
        nbrs[static_cast<size_t>(br.to_bus)].insert(br.from_bus);
    }
    size_t d = 1;
    for (const auto& s : nbrs) d = std::max(d, s.size());
    return static_cast<int>(d);
}

bool connected_in_service(const GridCase& grid) {
    const int n = grid.bus_count();
    if (n == 0) return false;
    std::vector<std::vector<int>> adj(static_cast<size_t>(n));
    for (const auto& br : grid.branches) {
        if (!br.in_service) continue;
        adj[static_cast<size_t>(br.from_bus)].push_back(br.to_bus);
        adj[static_cast<size_t>(br.to_bus)].push_back(br.from_bus);
    }
    std::vector<bool> seen(static_cast<size_t>(n), false);
    std::queue<int> q;
    q.push(0);
    seen[0] = true;
    int reached = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : adj[static_cast<size_t>(u)]) {
            if (!seen[static_cast<size_t>(v)]) {
                seen[static_cast<size_t>(v)] = true;
                ++reached;
                q.push(v);
            }
        }
    }
    return reached == n;
}

void balance_dispatch(GridCase& grid) {
    const double load = grid.total_load_mw();
    const double gen = grid.total_gen_mw();
    if (load <= 0.0) {
        for (auto& b : grid.buses) b.gen_mw = 0.0;
        return;
    }
    if (gen > 0.0) {
        const double s = load / gen;
        for (auto& b : grid.buses) b.gen_mw *= s;
    } else {
        // No dispatch on record: allocate proportionally to capacity.
        const double cap = grid.total_gen_max_mw();
        if (cap <= 0.0) throw ValidationError("no generation capacity to balance load");
        for (auto& b : grid.buses) b.gen_mw = b.gen_max_mw * (load / cap);
    }
    for (const auto& b : grid.buses) {
        if (b.gen_mw > b.gen_max_mw * (1.0 + 1e-9)) {
            throw InfeasibleError("dispatch balance pushes bus " + std::to_string(b.id) +
                                  " above its capacity");
        }
    }
}

void validate_case(GridCase& grid) {
    const int n = grid.bus_count();
    if (n == 0) throw ValidationError("case has no buses");
    std::vector<bool> seen_bus(static_cast<size_t>(n), false);
    for (const auto& b : grid.buses) {
        if (b.id < 0 || b.id >= n) throw ValidationError("bus id out of range: " + std::to_string(b.id));
        if (seen_bus[static_cast<size_t>(b.id)]) throw ValidationError("duplicate bus id: " + std::to_string(b.id));
        seen_bus[static_cast<size_t>(b.id)] = true;
        if (b.load_mw < 0.0) throw ValidationError("negative load at bus " + std::to_string(b.id));
        if (b.gen_max_mw < 0.0) throw ValidationError("negative gen_max at bus " + std::to_string(b.id));
    }
    const int m = grid.branch_count();
    std::vector<bool> seen_br(static_cast<size_t>(m), false);
    for (const auto& br : grid.branches) {
        if (br.id < 0 || br.id >= m) throw ValidationError("branch id out of range: " + std::to_string(br.id));
        if (seen_br[static_cast<size_t>(br.id)]) throw ValidationError("duplicate branch id: " + std::to_string(br.id));
        seen_br[static_cast<size_t>(br.id)] = true;
        if (br.from_bus < 0 || br.from_bus >= n || br.to_bus < 0 || br.to_bus >= n)
            throw ValidationError("branch " + std::to_string(br.id) + " references unknown bus");
        if (br.from_bus == br.to_bus) throw ValidationError("branch " + std::to_string(br.id) + " is a self-loop");
        if (!(br.reactance_pu > 0.0)) throw ValidationError("branch " + std::to_string(br.id) + " has nonpositive reactance");
        if (!(br.rating_mw > 0.0)) throw ValidationError("branch " + std::to_string(br.id) + " has nonpositive rating");
    }
    if (grid.slack_bus < 0 || grid.slack_bus >= n) throw ValidationError("slack bus missing");
    if (grid.total_gen_max_mw() <= 0.0) throw ValidationError("no generator with positive capacity");
    if (!connected_in_service(grid)) throw ValidationError("in-service graph is disconnected");
    balance_dispatch(grid);
    grid.dmax0 = max_degree(grid);
}

GridCase parse_native_json(const nlohmann::json& j) {
    GridCase grid;
    try {
        grid.base_mva = j.at("base_mva").get<double>();
        grid.slack_bus = j.at("slack_bus").get<int>();
        for (const auto& jb : j.at("buses")) {
            Bus b;
            b.id = jb.at("id").get<int>();
            b.load_mw = jb.at("load_mw").get<double>();
            b.gen_mw = jb.at("gen_mw").get<double>();
            b.gen_max_mw = jb.at("gen_max_mw").get<double>();
            grid.buses.push_back(b);
        }
        for (const auto& jb : j.at("branches")) {
            Branch br;
            br.id = jb.at("id").get<int>();
            br.from_bus = jb.at("from").get<int>();
            br.to_bus = jb.at("to").get<int>();
            br.reactance_pu = jb.at("x_pu").get<double>();
            br.rating_mw = jb.at("rating_mw").get<double>();
            const std::string kind = jb.at("kind").get<std::string>();
            if (kind == "line") {
                br.kind = BranchKind::Line;
            } else if (kind == "transformer") {
                br.kind = BranchKind::Transformer;
            } else {
                throw ParseError("unknown branch kind '" + kind + "'");
            }
            grid.branches.push_back(br);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(e.what());
    }
    std::sort(grid.buses.begin(), grid.buses.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
    validate_case(grid);
    return grid;
}

// Reads the numeric rows of one "mpc.<name> = [ ... ];" matrix block.
std::vector<std::vector<double>> read_matrix_block(const std::string& text, const std::string& name) {
    const std::string key = "mpc." + name;
    size_t pos = text.find(key);
    if (pos == std::string::npos) throw ParseError("missing " + key);
    pos = text.find('[', pos);
    const size_t end = text.find(']', pos);
    if (pos == std::string::npos || end == std::string::npos) throw ParseError("unterminated " + key);
    std::vector<std::vector<double>> rows;
    std::istringstream block(text.substr(pos + 1, end - pos - 1));
    std::string line;
    while (std::getline(block, line)) {
        if (const size_t c = line.find('%'); c != std::string::npos) line.resize(c);
        for (char& ch : line) {
            if (ch == ';' || ch == ',' || ch == '\t') ch = ' ';
        }
        std::istringstream ls(line);
        std::vector<double> row;
        double v = 0.0;
        while (ls >> v) row.push_back(v);
        if (!row.empty()) rows.push_back(std::move(row));
    }
    return rows;
}

GridCase parse_matpower(const std::string& text) {
    GridCase grid;
    {
        const std::string key = "mpc.baseMVA";
        size_t pos = text.find(key);
        if (pos == std::string::npos) throw ParseError("missing mpc.baseMVA");
        pos = text.find('=', pos);
        if (pos == std::string::npos) throw ParseError("malformed mpc.baseMVA");
        grid.base_mva = std::strtod(text.c_str() + pos + 1, nullptr);
    }
    const auto bus_rows = read_matrix_block(text, "bus");
    const auto gen_rows = read_matrix_block(text, "gen");
    const auto branch_rows = read_matrix_block(text, "branch");

    // External MATPOWER bus numbers map to contiguous ids in row order.
    std::unordered_map<long, int> bus_index;
    for (const auto& row : bus_rows) {
        if (row.size() < 3) throw ParseError("bus row too short");
        Bus b;
        b.id = static_cast<int>(grid.buses.size());
        const long ext = static_cast<long>(row[0]);
        if (bus_index.count(ext)) throw ParseError("duplicate bus number " + std::to_string(ext));
        bus_index[ext] = b.id;
        b.load_mw = std::max(0.0, row[2]);
        grid.buses.push_back(b);
        if (static_cast<int>(row[1]) == 3 && grid.slack_bus < 0) grid.slack_bus = b.id;
    }
    for (const auto& row : gen_rows) {
        if (row.size() < 9) throw ParseError("gen row too short");
        const auto it = bus_index.find(static_cast<long>(row[0]));
        if (it == bus_index.end()) throw ParseError("generator at unknown bus");
        const bool on = row[7] > 0.0;
        if (!on) continue;
        // Some published cases record a solved dispatch slightly above Pmax at the
        // slack unit; clamp so the balanced dispatch stays within capacity.
        grid.buses[static_cast<size_t>(it->second)].gen_mw += std::min(row[1], row[8]);
        grid.buses[static_cast<size_t>(it->second)].gen_max_mw += row[8];
    }
    for (const auto& row : branch_rows) {
        if (row.size() < 11) throw ParseError("branch row too short");
        Branch br;
        br.id = static_cast<int>(grid.branches.size());
        const auto f = bus_index.find(static_cast<long>(row[0]));
        const auto t = bus_index.find(static_cast<long>(row[1]));
        if (f == bus_index.end() || t == bus_index.end()) throw ParseError("branch references unknown bus");
        br.from_bus = f->second;
        br.to_bus = t->second;
        br.reactance_pu = row[3];
        br.rating_mw = row[5] > 0.0 ? row[5] : 1e9;  // rateA 0 means unlimited
        br.kind = row[8] != 0.0 ? BranchKind::Transformer : BranchKind::Line;
        br.in_service = row[10] > 0.0;
        grid.branches.push_back(br);
    }
    validate_case(grid);
    return grid;
}

}  // namespace

GridCase load_case_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(e.what());
    }
    return parse_native_json(j);
}

GridCase load_case(const std::string& path, CaseFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (format == CaseFormat::NativeJson) return load_case_json_text(text);
    return parse_matpower(text);
}

GridCase scale_load(const GridCase& grid, double factor) {
    if (!(factor > 0.0)) throw InfeasibleError("load factor must be positive");
    GridCase out = grid;
    const double target = grid.total_load_mw() * factor;
    if (out.total_gen_max_mw() + 1e-9 < target) {
        throw InfeasibleError("total capacity " + std::to_string(out.total_gen_max_mw()) +
                              " MW cannot cover scaled load " + std::to_string(target) + " MW");
    }
    for (auto& b : out.buses) b.load_mw *= factor;
    const double gen = out.total_gen_mw();
    if (gen > 0.0) {
        const double s = target / gen;
        for (auto& b : out.buses) b.gen_mw *= s;
    } else if (target > 0.0) {
        const double cap = out.total_gen_max_mw();
        for (auto& b : out.buses) b.gen_mw = b.gen_max_mw * (target / cap);
    }
    for (const auto& b : out.buses) {
        if (b.gen_mw > b.gen_max_mw * (1.0 + 1e-9)) {
            throw InfeasibleError("scaled dispatch exceeds capacity at bus " + std::to_string(b.id));
        }
    }
    return out;
}

Eigen::MatrixXd adjacency(const GridCase& grid, const Topology& topo) {
    const int n = topo.bus_count;
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    const double w = 1.0 / static_cast<double>(grid.dmax0);
    for (const auto& br : grid.branches) {
        if (!topo.branch_live(br.id)) continue;
        b(br.from_bus, br.to_bus) = w;
        b(br.to_bus, br.from_bus) = w;
    }
    return b;
}

}  // namespace gridfc

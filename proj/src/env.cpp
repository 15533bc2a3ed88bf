#include "gridfc/env.hpp"

#include <algorithm>
#include <utility>

#include <json.hpp>

#include "gridfc/errors.hpp"

namespace gridfc {

std::vector<int> FaultChain::actions() const {
    std::vector<int> out;
    out.reserve(stages.size());
    for (const auto& s : stages) out.push_back(s.chosen_action);
    return out;
}

double FaultChain::tll_mw() const {
    double s = 0.0;
    for (const auto& st : stages) s += st.load_loss_mw;
    return s;
}

double chain_tll(const FaultChain& chain) { return chain.tll_mw(); }

FcEnv::FcEnv(const GridCase& base_case, double load_factor, int horizon)
    : FcEnv(scale_load(base_case, load_factor), horizon) {}

FcEnv::FcEnv(GridCase prepared_case, int horizon)
    : case_(std::move(prepared_case)), horizon_(horizon) {
    if (horizon_ <= 0) throw ValidationError("horizon must be positive");
    reset();
}

void FcEnv::refresh_observation() {
    obs_.topology = topo_;
    obs_.node_state = Eigen::MatrixXd::Zero(case_.bus_count(), 1);
    for (int b = 0; b < case_.bus_count(); ++b) {
        if (topo_.bus_in_service[static_cast<size_t>(b)]) {
            obs_.node_state(b, 0) = sol_.angles_rad(b);
        }
    }
}

Observation FcEnv::reset() {
    topo_ = Topology::full(case_);
    sol_ = solve_balanced(case_, topo_);
    initial_load_mw_ = total_load(sol_);
    chain_ = FaultChain{{}, horizon_};
    stage_ = 0;
    done_ = false;
    refresh_observation();
    return obs_;
}

std::vector<bool> FcEnv::action_mask() const {
    static const std::unordered_set<int> none;
    return action_mask(none);
}

std::vector<bool> FcEnv::action_mask(const std::unordered_set<int>& pruned) const {
    std::vector<bool> mask(static_cast<size_t>(case_.branch_count()), false);
    if (done_) return mask;
    for (int id = 0; id < case_.branch_count(); ++id) {
        mask[static_cast<size_t>(id)] = topo_.branch_live(id) && !pruned.count(id);
    }
    return mask;
}

StepResult FcEnv::step(int action) {
    if (done_) throw InvalidActionError("episode has ended");
    if (action < 0 || action >= case_.branch_count() || !topo_.branch_live(action)) {
        throw InvalidActionError("branch " + std::to_string(action) + " is not removable");
    }
    CascadeOutcome out = cascade_step(case_, topo_, action);
    topo_ = std::move(out.new_topology);
    sol_ = std::move(out.new_solution);
    ++stage_;
    chain_.stages.push_back(ChainStage{action, out.failed_set, out.load_loss_mw});

    StepResult res;
    res.reward_mw = out.load_loss_mw;
    res.failed_set = std::move(out.failed_set);
    refresh_observation();
    res.next_observation = obs_;
    // The horizon ends the episode; so does running out of removable branches.
    done_ = stage_ >= horizon_ || topo_.in_service_branches() == 0;
    res.end = done_;
    return res;
}

FaultChain replay_chain(const FcEnv& env_template, const std::vector<int>& actions) {
    FcEnv env = env_template;
    env.reset();
    for (int a : actions) env.step(a);
    return env.chain();
}

std::string chain_to_json(const FaultChain& chain) {
    nlohmann::json j;
    j["actions"] = chain.actions();
    auto& sets = j["failed_sets"] = nlohmann::json::array();
    auto& losses = j["losses_mw"] = nlohmann::json::array();
    for (const auto& s : chain.stages) {
        sets.push_back(s.failed_set);
        losses.push_back(s.load_loss_mw);
    }
    j["tll_mw"] = chain.tll_mw();
    return j.dump();
}

FaultChain chain_from_json(const std::string& line) {
    FaultChain chain;
    try {
        const nlohmann::json j = nlohmann::json::parse(line);
        const auto actions = j.at("actions").get<std::vector<int>>();
        const auto sets = j.at("failed_sets").get<std::vector<std::vector<int>>>();
        const auto losses = j.at("losses_mw").get<std::vector<double>>();
        if (sets.size() != actions.size() || losses.size() != actions.size()) {
            throw ParseError("chain record arrays disagree in length");
        }
        for (size_t i = 0; i < actions.size(); ++i) {
            chain.stages.push_back(ChainStage{actions[i], sets[i], losses[i]});
        }
        chain.horizon = static_cast<int>(actions.size());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(e.what());
    }
    return chain;
}

}  // namespace gridfc

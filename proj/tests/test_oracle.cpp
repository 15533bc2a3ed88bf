#include <doctest.h>

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gridfc/errors.hpp"
#include "gridfc/oracle.hpp"
#include "gridfc/powerflow.hpp"
#include "oracles.hpp"

using namespace gridfc;
using namespace gridfc::testing;

namespace {

GridCase load_triangle() {
    return load_case(std::string(GRIDFC_DATA_DIR) + "/triangle3.json", CaseFormat::NativeJson);
}

// Loads at buses 0 and 1, generation at bus 2.
GridCase reversed_path3() {
    GridCase g;
    g.buses = {Bus{0, 30.0, 0.0, 0.0}, Bus{1, 20.0, 0.0, 0.0}, Bus{2, 0.0, 50.0, 80.0}};
    for (int i = 0; i < 2; ++i) {
        Branch br;
        br.id = i;
        br.from_bus = i;
        br.to_bus = i + 1;
        br.reactance_pu = 0.1;
        br.rating_mw = 200.0;
        g.branches.push_back(br);
    }
    g.slack_bus = 2;
    g.dmax0 = 2;
    return g;
}

/// Unmemoized, accumulate-as-you-go reference enumeration.
void naive_enumerate(const GridCase& grid, const Topology& topo, int remaining,
                     std::vector<int>& actions, double tll,
                     std::vector<std::pair<std::vector<int>, double>>& out) {
    if (remaining == 0 || topo.in_service_branches() == 0) {
        out.emplace_back(actions, tll);
        return;
    }
    for (int a = 0; a < grid.branch_count(); ++a) {
        if (!topo.branch_live(a)) continue;
        const CascadeOutcome outcome = cascade_step(grid, topo, a);
        actions.push_back(a);
        naive_enumerate(grid, outcome.new_topology, remaining - 1, actions,
                        tll + outcome.load_loss_mw, out);
        actions.pop_back();
    }
}

GridCase cascading_mesh(std::uint64_t seed, int n, int extra) {
    std::mt19937_64 rng(seed);
    GridCase g = make_random_mesh_case(rng, n, extra);
    const PowerFlowSolution base = solve_balanced(g, Topology::full(g));
    tighten_ratings(g, base.flows_mw, 1.3, 10.0);
    return g;
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("triangle catalog lists all six chains in loss-then-action order") {
    const ChainCatalog catalog = enumerate_chains(load_triangle(), 2);
    REQUIRE(catalog.size() == 6);

    const std::vector<std::vector<int>> expected_actions{{0, 1}, {1, 0}, {0, 2},
                                                         {1, 2}, {2, 0}, {2, 1}};
    const std::vector<double> expected_tll{100.0, 100.0, 50.0, 50.0, 50.0, 50.0};
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(catalog.chains[i].actions() == expected_actions[i]);
        CHECK(catalog.chains[i].tll_mw() == doctest::Approx(expected_tll[i]).epsilon(1e-12));
    }
}

TEST_CASE("enumeration matches a naive unmemoized reference") {
    for (const std::uint64_t seed : {11u, 22u, 33u}) {
        const GridCase g = cascading_mesh(seed, 8, 3);
        const ChainCatalog catalog = enumerate_chains(g, 2);

        std::vector<std::pair<std::vector<int>, double>> reference;
        std::vector<int> actions;
        naive_enumerate(g, Topology::full(g), 2, actions, 0.0, reference);
        REQUIRE(catalog.size() == reference.size());

        std::sort(reference.begin(), reference.end());
        std::vector<std::pair<std::vector<int>, double>> produced;
        for (const auto& chain : catalog.chains) produced.emplace_back(chain.actions(), chain.tll_mw());
        std::sort(produced.begin(), produced.end());
        for (std::size_t i = 0; i < produced.size(); ++i) {
            CHECK(produced[i].first == reference[i].first);
            CHECK(produced[i].second == doctest::Approx(reference[i].second).epsilon(1e-12));
        }
    }
}

TEST_CASE("chains that run out of branches stay short and sort by actions on ties") {
    const ChainCatalog catalog = enumerate_chains(reversed_path3(), 3);
    REQUIRE(catalog.size() == 2);
    CHECK(catalog.chains[0].actions() == std::vector<int>{0, 1});
    CHECK(catalog.chains[1].actions() == std::vector<int>{1, 0});
    CHECK(catalog.chains[0].tll_mw() == doctest::Approx(50.0));
    CHECK(catalog.chains[1].tll_mw() == doctest::Approx(50.0));
}

TEST_CASE("every catalog entry replays to the identical chain") {
    const GridCase g = cascading_mesh(44, 9, 3);
    const ChainCatalog catalog = enumerate_chains(g, 2);
    const FcEnv env_template(g, 2);
    for (const auto& chain : catalog.chains) {
        const FaultChain replayed = replay_chain(env_template, chain.actions());
        REQUIRE(replayed.stages.size() == chain.stages.size());
        for (std::size_t i = 0; i < chain.stages.size(); ++i) {
            CHECK(replayed.stages[i].failed_set == chain.stages[i].failed_set);
            CHECK(replayed.stages[i].load_loss_mw ==
                  doctest::Approx(chain.stages[i].load_loss_mw).epsilon(1e-9));
        }
    }
}

TEST_CASE("parallel fan-out reproduces the serial catalog bit for bit") {
    const GridCase g = cascading_mesh(55, 10, 4);
    const ChainCatalog serial = enumerate_chains(g, 2, false);
    const ChainCatalog parallel = enumerate_chains(g, 2, true);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial.chains[i].actions() == parallel.chains[i].actions());
        REQUIRE(serial.chains[i].stages.size() == parallel.chains[i].stages.size());
        for (std::size_t s = 0; s < serial.chains[i].stages.size(); ++s) {
            CHECK(serial.chains[i].stages[s].failed_set == parallel.chains[i].stages[s].failed_set);
            CHECK(serial.chains[i].stages[s].load_loss_mw ==
                  parallel.chains[i].stages[s].load_loss_mw);  // bitwise
        }
    }
}

TEST_CASE("top sums take the catalog head") {
    const ChainCatalog catalog = enumerate_chains(load_triangle(), 2);
    CHECK(top_sum(catalog, 0) == 0.0);
    CHECK(top_sum(catalog, 2) == doctest::Approx(200.0));
    CHECK(top_sum(catalog, 6) == doctest::Approx(400.0));
    CHECK(top_sum(catalog, 100) == doctest::Approx(400.0));
    CHECK_THROWS_AS(top_sum(catalog, -1), ValidationError);
}

TEST_CASE("risky chain counting applies the threshold inclusively") {
    const ChainCatalog catalog = enumerate_chains(load_triangle(), 2);
    CHECK(count_risky(catalog, 101.0) == 0);
    CHECK(count_risky(catalog, 100.0) == 2);
    CHECK(count_risky(catalog, 75.0) == 2);
    CHECK(count_risky(catalog, 50.0) == 6);
    CHECK(count_risky(catalog, 0.0) == 6);
}

TEST_CASE("a loss-maximal search has zero final regret") {
    const ChainCatalog catalog = enumerate_chains(load_triangle(), 2);
    std::vector<double> found;
    for (const auto& chain : catalog.chains) found.push_back(chain.tll_mw());
    const std::vector<double> regret = regret_series(catalog, found);
    REQUIRE(regret.size() == 6);
    CHECK(regret.front() == doctest::Approx(300.0));  // 400 ideal - first 100
    CHECK(regret.back() == doctest::Approx(0.0));
}

TEST_CASE("regret is order-independent at full coverage and never increases") {
    const ChainCatalog catalog = enumerate_chains(load_triangle(), 2);
    // Worst-first discovery order still ends at zero regret.
    std::vector<double> found;
    for (auto it = catalog.chains.rbegin(); it != catalog.chains.rend(); ++it)
        found.push_back(it->tll_mw());
    const std::vector<double> regret = regret_series(catalog, found);
    CHECK(regret.back() == doctest::Approx(0.0));
    for (std::size_t s = 1; s < regret.size(); ++s) CHECK(regret[s] <= regret[s - 1] + 1e-12);
    // A partial search leaves positive regret.
    const std::vector<double> partial = regret_series(catalog, {50.0, 50.0});
    CHECK(partial == std::vector<double>{150.0, 100.0});
}

TEST_CASE("leaf estimates are falling factorials") {
    CHECK(enumeration_leaf_estimate(46, 3) == doctest::Approx(46.0 * 45.0 * 44.0));
    CHECK(enumeration_leaf_estimate(8, 2) == doctest::Approx(56.0));
    CHECK(enumeration_leaf_estimate(2, 3) == doctest::Approx(0.0));
}

TEST_CASE("catalogs round-trip through their line format") {
    const ChainCatalog catalog = enumerate_chains(load_triangle(), 2);
    const std::string text = catalog_to_jsonl(catalog);
    const ChainCatalog back = catalog_from_jsonl(text);
    CHECK(catalog_to_jsonl(back) == text);
}

TEST_CASE("enumeration rejects a non-positive depth") {
    CHECK_THROWS_AS(enumerate_chains(load_triangle(), 0), ValidationError);
}

}  // TEST_SUITE

#include <doctest.h>

#include <Eigen/Dense>
#include <vector>

#include "gridfc/errors.hpp"
#include "gridfc/search_common.hpp"

using namespace gridfc;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

}  // namespace

TEST_SUITE("search") {

TEST_CASE("prefix keys join actions with dashes") {
    CHECK(prefix_key({}) == "");
    CHECK(prefix_key({3}) == "3");
    CHECK(prefix_key({3, 17, 42}) == "3-17-42");
}

TEST_CASE("count table defaults to zero and tracks prefixes independently") {
    CountTable counts;
    CHECK(counts.get("", 5) == 0);
    counts.increment("", 5);
    counts.increment("5", 2);
    counts.increment("5", 2);
    CHECK(counts.get("", 5) == 1);
    CHECK(counts.get("5", 2) == 2);
    CHECK(counts.get("5", 5) == 0);
    CHECK(counts.get("5-2", 2) == 0);
}

TEST_CASE("exploration picks the largest absolute flow") {
    CountTable counts;
    const std::vector<bool> all{true, true, true};
    CHECK(select_explore(vec({10.0, -20.0, 5.0}), all, counts, "") == 1);
}

TEST_CASE("exploration discounts visited actions by sqrt(count+1)") {
    CountTable counts;
    counts.increment("", 0);
    const std::vector<bool> all{true, true};
    // 10/sqrt(2) ~ 7.07 loses to the unvisited 9.9.
    CHECK(select_explore(vec({10.0, 9.9}), all, counts, "") == 1);
}

TEST_CASE("selection ties break to the lowest branch id") {
    CountTable counts;
    const std::vector<bool> all{true, true, true};
    CHECK(select_explore(vec({5.0, 5.0, 5.0}), all, counts, "") == 0);
    CHECK(select_exploit(vec({1.0, 1.0, 1.0}), all, counts, "") == 0);
}

TEST_CASE("selection honors the admissibility mask") {
    CountTable counts;
    CHECK(select_explore(vec({100.0, 1.0}), {false, true}, counts, "") == 1);
    CHECK_THROWS_AS(select_explore(vec({1.0, 1.0}), {false, false}, counts, ""),
                    NoAvailableActionError);
    CHECK_THROWS_AS(select_exploit(vec({1.0, 1.0}), {false, false}, counts, ""),
                    NoAvailableActionError);
}

TEST_CASE("exploitation normalizes values by visit counts") {
    CountTable counts;
    const std::vector<bool> all{true, true};
    CHECK(select_exploit(vec({1.0, 2.0}), all, counts, "") == 1);
    counts.increment("", 1);
    counts.increment("", 1);
    counts.increment("", 1);
    // 2/sqrt(4) = 0.5 now loses to 1/sqrt(1).
    CHECK(select_exploit(vec({1.0, 2.0}), all, counts, "") == 0);
}

TEST_CASE("exploitation can pick a negative value when it is the only option") {
    CountTable counts;
    CHECK(select_exploit(vec({-1.0, -3.0, -2.0}), {false, false, true}, counts, "") == 2);
}

TEST_CASE("selection rejects mismatched weight/mask lengths") {
    CountTable counts;
    CHECK_THROWS_AS(select_explore(vec({1.0, 2.0}), {true}, counts, ""), ShapeError);
}

TEST_CASE("epsilon is one before any first-stage visit") {
    CountTable counts;
    CHECK(update_epsilon(vec({100.0, 50.0, 25.0}), counts, 0.01) == doctest::Approx(1.0));
}

TEST_CASE("epsilon shrinks as flow-heavy actions are visited") {
    CountTable counts;
    const Eigen::VectorXd flows = vec({100.0, 50.0});
    counts.increment("", 0);
    counts.increment("", 0);
    counts.increment("", 0);
    // (100/sqrt(4) + 50) / 150
    CHECK(update_epsilon(flows, counts, 0.01) == doctest::Approx(100.0 / 150.0));
}

TEST_CASE("epsilon never falls below the floor") {
    CountTable counts;
    for (int i = 0; i < 1000000; ++i) {
        counts.increment("", 0);
        counts.increment("", 1);
    }
    CHECK(update_epsilon(vec({100.0, 50.0}), counts, 0.01) == doctest::Approx(0.01));
}

TEST_CASE("epsilon treats an all-zero flow profile as unexplored") {
    CountTable counts;
    CHECK(update_epsilon(vec({0.0, 0.0}), counts, 0.01) == doctest::Approx(1.0));
}

TEST_CASE("fresh availability tree prunes nothing") {
    AvailabilityTree tree;
    CHECK(tree.pruned({}).empty());
    CHECK(tree.pruned({3, 1}).empty());
    CHECK_FALSE(tree.exhausted(2));
    CHECK(tree.exhausted(0));
}

TEST_CASE("pruning removes the chain's last action at its parent prefix") {
    AvailabilityTree tree;
    tree.prune_backwards({2, 5, 7}, {3, 3, 3});
    CHECK(tree.pruned({2, 5}) == std::unordered_set<int>{7});
    CHECK(tree.pruned({2}).empty());
    CHECK(tree.pruned({}).empty());
}

TEST_CASE("exhausted prefixes propagate pruning upward") {
    AvailabilityTree tree;
    // Deeper prefixes offered exactly one action, so pruning cascades to the
    // root, which still has two live actions afterwards.
    tree.prune_backwards({2, 5, 7}, {3, 1, 1});
    CHECK(tree.pruned({2, 5}) == std::unordered_set<int>{7});
    CHECK(tree.pruned({2}) == std::unordered_set<int>{5});
    CHECK(tree.pruned({}) == std::unordered_set<int>{2});
    CHECK_FALSE(tree.exhausted(3));
}

TEST_CASE("draining every chain exhausts the tree") {
    AvailabilityTree tree;
    // Two-action space with two-stage chains (0,1) and (1,0).
    tree.prune_backwards({0, 1}, {2, 1});
    CHECK(tree.pruned({}) == std::unordered_set<int>{0});
    CHECK_FALSE(tree.exhausted(2));
    tree.prune_backwards({1, 0}, {2, 1});
    CHECK(tree.exhausted(2));
}

TEST_CASE("pruning validates the offered-count vector length") {
    AvailabilityTree tree;
    CHECK_THROWS_AS(tree.prune_backwards({1, 2}, {3}), ShapeError);
}

}  // TEST_SUITE

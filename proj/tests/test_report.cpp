#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "gridfc/errors.hpp"
#include "gridfc/report.hpp"

using namespace gridfc;

TEST_SUITE("report") {

TEST_CASE("mean and sample deviation match hand-worked values") {
    const auto stats = mean_sd({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0});
    CHECK(stats.mean == doctest::Approx(5.0));
    CHECK(stats.sd == doctest::Approx(std::sqrt(32.0 / 7.0)));
}

TEST_CASE("a single sample has zero deviation and an empty set zero mean") {
    CHECK(mean_sd({3.25}).mean == 3.25);
    CHECK(mean_sd({3.25}).sd == 0.0);
    CHECK(mean_sd({}).mean == 0.0);
    CHECK(mean_sd({}).sd == 0.0);
}

TEST_CASE("formatted doubles parse back to the identical bit pattern") {
    for (const double v : {0.1, 1.0 / 3.0, -1234.5678e-9, 91080.0, 0.0, 2.5e17}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("regret rows accumulate the discovered TLLs") {
    const auto rows = build_regret_rows({100.0, 50.0, 25.0}, {75.0, 25.0, 0.0});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].iteration == 1);
    CHECK(rows[2].iteration == 3);
    CHECK(rows[1].accum_tll_mw == 150.0);
    CHECK(rows[2].accum_tll_mw == 175.0);
    CHECK(rows[0].regret_mw == 75.0);
    CHECK(rows[2].regret_mw == 0.0);
}

TEST_CASE("mismatched series lengths are rejected") {
    CHECK_THROWS_AS(build_regret_rows({1.0, 2.0}, {0.0}), ShapeError);
}

TEST_CASE("the regret CSV round-trips exactly") {
    const auto rows = build_regret_rows({100.5, 1.0 / 3.0}, {10.25, 0.125});
    const auto text = regret_csv(rows);
    CHECK(text.substr(0, text.find('\n')) == "iteration,chain_tll_mw,accum_tll_mw,regret_mw");
    const auto parsed = parse_regret_csv(text);
    REQUIRE(parsed.size() == 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(parsed[i].iteration == rows[i].iteration);
        CHECK(parsed[i].chain_tll_mw == rows[i].chain_tll_mw);
        CHECK(parsed[i].accum_tll_mw == rows[i].accum_tll_mw);
        CHECK(parsed[i].regret_mw == rows[i].regret_mw);
    }
}

TEST_CASE("corrupt regret CSVs are diagnosed") {
    CHECK_THROWS_AS(parse_regret_csv("iteration,chain\n"), ReportError);
    CHECK_THROWS_AS(
        parse_regret_csv("iteration,chain_tll_mw,accum_tll_mw,regret_mw\n1,2,3\n"), ReportError);
    CHECK_THROWS_AS(
        parse_regret_csv("iteration,chain_tll_mw,accum_tll_mw,regret_mw\n1,x,3,4\n"),
        ReportError);
}

TEST_CASE("episode lines are single-line JSON with the expected keys in order") {
    EpisodeLog log;
    log.episode = 7;
    log.online = true;
    log.actions = {4, 1};
    log.losses_mw = {120.0, 30.5};
    log.tll_mw = 150.5;
    log.epsilons = {1.0, 0.5};
    log.train_losses = {0.25};
    const auto line = episode_jsonl_line(log);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(line ==
          R"({"episode":7,"online":true,"actions":[4,1],"losses_mw":[120.0,30.5],)"
          R"("tll_mw":150.5,"epsilons":[1.0,0.5],"train_losses":[0.25]})");
}

TEST_CASE("run reports survive a JSON round-trip") {
    RunReport report;
    report.algorithm = "grqn";
    report.seed = 12345;
    report.config_echo = {{"case", "ieee39.json"}, {"kappa", "3"}};
    report.episodes_run = 1450;
    report.online_episodes = 1200;
    report.discovered_chains = 1180;
    report.accumulated_tll_mw = 54321.125;
    report.regret_final_mw = 17.5;
    report.regret_series_mw = {300.0, 120.0, 17.5};
    report.exhausted = false;
    report.wall_seconds = 212.75;

    const auto restored = RunReport::from_json(report.to_json());
    CHECK(restored.algorithm == report.algorithm);
    CHECK(restored.seed == report.seed);
    CHECK(restored.config_echo == report.config_echo);
    CHECK(restored.episodes_run == report.episodes_run);
    CHECK(restored.online_episodes == report.online_episodes);
    CHECK(restored.discovered_chains == report.discovered_chains);
    CHECK(restored.accumulated_tll_mw == report.accumulated_tll_mw);
    CHECK(restored.regret_final_mw == report.regret_final_mw);
    CHECK(restored.regret_series_mw == report.regret_series_mw);
    CHECK(restored.exhausted == report.exhausted);
    CHECK(restored.wall_seconds == report.wall_seconds);
}

TEST_CASE("reports missing fields are rejected") {
    CHECK_THROWS_AS(RunReport::from_json("{\"algorithm\":\"grqn\"}"), ReportError);
    CHECK_THROWS_AS(RunReport::from_json("not json"), ReportError);
}

TEST_CASE("the comparison table groups runs by algorithm in first-appearance order") {
    RunReport a;
    a.algorithm = "grqn";
    a.accumulated_tll_mw = 100.0;
    a.regret_final_mw = 10.0;
    a.discovered_chains = 5;
    a.wall_seconds = 2.0;
    RunReport b = a;
    b.accumulated_tll_mw = 200.0;
    b.regret_final_mw = 30.0;
    RunReport c;
    c.algorithm = "pfw_rl";
    c.accumulated_tll_mw = 80.0;
    c.regret_final_mw = 50.0;
    c.discovered_chains = 5;
    c.wall_seconds = 1.0;

    const auto text = comparison_csv({a, c, b});
    CHECK(text ==
          "algorithm,runs,tll_mean_mw,tll_sd_mw,regret_mean_mw,regret_sd_mw,"
          "discovered_mean\n"
          "grqn,2,150,70.71067811865476,20,14.142135623730951,5\n"
          "pfw_rl,1,80,0,50,0,5\n");
}

TEST_CASE("merged regret tables pad the shorter series with empty cells") {
    const auto text = merged_regret_csv({{"grqn", {5.0, 2.0, 0.0}}, {"pfw_rl", {9.0}}});
    CHECK(text ==
          "iteration,grqn,pfw_rl\n"
          "1,5,9\n"
          "2,2,\n"
          "3,0,\n");
}

TEST_CASE("the regret plot carries one polyline per run and fixed axis labels") {
    const auto svg = regret_svg({{"grqn", {400.0, 100.0, 0.0}}, {"pfw_rl", {400.0, 250.0, 180.0}}});
    std::size_t polylines = 0;
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
         pos = svg.find("<polyline", pos + 1))
        ++polylines;
    CHECK(polylines == 2);
    CHECK(svg.find(">iteration</text>") != std::string::npos);
    CHECK(svg.find(">regret (MW)</text>") != std::string::npos);
    CHECK(svg.find("grqn") != std::string::npos);
    CHECK(svg.find("pfw_rl") != std::string::npos);
    // Deterministic output: a second call is byte-identical.
    CHECK(svg == regret_svg({{"grqn", {400.0, 100.0, 0.0}}, {"pfw_rl", {400.0, 250.0, 180.0}}}));
}

TEST_CASE("labels with markup characters are escaped in the plot") {
    const auto svg = regret_svg({{"a<b&c", {1.0}}});
    CHECK(svg.find("a&lt;b&amp;c") != std::string::npos);
    CHECK(svg.find("a<b") == std::string::npos);
}

}  // TEST_SUITE

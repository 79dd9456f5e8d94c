#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dynfusion/bench.hpp"

using namespace dynfusion;

namespace {

GridNavConfig grid() {
    GridNavConfig g;
    g.width = 4;
    g.height = 2;
    g.start = {0, 0};
    g.target = {0, 3};
    g.max_steps = 8;
    g.desired_cells = {{1, 1}};
    g.undesired_cells = {{0, 2}};
    return g;
}

QFunction straight_right() {
    QFunction q = QFunction::make_tabular(8, 4);
    for (int s = 0; s < 8; ++s) q.at(s, GridNav::right) = 1.0;
    return q;
}

Metrics some_metrics(double x) {
    Metrics m;
    m.desired_visits = {x, x / 3.0};
    m.undesired_visits = {0.1 * x, 0.0};
    m.hits = {1.0, 0.0};
    m.score = {std::sqrt(x), 1e-17};
    m.n_seeds = 3;
    m.episodes_per_seed = 4;
    return m;
}

}  // namespace

TEST_CASE("scalarisation and reward normalisation") {
    CHECK(scalarize(1.0, -1.0, 0.3) == doctest::Approx(0.3 - 0.7));
    auto n = normalize_human_rewards({{0.0, 2.0}, {4.0}});
    CHECK(n[0][0] == doctest::Approx(-1.0));
    CHECK(n[0][1] == doctest::Approx(0.0));
    CHECK(n[1][0] == doctest::Approx(1.0));
    auto flat = normalize_human_rewards({{3.0, 3.0}});
    CHECK(flat[0][0] == 0.0);
}

TEST_CASE("variant names parse and reject unknown tags") {
    for (const auto& name : variant_names()) CHECK(to_string(variant_from_string(name)) == name);
    CHECK_THROWS_WITH_AS(variant_from_string("ppo"), doctest::Contains("dynamic"), ConfigError);
    MethodVariant v = MethodVariant::static_fusion(FusionParams{}, 0.0);
    CHECK_THROWS_AS(v.validate(), ArgumentError);
    CHECK_THROWS_AS(MethodVariant::morl(1.5).validate(), ArgumentError);
}

TEST_CASE("evaluation counts events of a fixed policy") {
    EnvConfig cfg = grid();
    QFunction q = straight_right();
    Artifacts art{&q, nullptr, nullptr};
    Metrics m = evaluate(MethodVariant::dqn(), cfg, art, 2, 3);
    CHECK(m.score.mean == 1.0);
    CHECK(m.hits.mean == 0.0);
    CHECK(m.undesired_visits.mean == 1.0);
    CHECK(m.desired_visits.mean == 0.0);
    CHECK(m.score.stderr_ == 0.0);
    CHECK(m.n_seeds == 2);
    CHECK_THROWS_AS(evaluate(MethodVariant::rudder(), cfg, art, 1, 1), ArgumentError);
}

TEST_CASE("dynamic rollout equals the personalised episode") {
    EnvConfig cfg = grid();
    QFunction q = straight_right();
    Rng rng(6);
    IntentModel m(ObservationEncoding::for_config(cfg), 4, 4, 3);
    m.randomize(rng);
    Artifacts art{&q, &m, nullptr};
    FusionParams p;
    CHECK(rollout_variant(MethodVariant::dynamic(p), cfg, art, 3) ==
          run_personalised_episode(cfg, q, m, p, 3).trajectory);
}

TEST_CASE("reports round-trip through csv and json") {
    std::vector<ReportRow> rows{{"dqn", "preference", "", some_metrics(0.1)},
                                {"dynamic", "mixed", "eta=2", some_metrics(1.0 / 3.0)}};
    const std::string csv = report_csv(rows);
    CHECK(csv.rfind("variant,mode,param,desired_mean,desired_se,undesired_mean,undesired_se,hits_mean,hits_se,"
                    "score_mean,score_se,n_seeds,episodes_per_seed\n",
                    0) == 0);
    CHECK(parse_report_csv(csv) == rows);
    CHECK(parse_report_json(report_json(rows)) == rows);
    CHECK_THROWS_AS(parse_report_csv("variant,mode\nx,y\n"), DataError);

    auto dir = std::filesystem::temp_directory_path() / "dynfusion_report_test";
    emit_report(rows, dir, "r");
    CHECK(std::filesystem::exists(dir / "r.csv"));
    CHECK(std::filesystem::exists(dir / "r.json"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("experiment config parsing") {
    Json j = Json::parse(R"({"env": {"env": "grid_nav", "desired_cells": [[4, 1]], "undesired_cells": [[5, 5]]},
                             "seeds": 2, "fusion": {"eta": 1.0}, "variants": ["dqn", "dynamic"]})");
    ExperimentConfig c = experiment_from_json(j);
    CHECK(c.seeds == 2);
    CHECK(c.fusion.eta == 1.0);
    CHECK(c.fusion.t_max == 10.0);
    CHECK(c.static_temperature() == 5.0);
    CHECK(c.variants.size() == 2);
    CHECK(experiment_from_json(to_json(c)).seeds == 2);
    j["sedes"] = 3;
    CHECK_THROWS_WITH_AS(experiment_from_json(j), doctest::Contains("sedes"), ConfigError);
}

TEST_CASE("stage seeds are distinct") {
    StageSeeds s = StageSeeds::from(1);
    CHECK(s.task != s.corpus);
    CHECK(s.intent != s.morl);
    CHECK(s.eval != s.task);
    CHECK(StageSeeds::from(2).task != s.task);
}

TEST_CASE("offline morl relabelling prefers the environment at alpha one") {
    EnvConfig cfg = grid();
    LearnerConfig lc;
    lc.episodes = 200;
    TrainResult task = train_task(cfg, lc, 4);
    Rng rng(1);
    IntentModel m(ObservationEncoding::for_config(cfg), 4, 4, 3);
    m.randomize(rng);
    LearnerConfig ml;
    ml.episodes = 60;
    QFunction q = train_morl(cfg, task.corpus, m, 1.0, ml, 2);
    Trajectory t = greedy_rollout(cfg, q, 0);
    CHECK(t.steps.back().flags.reached_target);
}

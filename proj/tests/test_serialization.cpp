#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "dynfusion/serialization.hpp"

using namespace dynfusion;

namespace {

GridNavConfig grid() {
    GridNavConfig g;
    g.width = 4;
    g.height = 3;
    g.start = {1, 0};
    g.target = {1, 3};
    g.desired_cells = {{0, 1}};
    g.undesired_cells = {{2, 2}};
    return g;
}

}  // namespace

TEST_CASE("environment configs round-trip and hash canonically") {
    EnvConfig g = grid();
    CHECK(std::get<GridNavConfig>(env_config_from_json(to_json(g))).desired_cells == grid().desired_cells);
    CHECK(config_hash(env_config_from_json(to_json(g))) == config_hash(g));
    LaneWorldConfig lw;
    lw.desired_lane = 3;
    EnvConfig l = lw;
    CHECK(config_hash(env_config_from_json(to_json(l))) == config_hash(l));
    CHECK(config_hash(l) != config_hash(g));
    CHECK(config_hash(g).size() == 16);
}

TEST_CASE("config parsers name the offending field") {
    Json j = to_json(EnvConfig{grid()});
    j["width"] = "wide";
    CHECK_THROWS_WITH_AS(env_config_from_json(j), doctest::Contains("width"), ConfigError);
    j = to_json(EnvConfig{grid()});
    j["env"] = "maze";
    CHECK_THROWS_AS(env_config_from_json(j), ConfigError);
    Json lj = to_json(LearnerConfig{});
    lj["discount"] = 2.0;
    CHECK_THROWS_AS(learner_config_from_json(lj, EnvKind::grid_nav), ConfigError);
}

TEST_CASE("intent specs accept cell pairs") {
    EnvConfig cfg = grid();
    Json j = Json::parse(R"({"mode": "mixed", "preferred": [[0, 1]], "avoided": [10]})");
    IntentSpec s = intent_spec_from_json(j, cfg);
    CHECK(s.preferred == std::vector<int>{1});
    CHECK(s.avoided == std::vector<int>{10});
    CHECK(intent_spec_from_json(to_json(s), cfg) == s);
    CHECK(intent_hash(s) == intent_hash(intent_spec_from_json(to_json(s), cfg)));
}

TEST_CASE("trajectory sets round-trip through JSONL") {
    EnvConfig cfg = grid();
    TrajectorySet set;
    set.config_hash = config_hash(cfg);
    set.learner_hash = learner_config_hash(LearnerConfig{});
    set.seed = 42;
    set.first_episode = 0;
    set.last_episode = 1;
    set.trajectories.push_back(replay(cfg, 0, {0, 3, 3}));
    set.trajectories.push_back(replay(cfg, 0, {3, 3, 3}));
    std::stringstream ss;
    write_trajectory_set(ss, set);
    CHECK(read_trajectory_set(ss) == set);

    LaneWorldConfig lw;
    EnvConfig lcfg = lw;
    TrajectorySet lset;
    lset.config_hash = config_hash(lcfg);
    lset.trajectories.push_back(replay(lcfg, 5, {3, 0, 2}));
    std::stringstream ls;
    write_trajectory_set(ls, lset);
    CHECK(read_trajectory_set(ls) == lset);

    std::stringstream bad("{\"type\":\"trajectory_set\"\nnot json\n");
    CHECK_THROWS_AS(read_trajectory_set(bad), DataError);
}

TEST_CASE("scored corpora keep scores and spec hashes") {
    EnvConfig cfg = grid();
    ScoredTrajectorySet set{{replay(cfg, 0, {0, 3}), 2, "abc"}, {replay(cfg, 0, {1}), -1, "abc"}};
    std::stringstream ss;
    write_scored_set(ss, set);
    CHECK(read_scored_set(ss) == set);
}

TEST_CASE("q functions and intent models round-trip exactly") {
    QFunction tab = QFunction::make_tabular(4, 2);
    tab.at(1, 1) = 0.1 + 0.2;
    CHECK(q_function_from_json(to_json(tab)) == tab);

    Rng rng(1);
    Mlp net({6, 5, 5}, rng);
    QFunction approx = QFunction::make_approximator(net, ObservationEncoding{EnvKind::lane_world, 6});
    CHECK(q_function_from_json(to_json(approx)) == approx);

    IntentModel m(ObservationEncoding{EnvKind::grid_nav, 12}, 4, 7, 3);
    m.randomize(rng);
    Json j = to_json(m);
    CHECK(j["format"] == "dynfusion.intent_model");
    CHECK(intent_model_from_json(Json::parse(j.dump())) == m);
    j["version"] = 99;
    CHECK_THROWS_AS(intent_model_from_json(j), DataError);
}

TEST_CASE("loss curve csv") {
    std::vector<EpochLoss> curve{{1, {1, 2, 3, 1.5}, {0, 0, 0, 2.5}}};
    std::ostringstream os;
    write_loss_curve_csv(os, curve);
    CHECK(os.str().rfind("epoch,L_m,L_c,L_e,L_total,heldout_L_total\n1,", 0) == 0);
}

TEST_CASE("file helpers map failures to the error taxonomy") {
    CHECK_THROWS_AS(read_json_config("/nonexistent/x.json"), ConfigError);
    CHECK_THROWS_AS(read_json_artifact("/nonexistent/x.json"), DataError);
    auto dir = std::filesystem::temp_directory_path() / "dynfusion_ser_test";
    write_file(dir / "sub" / "a.json", "{\"a\": 1}");
    CHECK(read_json_artifact(dir / "sub" / "a.json")["a"] == 1);
    write_file(dir / "b.json", "{oops");
    CHECK_THROWS_AS(read_json_config(dir / "b.json"), ConfigError);
    std::filesystem::remove_all(dir);
}

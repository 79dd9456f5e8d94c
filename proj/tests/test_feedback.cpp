#include <doctest.h>

#include "dynfusion/feedback.hpp"
#include "dynfusion/serialization.hpp"

using namespace dynfusion;

namespace {

GridNavConfig grid() {
    GridNavConfig g;
    g.width = 4;
    g.height = 3;
    g.start = {1, 0};
    g.target = {1, 3};
    g.desired_cells = {{0, 0}, {0, 1}};
    g.undesired_cells = {{1, 1}};
    return g;
}

}  // namespace

TEST_CASE("score counts steps spent in flagged regions") {
    EnvConfig cfg = grid();
    // (1,0) -> (0,0) -> (0,1) -> (0,1) wall bump -> (1,1) -> (1,2) -> (1,3)
    Trajectory t = replay(cfg, 0, {GridNav::up, GridNav::right, GridNav::up, GridNav::down, GridNav::right,
                                   GridNav::right});
    CHECK(score_trajectory(t, intent_from_env(cfg, IntentMode::preference), cfg) == 3);
    CHECK(score_trajectory(t, intent_from_env(cfg, IntentMode::avoidance), cfg) == -1);
    CHECK(score_trajectory(t, intent_from_env(cfg, IntentMode::mixed), cfg) == 2);
}

TEST_CASE("starting inside a region counts only when enabled") {
    GridNavConfig g = grid();
    g.start = {0, 0};
    EnvConfig cfg = g;
    Trajectory t = replay(cfg, 0, {GridNav::down});
    IntentSpec spec = intent_from_env(cfg, IntentMode::preference);
    CHECK(score_trajectory(t, spec, cfg) == 1);
    spec.count_start = false;
    CHECK(score_trajectory(t, spec, cfg) == 0);
}

TEST_CASE("mode and region validation") {
    EnvConfig cfg = grid();
    IntentSpec spec = intent_from_env(cfg, IntentMode::preference);
    CHECK(spec.avoided.empty());
    spec.avoided = {5};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = intent_from_env(cfg, IntentMode::mixed);
    spec.preferred.push_back(99);
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    CHECK_THROWS_AS(intent_mode_from_string("both"), ConfigError);
    CHECK(intent_mode_from_string("mixed") == IntentMode::mixed);
}

TEST_CASE("labels carry the spec hash and reject foreign trajectories") {
    EnvConfig cfg = grid();
    IntentSpec spec = intent_from_env(cfg, IntentMode::mixed);
    TrajectorySet set;
    set.config_hash = config_hash(cfg);
    set.trajectories.push_back(replay(cfg, 0, {GridNav::up}));
    set.trajectories.push_back(replay(cfg, 0, {GridNav::right}));
    ScoredTrajectorySet scored = label_corpus(set, spec, cfg);
    REQUIRE(scored.size() == 2);
    CHECK(scored[0].score == 1);
    CHECK(scored[1].score == -1);
    CHECK(scored[0].intent_hash == intent_hash(spec));
    CHECK(score_variance(scored) == doctest::Approx(1.0));

    GridNavConfig other = grid();
    other.max_steps = 7;
    CHECK_THROWS_AS(score_trajectory(set.trajectories[0], spec, EnvConfig{other}), ArgumentError);
    CHECK_THROWS_AS(label_corpus(TrajectorySet{}, spec, cfg), DataError);
}

TEST_CASE("lane intent uses the flagged lanes") {
    LaneWorldConfig lw;
    lw.desired_lane = 2;
    lw.undesired_lane = 0;
    lw.obstacle_rate = 0.0;
    EnvConfig cfg = lw;
    Trajectory t = replay(cfg, 4, {LaneWorld::lane_down, LaneWorld::idle, LaneWorld::lane_up, LaneWorld::lane_up});
    CHECK(score_trajectory(t, intent_from_env(cfg, IntentMode::mixed), cfg) == 2 - 1);
}

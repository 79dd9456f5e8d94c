#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dynfusion/common.hpp"

namespace dynfusion {

enum class EnvKind { grid_nav, lane_world };

std::string to_string(EnvKind kind);

struct Cell {
    int row = 0;
    int col = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Symbolic grid navigation: reach `target` from `start` within `max_steps`.
struct GridNavConfig {
    int width = 10;
    int height = 10;
    Cell start{5, 0};
    Cell target{5, 9};
    int max_steps = 20;
    std::vector<Cell> desired_cells;
    std::vector<Cell> undesired_cells;

    void validate() const;
    bool in_bounds(Cell c) const { return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width; }
    int index_of(Cell c) const { return c.row * width + c.col; }
    Cell cell_at(int index) const { return {index / width, index % width}; }
};

/// Multi-lane road with random obstacles ahead of the agent. Speed earns
/// reward; moving at speed into an occupied lane ends the episode.
struct LaneWorldConfig {
    int num_lanes = 4;
    int horizon = 50;
    int speed_levels = 3;
    double obstacle_rate = 0.15;
    int start_lane = 1;
    std::optional<int> desired_lane;
    std::optional<int> undesired_lane;

    void validate() const;
};

using EnvConfig = std::variant<GridNavConfig, LaneWorldConfig>;

EnvKind kind_of(const EnvConfig& config);
void validate(const EnvConfig& config);

/// `id` is the grid cell index (GridNav) or -1 (LaneWorld); `features` holds the
/// LaneWorld feature vector (normalised lane, speed, per-lane obstacle ahead).
struct Observation {
    int id = -1;
    std::vector<double> features;
    friend bool operator==(const Observation&, const Observation&) = default;
};

struct StepFlags {
    bool reached_target = false;
    bool visited_desired = false;
    bool visited_undesired = false;
    bool collision = false;
    friend bool operator==(const StepFlags&, const StepFlags&) = default;
};

struct Transition {
    Observation next_observation;
    double reward = 0.0;
    bool done = false;
    bool truncated = false;  // ended by the step cap, not by a terminal event
    StepFlags flags;
    int position = 0;        // region occupied after the transition
};

struct Step {
    int t = 0;
    Observation obs;
    int action = 0;
    double reward = 0.0;
    bool done = false;
    StepFlags flags;
    int position = 0;       // region before acting
    int next_position = 0;  // region after the transition
    friend bool operator==(const Step&, const Step&) = default;

    bool terminal() const { return done && (flags.reached_target || flags.collision); }
};

struct Trajectory {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<Step> steps;
    friend bool operator==(const Trajectory&, const Trajectory&) = default;

    std::size_t size() const { return steps.size(); }
};

class GridNav {
public:
    static constexpr int kActionCount = 4;
    enum Action : int { up = 0, down = 1, left = 2, right = 3 };

    explicit GridNav(GridNavConfig config);

    Observation reset(std::uint64_t seed);
    Transition step(int action);

    const GridNavConfig& config() const { return config_; }
    Cell position() const { return pos_; }
    bool done() const { return done_; }
    int elapsed() const { return t_; }

private:
    Observation observe() const { return {config_.index_of(pos_), {}}; }

    GridNavConfig config_;
    Cell pos_{};
    int t_ = 0;
    bool done_ = true;
};

class LaneWorld {
public:
    static constexpr int kActionCount = 5;
    enum Action : int { lane_up = 0, lane_down = 1, idle = 2, faster = 3, slower = 4 };

    explicit LaneWorld(LaneWorldConfig config);

    Observation reset(std::uint64_t seed);
    Transition step(int action);

    const LaneWorldConfig& config() const { return config_; }
    int lane() const { return lane_; }
    int speed() const { return speed_; }
    const std::vector<bool>& obstacles() const { return obstacles_; }
    bool done() const { return done_; }
    int elapsed() const { return t_; }
    std::size_t feature_dim() const { return 2 + static_cast<std::size_t>(config_.num_lanes); }

private:
    void draw_obstacles();
    Observation observe() const;

    LaneWorldConfig config_;
    Rng rng_;
    int lane_ = 0;
    int speed_ = 0;
    std::vector<bool> obstacles_;
    int t_ = 0;
    bool done_ = true;
};

/// Uniform reset/step facade over both environments.
class Env {
public:
    explicit Env(EnvConfig config);

    Observation reset(std::uint64_t seed);
    Transition step(int action);

    EnvKind kind() const { return kind_of(config_); }
    const EnvConfig& config() const { return config_; }
    const std::string& config_hash() const { return hash_; }
    int action_count() const;
    /// Number of distinct observation ids for tabular learners; 0 when continuous.
    std::size_t state_count() const;
    /// Number of distinct regions (cells or lanes) a visit can be counted in.
    int position_count() const;
    int position() const;
    bool done() const;

private:
    EnvConfig config_;
    std::string hash_;
    std::variant<GridNav, LaneWorld> impl_;
};

/// Describes how an observation becomes a dense feature vector: one-hot over
/// the grid cells, or the LaneWorld features as-is.
struct ObservationEncoding {
    EnvKind kind = EnvKind::grid_nav;
    std::size_t dim = 0;

    static ObservationEncoding for_config(const EnvConfig& config);
    void write(const Observation& obs, double* out) const;
    std::vector<double> features(const Observation& obs) const;
    friend bool operator==(const ObservationEncoding&, const ObservationEncoding&) = default;
};

struct EventCounts {
    int desired_visits = 0;
    int undesired_visits = 0;
    int collisions = 0;
    double task_score = 0.0;
};

EventCounts event_counts(const Trajectory& trajectory, const EnvConfig& config);

/// Re-executes the recorded actions from the trajectory's seed.
Trajectory replay(const EnvConfig& config, std::uint64_t seed, const std::vector<int>& actions);

int action_count(const EnvConfig& config);
int position_count(const EnvConfig& config);

}  // namespace dynfusion

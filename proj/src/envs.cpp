#include "dynfusion/envs.hpp"

#include <algorithm>
#include <string>

#include "dynfusion/serialization.hpp"

namespace dynfusion {

namespace {

std::string cell_str(Cell c) {
    return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
}

}  // namespace

std::string to_string(EnvKind kind) {
    return kind == EnvKind::grid_nav ? "grid_nav" : "lane_world";
}

void GridNavConfig::validate() const {
    if (width < 1 || height < 1) throw ConfigError("grid_nav: width and height must be >= 1");
    if (max_steps < 1) throw ConfigError("grid_nav: max_steps must be >= 1");
    if (!in_bounds(start)) throw ConfigError("grid_nav: start " + cell_str(start) + " out of bounds");
    if (!in_bounds(target)) throw ConfigError("grid_nav: target " + cell_str(target) + " out of bounds");
    if (start == target) throw ConfigError("grid_nav: start must differ from target");
    for (const Cell& c : desired_cells)
        if (!in_bounds(c)) throw ConfigError("grid_nav: desired cell " + cell_str(c) + " out of bounds");
    for (const Cell& c : undesired_cells)
        if (!in_bounds(c)) throw ConfigError("grid_nav: undesired cell " + cell_str(c) + " out of bounds");
}

void LaneWorldConfig::validate() const {
    if (num_lanes < 1) throw ConfigError("lane_world: num_lanes must be >= 1");
    if (horizon < 1) throw ConfigError("lane_world: horizon must be >= 1");
    if (speed_levels < 2) throw ConfigError("lane_world: speed_levels must be >= 2");
    if (!(obstacle_rate >= 0.0 && obstacle_rate <= 1.0))
        throw ConfigError("lane_world: obstacle_rate must lie in [0, 1]");
    if (start_lane < 0 || start_lane >= num_lanes) throw ConfigError("lane_world: start_lane out of range");
    if (desired_lane && (*desired_lane < 0 || *desired_lane >= num_lanes))
        throw ConfigError("lane_world: desired_lane out of range");
    if (undesired_lane && (*undesired_lane < 0 || *undesired_lane >= num_lanes))
        throw ConfigError("lane_world: undesired_lane out of range");
    if (desired_lane && undesired_lane && *desired_lane == *undesired_lane)
        throw ConfigError("lane_world: desired_lane must differ from undesired_lane");
}

EnvKind kind_of(const EnvConfig& config) {
    return std::holds_alternative<GridNavConfig>(config) ? EnvKind::grid_nav : EnvKind::lane_world;
}

void validate(const EnvConfig& config) {
    std::visit([](const auto& c) { c.validate(); }, config);
}

int action_count(const EnvConfig& config) {
    return kind_of(config) == EnvKind::grid_nav ? GridNav::kActionCount : LaneWorld::kActionCount;
}

int position_count(const EnvConfig& config) {
    if (const auto* g = std::get_if<GridNavConfig>(&config)) return g->width * g->height;
    return std::get<LaneWorldConfig>(config).num_lanes;
}

// ---------------------------------------------------------------- GridNav

GridNav::GridNav(GridNavConfig config) : config_(std::move(config)) {
    config_.validate();
}

Observation GridNav::reset(std::uint64_t /*seed*/) {
    pos_ = config_.start;
    t_ = 0;
    done_ = false;
    return observe();
}

Transition GridNav::step(int action) {
    if (action < 0 || action >= kActionCount)
        throw ArgumentError("grid_nav: action " + std::to_string(action) + " out of range [0, 4)");
    if (done_) throw StateError("grid_nav: step called on a terminated episode");

    Cell next = pos_;
    switch (action) {
        case up: --next.row; break;
        case down: ++next.row; break;
        case left: --next.col; break;
        case right: ++next.col; break;
    }
    // Moves that leave the grid are no-ops.
    if (config_.in_bounds(next)) pos_ = next;
    ++t_;

    Transition tr;
    tr.flags.reached_target = pos_ == config_.target;
    tr.flags.visited_desired =
        std::find(config_.desired_cells.begin(), config_.desired_cells.end(), pos_) != config_.desired_cells.end();
    tr.flags.visited_undesired =
        std::find(config_.undesired_cells.begin(), config_.undesired_cells.end(), pos_) !=
        config_.undesired_cells.end();
    tr.reward = tr.flags.reached_target ? 1.0 : 0.0;
    tr.truncated = !tr.flags.reached_target && t_ >= config_.max_steps;
    tr.done = tr.flags.reached_target || tr.truncated;
    tr.position = config_.index_of(pos_);
    tr.next_observation = observe();
    done_ = tr.done;
    return tr;
}

// -------------------------------------------------------------- LaneWorld

LaneWorld::LaneWorld(LaneWorldConfig config) : config_(std::move(config)) {
    config_.validate();
    obstacles_.assign(static_cast<std::size_t>(config_.num_lanes), false);
}

void LaneWorld::draw_obstacles() {
    for (std::size_t i = 0; i < obstacles_.size(); ++i) obstacles_[i] = uniform01(rng_) < config_.obstacle_rate;
}

Observation LaneWorld::observe() const {
    Observation obs;
    obs.features.reserve(feature_dim());
    const double lane_den = config_.num_lanes > 1 ? config_.num_lanes - 1 : 1;
    obs.features.push_back(lane_ / lane_den);
    obs.features.push_back(static_cast<double>(speed_) / (config_.speed_levels - 1));
    for (bool b : obstacles_) obs.features.push_back(b ? 1.0 : 0.0);
    return obs;
}

Observation LaneWorld::reset(std::uint64_t seed) {
    rng_.seed(derive_seed(seed, 0x1a9e));
    lane_ = config_.start_lane;
    speed_ = 0;
    t_ = 0;
    done_ = false;
    draw_obstacles();
    return observe();
}

Transition LaneWorld::step(int action) {
    if (action < 0 || action >= kActionCount)
        throw ArgumentError("lane_world: action " + std::to_string(action) + " out of range [0, 5)");
    if (done_) throw StateError("lane_world: step called on a terminated episode");

    switch (action) {
        case lane_up: lane_ = std::max(0, lane_ - 1); break;
        case lane_down: lane_ = std::min(config_.num_lanes - 1, lane_ + 1); break;
        case faster: speed_ = std::min(config_.speed_levels - 1, speed_ + 1); break;
        case slower: speed_ = std::max(0, speed_ - 1); break;
        default: break;
    }
    ++t_;

    Transition tr;
    tr.flags.collision = obstacles_[static_cast<std::size_t>(lane_)] && speed_ > 0;
    tr.flags.visited_desired = config_.desired_lane && *config_.desired_lane == lane_;
    tr.flags.visited_undesired = config_.undesired_lane && *config_.undesired_lane == lane_;
    tr.reward = tr.flags.collision ? 0.0 : static_cast<double>(speed_) / (config_.speed_levels - 1);
    tr.truncated = !tr.flags.collision && t_ >= config_.horizon;
    tr.done = tr.flags.collision || tr.truncated;
    tr.position = lane_;
    draw_obstacles();
    tr.next_observation = observe();
    done_ = tr.done;
    return tr;
}

// -------------------------------------------------------------------- Env

Env::Env(EnvConfig config)
    : config_(std::move(config)),
      hash_(dynfusion::config_hash(config_)),
      impl_(std::holds_alternative<GridNavConfig>(config_)
                ? std::variant<GridNav, LaneWorld>(GridNav(std::get<GridNavConfig>(config_)))
                : std::variant<GridNav, LaneWorld>(LaneWorld(std::get<LaneWorldConfig>(config_)))) {}

Observation Env::reset(std::uint64_t seed) {
    return std::visit([seed](auto& e) { return e.reset(seed); }, impl_);
}

Transition Env::step(int action) {
    return std::visit([action](auto& e) { return e.step(action); }, impl_);
}

int Env::action_count() const { return dynfusion::action_count(config_); }

std::size_t Env::state_count() const {
    if (const auto* g = std::get_if<GridNavConfig>(&config_)) return static_cast<std::size_t>(g->width * g->height);
    return 0;
}

int Env::position_count() const { return dynfusion::position_count(config_); }

int Env::position() const {
    if (const auto* g = std::get_if<GridNav>(&impl_)) return g->config().index_of(g->position());
    return std::get<LaneWorld>(impl_).lane();
}

bool Env::done() const {
    return std::visit([](const auto& e) { return e.done(); }, impl_);
}

// --------------------------------------------------------------- encoding

ObservationEncoding ObservationEncoding::for_config(const EnvConfig& config) {
    if (const auto* g = std::get_if<GridNavConfig>(&config))
        return {EnvKind::grid_nav, static_cast<std::size_t>(g->width * g->height)};
    return {EnvKind::lane_world, 2 + static_cast<std::size_t>(std::get<LaneWorldConfig>(config).num_lanes)};
}

void ObservationEncoding::write(const Observation& obs, double* out) const {
    if (kind == EnvKind::grid_nav) {
        if (obs.id < 0 || static_cast<std::size_t>(obs.id) >= dim)
            throw ArgumentError("observation id " + std::to_string(obs.id) + " incompatible with encoding");
        std::fill(out, out + dim, 0.0);
        out[obs.id] = 1.0;
        return;
    }
    if (obs.features.size() != dim)
        throw ArgumentError("observation has " + std::to_string(obs.features.size()) + " features, expected " +
                            std::to_string(dim));
    std::copy(obs.features.begin(), obs.features.end(), out);
}

std::vector<double> ObservationEncoding::features(const Observation& obs) const {
    std::vector<double> v(dim);
    write(obs, v.data());
    return v;
}

// ----------------------------------------------------------------- events

EventCounts event_counts(const Trajectory& trajectory, const EnvConfig& config) {
    if (trajectory.config_hash != config_hash(config))
        throw ArgumentError("event_counts: trajectory was generated by a different config");
    EventCounts counts;
    for (const Step& s : trajectory.steps) {
        counts.desired_visits += s.flags.visited_desired;
        counts.undesired_visits += s.flags.visited_undesired;
        counts.collisions += s.flags.collision;
        counts.task_score += s.reward;
    }
    return counts;
}

Trajectory replay(const EnvConfig& config, std::uint64_t seed, const std::vector<int>& actions) {
    Env env(config);
    Trajectory traj;
    traj.config_hash = env.config_hash();
    traj.seed = seed;
    Observation obs = env.reset(seed);
    for (int a : actions) {
        Step s;
        s.t = static_cast<int>(traj.steps.size());
        s.obs = std::move(obs);
        s.action = a;
        s.position = env.position();
        Transition tr = env.step(a);
        s.reward = tr.reward;
        s.done = tr.done;
        s.flags = tr.flags;
        s.next_position = tr.position;
        obs = std::move(tr.next_observation);
        traj.steps.push_back(std::move(s));
        if (tr.done) break;
    }
    return traj;
}

}  // namespace dynfusion

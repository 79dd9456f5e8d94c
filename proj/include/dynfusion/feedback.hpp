#pragma once

#include <string>
#include <vector>

#include "dynfusion/envs.hpp"
#include "dynfusion/task_learner.hpp"

namespace dynfusion {

enum class IntentMode { preference, avoidance, mixed };

std::string to_string(IntentMode mode);
IntentMode intent_mode_from_string(const std::string& name);

/// Simulated user intent. Regions are position ids: grid cell indices or lanes.
struct IntentSpec {
    IntentMode mode = IntentMode::preference;
    EnvKind env = EnvKind::grid_nav;
    int position_count = 0;
    std::vector<int> preferred;
    std::vector<int> avoided;
    /// Whether occupying a flagged region at reset counts as a visit.
    bool count_start = true;

    void validate() const;
    friend bool operator==(const IntentSpec&, const IntentSpec&) = default;
};

/// Builds the spec for `mode` from the flagged regions of an environment config.
IntentSpec intent_from_env(const EnvConfig& config, IntentMode mode);

struct ScoredTrajectory {
    Trajectory trajectory;
    int score = 0;
    std::string intent_hash;
    friend bool operator==(const ScoredTrajectory&, const ScoredTrajectory&) = default;
};

using ScoredTrajectorySet = std::vector<ScoredTrajectory>;

/// +1 per step spent in a preferred region, -1 per step in an avoided one.
int score_trajectory(const Trajectory& trajectory, const IntentSpec& spec, const EnvConfig& config);

ScoredTrajectorySet label_corpus(const TrajectorySet& set, const IntentSpec& spec, const EnvConfig& config);

double score_variance(const ScoredTrajectorySet& set);

}  // namespace dynfusion

#include "dynfusion/feedback.hpp"

#include <algorithm>

#include "dynfusion/serialization.hpp"

namespace dynfusion {

std::string to_string(IntentMode mode) {
    switch (mode) {
        case IntentMode::preference: return "preference";
        case IntentMode::avoidance: return "avoidance";
        case IntentMode::mixed: return "mixed";
    }
    return "?";
}

IntentMode intent_mode_from_string(const std::string& name) {
    if (name == "preference") return IntentMode::preference;
    if (name == "avoidance") return IntentMode::avoidance;
    if (name == "mixed") return IntentMode::mixed;
    throw ConfigError("unknown intent mode '" + name + "' (expected preference, avoidance or mixed)");
}

void IntentSpec::validate() const {
    const bool has_pref = !preferred.empty();
    const bool has_avoid = !avoided.empty();
    switch (mode) {
        case IntentMode::preference:
            if (!has_pref || has_avoid) throw ConfigError("intent: preference mode needs preferred regions only");
            break;
        case IntentMode::avoidance:
            if (has_pref || !has_avoid) throw ConfigError("intent: avoidance mode needs avoided regions only");
            break;
        case IntentMode::mixed:
            if (!has_pref || !has_avoid) throw ConfigError("intent: mixed mode needs preferred and avoided regions");
            break;
    }
    for (int p : preferred) {
        if (p < 0 || p >= position_count) throw ConfigError("intent: preferred region out of range");
        if (std::find(avoided.begin(), avoided.end(), p) != avoided.end())
            throw ConfigError("intent: preferred and avoided regions overlap");
    }
    for (int p : avoided)
        if (p < 0 || p >= position_count) throw ConfigError("intent: avoided region out of range");
}

IntentSpec intent_from_env(const EnvConfig& config, IntentMode mode) {
    IntentSpec spec;
    spec.mode = mode;
    spec.env = kind_of(config);
    spec.position_count = position_count(config);
    std::vector<int> desired, undesired;
    if (const auto* g = std::get_if<GridNavConfig>(&config)) {
        for (Cell c : g->desired_cells) desired.push_back(g->index_of(c));
        for (Cell c : g->undesired_cells) undesired.push_back(g->index_of(c));
    } else {
        const auto& lw = std::get<LaneWorldConfig>(config);
        if (lw.desired_lane) desired.push_back(*lw.desired_lane);
        if (lw.undesired_lane) undesired.push_back(*lw.undesired_lane);
    }
    if (mode != IntentMode::avoidance) spec.preferred = desired;
    if (mode != IntentMode::preference) spec.avoided = undesired;
    spec.validate();
    return spec;
}

int score_trajectory(const Trajectory& trajectory, const IntentSpec& spec, const EnvConfig& config) {
    if (spec.env != kind_of(config) || spec.position_count != position_count(config))
        throw ArgumentError("score_trajectory: intent spec and environment disagree");
    if (trajectory.config_hash != config_hash(config))
        throw ArgumentError("score_trajectory: trajectory was generated by a different config");
    auto value = [&](int pos) {
        if (std::find(spec.preferred.begin(), spec.preferred.end(), pos) != spec.preferred.end()) return 1;
        if (std::find(spec.avoided.begin(), spec.avoided.end(), pos) != spec.avoided.end()) return -1;
        return 0;
    };
    int score = 0;
    if (spec.count_start && !trajectory.steps.empty()) score += value(trajectory.steps.front().position);
    for (const Step& s : trajectory.steps) score += value(s.next_position);
    return score;
}

ScoredTrajectorySet label_corpus(const TrajectorySet& set, const IntentSpec& spec, const EnvConfig& config) {
    if (set.trajectories.empty()) throw DataError("label_corpus: empty trajectory set");
    const std::string hash = intent_hash(spec);
    ScoredTrajectorySet out;
    out.reserve(set.size());
    for (const Trajectory& t : set.trajectories) out.push_back({t, score_trajectory(t, spec, config), hash});
    return out;
}

double score_variance(const ScoredTrajectorySet& set) {
    if (set.empty()) return 0.0;
    double mean = 0.0;
    for (const auto& s : set) mean += s.score;
    mean /= static_cast<double>(set.size());
    double var = 0.0;
    for (const auto& s : set) var += (s.score - mean) * (s.score - mean);
    return var / static_cast<double>(set.size());
}

}  // namespace dynfusion

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynfusion/envs.hpp"
#include "dynfusion/feedback.hpp"
#include "dynfusion/intent_model.hpp"
#include "dynfusion/task_learner.hpp"

namespace dynfusion {

using Json = nlohmann::json;

// Config documents. Parsers throw ConfigError naming the offending field.
Json to_json(const EnvConfig& config);
EnvConfig env_config_from_json(const Json& j);

Json to_json(const LearnerConfig& config);
LearnerConfig learner_config_from_json(const Json& j, EnvKind kind);

Json to_json(const IntentSpec& spec);
/// Regions may be position ids or, for GridNav, [row, col] pairs.
IntentSpec intent_spec_from_json(const Json& j, const EnvConfig& env);

Json to_json(const IntentTrainConfig& config);
IntentTrainConfig intent_train_config_from_json(const Json& j);

// Hashes of the canonical (key-sorted, compact) JSON form.
std::string config_hash(const EnvConfig& config);
std::string learner_config_hash(const LearnerConfig& config);
std::string intent_hash(const IntentSpec& spec);

// Trajectory JSONL: a header line {config_hash, seed} followed by one line per
// step {t, obs, action, reward, done, flags, pos, next_pos}.
void write_trajectory(std::ostream& out, const Trajectory& trajectory);
void write_trajectory_set(std::ostream& out, const TrajectorySet& set);
TrajectorySet read_trajectory_set(std::istream& in);

/// Trajectory JSONL with a {score, intent_spec_hash} record after each trajectory.
void write_scored_set(std::ostream& out, const ScoredTrajectorySet& set);
ScoredTrajectorySet read_scored_set(std::istream& in);

Json to_json(const QFunction& q);
QFunction q_function_from_json(const Json& j);

Json to_json(const IntentModel& model);
IntentModel intent_model_from_json(const Json& j);

/// epoch, L_m, L_c, L_e, L_total for the training split, then the held-out total.
void write_loss_curve_csv(std::ostream& out, const std::vector<EpochLoss>& curve);

// File helpers. Missing or malformed input raises `ConfigError` for configs
// and `DataError` for artifacts.
std::string read_file(const std::filesystem::path& path);
Json read_json_config(const std::filesystem::path& path);
Json read_json_artifact(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace dynfusion

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dynfusion/envs.hpp"
#include "dynfusion/feedback.hpp"
#include "dynfusion/fusion.hpp"
#include "dynfusion/intent_model.hpp"
#include "dynfusion/serialization.hpp"
#include "dynfusion/task_learner.hpp"

namespace dynfusion {

enum class VariantTag { dqn, rudder, static_fusion, dynamic, morl };

std::string to_string(VariantTag tag);
/// Accepts dqn, rudder, static, dynamic, morl.
VariantTag variant_from_string(const std::string& name);
const std::vector<std::string>& variant_names();

struct MethodVariant {
    VariantTag tag = VariantTag::dqn;
    std::optional<FusionParams> fusion;  // static and dynamic
    std::optional<double> static_t_psi;  // static
    std::optional<double> alpha;         // morl: weight on the environment reward

    static MethodVariant dqn() { return {VariantTag::dqn, {}, {}, {}}; }
    static MethodVariant rudder() { return {VariantTag::rudder, {}, {}, {}}; }
    static MethodVariant static_fusion(FusionParams p, double t_psi) { return {VariantTag::static_fusion, p, t_psi, {}}; }
    static MethodVariant dynamic(FusionParams p) { return {VariantTag::dynamic, p, {}, {}}; }
    static MethodVariant morl(double alpha) { return {VariantTag::morl, {}, {}, alpha}; }

    void validate() const;
    std::string label() const;
};

struct Stat {
    double mean = 0.0;
    double stderr_ = 0.0;
    friend bool operator==(const Stat&, const Stat&) = default;
};

/// Per-episode means; the standard error is taken across seeds.
struct Metrics {
    Stat desired_visits;
    Stat undesired_visits;
    Stat hits;
    Stat score;
    int n_seeds = 0;
    int episodes_per_seed = 0;
    friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Models a variant may need; pointers are borrowed.
struct Artifacts {
    const QFunction* q_task = nullptr;
    const IntentModel* intent = nullptr;
    const QFunction* q_morl = nullptr;
};

/// One greedy episode of the variant's policy.
Trajectory rollout_variant(const MethodVariant& variant, const EnvConfig& env, const Artifacts& artifacts,
                           std::uint64_t seed);

/// Seed i uses base stream derive_seed(base_seed, i); episode k within it
/// resets with derive_seed(that, k).
Metrics evaluate(const MethodVariant& variant, const EnvConfig& env, const Artifacts& artifacts, int n_seeds,
                 int episodes_per_seed, std::uint64_t base_seed = 0);

/// r = alpha r_e + (1 - alpha) r_h.
double scalarize(double r_env, double r_human, double alpha);

/// Maps values linearly onto [-1, 1] using the corpus min and max; a constant
/// input maps to 0.
std::vector<std::vector<double>> normalize_human_rewards(const std::vector<std::vector<double>>& rewards);

/// Relabels the stored task-training transitions with the scalarised reward and
/// learns a fresh Q-function offline.
QFunction train_morl(const EnvConfig& env, const TrajectorySet& corpus, const IntentModel& intent, double alpha,
                     const LearnerConfig& config, std::uint64_t seed);

struct SweepRow {
    double value = 0.0;
    Metrics metrics;
};

std::vector<SweepRow> sweep_eta(const std::vector<double>& values, const FusionParams& base, const EnvConfig& env,
                                const Artifacts& artifacts, int n_seeds, int episodes_per_seed,
                                std::uint64_t base_seed = 0);
std::vector<SweepRow> sweep_tmax(const std::vector<double>& values, const FusionParams& base, const EnvConfig& env,
                                 const Artifacts& artifacts, int n_seeds, int episodes_per_seed,
                                 std::uint64_t base_seed = 0);

struct PitfallRecord {
    Metrics static_metrics;  // static fusion at T_psi = T_min
    Metrics dynamic_metrics;
};

PitfallRecord static_pitfall_check(const EnvConfig& env, const Artifacts& artifacts, const FusionParams& params,
                                   int n_seeds, int episodes_per_seed, std::uint64_t base_seed = 0);

struct ReportRow {
    std::string variant;
    std::string mode;
    std::string param;  // e.g. "eta=1", empty for plain evaluations
    Metrics metrics;
    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// CSV header: variant,mode,param,desired_mean,desired_se,undesired_mean,
/// undesired_se,hits_mean,hits_se,score_mean,score_se,n_seeds,episodes_per_seed
std::string report_csv(const std::vector<ReportRow>& rows);
Json report_json(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report_csv(const std::string& csv);
std::vector<ReportRow> parse_report_json(const Json& j);
/// Writes <stem>.csv and <stem>.json under `dir`.
void emit_report(const std::vector<ReportRow>& rows, const std::filesystem::path& dir, const std::string& stem);

struct SweepConfig {
    std::vector<double> eta;
    std::vector<double> t_max;
    std::vector<double> morl_human_weight;
};

/// One JSON experiment file drives a full run.
struct ExperimentConfig {
    EnvConfig env;
    LearnerConfig learner;
    LearnerConfig morl_learner;
    IntentTrainConfig intent_train;
    int intent_hidden = 64;
    int feedback_corpus_size = 2000;
    std::uint64_t seed = 1;
    int seeds = 10;
    int episodes = 50;
    FusionParams fusion;
    std::optional<double> static_t_psi;  // defaults to T_max / 2
    double morl_alpha = 0.5;
    std::vector<IntentMode> modes{IntentMode::preference, IntentMode::avoidance, IntentMode::mixed};
    std::vector<VariantTag> variants{VariantTag::dqn, VariantTag::rudder, VariantTag::static_fusion,
                                     VariantTag::dynamic, VariantTag::morl};
    SweepConfig sweeps;

    double static_temperature() const { return static_t_psi.value_or(fusion.t_max / 2.0); }
};

ExperimentConfig experiment_from_json(const Json& j);
Json to_json(const ExperimentConfig& config);
Json to_json(const FusionParams& params);
FusionParams fusion_params_from_json(const Json& j);

/// Per-stage seeds derived from the experiment seed.
struct StageSeeds {
    std::uint64_t task;
    std::uint64_t corpus;
    std::uint64_t intent;
    std::uint64_t morl;
    std::uint64_t eval;

    static StageSeeds from(std::uint64_t seed);
};

struct ModeArtifacts {
    IntentMode mode = IntentMode::preference;
    IntentSpec spec;
    ScoredTrajectorySet scored;
    TrainedIntent intent;
    std::optional<QFunction> q_morl;
};

struct ExperimentResult {
    TrainResult task;
    TrajectorySet feedback_corpus;
    std::vector<ModeArtifacts> modes;
    std::vector<ReportRow> main_rows;   // variant x mode
    std::vector<ReportRow> sweep_rows;  // eta, t_max, morl weight, static pitfall
};

/// Trains every artifact, evaluates every variant and mode, and runs the sweeps.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace dynfusion

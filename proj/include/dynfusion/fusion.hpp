#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dynfusion/envs.hpp"
#include "dynfusion/intent_model.hpp"
#include "dynfusion/task_learner.hpp"

namespace dynfusion {

using Distribution = std::vector<double>;

/// pi(a) = exp(q_a / T) / sum_b exp(q_b / T), evaluated with max-subtraction.
Distribution boltzmann(std::span<const double> q, double temperature);
/// log of the Boltzmann normaliser, log sum_a exp(q_a / T).
double log_partition(std::span<const double> q, double temperature);

struct SqrtFusion {
    Distribution policy;
    double z = 0.0;  // sum_a sqrt(p1(a) p2(a))
};

SqrtFusion fuse_sqrt_full(std::span<const double> p_task, std::span<const double> p_intent);
Distribution fuse_sqrt(std::span<const double> p_task, std::span<const double> p_intent);
Distribution fuse_product(std::span<const double> p1, std::span<const double> p2);
Distribution fuse_mixture(std::span<const double> p1, std::span<const double> p2);

/// Shannon entropy in nats, and the same divided by log |A|.
double entropy(std::span<const double> p);
double normalized_entropy(std::span<const double> p);

/// Greedy action of the intent policy when it is more certain (H_intent < H_task + eps),
/// otherwise of the task policy.
int fuse_entropy_threshold(std::span<const double> p_task, std::span<const double> p_intent, double eps);
/// argmax of H* p_task + (1 - H*) p_intent with H* the smaller normalised entropy.
int fuse_entropy_weighted(std::span<const double> p_task, std::span<const double> p_intent);

/// r' = r - mean(r).
std::vector<double> shift_rewards(std::span<const double> r);

struct FusionParams {
    double t_phi = 0.4;
    double t_min = 1.0;
    double t_max = 10.0;
    double eta = 0.0;
    double slope = 1.0;  // m

    void validate() const;
};

/// T_psi = max(T_min, T_max / (1 + exp(-m (g - eta)))).
double update_temperature(double g, const FusionParams& params);
/// Episode-start temperature, the schedule evaluated at g = 0.
double initial_temperature(const FusionParams& params);

/// Greedy action of sqrt(pi_phi pi_psi); ties go to the lowest index.
int select_action(std::span<const double> q_task, std::span<const double> q_intent, double t_phi, double t_psi);

struct FusionState {
    double g = 0.0;
    double t_psi = 0.0;

    static FusionState start(const FusionParams& params) { return {0.0, initial_temperature(params)}; }
};

/// T_psi is the temperature used to choose `action`; g is the value after accumulating it.
struct EpisodeStep {
    int t = 0;
    int action = 0;
    double g = 0.0;
    double t_psi = 0.0;
    double reward = 0.0;
    StepFlags flags;
    friend bool operator==(const EpisodeStep&, const EpisodeStep&) = default;
};

struct EpisodeRecord {
    std::uint64_t seed = 0;
    std::vector<EpisodeStep> steps;
    Trajectory trajectory;
    friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

/// Runs one greedy episode with dynamically fused action selection.
EpisodeRecord run_personalised_episode(const EnvConfig& env, const QFunction& q_task, const IntentModel& intent,
                                       const FusionParams& params, std::uint64_t seed);

}  // namespace dynfusion

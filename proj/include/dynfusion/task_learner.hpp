#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "dynfusion/envs.hpp"
#include "dynfusion/mlp.hpp"

namespace dynfusion {

struct LearnerConfig {
    int episodes = 5000;
    double learning_rate = 0.1;
    double discount = 0.95;
    double epsilon_start = 1.0;
    double epsilon_min = 0.10;
    double epsilon_decay = 0.995;
    int replay_capacity = 20000;
    int batch_size = 32;
    int target_sync_interval = 500;
    std::vector<int> hidden_layers{64, 64};

    /// Tabular defaults for GridNav, approximator defaults for LaneWorld.
    static LearnerConfig defaults_for(EnvKind kind);
    void validate() const;
};

/// epsilon_k = max(epsilon_min, epsilon_start * decay^k) for episode k.
double epsilon_at(const LearnerConfig& config, int episode);

/// Task Q-function: a dense (state, action) table or a small MLP over features.
class QFunction {
public:
    enum class Kind { tabular, approximator };

    QFunction() = default;
    static QFunction make_tabular(std::size_t state_count, int action_count);
    static QFunction make_approximator(Mlp net, ObservationEncoding encoding);

    std::vector<double> q_values(const Observation& obs) const;

    Kind kind() const { return kind_; }
    int action_count() const { return action_count_; }
    std::size_t state_count() const { return state_count_; }

    double& at(std::size_t state, int action) { return table_[state * action_count_ + action]; }
    double at(std::size_t state, int action) const { return table_[state * action_count_ + action]; }
    const std::vector<double>& table() const { return table_; }
    std::vector<double>& table() { return table_; }
    const Mlp& net() const { return net_; }
    Mlp& net() { return net_; }
    const ObservationEncoding& encoding() const { return encoding_; }

    friend bool operator==(const QFunction&, const QFunction&) = default;

private:
    Kind kind_ = Kind::tabular;
    int action_count_ = 0;
    std::size_t state_count_ = 0;
    std::vector<double> table_;
    Mlp net_;
    ObservationEncoding encoding_;
};

/// One-step Q-learning update on a tabular function.
void tabular_update(QFunction& q, int state, int action, double reward, int next_state, bool terminal,
                    double learning_rate, double discount);

struct TrajectorySet {
    std::vector<Trajectory> trajectories;
    std::string config_hash;
    std::string learner_hash;
    std::uint64_t seed = 0;
    std::uint64_t first_episode = 0;
    std::uint64_t last_episode = 0;

    std::size_t size() const { return trajectories.size(); }
    friend bool operator==(const TrajectorySet&, const TrajectorySet&) = default;
};

struct TrainResult {
    QFunction q;
    TrajectorySet corpus;
    bool converged = false;
    double greedy_success = 0.0;  // GridNav: fraction reaching target; LaneWorld: mean return / horizon
};

struct ReplayTransition {
    Observation obs;
    int action = 0;
    double reward = 0.0;
    Observation next_obs;
    bool terminal = false;
};

/// Fixed-capacity FIFO experience buffer with uniform sampling.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);
    void push(ReplayTransition t);
    std::vector<const ReplayTransition*> sample(std::size_t n, Rng& rng) const;
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const ReplayTransition& operator[](std::size_t i) const { return items_[i]; }

private:
    std::size_t capacity_;
    std::deque<ReplayTransition> items_;
};

/// DQN learner over an MLP with replay and a periodically synced target net.
class DqnLearner {
public:
    DqnLearner(const EnvConfig& env, const LearnerConfig& config, Rng& rng);

    /// One SGD step on a uniformly sampled minibatch of squared TD errors.
    double train_step(const ReplayBuffer& buffer, Rng& rng);
    void sync_target() { target_ = online_.net(); }

    const QFunction& online() const { return online_; }
    QFunction& online() { return online_; }
    const Mlp& target() const { return target_; }
    long long steps() const { return steps_; }

private:
    LearnerConfig config_;
    QFunction online_;
    Mlp target_;
    long long steps_ = 0;
};

/// Learns the task Q-function with epsilon-greedy exploration and returns every
/// training trajectory for later reuse.
TrainResult train_task(const EnvConfig& env, const LearnerConfig& config, std::uint64_t seed);

/// Learns a Q-function from fixed transitions without touching the environment.
/// Tabular: `config.episodes` shuffled sweeps; approximator: `episodes` x
/// (|data| / batch_size) minibatch steps.
QFunction train_offline(const EnvConfig& env, const std::vector<ReplayTransition>& data,
                        const LearnerConfig& config, std::uint64_t seed);

/// Greedy rollout of the task Q-function.
Trajectory greedy_rollout(const EnvConfig& env, const QFunction& q, std::uint64_t seed);

/// Uniform subsample without replacement, in a seed-determined order.
TrajectorySet sample_feedback_corpus(const TrajectorySet& set, std::size_t n, std::uint64_t seed);

}  // namespace dynfusion

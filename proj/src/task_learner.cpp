#include "dynfusion/task_learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dynfusion/serialization.hpp"

namespace dynfusion {

LearnerConfig LearnerConfig::defaults_for(EnvKind kind) {
    LearnerConfig c;
    if (kind == EnvKind::lane_world) {
        c.episodes = 1000;
        c.learning_rate = 1e-2;
    }
    return c;
}

void LearnerConfig::validate() const {
    if (episodes < 0) throw ConfigError("learner: episodes must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("learner: learning_rate must be > 0");
    if (!(discount >= 0.0 && discount <= 1.0)) throw ConfigError("learner: discount must lie in [0, 1]");
    if (!(epsilon_min >= 0.0 && epsilon_min <= epsilon_start && epsilon_start <= 1.0))
        throw ConfigError("learner: need 0 <= epsilon_min <= epsilon_start <= 1");
    if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw ConfigError("learner: epsilon_decay must lie in (0, 1]");
    if (replay_capacity < 1) throw ConfigError("learner: replay_capacity must be >= 1");
    if (batch_size < 1) throw ConfigError("learner: batch_size must be >= 1");
    if (target_sync_interval < 1) throw ConfigError("learner: target_sync_interval must be >= 1");
    for (int h : hidden_layers)
        if (h < 1) throw ConfigError("learner: hidden_layers entries must be >= 1");
}

double epsilon_at(const LearnerConfig& config, int episode) {
    return std::max(config.epsilon_min, config.epsilon_start * std::pow(config.epsilon_decay, episode));
}

// -------------------------------------------------------------- QFunction

QFunction QFunction::make_tabular(std::size_t state_count, int action_count) {
    if (state_count == 0 || action_count < 1) throw ArgumentError("qfunction: empty tabular shape");
    QFunction q;
    q.kind_ = Kind::tabular;
    q.state_count_ = state_count;
    q.action_count_ = action_count;
    q.table_.assign(state_count * static_cast<std::size_t>(action_count), 0.0);
    return q;
}

QFunction QFunction::make_approximator(Mlp net, ObservationEncoding encoding) {
    if (static_cast<std::size_t>(net.input_size()) != encoding.dim)
        throw ArgumentError("qfunction: network input does not match observation encoding");
    QFunction q;
    q.kind_ = Kind::approximator;
    q.action_count_ = net.output_size();
    q.net_ = std::move(net);
    q.encoding_ = encoding;
    return q;
}

std::vector<double> QFunction::q_values(const Observation& obs) const {
    if (kind_ == Kind::tabular) {
        if (obs.id < 0 || static_cast<std::size_t>(obs.id) >= state_count_)
            throw ArgumentError("q_values: observation id outside the table");
        const auto first = table_.begin() + static_cast<std::ptrdiff_t>(obs.id) * action_count_;
        return {first, first + action_count_};
    }
    Eigen::VectorXd x(static_cast<Eigen::Index>(encoding_.dim));
    encoding_.write(obs, x.data());
    const Eigen::VectorXd out = net_.forward_one(x);
    return {out.data(), out.data() + out.size()};
}

void tabular_update(QFunction& q, int state, int action, double reward, int next_state, bool terminal,
                    double learning_rate, double discount) {
    double target = reward;
    if (!terminal) {
        double best = q.at(static_cast<std::size_t>(next_state), 0);
        for (int b = 1; b < q.action_count(); ++b) best = std::max(best, q.at(static_cast<std::size_t>(next_state), b));
        target += discount * best;
    }
    double& v = q.at(static_cast<std::size_t>(state), action);
    v += learning_rate * (target - v);
}

// ----------------------------------------------------------- ReplayBuffer

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ArgumentError("replay buffer: capacity must be >= 1");
}

void ReplayBuffer::push(ReplayTransition t) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(t));
}

std::vector<const ReplayTransition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw StateError("replay buffer: sample from empty buffer");
    std::vector<const ReplayTransition*> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[uniform_index(rng, items_.size())]);
    return out;
}

// ------------------------------------------------------------- DqnLearner

DqnLearner::DqnLearner(const EnvConfig& env, const LearnerConfig& config, Rng& rng) : config_(config) {
    const ObservationEncoding enc = ObservationEncoding::for_config(env);
    std::vector<int> sizes{static_cast<int>(enc.dim)};
    sizes.insert(sizes.end(), config.hidden_layers.begin(), config.hidden_layers.end());
    sizes.push_back(action_count(env));
    online_ = QFunction::make_approximator(Mlp(sizes, rng), enc);
    target_ = online_.net();
}

namespace {

double minibatch_step(Mlp& online, const Mlp& target, const ObservationEncoding& enc,
                      const std::vector<const ReplayTransition*>& batch, double discount, double learning_rate) {
    const auto n = static_cast<Eigen::Index>(batch.size());
    const auto dim = static_cast<Eigen::Index>(enc.dim);
    Eigen::MatrixXd x(dim, n), xn(dim, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        enc.write(batch[static_cast<std::size_t>(i)]->obs, x.col(i).data());
        enc.write(batch[static_cast<std::size_t>(i)]->next_obs, xn.col(i).data());
    }
    Mlp::Cache cache;
    const Eigen::MatrixXd q = online.forward(x, &cache);
    const Eigen::MatrixXd qn = target.forward(xn);
    Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(q.rows(), n);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const ReplayTransition& t = *batch[static_cast<std::size_t>(i)];
        double y = t.reward;
        if (!t.terminal) y += discount * qn.col(i).maxCoeff();
        const double err = q(t.action, i) - y;
        loss += err * err;
        d_out(t.action, i) = 2.0 * err / static_cast<double>(n);
    }
    online.sgd_step(online.backward(cache, d_out), learning_rate);
    return loss / static_cast<double>(n);
}

// Unvisited tabular states are all-zero ties; breaking them uniformly keeps
// early greedy steps exploring instead of repeating action 0.
int argmax_random_ties(const std::vector<double>& q, Rng& rng) {
    const double top = *std::max_element(q.begin(), q.end());
    std::size_t ties = 0;
    for (double v : q) ties += v == top;
    std::size_t pick = ties > 1 ? uniform_index(rng, ties) : 0;
    for (std::size_t i = 0; i < q.size(); ++i)
        if (q[i] == top && pick-- == 0) return static_cast<int>(i);
    return 0;
}

ReplayTransition to_replay(const Step& s, const Observation& next_obs, double reward) {
    return {s.obs, s.action, reward, next_obs, s.terminal()};
}

}  // namespace

double DqnLearner::train_step(const ReplayBuffer& buffer, Rng& rng) {
    const auto batch = buffer.sample(static_cast<std::size_t>(config_.batch_size), rng);
    const double loss = minibatch_step(online_.net(), target_, online_.encoding(), batch, config_.discount,
                                       config_.learning_rate);
    ++steps_;
    if (steps_ % config_.target_sync_interval == 0) sync_target();
    return loss;
}

// ---------------------------------------------------------------- training

Trajectory greedy_rollout(const EnvConfig& env_config, const QFunction& q, std::uint64_t seed) {
    Env env(env_config);
    Trajectory traj;
    traj.config_hash = env.config_hash();
    traj.seed = seed;
    Observation obs = env.reset(seed);
    while (!env.done()) {
        Step s;
        s.t = static_cast<int>(traj.steps.size());
        s.position = env.position();
        s.action = static_cast<int>(argmax(q.q_values(obs)));
        Transition tr = env.step(s.action);
        s.obs = std::move(obs);
        s.reward = tr.reward;
        s.done = tr.done;
        s.flags = tr.flags;
        s.next_position = tr.position;
        obs = std::move(tr.next_observation);
        traj.steps.push_back(std::move(s));
    }
    return traj;
}

TrainResult train_task(const EnvConfig& env_config, const LearnerConfig& config, std::uint64_t seed) {
    validate(env_config);
    config.validate();
    Env env(env_config);
    Rng rng(derive_seed(seed, 1));
    const int actions = env.action_count();
    const bool tabular = env.kind() == EnvKind::grid_nav;

    std::optional<DqnLearner> dqn;
    QFunction tab;
    if (tabular) {
        tab = QFunction::make_tabular(env.state_count(), actions);
    } else {
        dqn.emplace(env_config, config, rng);
    }
    ReplayBuffer buffer(static_cast<std::size_t>(config.replay_capacity));

    TrainResult result;
    result.corpus.config_hash = env.config_hash();
    result.corpus.learner_hash = learner_config_hash(config);
    result.corpus.seed = seed;
    result.corpus.first_episode = 0;
    result.corpus.last_episode = config.episodes > 0 ? static_cast<std::uint64_t>(config.episodes - 1) : 0;
    result.corpus.trajectories.reserve(static_cast<std::size_t>(config.episodes));

    for (int k = 0; k < config.episodes; ++k) {
        const double eps = epsilon_at(config, k);
        const QFunction& q = tabular ? tab : dqn->online();
        Trajectory traj;
        traj.config_hash = env.config_hash();
        traj.seed = derive_seed(seed, 1000 + static_cast<std::uint64_t>(k));
        Observation obs = env.reset(traj.seed);
        while (!env.done()) {
            Step s;
            s.t = static_cast<int>(traj.steps.size());
            s.position = env.position();
            s.action = uniform01(rng) < eps ? static_cast<int>(uniform_index(rng, static_cast<std::size_t>(actions)))
                                            : argmax_random_ties(q.q_values(obs), rng);
            Transition tr = env.step(s.action);
            s.obs = std::move(obs);
            s.reward = tr.reward;
            s.done = tr.done;
            s.flags = tr.flags;
            s.next_position = tr.position;
            if (tabular) {
                tabular_update(tab, s.obs.id, s.action, s.reward, tr.next_observation.id, s.terminal(),
                               config.learning_rate, config.discount);
            } else {
                buffer.push(to_replay(s, tr.next_observation, s.reward));
                if (buffer.size() >= static_cast<std::size_t>(config.batch_size)) dqn->train_step(buffer, rng);
            }
            obs = std::move(tr.next_observation);
            traj.steps.push_back(std::move(s));
        }
        result.corpus.trajectories.push_back(std::move(traj));
    }

    result.q = tabular ? std::move(tab) : dqn->online();
    if (tabular) {
        const Trajectory t = greedy_rollout(env_config, result.q, derive_seed(seed, 2));
        result.greedy_success = !t.steps.empty() && t.steps.back().flags.reached_target ? 1.0 : 0.0;
        result.converged = result.greedy_success == 1.0;
    } else {
        const auto& lw = std::get<LaneWorldConfig>(env_config);
        double total = 0.0;
        constexpr int kEvalEpisodes = 20;
        for (int i = 0; i < kEvalEpisodes; ++i) {
            const Trajectory t = greedy_rollout(env_config, result.q, derive_seed(seed, 3 + i));
            for (const Step& s : t.steps) total += s.reward;
        }
        result.greedy_success = total / (kEvalEpisodes * lw.horizon);
        result.converged = result.greedy_success >= 0.6;
    }
    return result;
}

QFunction train_offline(const EnvConfig& env_config, const std::vector<ReplayTransition>& data,
                        const LearnerConfig& config, std::uint64_t seed) {
    validate(env_config);
    config.validate();
    if (data.empty()) throw DataError("train_offline: no transitions");
    Rng rng(derive_seed(seed, 11));
    if (kind_of(env_config) == EnvKind::grid_nav) {
        const auto& g = std::get<GridNavConfig>(env_config);
        QFunction q = QFunction::make_tabular(static_cast<std::size_t>(g.width * g.height), GridNav::kActionCount);
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), 0);
        for (int sweep = 0; sweep < config.episodes; ++sweep) {
            for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
            for (std::size_t i : order) {
                const ReplayTransition& t = data[i];
                tabular_update(q, t.obs.id, t.action, t.reward, t.next_obs.id, t.terminal, config.learning_rate,
                               config.discount);
            }
        }
        return q;
    }
    DqnLearner learner(env_config, config, rng);
    ReplayBuffer buffer(data.size());
    for (const ReplayTransition& t : data) buffer.push(t);
    const long long steps_per_sweep =
        static_cast<long long>((data.size() + static_cast<std::size_t>(config.batch_size) - 1) /
                               static_cast<std::size_t>(config.batch_size));
    for (long long i = 0; i < steps_per_sweep * config.episodes; ++i) learner.train_step(buffer, rng);
    return learner.online();
}

TrajectorySet sample_feedback_corpus(const TrajectorySet& set, std::size_t n, std::uint64_t seed) {
    if (n > set.size())
        throw ArgumentError("sample_feedback_corpus: requested " + std::to_string(n) + " of " +
                            std::to_string(set.size()) + " trajectories");
    Rng rng(derive_seed(seed, 21));
    std::vector<std::size_t> idx(set.size());
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates: the first n slots become the sample.
    for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
    TrajectorySet out = set;
    out.trajectories.clear();
    out.trajectories.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.trajectories.push_back(set.trajectories[idx[i]]);
    return out;
}

}  // namespace dynfusion

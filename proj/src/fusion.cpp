#include "dynfusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dynfusion {

namespace {

void check_finite(std::span<const double> q, const char* what) {
    if (q.empty()) throw ArgumentError(std::string(what) + ": empty vector");
    for (double v : q)
        if (!std::isfinite(v)) throw ArgumentError(std::string(what) + ": non-finite value");
}

void check_pair(std::span<const double> p1, std::span<const double> p2, const char* what) {
    if (p1.empty() || p1.size() != p2.size()) throw ArgumentError(std::string(what) + ": length mismatch");
    for (std::size_t i = 0; i < p1.size(); ++i)
        if (!(p1[i] > 0.0) || !(p2[i] > 0.0) || !std::isfinite(p1[i]) || !std::isfinite(p2[i]))
            throw ArgumentError(std::string(what) + ": distributions need full support");
}

Distribution normalize(std::vector<double> w) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= total;
    return w;
}

}  // namespace

double log_partition(std::span<const double> q, double temperature) {
    if (!(temperature > 0.0)) throw ArgumentError("boltzmann: temperature must be > 0");
    check_finite(q, "boltzmann");
    const double top = *std::max_element(q.begin(), q.end());
    double s = 0.0;
    for (double v : q) s += std::exp((v - top) / temperature);
    return top / temperature + std::log(s);
}

Distribution boltzmann(std::span<const double> q, double temperature) {
    if (!(temperature > 0.0)) throw ArgumentError("boltzmann: temperature must be > 0");
    check_finite(q, "boltzmann");
    const double top = *std::max_element(q.begin(), q.end());
    std::vector<double> w(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) w[i] = std::exp((q[i] - top) / temperature);
    return normalize(std::move(w));
}

SqrtFusion fuse_sqrt_full(std::span<const double> p_task, std::span<const double> p_intent) {
    check_pair(p_task, p_intent, "fuse_sqrt");
    std::vector<double> w(p_task.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sqrt(p_task[i] * p_intent[i]);
    const double z = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= z;
    return {std::move(w), z};
}

Distribution fuse_sqrt(std::span<const double> p_task, std::span<const double> p_intent) {
    return fuse_sqrt_full(p_task, p_intent).policy;
}

Distribution fuse_product(std::span<const double> p1, std::span<const double> p2) {
    check_pair(p1, p2, "fuse_product");
    std::vector<double> w(p1.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = p1[i] * p2[i];
    return normalize(std::move(w));
}

Distribution fuse_mixture(std::span<const double> p1, std::span<const double> p2) {
    check_pair(p1, p2, "fuse_mixture");
    std::vector<double> w(p1.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 * (p1[i] + p2[i]);
    return w;
}

double entropy(std::span<const double> p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

double normalized_entropy(std::span<const double> p) {
    if (p.size() < 2) return 0.0;
    return entropy(p) / std::log(static_cast<double>(p.size()));
}

int fuse_entropy_threshold(std::span<const double> p_task, std::span<const double> p_intent, double eps) {
    check_pair(p_task, p_intent, "fuse_entropy_threshold");
    if (!(eps > 0.0)) throw ArgumentError("fuse_entropy_threshold: eps must be > 0");
    const bool intent_leads = entropy(p_intent) < entropy(p_task) + eps;
    return static_cast<int>(argmax(intent_leads ? p_intent : p_task));
}

int fuse_entropy_weighted(std::span<const double> p_task, std::span<const double> p_intent) {
    check_pair(p_task, p_intent, "fuse_entropy_weighted");
    const double h = std::min(normalized_entropy(p_intent), normalized_entropy(p_task));
    std::vector<double> mix(p_task.size());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = h * p_task[i] + (1.0 - h) * p_intent[i];
    return static_cast<int>(argmax(mix));
}

std::vector<double> shift_rewards(std::span<const double> r) {
    if (r.empty()) throw ArgumentError("shift_rewards: empty vector");
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    std::vector<double> out(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i] - mean;
    return out;
}

void FusionParams::validate() const {
    if (!(t_phi > 0.0)) throw ConfigError("fusion: t_phi must be > 0");
    if (!(t_min > 0.0)) throw ConfigError("fusion: t_min must be > 0");
    if (!(t_max >= t_min)) throw ConfigError("fusion: t_max must be >= t_min");
    if (!(slope > 0.0)) throw ConfigError("fusion: slope must be > 0");
    if (!std::isfinite(eta)) throw ConfigError("fusion: eta must be finite");
}

double update_temperature(double g, const FusionParams& params) {
    return std::max(params.t_min, params.t_max / (1.0 + std::exp(-params.slope * (g - params.eta))));
}

double initial_temperature(const FusionParams& params) {
    return std::max(params.t_min, params.t_max / (1.0 + std::exp(params.slope * params.eta)));
}

int select_action(std::span<const double> q_task, std::span<const double> q_intent, double t_phi, double t_psi) {
    if (q_task.size() != q_intent.size()) throw ArgumentError("select_action: length mismatch");
    if (!(t_phi > 0.0) || !(t_psi > 0.0)) throw ArgumentError("select_action: temperatures must be > 0");
    check_finite(q_task, "select_action");
    check_finite(q_intent, "select_action");
    // log of the unnormalised fused weight, up to a shared constant.
    std::vector<double> score(q_task.size());
    for (std::size_t i = 0; i < score.size(); ++i) score[i] = q_task[i] / t_phi + q_intent[i] / t_psi;
    return static_cast<int>(argmax(score));
}

EpisodeRecord run_personalised_episode(const EnvConfig& env_config, const QFunction& q_task,
                                       const IntentModel& intent, const FusionParams& params, std::uint64_t seed) {
    params.validate();
    Env env(env_config);
    if (q_task.action_count() != env.action_count() || intent.action_count() != env.action_count() ||
        !(intent.encoding() == ObservationEncoding::for_config(env_config)))
        throw ArgumentError("run_personalised_episode: models are bound to a different environment");

    EpisodeRecord record;
    record.seed = seed;
    record.trajectory.config_hash = env.config_hash();
    record.trajectory.seed = seed;

    FusionState state = FusionState::start(params);
    IntentModel::State history = intent.initial_state();
    Observation obs = env.reset(seed);
    for (int t = 0; !env.done(); ++t) {
        const std::vector<double> qt = q_task.q_values(obs);
        // Per-candidate rewards share the subtrahend Q~_{t-1}, which shifting removes.
        const std::vector<double> qi = intent.per_action_q(history, obs);
        const int action = select_action(qt, qi, params.t_phi, state.t_psi);
        const std::vector<double> shifted = shift_rewards(qi);
        const double used_t_psi = state.t_psi;
        state.g += shifted[static_cast<std::size_t>(action)];
        state.t_psi = update_temperature(state.g, params);
        history = intent.advance(history, obs, action);

        Step s;
        s.t = t;
        s.obs = obs;
        s.action = action;
        s.position = env.position();
        Transition tr = env.step(action);
        s.reward = tr.reward;
        s.done = tr.done;
        s.flags = tr.flags;
        s.next_position = tr.position;
        record.steps.push_back({t, action, state.g, used_t_psi, tr.reward, tr.flags});
        record.trajectory.steps.push_back(std::move(s));
        obs = std::move(tr.next_observation);
    }
    return record;
}

}  // namespace dynfusion

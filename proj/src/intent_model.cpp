#include "dynfusion/intent_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/SparseCore>

namespace dynfusion {

// ------------------------------------------------------------- LstmParams

LstmParams::LstmParams(int input_size, int hidden_size)
    : w_gate(Eigen::MatrixXd::Zero(hidden_size, input_size)),
      r_gate(Eigen::MatrixXd::Zero(hidden_size, hidden_size)),
      b_gate(Eigen::VectorXd::Zero(hidden_size)),
      w_cell(Eigen::MatrixXd::Zero(hidden_size, input_size)),
      r_cell(Eigen::MatrixXd::Zero(hidden_size, hidden_size)),
      b_cell(Eigen::VectorXd::Zero(hidden_size)),
      w_q(Eigen::VectorXd::Zero(hidden_size)),
      b_q(Eigen::VectorXd::Zero(1)),
      w_beta(Eigen::VectorXd::Zero(hidden_size)),
      b_beta(Eigen::VectorXd::Zero(1)) {}

std::size_t LstmParams::parameter_count() const {
    std::size_t n = 0;
    for_each([&](const char*, std::span<const double> s) { n += s.size(); });
    return n;
}

std::vector<double> LstmParams::flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for_each([&](const char*, std::span<const double> s) { out.insert(out.end(), s.begin(), s.end()); });
    return out;
}

void LstmParams::unflatten(std::span<const double> values) {
    if (values.size() != parameter_count()) throw ArgumentError("lstm: flat parameter size mismatch");
    std::size_t off = 0;
    for_each([&](const char*, std::span<double> s) {
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(off), s.size(), s.begin());
        off += s.size();
    });
}

void LstmParams::set_zero() {
    for_each([](const char*, std::span<double> s) { std::fill(s.begin(), s.end(), 0.0); });
}

bool LstmParams::all_finite() const {
    bool ok = true;
    for_each([&](const char*, std::span<const double> s) {
        for (double v : s) ok = ok && std::isfinite(v);
    });
    return ok;
}

void IntentTrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("intent train: learning_rate must be > 0");
    if (!(weight_decay >= 0.0)) throw ConfigError("intent train: weight_decay must be >= 0");
    if (!(gradient_clip > 0.0)) throw ConfigError("intent train: gradient_clip must be > 0");
    if (epochs < 1) throw ConfigError("intent train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("intent train: batch_size must be >= 1");
    if (patience < 1) throw ConfigError("intent train: patience must be >= 1");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw ConfigError("intent train: validation_fraction must lie in [0, 1)");
}

// ------------------------------------------------------------------ losses

LossTerms loss_terms(std::span<const double> q, std::span<const double> beta, double label, int lookahead) {
    if (q.empty() || q.size() != beta.size()) throw ArgumentError("loss: output sequences must be nonempty and equal");
    const std::size_t last = q.size() - 1;
    LossTerms l;
    l.main = (label - q[last]) * (label - q[last]);
    for (double v : q) l.continuous += (label - v) * (label - v);
    l.continuous /= static_cast<double>(q.size());
    const auto d = static_cast<std::size_t>(lookahead);
    if (last >= d) {
        for (std::size_t t = 0; t + d <= last; ++t) {
            const double e = q[t + d] - beta[t];
            l.lookahead += e * e;
        }
        l.lookahead /= static_cast<double>(last - d + 1);
    }
    l.total = l.main + 0.1 * (l.continuous + l.lookahead);
    return l;
}

// ------------------------------------------------------------- IntentModel

struct IntentModel::Trace {
    Eigen::MatrixXd gate;  // i_t, one column per step
    Eigen::MatrixXd cell;  // z_t
    Eigen::MatrixXd c;     // c_t == h_t
    std::vector<double> q, beta;
};

IntentModel::IntentModel(ObservationEncoding encoding, int action_count, int hidden_size, int lookahead)
    : encoding_(encoding), action_count_(action_count), hidden_(hidden_size), lookahead_(lookahead) {
    if (action_count < 1 || hidden_size < 1 || lookahead < 0) throw ArgumentError("intent model: bad shape");
    params_ = LstmParams(static_cast<int>(input_size()), hidden_size);
}

void IntentModel::randomize(Rng& rng, double scale) {
    const double in_bound = scale / std::sqrt(static_cast<double>(input_size()));
    const double rec_bound = scale / std::sqrt(static_cast<double>(hidden_));
    auto fill = [&](Eigen::Ref<Eigen::MatrixXd> m, double bound) {
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = uniform(rng, -bound, bound);
    };
    fill(params_.w_gate, in_bound);
    fill(params_.r_gate, rec_bound);
    fill(params_.w_cell, in_bound);
    fill(params_.r_cell, rec_bound);
    fill(params_.w_q, rec_bound);
    fill(params_.w_beta, rec_bound);
    params_.b_gate.setZero();
    params_.b_cell.setZero();
    params_.b_q.setZero();
    params_.b_beta.setZero();
}

void IntentModel::encode_step_into(const Observation& obs, int action, double* out) const {
    if (action < 0 || action >= action_count_)
        throw ArgumentError("encode_step: action " + std::to_string(action) + " out of range");
    encoding_.write(obs, out);
    std::fill(out + encoding_.dim, out + input_size(), 0.0);
    out[encoding_.dim + static_cast<std::size_t>(action)] = 1.0;
}

std::vector<double> IntentModel::encode_step(const Observation& obs, int action) const {
    std::vector<double> v(input_size());
    encode_step_into(obs, action, v.data());
    return v;
}

Eigen::MatrixXd IntentModel::encode(const Trajectory& trajectory) const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(input_size()), static_cast<Eigen::Index>(trajectory.size()));
    for (std::size_t t = 0; t < trajectory.size(); ++t)
        encode_step_into(trajectory.steps[t].obs, trajectory.steps[t].action, x.col(static_cast<Eigen::Index>(t)).data());
    return x;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void IntentModel::run(const Eigen::MatrixXd& inputs, Trace& tr) const {
    if (inputs.cols() == 0) throw ArgumentError("intent model: empty trajectory");
    if (inputs.rows() != static_cast<Eigen::Index>(input_size())) throw ArgumentError("intent model: bad input size");
    const Eigen::Index steps = inputs.cols();
    // Non-recurrent parts for all steps at once; grid inputs are one-hot, so sparse products pay off.
    const Eigen::SparseMatrix<double> x = inputs.sparseView();
    Eigen::MatrixXd a_gate = (params_.w_gate * x).colwise() + params_.b_gate;
    Eigen::MatrixXd a_cell = (params_.w_cell * x).colwise() + params_.b_cell;
    tr.gate.resize(hidden_, steps);
    tr.cell.resize(hidden_, steps);
    tr.c.resize(hidden_, steps);
    tr.q.resize(static_cast<std::size_t>(steps));
    tr.beta.resize(static_cast<std::size_t>(steps));
    Eigen::VectorXd c = Eigen::VectorXd::Zero(hidden_);
    for (Eigen::Index t = 0; t < steps; ++t) {
        if (t > 0) {
            a_gate.col(t).noalias() += params_.r_gate * c;
            a_cell.col(t).noalias() += params_.r_cell * c;
        }
        for (Eigen::Index k = 0; k < hidden_; ++k) {
            const double i = sigmoid(a_gate(k, t));
            const double z = std::tanh(a_cell(k, t));
            tr.gate(k, t) = i;
            tr.cell(k, t) = z;
            c(k) += i * z;
        }
        tr.c.col(t) = c;
        tr.q[static_cast<std::size_t>(t)] = params_.w_q.dot(c) + params_.b_q(0);
        tr.beta[static_cast<std::size_t>(t)] = params_.w_beta.dot(c) + params_.b_beta(0);
    }
}

IntentModel::Output IntentModel::forward(const Eigen::MatrixXd& inputs) const {
    Trace tr;
    run(inputs, tr);
    return {std::move(tr.q), std::move(tr.beta)};
}

IntentModel::Output IntentModel::forward(const Trajectory& trajectory) const {
    if (trajectory.steps.empty()) throw ArgumentError("intent model: empty trajectory");
    return forward(encode(trajectory));
}

IntentModel::State IntentModel::initial_state() const {
    return {Eigen::VectorXd::Zero(hidden_), Eigen::VectorXd::Zero(hidden_)};
}

IntentModel::State IntentModel::advance(const State& state, const Eigen::VectorXd& x, double* q_tilde) const {
    const Eigen::VectorXd a_gate = params_.w_gate * x + params_.r_gate * state.h + params_.b_gate;
    const Eigen::VectorXd a_cell = params_.w_cell * x + params_.r_cell * state.h + params_.b_cell;
    State next;
    next.c = state.c;
    for (Eigen::Index k = 0; k < hidden_; ++k) next.c(k) += sigmoid(a_gate(k)) * std::tanh(a_cell(k));
    next.h = next.c;
    if (q_tilde) *q_tilde = params_.w_q.dot(next.h) + params_.b_q(0);
    return next;
}

IntentModel::State IntentModel::advance(const State& state, const Observation& obs, int action,
                                        double* q_tilde) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(input_size()));
    encode_step_into(obs, action, x.data());
    return advance(state, x, q_tilde);
}

std::vector<double> IntentModel::per_action_q(const State& history, const Observation& obs) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(input_size()));
    encode_step_into(obs, 0, x.data());
    // Shared parts: observation features and the recurrent contribution.
    x(static_cast<Eigen::Index>(encoding_.dim)) = 0.0;
    const Eigen::VectorXd base_gate = params_.w_gate * x + params_.r_gate * history.h + params_.b_gate;
    const Eigen::VectorXd base_cell = params_.w_cell * x + params_.r_cell * history.h + params_.b_cell;
    std::vector<double> out(static_cast<std::size_t>(action_count_));
    for (int a = 0; a < action_count_; ++a) {
        const Eigen::Index col = static_cast<Eigen::Index>(encoding_.dim) + a;
        double q = params_.b_q(0);
        for (Eigen::Index k = 0; k < hidden_; ++k) {
            const double i = sigmoid(base_gate(k) + params_.w_gate(k, col));
            const double z = std::tanh(base_cell(k) + params_.w_cell(k, col));
            q += params_.w_q(k) * (history.c(k) + i * z);
        }
        out[static_cast<std::size_t>(a)] = q;
    }
    return out;
}

LossTerms IntentModel::loss(const Eigen::MatrixXd& inputs, double label) const {
    const Output out = forward(inputs);
    return loss_terms(out.q_tilde, out.beta, label, lookahead_);
}

LossTerms IntentModel::loss(const ScoredTrajectory& scored) const {
    return loss(encode(scored.trajectory), static_cast<double>(scored.score));
}

LossTerms IntentModel::loss_and_gradient(const Eigen::MatrixXd& inputs, double label, LstmParams& grad,
                                         double weight) const {
    Trace tr;
    run(inputs, tr);
    const LossTerms terms = loss_terms(tr.q, tr.beta, label, lookahead_);

    const Eigen::Index steps = inputs.cols();
    const Eigen::Index last = steps - 1;
    std::vector<double> dq(static_cast<std::size_t>(steps), 0.0), dbeta(static_cast<std::size_t>(steps), 0.0);
    dq[static_cast<std::size_t>(last)] += -2.0 * (label - tr.q[static_cast<std::size_t>(last)]);
    const double c_scale = 0.1 * 2.0 / static_cast<double>(steps);
    for (Eigen::Index t = 0; t < steps; ++t) dq[static_cast<std::size_t>(t)] += -c_scale * (label - tr.q[static_cast<std::size_t>(t)]);
    if (last >= lookahead_) {
        const double e_scale = 0.1 * 2.0 / static_cast<double>(last - lookahead_ + 1);
        for (Eigen::Index t = 0; t + lookahead_ <= last; ++t) {
            const auto ti = static_cast<std::size_t>(t);
            const auto td = static_cast<std::size_t>(t + lookahead_);
            const double e = tr.q[td] - tr.beta[ti];
            dq[td] += e_scale * e;
            dbeta[ti] -= e_scale * e;
        }
    }
    for (auto& v : dq) v *= weight;
    for (auto& v : dbeta) v *= weight;

    const Eigen::Map<const Eigen::VectorXd> dq_vec(dq.data(), steps);
    const Eigen::Map<const Eigen::VectorXd> dbeta_vec(dbeta.data(), steps);
    grad.w_q.noalias() += tr.c * dq_vec;
    grad.b_q(0) += dq_vec.sum();
    grad.w_beta.noalias() += tr.c * dbeta_vec;
    grad.b_beta(0) += dbeta_vec.sum();

    Eigen::MatrixXd da_gate(hidden_, steps), da_cell(hidden_, steps);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(hidden_);
    Eigen::VectorXd dh_rec = Eigen::VectorXd::Zero(hidden_);
    for (Eigen::Index t = last; t >= 0; --t) {
        const auto ti = static_cast<std::size_t>(t);
        // h_t = c_t, and c_{t+1} = c_t + ..., so both paths add directly.
        Eigen::VectorXd dc = dq[ti] * params_.w_q + dbeta[ti] * params_.w_beta + dh_rec + dc_next;
        for (Eigen::Index k = 0; k < hidden_; ++k) {
            const double i = tr.gate(k, t);
            const double z = tr.cell(k, t);
            da_gate(k, t) = dc(k) * z * i * (1.0 - i);
            da_cell(k, t) = dc(k) * i * (1.0 - z * z);
        }
        dc_next = dc;
        if (t > 0) {
            dh_rec.noalias() = params_.r_gate.transpose() * da_gate.col(t);
            dh_rec.noalias() += params_.r_cell.transpose() * da_cell.col(t);
        }
    }
    const Eigen::SparseMatrix<double> xt = inputs.sparseView().transpose();
    grad.w_gate += da_gate * xt;
    grad.w_cell += da_cell * xt;
    grad.b_gate += da_gate.rowwise().sum();
    grad.b_cell += da_cell.rowwise().sum();
    if (steps > 1) {
        // Step t reads h_{t-1}; step 0 reads the zero state.
        grad.r_gate.noalias() += da_gate.rightCols(steps - 1) * tr.c.leftCols(steps - 1).transpose();
        grad.r_cell.noalias() += da_cell.rightCols(steps - 1) * tr.c.leftCols(steps - 1).transpose();
    }
    return terms;
}

// ----------------------------------------------------------- redistribution

std::vector<double> redistribute(std::span<const double> q_tilde) {
    std::vector<double> r(q_tilde.size());
    double prev = 0.0;
    for (std::size_t t = 0; t < q_tilde.size(); ++t) {
        r[t] = q_tilde[t] - prev;
        prev = q_tilde[t];
    }
    return r;
}

std::vector<double> redistribute(const IntentModel& model, const Trajectory& trajectory) {
    return redistribute(model.forward(trajectory).q_tilde);
}

// ----------------------------------------------------------------- training

namespace {

struct Adam {
    std::vector<double> m, v;
    long long t = 0;

    explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    void step(std::vector<double>& theta, const std::vector<double>& g, const IntentTrainConfig& cfg) {
        ++t;
        const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
            v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
            theta[i] -= cfg.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam_epsilon);
        }
    }
};

LossTerms mean_loss(const IntentModel& model, const std::vector<Eigen::MatrixXd>& inputs,
                    const std::vector<double>& labels, const std::vector<std::size_t>& idx) {
    LossTerms acc;
    for (std::size_t i : idx) {
        const LossTerms l = model.loss(inputs[i], labels[i]);
        acc.main += l.main;
        acc.continuous += l.continuous;
        acc.lookahead += l.lookahead;
        acc.total += l.total;
    }
    const double n = idx.empty() ? 1.0 : static_cast<double>(idx.size());
    acc.main /= n;
    acc.continuous /= n;
    acc.lookahead /= n;
    acc.total /= n;
    return acc;
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

}  // namespace

TrainedIntent train_intent(const EnvConfig& env, const ScoredTrajectorySet& scored, const IntentTrainConfig& config,
                           std::uint64_t seed, int hidden_size, int lookahead) {
    config.validate();
    if (scored.empty()) throw DataError("train_intent: empty scored corpus");
    const double variance = score_variance(scored);
    if (!(variance > 0.0)) throw DataError("train_intent: labels have zero variance");

    Rng rng(derive_seed(seed, 31));
    IntentModel model(ObservationEncoding::for_config(env), action_count(env), hidden_size, lookahead);
    model.randomize(rng, 1.0);

    std::vector<Eigen::MatrixXd> inputs;
    std::vector<double> labels;
    inputs.reserve(scored.size());
    for (const auto& s : scored) {
        if (s.trajectory.steps.empty()) throw DataError("train_intent: empty trajectory in corpus");
        inputs.push_back(model.encode(s.trajectory));
        labels.push_back(static_cast<double>(s.score));
    }

    std::vector<std::size_t> order(scored.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(order.size())));
    if (n_val >= order.size()) n_val = 0;
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

    double label_mean = 0.0;
    for (std::size_t i : train) label_mean += labels[i];
    label_mean /= static_cast<double>(train.size());
    model.params().b_q(0) = label_mean;
    model.params().b_beta(0) = label_mean;

    std::vector<double> theta = model.params().flatten();
    Adam adam(theta.size());
    LstmParams grad = model.params();

    TrainedIntent result;
    result.label_variance = variance;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_theta = theta;
    int stale = 0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle(train, rng);
        // Training loss is averaged over the epoch's minibatches, before each update.
        LossTerms running;
        for (std::size_t start = 0; start < train.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(train.size(), start + static_cast<std::size_t>(config.batch_size));
            grad.set_zero();
            const double w = 1.0 / static_cast<double>(end - start);
            for (std::size_t k = start; k < end; ++k) {
                const LossTerms l = model.loss_and_gradient(inputs[train[k]], labels[train[k]], grad, w);
                running.main += l.main;
                running.continuous += l.continuous;
                running.lookahead += l.lookahead;
                running.total += l.total;
            }
            std::vector<double> g = grad.flatten();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += config.weight_decay * theta[i];
            double norm = 0.0;
            for (double v : g) norm += v * v;
            norm = std::sqrt(norm);
            if (norm > config.gradient_clip)
                for (double& v : g) v *= config.gradient_clip / norm;
            adam.step(theta, g, config);
            model.params().unflatten(theta);
        }
        EpochLoss el;
        el.epoch = epoch;
        const double n_train = static_cast<double>(train.size());
        el.train = {running.main / n_train, running.continuous / n_train, running.lookahead / n_train,
                    running.total / n_train};
        el.heldout = val.empty() ? el.train : mean_loss(model, inputs, labels, val);
        result.curve.push_back(el);
        const double monitored = el.heldout.total;
        if (monitored < best) {
            best = monitored;
            best_theta = theta;
            result.best_epoch = epoch;
            result.heldout = el.heldout;
            stale = 0;
        } else if (++stale >= config.patience) {
            break;
        }
    }
    model.params().unflatten(best_theta);
    result.model = std::move(model);
    return result;
}

// ----------------------------------------------------------- gradient check

double gradient_check(const IntentModel& model, const ScoredTrajectory& scored, double epsilon,
                      const std::function<void(LstmParams&)>& tamper) {
    const Eigen::MatrixXd x = model.encode(scored.trajectory);
    const double label = static_cast<double>(scored.score);
    LstmParams grad = model.params();
    grad.set_zero();
    model.loss_and_gradient(x, label, grad);
    if (tamper) tamper(grad);
    const std::vector<double> analytic = grad.flatten();

    IntentModel probe = model;
    std::vector<double> theta = model.params().flatten();
    double worst = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double saved = theta[i];
        theta[i] = saved + epsilon;
        probe.params().unflatten(theta);
        const double up = probe.loss(x, label).total;
        theta[i] = saved - epsilon;
        probe.params().unflatten(theta);
        const double down = probe.loss(x, label).total;
        theta[i] = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        // Floor keeps parameters with (near-)zero gradient from dividing by zero.
        const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
    }
    return worst;
}

}  // namespace dynfusion

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dynfusion/envs.hpp"
#include "dynfusion/feedback.hpp"

namespace dynfusion {

/// Trainable tensors of the credit-assignment LSTM. The forget and output
/// gates are fixed open, so only the input gate and the cell input carry
/// weights: c_t = c_{t-1} + i_t * z_t, h_t = c_t.
struct LstmParams {
    Eigen::MatrixXd w_gate, r_gate;  // input gate: input and recurrent weights
    Eigen::VectorXd b_gate;
    Eigen::MatrixXd w_cell, r_cell;  // cell input
    Eigen::VectorXd b_cell;
    Eigen::VectorXd w_q;             // main head, Q~_t = w_q . h_t + b_q
    Eigen::VectorXd b_q;             // size 1
    Eigen::VectorXd w_beta;          // lookahead head, predicts Q~_{t+delta}
    Eigen::VectorXd b_beta;          // size 1

    LstmParams() = default;
    LstmParams(int input_size, int hidden_size);

    /// Calls f(name, span) for every tensor in a fixed order.
    template <typename F>
    void for_each(F&& f) {
        f("w_gate", std::span<double>(w_gate.data(), static_cast<std::size_t>(w_gate.size())));
        f("r_gate", std::span<double>(r_gate.data(), static_cast<std::size_t>(r_gate.size())));
        f("b_gate", std::span<double>(b_gate.data(), static_cast<std::size_t>(b_gate.size())));
        f("w_cell", std::span<double>(w_cell.data(), static_cast<std::size_t>(w_cell.size())));
        f("r_cell", std::span<double>(r_cell.data(), static_cast<std::size_t>(r_cell.size())));
        f("b_cell", std::span<double>(b_cell.data(), static_cast<std::size_t>(b_cell.size())));
        f("w_q", std::span<double>(w_q.data(), static_cast<std::size_t>(w_q.size())));
        f("b_q", std::span<double>(b_q.data(), static_cast<std::size_t>(b_q.size())));
        f("w_beta", std::span<double>(w_beta.data(), static_cast<std::size_t>(w_beta.size())));
        f("b_beta", std::span<double>(b_beta.data(), static_cast<std::size_t>(b_beta.size())));
    }
    template <typename F>
    void for_each(F&& f) const {
        const_cast<LstmParams*>(this)->for_each([&](const char* name, std::span<double> s) {
            f(name, std::span<const double>(s.data(), s.size()));
        });
    }

    std::size_t parameter_count() const;
    std::vector<double> flatten() const;
    void unflatten(std::span<const double> values);
    void set_zero();
    bool all_finite() const;

    friend bool operator==(const LstmParams& a, const LstmParams& b) { return a.flatten() == b.flatten(); }
};

struct IntentTrainConfig {
    double learning_rate = 1e-4;
    double weight_decay = 1e-8;
    double gradient_clip = 10.0;  // global L2 norm
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int epochs = 200;             // upper bound; early stopping may end sooner
    int batch_size = 32;
    int patience = 10;            // epochs without held-out improvement
    double validation_fraction = 0.1;

    void validate() const;
};

struct LossTerms {
    double main = 0.0;        // (l - Q~_H)^2
    double continuous = 0.0;  // mean over t of (l - Q~_t)^2
    double lookahead = 0.0;   // mean over t of (Q~_{t+delta} - beta_t)^2, 0 when H < delta
    double total = 0.0;       // main + (continuous + lookahead) / 10
};

/// The loss formulas applied to given output sequences.
LossTerms loss_terms(std::span<const double> q_tilde, std::span<const double> beta, double label, int lookahead);

class IntentModel {
public:
    struct Output {
        std::vector<double> q_tilde;
        std::vector<double> beta;
    };

    struct State {
        Eigen::VectorXd h;
        Eigen::VectorXd c;
    };

    IntentModel() = default;
    /// Zero-initialised model.
    IntentModel(ObservationEncoding encoding, int action_count, int hidden_size = 64, int lookahead = 3);

    /// Small random weights; heads start near zero.
    void randomize(Rng& rng, double scale = 1.0);

    std::size_t input_size() const { return encoding_.dim + static_cast<std::size_t>(action_count_); }
    int hidden_size() const { return hidden_; }
    int lookahead() const { return lookahead_; }
    int action_count() const { return action_count_; }
    const ObservationEncoding& encoding() const { return encoding_; }

    /// Observation features followed by a one-hot action.
    std::vector<double> encode_step(const Observation& obs, int action) const;
    void encode_step_into(const Observation& obs, int action, double* out) const;
    /// One column per step.
    Eigen::MatrixXd encode(const Trajectory& trajectory) const;

    Output forward(const Trajectory& trajectory) const;
    Output forward(const Eigen::MatrixXd& inputs) const;

    State initial_state() const;
    /// Feeds one encoded step; returns the new state and writes Q~ for that step.
    State advance(const State& state, const Eigen::VectorXd& input, double* q_tilde = nullptr) const;
    State advance(const State& state, const Observation& obs, int action, double* q_tilde = nullptr) const;
    /// Q~ at the current step for every candidate action, sharing `history`.
    std::vector<double> per_action_q(const State& history, const Observation& obs) const;

    LossTerms loss(const ScoredTrajectory& scored) const;
    LossTerms loss(const Eigen::MatrixXd& inputs, double label) const;
    /// Loss plus its gradient by backpropagation through time; gradients are
    /// accumulated into `grad` scaled by `weight`.
    LossTerms loss_and_gradient(const Eigen::MatrixXd& inputs, double label, LstmParams& grad,
                                double weight = 1.0) const;

    LstmParams& params() { return params_; }
    const LstmParams& params() const { return params_; }

    friend bool operator==(const IntentModel&, const IntentModel&) = default;

private:
    struct Trace;
    void run(const Eigen::MatrixXd& inputs, Trace& trace) const;

    ObservationEncoding encoding_;
    int action_count_ = 0;
    int hidden_ = 0;
    int lookahead_ = 3;
    LstmParams params_;
};

/// Per-step human-induced reward: r_t = Q~_t - Q~_{t-1} with Q~_{-1} = 0.
std::vector<double> redistribute(const IntentModel& model, const Trajectory& trajectory);
std::vector<double> redistribute(std::span<const double> q_tilde);

struct EpochLoss {
    int epoch = 0;
    LossTerms train;
    LossTerms heldout;
};

struct TrainedIntent {
    IntentModel model;
    std::vector<EpochLoss> curve;
    LossTerms heldout;       // at the selected epoch
    double label_variance = 0.0;
    int best_epoch = 0;
};

/// Fits the LSTM to trajectory scores with Adam, L2 weight decay and global
/// gradient-norm clipping; keeps the parameters with the best held-out loss.
TrainedIntent train_intent(const EnvConfig& env, const ScoredTrajectorySet& scored,
                           const IntentTrainConfig& config, std::uint64_t seed, int hidden_size = 64,
                           int lookahead = 3);

/// Maximum relative error between BPTT and central finite differences of the
/// total loss over every parameter. `tamper` may alter the analytic gradient
/// before comparison (used to confirm the check detects faults).
double gradient_check(const IntentModel& model, const ScoredTrajectory& scored, double epsilon = 1e-5,
                      const std::function<void(LstmParams&)>& tamper = {});

}  // namespace dynfusion

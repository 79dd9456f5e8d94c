#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dynfusion/common.hpp"

namespace dynfusion {

/// Fully connected network with ReLU hidden layers and a linear output layer.
/// Batches are column-major: one sample per column.
class Mlp {
public:
    struct Gradients {
        std::vector<Eigen::MatrixXd> weights;
        std::vector<Eigen::VectorXd> biases;
    };

    struct Cache {
        std::vector<Eigen::MatrixXd> activations;  // input, then each post-ReLU hidden layer
        std::vector<Eigen::MatrixXd> pre;          // pre-activations of every layer
    };

    Mlp() = default;
    /// He-uniform initialisation; `sizes` = {input, hidden..., output}.
    Mlp(const std::vector<int>& sizes, Rng& rng);

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;
    Eigen::VectorXd forward_one(const Eigen::VectorXd& x) const;
    /// Backpropagates dLoss/dOutput through a cached forward pass.
    Gradients backward(const Cache& cache, const Eigen::MatrixXd& d_out) const;
    void sgd_step(const Gradients& g, double learning_rate);

    std::vector<int> sizes() const;
    int input_size() const { return weights.empty() ? 0 : static_cast<int>(weights.front().cols()); }
    int output_size() const { return weights.empty() ? 0 : static_cast<int>(weights.back().rows()); }

    friend bool operator==(const Mlp& a, const Mlp& b) {
        return a.weights == b.weights && a.biases == b.biases;
    }

    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

}  // namespace dynfusion

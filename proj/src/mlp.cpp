#include "dynfusion/mlp.hpp"

#include <cmath>

namespace dynfusion {

Mlp::Mlp(const std::vector<int>& sizes, Rng& rng) {
    if (sizes.size() < 2) throw ArgumentError("mlp: need at least input and output sizes");
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int in = sizes[l];
        const int out = sizes[l + 1];
        if (in < 1 || out < 1) throw ArgumentError("mlp: layer sizes must be positive");
        const double bound = std::sqrt(6.0 / in);
        Eigen::MatrixXd w(out, in);
        for (int c = 0; c < in; ++c)
            for (int r = 0; r < out; ++r) w(r, c) = uniform(rng, -bound, bound);
        weights.push_back(std::move(w));
        biases.push_back(Eigen::VectorXd::Zero(out));
    }
    // Small output layer keeps initial Q estimates near zero.
    weights.back() *= 0.1;
}

std::vector<int> Mlp::sizes() const {
    std::vector<int> s;
    if (weights.empty()) return s;
    s.push_back(static_cast<int>(weights.front().cols()));
    for (const auto& w : weights) s.push_back(static_cast<int>(w.rows()));
    return s;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache* cache) const {
    if (x.rows() != input_size()) throw ArgumentError("mlp: input has wrong dimension");
    Eigen::MatrixXd a = x;
    if (cache) {
        cache->activations.clear();
        cache->pre.clear();
        cache->activations.push_back(a);
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
        Eigen::MatrixXd z = (weights[l] * a).colwise() + biases[l];
        const bool last = l + 1 == weights.size();
        if (cache) cache->pre.push_back(z);
        a = last ? z : Eigen::MatrixXd(z.cwiseMax(0.0));
        if (cache && !last) cache->activations.push_back(a);
    }
    return a;
}

Eigen::VectorXd Mlp::forward_one(const Eigen::VectorXd& x) const {
    return forward(Eigen::MatrixXd(x)).col(0);
}

Mlp::Gradients Mlp::backward(const Cache& cache, const Eigen::MatrixXd& d_out) const {
    Gradients g;
    g.weights.resize(weights.size());
    g.biases.resize(weights.size());
    Eigen::MatrixXd delta = d_out;
    for (std::size_t l = weights.size(); l-- > 0;) {
        g.weights[l] = delta * cache.activations[l].transpose();
        g.biases[l] = delta.rowwise().sum();
        if (l == 0) break;
        delta = (weights[l].transpose() * delta).cwiseProduct(
            (cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
    return g;
}

void Mlp::sgd_step(const Gradients& g, double learning_rate) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        weights[l] -= learning_rate * g.weights[l];
        biases[l] -= learning_rate * g.biases[l];
    }
}

}  // namespace dynfusion

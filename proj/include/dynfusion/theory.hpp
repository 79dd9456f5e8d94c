#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynfusion/common.hpp"

namespace dynfusion {

/// KL(p || q) in nats.
double kl(std::span<const double> p, std::span<const double> q);

struct BoundSample {
    std::vector<double> q_task;
    std::vector<double> q_intent;
    double t_phi = 1.0;
    double t_psi = 1.0;

    double epsilon() const;  // max_a |Q(a) - Q'(a)|
    double delta() const;    // |T_psi - T_phi|
    double q_star() const;   // max_a Q(a)
    double log_zeta() const; // log h(Q', T_psi) - log h(Q, T_phi)
};

/// |A| in [2, 8], values in [-5, 5], temperatures in [0.1, 10].
BoundSample random_bound_sample(Rng& rng);

/// Stated: the inequalities exactly as written. Corrected: max|Q| replaces Q*,
/// and the product bound gains the entropy of the task policy.
enum class BoundForm { stated, corrected };

struct BoundTerms {
    double lhs = 0.0;
    double rhs = 0.0;
    double margin() const { return rhs - lhs; }
};

/// KL(pi_phi || sqrt fusion) against log Z + ((Q* delta + eps T_phi) / (T_phi T_psi) + log zeta) / 2.
BoundTerms theorem1_terms(const BoundSample& s, BoundForm form = BoundForm::stated);
double theorem1_rhs(const BoundSample& s);
/// KL(pi_phi || product fusion) against log Z + (Q* delta + eps T_phi) / (T_phi T_psi) + log zeta.
BoundTerms appendix_e_terms(const BoundSample& s, BoundForm form = BoundForm::stated);

struct VerifyReport {
    std::string theorem;
    std::size_t samples = 0;
    std::size_t violations = 0;
    double min_margin = 0.0;
    std::uint64_t seed = 0;
    std::optional<BoundSample> worst;  // sample with the smallest margin

    bool passed() const { return violations == 0; }
};

constexpr double kBoundTolerance = 1e-9;

VerifyReport verify_theorem1(std::size_t n, std::uint64_t seed, BoundForm form = BoundForm::stated);
VerifyReport verify_appendix_e(std::size_t n, std::uint64_t seed, BoundForm form = BoundForm::stated);
/// KL(p || sqrt fusion of p with itself) < 1e-9 on random Boltzmann distributions.
VerifyReport verify_lemma1(std::size_t n, std::uint64_t seed);

struct Lemma2Result {
    double kl = 0.0;  // log Z - sum_a p_task log p_intent, Z = sum_a p_task p_intent
    bool is_uniform_intent = false;
};

Lemma2Result verify_lemma2(std::span<const double> p_task, std::span<const double> p_intent);
/// n random pairs with p_intent at least 1e-3 from uniform (KL must be > 0),
/// plus each p_task against the uniform intent (KL must be < 1e-9).
VerifyReport verify_lemma2_suite(std::size_t n, std::uint64_t seed);

/// Random full-support distribution of size n, uniform over the simplex.
std::vector<double> random_distribution(Rng& rng, std::size_t n);

}  // namespace dynfusion

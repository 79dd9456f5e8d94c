#include "dynfusion/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynfusion/fusion.hpp"

namespace dynfusion {

double kl(std::span<const double> p, std::span<const double> q) {
    if (p.empty() || p.size() != q.size()) throw ArgumentError("kl: length mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(q[i] > 0.0)) throw ArgumentError("kl: q needs full support");
        if (p[i] > 0.0) d += p[i] * std::log(p[i] / q[i]);
    }
    return d;
}

double BoundSample::epsilon() const {
    double e = 0.0;
    for (std::size_t i = 0; i < q_task.size(); ++i) e = std::max(e, std::abs(q_task[i] - q_intent[i]));
    return e;
}

double BoundSample::delta() const { return std::abs(t_psi - t_phi); }

double BoundSample::q_star() const { return *std::max_element(q_task.begin(), q_task.end()); }

double BoundSample::log_zeta() const { return log_partition(q_intent, t_psi) - log_partition(q_task, t_phi); }

BoundSample random_bound_sample(Rng& rng) {
    BoundSample s;
    const std::size_t n = 2 + uniform_index(rng, 7);
    s.q_task.resize(n);
    s.q_intent.resize(n);
    for (double& v : s.q_task) v = uniform(rng, -5.0, 5.0);
    for (double& v : s.q_intent) v = uniform(rng, -5.0, 5.0);
    s.t_phi = uniform(rng, 0.1, 10.0);
    s.t_psi = uniform(rng, 0.1, 10.0);
    return s;
}

namespace {

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double temperature_term(const BoundSample& s, BoundForm form) {
    const double q = form == BoundForm::stated ? s.q_star() : max_abs(s.q_task);
    return (q * s.delta() + s.epsilon() * s.t_phi) / (s.t_phi * s.t_psi);
}

template <typename Terms>
VerifyReport sweep(const char* name, std::size_t n, std::uint64_t seed, Terms terms) {
    VerifyReport r;
    r.theorem = name;
    r.samples = n;
    r.seed = seed;
    r.min_margin = std::numeric_limits<double>::infinity();
    Rng rng(derive_seed(seed, 0x7e0));
    for (std::size_t i = 0; i < n; ++i) {
        const BoundSample s = random_bound_sample(rng);
        const double margin = terms(s).margin();
        if (margin < -kBoundTolerance) ++r.violations;
        if (margin < r.min_margin) {
            r.min_margin = margin;
            r.worst = s;
        }
    }
    return r;
}

}  // namespace

BoundTerms theorem1_terms(const BoundSample& s, BoundForm form) {
    const Distribution p_task = boltzmann(s.q_task, s.t_phi);
    const Distribution p_intent = boltzmann(s.q_intent, s.t_psi);
    const SqrtFusion fused = fuse_sqrt_full(p_task, p_intent);
    BoundTerms t;
    t.lhs = kl(p_task, fused.policy);
    t.rhs = std::log(fused.z) + 0.5 * temperature_term(s, form) + 0.5 * s.log_zeta();
    return t;
}

double theorem1_rhs(const BoundSample& s) { return theorem1_terms(s).rhs; }

BoundTerms appendix_e_terms(const BoundSample& s, BoundForm form) {
    const Distribution p_task = boltzmann(s.q_task, s.t_phi);
    const Distribution p_intent = boltzmann(s.q_intent, s.t_psi);
    double z = 0.0;
    for (std::size_t i = 0; i < p_task.size(); ++i) z += p_task[i] * p_intent[i];
    BoundTerms t;
    t.lhs = kl(p_task, fuse_product(p_task, p_intent));
    t.rhs = std::log(z) + temperature_term(s, form) + s.log_zeta();
    if (form == BoundForm::corrected) t.rhs += entropy(p_task);
    return t;
}

VerifyReport verify_theorem1(std::size_t n, std::uint64_t seed, BoundForm form) {
    return sweep(form == BoundForm::stated ? "theorem1" : "theorem1_corrected", n, seed,
                 [form](const BoundSample& s) { return theorem1_terms(s, form); });
}

VerifyReport verify_appendix_e(std::size_t n, std::uint64_t seed, BoundForm form) {
    return sweep(form == BoundForm::stated ? "appendixE" : "appendixE_corrected", n, seed,
                 [form](const BoundSample& s) { return appendix_e_terms(s, form); });
}

std::vector<double> random_distribution(Rng& rng, std::size_t n) {
    // Exponential weights give a uniform draw from the simplex.
    std::vector<double> p(n);
    double total = 0.0;
    for (double& v : p) {
        v = -std::log(1.0 - uniform01(rng));
        total += v;
    }
    for (double& v : p) v /= total;
    return p;
}

VerifyReport verify_lemma1(std::size_t n, std::uint64_t seed) {
    VerifyReport r;
    r.theorem = "lemma1";
    r.samples = n;
    r.seed = seed;
    r.min_margin = std::numeric_limits<double>::infinity();
    Rng rng(derive_seed(seed, 0x7e1));
    for (std::size_t i = 0; i < n; ++i) {
        const Distribution p = random_distribution(rng, 2 + uniform_index(rng, 7));
        const double margin = kBoundTolerance - kl(p, fuse_sqrt(p, p));
        if (margin <= 0.0) ++r.violations;
        r.min_margin = std::min(r.min_margin, margin);
    }
    return r;
}

Lemma2Result verify_lemma2(std::span<const double> p_task, std::span<const double> p_intent) {
    if (p_task.empty() || p_task.size() != p_intent.size()) throw ArgumentError("lemma2: length mismatch");
    double z = 0.0, cross = 0.0, dist = 0.0;
    const double u = 1.0 / static_cast<double>(p_intent.size());
    for (std::size_t i = 0; i < p_task.size(); ++i) {
        if (!(p_intent[i] > 0.0)) throw ArgumentError("lemma2: p_intent needs full support");
        z += p_task[i] * p_intent[i];
        cross += p_task[i] * std::log(p_intent[i]);
        dist = std::max(dist, std::abs(p_intent[i] - u));
    }
    return {std::log(z) - cross, dist < 1e-12};
}

VerifyReport verify_lemma2_suite(std::size_t n, std::uint64_t seed) {
    VerifyReport r;
    r.theorem = "lemma2";
    r.samples = n;
    r.seed = seed;
    r.min_margin = std::numeric_limits<double>::infinity();
    Rng rng(derive_seed(seed, 0x7e2));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t size = 2 + uniform_index(rng, 7);
        const Distribution p_task = random_distribution(rng, size);
        Distribution p_intent;
        double dist = 0.0;
        do {
            p_intent = random_distribution(rng, size);
            dist = 0.0;
            for (double v : p_intent) dist = std::max(dist, std::abs(v - 1.0 / static_cast<double>(size)));
        } while (dist < 1e-3);
        const double nonuniform = verify_lemma2(p_task, p_intent).kl;
        const Distribution uniform_intent(size, 1.0 / static_cast<double>(size));
        const double at_uniform = verify_lemma2(p_task, uniform_intent).kl;
        if (!(nonuniform > 0.0)) ++r.violations;
        if (!(std::abs(at_uniform) < kBoundTolerance)) ++r.violations;
        r.min_margin = std::min({r.min_margin, nonuniform, kBoundTolerance - std::abs(at_uniform)});
    }
    return r;
}

}  // namespace dynfusion

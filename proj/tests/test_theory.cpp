#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dynfusion/fusion.hpp"
#include "dynfusion/theory.hpp"

using namespace dynfusion;

namespace {

double kl_direct(const std::vector<double>& p, const std::vector<double>& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * std::log(p[i] / q[i]);
    return s;
}

double log_sum_exp_over(const std::vector<double>& q, double t) {
    double s = 0.0;
    for (double v : q) s += std::exp(v / t);
    return std::log(s);
}

}  // namespace

TEST_CASE("kl divergence") {
    std::vector<double> p{0.5, 0.5}, q{0.9, 0.1};
    CHECK(kl(p, q) == doctest::Approx(kl_direct(p, q)));
    CHECK(kl(p, p) == 0.0);
}

TEST_CASE("bound sample statistics") {
    BoundSample s{{1.0, -2.0, 0.5}, {0.0, -1.0, 2.0}, 0.4, 2.0};
    CHECK(s.epsilon() == doctest::Approx(1.5));
    CHECK(s.delta() == doctest::Approx(1.6));
    CHECK(s.q_star() == doctest::Approx(1.0));
    CHECK(s.log_zeta() == doctest::Approx(log_sum_exp_over(s.q_intent, 2.0) - log_sum_exp_over(s.q_task, 0.4)));
}

TEST_CASE("sqrt-fusion bound terms recomputed from their definitions") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        BoundSample s = random_bound_sample(rng);
        auto p = boltzmann(s.q_task, s.t_phi);
        auto pi = boltzmann(s.q_intent, s.t_psi);
        double z = 0.0;
        for (std::size_t a = 0; a < p.size(); ++a) z += std::sqrt(p[a] * pi[a]);
        std::vector<double> f(p.size());
        for (std::size_t a = 0; a < p.size(); ++a) f[a] = std::sqrt(p[a] * pi[a]) / z;
        BoundTerms b = theorem1_terms(s);
        CHECK(b.lhs == doctest::Approx(kl_direct(p, f)).epsilon(1e-10));
        const double rhs = std::log(z) +
                           0.5 * ((s.q_star() * s.delta() + s.epsilon() * s.t_phi) / (s.t_phi * s.t_psi) + s.log_zeta());
        CHECK(b.rhs == doctest::Approx(rhs).epsilon(1e-10));
        CHECK(theorem1_rhs(s) == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("stated sqrt bound breaks for negative values with T_psi below T_phi") {
    BoundSample s{{-5.0, -5.0}, {-5.0, -5.0}, 2.0, 1.0};
    BoundTerms b = theorem1_terms(s, BoundForm::stated);
    CHECK(b.lhs == doctest::Approx(0.0));
    CHECK(b.margin() < 0.0);
    CHECK(theorem1_terms(s, BoundForm::corrected).margin() >= 0.0);
}

TEST_CASE("corrected bounds hold on random samples") {
    CHECK(verify_theorem1(2000, 1, BoundForm::corrected).passed());
    CHECK(verify_appendix_e(2000, 1, BoundForm::corrected).passed());
}

TEST_CASE("suite reports are seed-determined") {
    VerifyReport a = verify_theorem1(500, 4);
    VerifyReport b = verify_theorem1(500, 4);
    CHECK(a.violations == b.violations);
    CHECK(a.min_margin == b.min_margin);
    CHECK(a.samples == 500);
}

TEST_CASE("lemma 1: fusing a policy with itself returns it") {
    VerifyReport r = verify_lemma1(2000, 3);
    CHECK(r.passed());
    CHECK(r.min_margin > 0.0);
}

TEST_CASE("lemma 2: product fusion is invariant only under a uniform intent") {
    std::vector<double> task{0.7, 0.2, 0.1}, uniform3{1.0 / 3, 1.0 / 3, 1.0 / 3}, skew{0.2, 0.5, 0.3};
    CHECK(verify_lemma2(task, uniform3).kl < 1e-12);
    CHECK(verify_lemma2(task, uniform3).is_uniform_intent);
    Lemma2Result r = verify_lemma2(task, skew);
    CHECK(r.kl > 0.0);
    CHECK(r.kl == doctest::Approx(kl_direct(task, fuse_product(task, skew))));
    CHECK(verify_lemma2_suite(300, 2).passed());
}

TEST_CASE("random distributions are strictly positive and normalised") {
    Rng rng(0);
    for (int i = 0; i < 100; ++i) {
        auto p = random_distribution(rng, 2 + uniform_index(rng, 7));
        double s = 0.0;
        for (double v : p) {
            CHECK(v > 0.0);
            s += v;
        }
        CHECK(s == doctest::Approx(1.0));
    }
}

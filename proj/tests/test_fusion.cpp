#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dynfusion/fusion.hpp"
#include "dynfusion/serialization.hpp"
#include "dynfusion/theory.hpp"

using namespace dynfusion;

TEST_CASE("boltzmann matches the direct softmax and survives large values") {
    std::vector<double> q{1.0, 2.0, -0.5};
    auto p = boltzmann(q, 0.5);
    double z = 0.0;
    for (double v : q) z += std::exp(v / 0.5);
    for (std::size_t a = 0; a < q.size(); ++a) CHECK(p[a] == doctest::Approx(std::exp(q[a] / 0.5) / z));
    CHECK(log_partition(q, 0.5) == doctest::Approx(std::log(z)));

    std::vector<double> big{1000.0, 999.0};
    auto pb = boltzmann(big, 1.0);
    CHECK(pb[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
    CHECK_THROWS_AS(boltzmann(q, 0.0), ArgumentError);
}

TEST_CASE("sqrt fusion normalises the geometric mean") {
    std::vector<double> p1{0.5, 0.3, 0.2}, p2{0.1, 0.6, 0.3};
    SqrtFusion f = fuse_sqrt_full(p1, p2);
    double z = 0.0;
    for (int a = 0; a < 3; ++a) z += std::sqrt(p1[a] * p2[a]);
    CHECK(f.z == doctest::Approx(z));
    for (int a = 0; a < 3; ++a) CHECK(f.policy[a] == doctest::Approx(std::sqrt(p1[a] * p2[a]) / z));
    CHECK(std::accumulate(f.policy.begin(), f.policy.end(), 0.0) == doctest::Approx(1.0));
    CHECK(kl(p1, fuse_sqrt(p1, p1)) < 1e-12);
}

TEST_CASE("product and mixture fusion") {
    std::vector<double> p1{0.5, 0.5}, p2{0.8, 0.2};
    auto prod = fuse_product(p1, p2);
    CHECK(prod[0] == doctest::Approx(0.8));
    auto mix = fuse_mixture(p1, p2);
    CHECK(mix[0] == doctest::Approx(0.65));
}

TEST_CASE("entropy-based static fusion") {
    std::vector<double> flat{0.25, 0.25, 0.25, 0.25}, sharp{0.05, 0.05, 0.85, 0.05};
    CHECK(normalized_entropy(flat) == doctest::Approx(1.0));
    CHECK(entropy(sharp) < entropy(flat));
    CHECK(fuse_entropy_threshold(flat, sharp, 1e-6) == 2);
    CHECK(fuse_entropy_threshold(sharp, flat, 1e-6) == 2);
    std::vector<double> task{0.55, 0.15, 0.15, 0.15};
    // H* weights the task policy; a flatter task policy hands control to intent.
    const double h = std::min(normalized_entropy(task), normalized_entropy(sharp));
    std::vector<double> mix(4);
    for (int a = 0; a < 4; ++a) mix[a] = h * task[a] + (1 - h) * sharp[a];
    CHECK(fuse_entropy_weighted(task, sharp) == static_cast<int>(argmax(mix)));
}

TEST_CASE("shifted rewards have zero mean and keep their order") {
    std::vector<double> r{3.0, 5.0, 4.0, 4.0};
    auto s = shift_rewards(r);
    CHECK(std::accumulate(s.begin(), s.end(), 0.0) == doctest::Approx(0.0));
    CHECK(s[0] == doctest::Approx(-1.0));
    CHECK(s[1] == doctest::Approx(1.0));
    std::vector<double> all_pos{0.1, 0.2}, all_neg{-0.2, -0.1};
    auto a = shift_rewards(all_pos), b = shift_rewards(all_neg);
    CHECK(a[0] == doctest::Approx(b[0]));
    CHECK(a[0] < 0.0);
    CHECK(a[1] > 0.0);
}

TEST_CASE("temperature schedule is monotone and clipped at the floor") {
    FusionParams p;
    CHECK(initial_temperature(p) == doctest::Approx(5.0));
    CHECK(update_temperature(0.0, p) == doctest::Approx(5.0));
    CHECK(update_temperature(-20.0, p) == p.t_min);
    CHECK(update_temperature(50.0, p) == doctest::Approx(p.t_max));
    double prev = 0.0;
    for (double g = -6.0; g <= 6.0; g += 0.25) {
        const double t = update_temperature(g, p);
        CHECK(t >= prev);
        CHECK(t >= p.t_min);
        CHECK(t <= p.t_max);
        prev = t;
    }
    p.eta = 2.0;
    CHECK(update_temperature(2.0, p) == doctest::Approx(5.0));
    CHECK(initial_temperature(p) == doctest::Approx(std::max(1.0, 10.0 / (1.0 + std::exp(2.0)))));
    p.t_min = 20.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("greedy selection maximises the fused policy with lowest-index ties") {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> q(4), qi(4);
        for (auto& v : q) v = uniform(rng, -2, 2);
        for (auto& v : qi) v = uniform(rng, -2, 2);
        const double tp = uniform(rng, 0.1, 3), ti = uniform(rng, 0.1, 10);
        auto fused = fuse_sqrt(boltzmann(q, tp), boltzmann(qi, ti));
        const int a = select_action(q, qi, tp, ti);
        CHECK(fused[a] >= *std::max_element(fused.begin(), fused.end()) - 1e-12);
    }
    std::vector<double> tie{1.0, 1.0}, zero{0.0, 0.0};
    CHECK(select_action(tie, zero, 0.4, 5.0) == 0);
}

TEST_CASE("personalised episode records the schedule it used") {
    GridNavConfig g;
    g.width = 4;
    g.height = 2;
    g.start = {0, 0};
    g.target = {0, 3};
    EnvConfig cfg = g;
    QFunction q = QFunction::make_tabular(8, 4);
    for (int s = 0; s < 8; ++s) q.at(s, GridNav::right) = 1.0;
    Rng rng(2);
    IntentModel m(ObservationEncoding::for_config(cfg), 4, 3, 3);
    m.randomize(rng);
    FusionParams p;
    EpisodeRecord rec = run_personalised_episode(cfg, q, m, p, 0);
    REQUIRE(!rec.steps.empty());
    CHECK(rec.steps[0].t_psi == doctest::Approx(initial_temperature(p)));
    IntentModel::State h = m.initial_state();
    double g_acc = 0.0;
    for (std::size_t k = 0; k < rec.steps.size(); ++k) {
        const Step& s = rec.trajectory.steps[k];
        auto qi = m.per_action_q(h, s.obs);
        auto shifted = shift_rewards(qi);
        CHECK(rec.steps[k].action == select_action(q.q_values(s.obs), qi, p.t_phi, rec.steps[k].t_psi));
        g_acc += shifted[s.action];
        CHECK(rec.steps[k].g == doctest::Approx(g_acc).epsilon(1e-12));
        if (k + 1 < rec.steps.size())
            CHECK(rec.steps[k + 1].t_psi == doctest::Approx(update_temperature(g_acc, p)));
        h = m.advance(h, s.obs, s.action);
    }
    CHECK(run_personalised_episode(cfg, q, m, p, 0) == rec);

    IntentModel wrong(ObservationEncoding{EnvKind::grid_nav, 5}, 4, 3, 3);
    CHECK_THROWS_AS(run_personalised_episode(cfg, q, wrong, p, 0), ArgumentError);
}

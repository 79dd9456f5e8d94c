// Acceptance battery: one PASS/FAIL line per criterion.
// Usage: acceptance <theory|intent|pipeline|all> [config_dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "dynfusion/bench.hpp"
#include "dynfusion/theory.hpp"

using namespace dynfusion;

namespace {

using Clock = std::chrono::steady_clock;

int g_failures = 0;

void line(int id, bool pass, const std::string& what, const std::string& detail) {
    std::printf("AC%02d %s  %s | %s\n", id, pass ? "PASS" : "FAIL", what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

// ------------------------------------------------------------------ theory

void theory() {
    auto t0 = Clock::now();
    VerifyReport r = verify_lemma1(10000, 0);
    double s = seconds_since(t0);
    line(1, r.passed() && s < 5.0, "lemma 1: KL(p || sqrt(p p)) < 1e-9",
         fmt("%.0f violations / 10000, %.2fs", static_cast<double>(r.violations), s));

    t0 = Clock::now();
    r = verify_theorem1(10000, 0);
    s = seconds_since(t0);
    line(2, r.passed() && s < 10.0, "theorem 1 bound as stated",
         fmt("%.0f violations / 10000, min margin %.3g, %.2fs", static_cast<double>(r.violations), r.min_margin, s));

    t0 = Clock::now();
    r = verify_appendix_e(10000, 0);
    s = seconds_since(t0);
    line(3, r.passed() && s < 10.0, "product-fusion bound as stated",
         fmt("%.0f violations / 10000, min margin %.3g, %.2fs", static_cast<double>(r.violations), r.min_margin, s));

    r = verify_lemma2_suite(1000, 0);
    line(4, r.passed(), "lemma 2: product KL > 0 iff intent is non-uniform",
         fmt("%.0f violations / 1000 pairs", static_cast<double>(r.violations)));
}

// ------------------------------------------------------------------ intent

GridNavConfig small_grid() {
    GridNavConfig g;
    g.width = 5;
    g.height = 5;
    g.start = {4, 0};
    g.target = {0, 4};
    g.max_steps = 12;
    g.desired_cells = {{2, 2}};
    return g;
}

Trajectory random_trajectory(const EnvConfig& cfg, Rng& rng, int max_len) {
    std::vector<int> actions(1 + uniform_index(rng, static_cast<std::size_t>(max_len)));
    for (int& a : actions) a = static_cast<int>(uniform_index(rng, 4));
    return replay(cfg, 0, actions);
}

IntentModel random_model(const EnvConfig& cfg, Rng& rng, int hidden) {
    IntentModel m(ObservationEncoding::for_config(cfg), action_count(cfg), hidden, 3);
    m.randomize(rng, 1.0);
    for (Eigen::Index i = 0; i < m.params().w_q.size(); ++i) {
        m.params().w_q[i] = uniform(rng, -1, 1);
        m.params().w_beta[i] = uniform(rng, -1, 1);
    }
    m.params().b_q[0] = uniform(rng, -1, 1);
    return m;
}

void intent() {
    const EnvConfig cfg = small_grid();
    Rng rng(derive_seed(0, 0xac5));

    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        IntentModel m = random_model(cfg, rng, 8);
        Trajectory t = random_trajectory(cfg, rng, 12);
        double sum = 0.0;
        for (double r : redistribute(m, t)) sum += r;
        worst = std::max(worst, std::abs(sum - m.forward(t).q_tilde.back()));
    }
    line(5, worst < 1e-9, "redistributed rewards telescope to Q~_H", fmt("max |sum r - Q~_H| = %.3g over 100", worst));

    worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        IntentModel m = random_model(cfg, rng, 6);
        ScoredTrajectory s{random_trajectory(cfg, rng, 10), static_cast<int>(uniform_index(rng, 9)) - 4, ""};
        worst = std::max(worst, gradient_check(m, s));
    }
    line(6, worst < 1e-4, "BPTT matches central differences", fmt("max relative error %.3g over 20", worst));

    // Straight-line loss formulas, independent of the library's loss code.
    worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        IntentModel m = random_model(cfg, rng, 8);
        Trajectory t = random_trajectory(cfg, rng, 12);
        const double l = uniform(rng, -6, 6);
        const auto out = m.forward(t);
        const auto& q = out.q_tilde;
        const auto& b = out.beta;
        const long H = static_cast<long>(q.size()) - 1;
        const long d = 3;
        const double lm = (l - q[H]) * (l - q[H]);
        double lc = 0.0;
        for (long k = 0; k <= H; ++k) lc += (l - q[k]) * (l - q[k]);
        lc = lc / static_cast<double>(H + 1);
        double le = 0.0;
        for (long k = 0; k <= H - d; ++k) le += (q[k + d] - b[k]) * (q[k + d] - b[k]);
        if (H - d + 1 > 0) le = le / static_cast<double>(H - d + 1);
        const double total = lm + (lc + le) / 10.0;

        LstmParams grad(static_cast<int>(m.input_size()), m.hidden_size());
        const LossTerms got = m.loss_and_gradient(m.encode(t), l, grad);
        worst = std::max({worst, std::abs(got.main - lm), std::abs(got.continuous - lc),
                          std::abs(got.lookahead - le), std::abs(got.total - total)});
    }
    line(7, worst < 1e-12, "training-path losses equal the formulas", fmt("max abs diff %.3g over 100", worst));
}

// ---------------------------------------------------------------- pipeline

const ReportRow* find(const std::vector<ReportRow>& rows, const std::string& variant, const std::string& mode,
                      const std::string& param = "") {
    for (const auto& r : rows)
        if (r.variant == variant && r.mode == mode && r.param == param) return &r;
    return nullptr;
}

struct Row {
    double desired = NAN, undesired = NAN, score = NAN;
};

Row get(const std::vector<ReportRow>& rows, const std::string& variant, const std::string& mode,
        const std::string& param = "") {
    const ReportRow* r = find(rows, variant, mode, param);
    if (!r) return {};
    return {r->metrics.desired_visits.mean, r->metrics.undesired_visits.mean, r->metrics.score.mean};
}

std::string report_bytes(const ExperimentResult& r) {
    return report_csv(r.main_rows) + report_csv(r.sweep_rows) + report_json(r.main_rows).dump() +
           report_json(r.sweep_rows).dump();
}

void pipeline(const std::string& config_dir) {
    const ExperimentConfig grid = experiment_from_json(read_json_config(config_dir + "/gridnav.json"));
    auto t0 = Clock::now();
    const ExperimentResult res = run_experiment(grid);
    const double secs = seconds_since(t0);
    const auto& m = res.main_rows;

    const Row dqn_p = get(m, "dqn", "preference"), dyn_p = get(m, "dynamic", "preference"),
              rud_p = get(m, "rudder", "preference");
    const Row dyn_a = get(m, "dynamic", "avoidance");
    const Row dqn_x = get(m, "dqn", "mixed");
    const Row dyn_x = get(m, "dynamic", "mixed");
    const bool params = grid.fusion.t_phi == 0.4 && grid.fusion.t_min == 1.0 && grid.fusion.t_max == 10.0 &&
                        grid.fusion.eta == 0.0 && grid.seeds == 10 && grid.episodes == 50;
    const bool pref = dyn_p.score >= 0.95 && dyn_p.desired >= 3.0 * dqn_p.desired && rud_p.score <= 0.3 &&
                      rud_p.desired > dyn_p.desired;
    const bool avoid = dyn_a.undesired <= 0.1 && dyn_a.score >= 0.95;
    const bool mixed = dyn_x.undesired <= 0.1 && dyn_x.desired > dqn_x.desired && dyn_x.score >= 0.95;
    line(8, params && pref && avoid && mixed && secs <= 600.0, "GridNav orderings, all three modes",
         fmt("pref: dyn score %.3f desired %.3f vs dqn %.3f, rudder score %.3f desired %.3f", dyn_p.score,
             dyn_p.desired, dqn_p.desired, rud_p.score) +
             fmt(" [%.3f]; avoid: dyn undesired %.3f score %.3f", rud_p.desired, dyn_a.undesired, dyn_a.score) +
             fmt("; mixed: dyn undesired %.3f desired %.3f vs dqn %.3f score %.3f", dyn_x.undesired, dyn_x.desired,
                 dqn_x.desired, dyn_x.score) +
             fmt("; %.0fs", secs));

    const auto& s = res.sweep_rows;
    const Row st_p = get(s, "static", "preference", "t_psi=t_min"), dy_p = get(s, "dynamic", "preference", "t_psi=t_min");
    const Row st_a = get(s, "static", "avoidance", "t_psi=t_min"), dy_a = get(s, "dynamic", "avoidance", "t_psi=t_min");
    line(9,
         st_p.score <= 0.5 * dy_p.score && st_p.desired > dy_p.desired && std::abs(st_a.score - dy_a.score) <= 0.1,
         "static fusion at T_min over-commits to intent",
         fmt("pref: static score %.3f desired %.3f vs dynamic %.3f / %.3f", st_p.score, st_p.desired, dy_p.score,
             dy_p.desired) +
             fmt("; avoid: static score %.3f vs dynamic %.3f", st_a.score, dy_a.score));

    const ExperimentConfig sweep = experiment_from_json(read_json_config(config_dir + "/laneworld.json"));
    const ExperimentResult lane = run_experiment(sweep);
    const auto& ls = lane.sweep_rows;
    const Row e0 = get(ls, "dynamic", "mixed", "eta=0"), e2 = get(ls, "dynamic", "mixed", "eta=2");
    line(10, e2.desired >= e0.desired && e2.undesired <= e0.undesired, "eta sweep direction (mixed, LaneWorld)",
         fmt("desired %.3f -> %.3f, undesired %.3f -> %.3f", e0.desired, e2.desired, e0.undesired, e2.undesired));
    const Row t10 = get(ls, "dynamic", "mixed", "t_max=10"), t25 = get(ls, "dynamic", "mixed", "t_max=25");
    line(11, t25.desired < t10.desired && t25.undesired > t10.undesired, "T_max sweep direction (mixed, LaneWorld)",
         fmt("desired %.3f -> %.3f, undesired %.3f -> %.3f", t10.desired, t25.desired, t10.undesired, t25.undesired));
    const Row w3 = get(ls, "morl", "preference", "human_weight=0.3"),
              w7 = get(ls, "morl", "preference", "human_weight=0.7");
    line(12, w7.desired > w3.desired, "MORL desired visits grow with human weight (LaneWorld)",
         fmt("human weight 0.3: %.3f, 0.7: %.3f", w3.desired, w7.desired));

    const ExperimentResult again = run_experiment(grid);
    const ExperimentResult lane_again = run_experiment(sweep);
    const bool same = report_bytes(again) == report_bytes(res) && report_bytes(lane_again) == report_bytes(lane);
    line(13, same, "pipeline reruns give byte-identical reports",
         same ? std::string("GridNav and LaneWorld reports identical") : std::string("reports differ"));
}

}  // namespace

int main(int argc, char** argv) {
    const std::string group = argc > 1 ? argv[1] : "all";
    const std::string config_dir = argc > 2 ? argv[2] : DYNFUSION_CONFIG_DIR;
    try {
        if (group == "theory" || group == "all") theory();
        if (group == "intent" || group == "all") intent();
        if (group == "pipeline" || group == "all") pipeline(config_dir);
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: %s\n", e.what());
        return 2;
    }
    return g_failures == 0 ? 0 : 1;
}

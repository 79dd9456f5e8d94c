#include "dynfusion/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace dynfusion {

// ---------------------------------------------------------------- variants

std::string to_string(VariantTag tag) {
    switch (tag) {
        case VariantTag::dqn: return "dqn";
        case VariantTag::rudder: return "rudder";
        case VariantTag::static_fusion: return "static";
        case VariantTag::dynamic: return "dynamic";
        case VariantTag::morl: return "morl";
    }
    return "?";
}

const std::vector<std::string>& variant_names() {
    static const std::vector<std::string> names{"dqn", "rudder", "static", "dynamic", "morl"};
    return names;
}

VariantTag variant_from_string(const std::string& name) {
    if (name == "dqn") return VariantTag::dqn;
    if (name == "rudder") return VariantTag::rudder;
    if (name == "static") return VariantTag::static_fusion;
    if (name == "dynamic") return VariantTag::dynamic;
    if (name == "morl") return VariantTag::morl;
    throw ConfigError("unknown variant '" + name + "' (expected one of dqn, rudder, static, dynamic, morl)");
}

void MethodVariant::validate() const {
    const bool wants_fusion = tag == VariantTag::static_fusion || tag == VariantTag::dynamic;
    if (wants_fusion != fusion.has_value())
        throw ArgumentError("variant " + to_string(tag) + ": fusion params must be present iff fusion is used");
    if ((tag == VariantTag::static_fusion) != static_t_psi.has_value())
        throw ArgumentError("variant " + to_string(tag) + ": static_t_psi belongs to the static variant only");
    if ((tag == VariantTag::morl) != alpha.has_value())
        throw ArgumentError("variant " + to_string(tag) + ": alpha belongs to the morl variant only");
    if (fusion) fusion->validate();
    if (static_t_psi && !(*static_t_psi > 0.0)) throw ArgumentError("static variant: T_psi must be > 0");
    if (alpha && !(*alpha >= 0.0 && *alpha <= 1.0)) throw ArgumentError("morl variant: alpha must lie in [0, 1]");
}

std::string MethodVariant::label() const { return to_string(tag); }

// -------------------------------------------------------------- evaluation

namespace {

Step record_step(Env& env, const Observation& obs, int action, int t, Observation& next) {
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
    next = std::move(tr.next_observation);
    return s;
}

Stat stat_of(const std::vector<double>& per_seed) {
    Stat s;
    const double n = static_cast<double>(per_seed.size());
    for (double v : per_seed) s.mean += v;
    s.mean /= n;
    if (per_seed.size() > 1) {
        double var = 0.0;
        for (double v : per_seed) var += (v - s.mean) * (v - s.mean);
        var /= n - 1.0;
        s.stderr_ = std::sqrt(var / n);
    }
    return s;
}

}  // namespace

Trajectory rollout_variant(const MethodVariant& variant, const EnvConfig& env_config, const Artifacts& artifacts,
                           std::uint64_t seed) {
    variant.validate();
    const bool needs_task = variant.tag != VariantTag::rudder && variant.tag != VariantTag::morl;
    const bool needs_intent = variant.tag != VariantTag::dqn && variant.tag != VariantTag::morl;
    if (needs_task && !artifacts.q_task) throw ArgumentError(variant.label() + ": task Q-function missing");
    if (needs_intent && !artifacts.intent) throw ArgumentError(variant.label() + ": intent model missing");
    if (variant.tag == VariantTag::morl && !artifacts.q_morl) throw ArgumentError("morl: MORL Q-function missing");

    if (variant.tag == VariantTag::dynamic)
        return run_personalised_episode(env_config, *artifacts.q_task, *artifacts.intent, *variant.fusion, seed)
            .trajectory;

    Env env(env_config);
    Trajectory traj;
    traj.config_hash = env.config_hash();
    traj.seed = seed;
    Observation obs = env.reset(seed);
    IntentModel::State history;
    if (artifacts.intent) history = artifacts.intent->initial_state();
    for (int t = 0; !env.done(); ++t) {
        int action = 0;
        switch (variant.tag) {
            case VariantTag::dqn: action = static_cast<int>(argmax(artifacts.q_task->q_values(obs))); break;
            case VariantTag::morl: action = static_cast<int>(argmax(artifacts.q_morl->q_values(obs))); break;
            case VariantTag::rudder: action = static_cast<int>(argmax(artifacts.intent->per_action_q(history, obs))); break;
            case VariantTag::static_fusion:
                action = select_action(artifacts.q_task->q_values(obs), artifacts.intent->per_action_q(history, obs),
                                       variant.fusion->t_phi, *variant.static_t_psi);
                break;
            case VariantTag::dynamic: break;
        }
        if (needs_intent) history = artifacts.intent->advance(history, obs, action);
        Observation next;
        traj.steps.push_back(record_step(env, obs, action, t, next));
        obs = std::move(next);
    }
    return traj;
}

Metrics evaluate(const MethodVariant& variant, const EnvConfig& env, const Artifacts& artifacts, int n_seeds,
                 int episodes_per_seed, std::uint64_t base_seed) {
    if (n_seeds < 1 || episodes_per_seed < 1) throw ArgumentError("evaluate: need at least one seed and one episode");
    std::vector<double> desired, undesired, hits, score;
    for (int i = 0; i < n_seeds; ++i) {
        const std::uint64_t stream = derive_seed(base_seed, static_cast<std::uint64_t>(i));
        double d = 0.0, u = 0.0, h = 0.0, s = 0.0;
        for (int k = 0; k < episodes_per_seed; ++k) {
            const Trajectory traj = rollout_variant(variant, env, artifacts, derive_seed(stream, static_cast<std::uint64_t>(k)));
            const EventCounts c = event_counts(traj, env);
            d += c.desired_visits;
            u += c.undesired_visits;
            h += c.collisions;
            s += c.task_score;
        }
        const double n = episodes_per_seed;
        desired.push_back(d / n);
        undesired.push_back(u / n);
        hits.push_back(h / n);
        score.push_back(s / n);
    }
    return {stat_of(desired), stat_of(undesired), stat_of(hits), stat_of(score), n_seeds, episodes_per_seed};
}

// -------------------------------------------------------------------- MORL

double scalarize(double r_env, double r_human, double alpha) { return alpha * r_env + (1.0 - alpha) * r_human; }

std::vector<std::vector<double>> normalize_human_rewards(const std::vector<std::vector<double>>& rewards) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& seq : rewards)
        for (double v : seq) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    std::vector<std::vector<double>> out = rewards;
    for (auto& seq : out)
        for (double& v : seq) v = hi > lo ? 2.0 * (v - lo) / (hi - lo) - 1.0 : 0.0;
    return out;
}

QFunction train_morl(const EnvConfig& env, const TrajectorySet& corpus, const IntentModel& intent, double alpha,
                     const LearnerConfig& config, std::uint64_t seed) {
    if (corpus.trajectories.empty()) throw DataError("train_morl: empty corpus");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("train_morl: alpha must lie in [0, 1]");
    std::vector<std::vector<double>> human;
    human.reserve(corpus.size());
    for (const Trajectory& t : corpus.trajectories) {
        if (t.steps.empty()) throw DataError("train_morl: empty trajectory in corpus");
        human.push_back(redistribute(intent, t));
    }
    human = normalize_human_rewards(human);

    const bool grid = kind_of(env) == EnvKind::grid_nav;
    std::vector<ReplayTransition> data;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& steps = corpus.trajectories[i].steps;
        for (std::size_t t = 0; t < steps.size(); ++t) {
            ReplayTransition r;
            r.obs = steps[t].obs;
            r.action = steps[t].action;
            r.reward = scalarize(steps[t].reward, human[i][t], alpha);
            r.terminal = steps[t].terminal();
            if (t + 1 < steps.size()) {
                r.next_obs = steps[t + 1].obs;
            } else if (grid) {
                r.next_obs = {steps[t].next_position, {}};
            } else {
                // The final LaneWorld observation is not stored; the cut-off counts as terminal.
                r.next_obs = steps[t].obs;
                r.terminal = true;
            }
            data.push_back(std::move(r));
        }
    }
    return train_offline(env, data, config, seed);
}

// ------------------------------------------------------------------ sweeps

std::vector<SweepRow> sweep_eta(const std::vector<double>& values, const FusionParams& base, const EnvConfig& env,
                                const Artifacts& artifacts, int n_seeds, int episodes_per_seed,
                                std::uint64_t base_seed) {
    if (values.empty()) throw ArgumentError("sweep_eta: no values");
    std::vector<SweepRow> rows;
    for (double v : values) {
        FusionParams p = base;
        p.eta = v;
        rows.push_back({v, evaluate(MethodVariant::dynamic(p), env, artifacts, n_seeds, episodes_per_seed, base_seed)});
    }
    return rows;
}

std::vector<SweepRow> sweep_tmax(const std::vector<double>& values, const FusionParams& base, const EnvConfig& env,
                                 const Artifacts& artifacts, int n_seeds, int episodes_per_seed,
                                 std::uint64_t base_seed) {
    if (values.empty()) throw ArgumentError("sweep_tmax: no values");
    std::vector<SweepRow> rows;
    for (double v : values) {
        FusionParams p = base;
        p.t_max = v;
        rows.push_back({v, evaluate(MethodVariant::dynamic(p), env, artifacts, n_seeds, episodes_per_seed, base_seed)});
    }
    return rows;
}

PitfallRecord static_pitfall_check(const EnvConfig& env, const Artifacts& artifacts, const FusionParams& params,
                                   int n_seeds, int episodes_per_seed, std::uint64_t base_seed) {
    PitfallRecord r;
    r.static_metrics = evaluate(MethodVariant::static_fusion(params, params.t_min), env, artifacts, n_seeds,
                                episodes_per_seed, base_seed);
    r.dynamic_metrics = evaluate(MethodVariant::dynamic(params), env, artifacts, n_seeds, episodes_per_seed, base_seed);
    return r;
}

// ----------------------------------------------------------------- reports

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

constexpr const char* kCsvHeader =
    "variant,mode,param,desired_mean,desired_se,undesired_mean,undesired_se,hits_mean,hits_se,score_mean,score_se,"
    "n_seeds,episodes_per_seed";

Json stat_json(const Stat& s) { return {{"mean", s.mean}, {"se", s.stderr_}}; }
Stat stat_from(const Json& j) { return {j.at("mean").get<double>(), j.at("se").get<double>()}; }

}  // namespace

std::string report_csv(const std::vector<ReportRow>& rows) {
    if (rows.empty()) throw ArgumentError("report: empty table");
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const ReportRow& r : rows) {
        const Metrics& m = r.metrics;
        out << r.variant << ',' << r.mode << ',' << r.param << ',' << fmt(m.desired_visits.mean) << ','
            << fmt(m.desired_visits.stderr_) << ',' << fmt(m.undesired_visits.mean) << ','
            << fmt(m.undesired_visits.stderr_) << ',' << fmt(m.hits.mean) << ',' << fmt(m.hits.stderr_) << ','
            << fmt(m.score.mean) << ',' << fmt(m.score.stderr_) << ',' << m.n_seeds << ',' << m.episodes_per_seed
            << '\n';
    }
    return out.str();
}

Json report_json(const std::vector<ReportRow>& rows) {
    if (rows.empty()) throw ArgumentError("report: empty table");
    Json arr = Json::array();
    for (const ReportRow& r : rows) {
        const Metrics& m = r.metrics;
        arr.push_back({{"variant", r.variant},
                       {"mode", r.mode},
                       {"param", r.param},
                       {"desired_visits", stat_json(m.desired_visits)},
                       {"undesired_visits", stat_json(m.undesired_visits)},
                       {"hits", stat_json(m.hits)},
                       {"score", stat_json(m.score)},
                       {"n_seeds", m.n_seeds},
                       {"episodes_per_seed", m.episodes_per_seed}});
    }
    return {{"format", "dynfusion.report"}, {"version", 1}, {"rows", arr}};
}

std::vector<ReportRow> parse_report_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw DataError("report csv: unexpected header");
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (cells.size() != 13) throw DataError("report csv: expected 13 columns");
        ReportRow r;
        r.variant = cells[0];
        r.mode = cells[1];
        r.param = cells[2];
        Metrics& m = r.metrics;
        m.desired_visits = {std::stod(cells[3]), std::stod(cells[4])};
        m.undesired_visits = {std::stod(cells[5]), std::stod(cells[6])};
        m.hits = {std::stod(cells[7]), std::stod(cells[8])};
        m.score = {std::stod(cells[9]), std::stod(cells[10])};
        m.n_seeds = std::stoi(cells[11]);
        m.episodes_per_seed = std::stoi(cells[12]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ReportRow> parse_report_json(const Json& j) {
    std::vector<ReportRow> rows;
    for (const Json& r : j.at("rows")) {
        ReportRow row;
        row.variant = r.at("variant").get<std::string>();
        row.mode = r.at("mode").get<std::string>();
        row.param = r.at("param").get<std::string>();
        row.metrics.desired_visits = stat_from(r.at("desired_visits"));
        row.metrics.undesired_visits = stat_from(r.at("undesired_visits"));
        row.metrics.hits = stat_from(r.at("hits"));
        row.metrics.score = stat_from(r.at("score"));
        row.metrics.n_seeds = r.at("n_seeds").get<int>();
        row.metrics.episodes_per_seed = r.at("episodes_per_seed").get<int>();
        rows.push_back(std::move(row));
    }
    return rows;
}

void emit_report(const std::vector<ReportRow>& rows, const std::filesystem::path& dir, const std::string& stem) {
    const std::string csv = report_csv(rows);
    const std::string json = report_json(rows).dump(2) + "\n";
    write_file(dir / (stem + ".csv"), csv);
    write_file(dir / (stem + ".json"), json);
}

// ------------------------------------------------------------- experiments

Json to_json(const FusionParams& p) {
    return {{"t_phi", p.t_phi}, {"t_min", p.t_min}, {"t_max", p.t_max}, {"eta", p.eta}, {"slope", p.slope}};
}

FusionParams fusion_params_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("fusion: expected a JSON object");
    FusionParams p;
    for (const auto& item : j.items()) {
        const std::string& k = item.key();
        if (!item.value().is_number()) throw ConfigError("fusion: field '" + k + "' must be a number");
        const double v = item.value().get<double>();
        if (k == "t_phi") p.t_phi = v;
        else if (k == "t_min") p.t_min = v;
        else if (k == "t_max") p.t_max = v;
        else if (k == "eta") p.eta = v;
        else if (k == "slope") p.slope = v;
        else throw ConfigError("fusion: unknown field '" + k + "'");
    }
    p.validate();
    return p;
}

namespace {

std::vector<double> number_list(const Json& j, const char* key) {
    if (!j.is_array()) throw ConfigError(std::string("experiment: field '") + key + "' must be an array");
    std::vector<double> out;
    for (const Json& v : j) {
        if (!v.is_number()) throw ConfigError(std::string("experiment: field '") + key + "' must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

template <typename T>
T number(const Json& j, const char* key) {
    if (!j.is_number()) throw ConfigError(std::string("experiment: field '") + key + "' must be a number");
    return j.get<T>();
}

}  // namespace

ExperimentConfig experiment_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("experiment: expected a JSON object");
    if (!j.contains("env")) throw ConfigError("experiment: missing field 'env'");
    ExperimentConfig c;
    c.env = env_config_from_json(j.at("env"));
    const EnvKind kind = kind_of(c.env);
    c.learner = LearnerConfig::defaults_for(kind);
    c.morl_learner = c.learner;
    for (const auto& item : j.items()) {
        const std::string& k = item.key();
        const Json& v = item.value();
        if (k == "env") continue;
        if (k == "learner") c.learner = learner_config_from_json(v, kind);
        else if (k == "morl_learner") c.morl_learner = learner_config_from_json(v, kind);
        else if (k == "intent_train") c.intent_train = intent_train_config_from_json(v);
        else if (k == "intent_hidden") c.intent_hidden = number<int>(v, "intent_hidden");
        else if (k == "feedback_corpus_size") c.feedback_corpus_size = number<int>(v, "feedback_corpus_size");
        else if (k == "seed") c.seed = number<std::uint64_t>(v, "seed");
        else if (k == "seeds") c.seeds = number<int>(v, "seeds");
        else if (k == "episodes") c.episodes = number<int>(v, "episodes");
        else if (k == "fusion") c.fusion = fusion_params_from_json(v);
        else if (k == "static_t_psi") {
            if (!v.is_null()) c.static_t_psi = number<double>(v, "static_t_psi");
        } else if (k == "morl_alpha") c.morl_alpha = number<double>(v, "morl_alpha");
        else if (k == "modes") {
            c.modes.clear();
            for (const Json& m : v) c.modes.push_back(intent_mode_from_string(m.get<std::string>()));
        } else if (k == "variants") {
            c.variants.clear();
            for (const Json& m : v) c.variants.push_back(variant_from_string(m.get<std::string>()));
        } else if (k == "sweeps") {
            for (const auto& s : v.items()) {
                if (s.key() == "eta") c.sweeps.eta = number_list(s.value(), "sweeps.eta");
                else if (s.key() == "t_max") c.sweeps.t_max = number_list(s.value(), "sweeps.t_max");
                else if (s.key() == "morl_human_weight")
                    c.sweeps.morl_human_weight = number_list(s.value(), "sweeps.morl_human_weight");
                else throw ConfigError("experiment: unknown field 'sweeps." + s.key() + "'");
            }
        } else {
            throw ConfigError("experiment: unknown field '" + k + "'");
        }
    }
    if (c.intent_hidden < 1) throw ConfigError("experiment: field 'intent_hidden' must be >= 1");
    if (c.feedback_corpus_size < 1) throw ConfigError("experiment: field 'feedback_corpus_size' must be >= 1");
    if (c.seeds < 1) throw ConfigError("experiment: field 'seeds' must be >= 1");
    if (c.episodes < 1) throw ConfigError("experiment: field 'episodes' must be >= 1");
    if (!(c.morl_alpha >= 0.0 && c.morl_alpha <= 1.0)) throw ConfigError("experiment: field 'morl_alpha' must lie in [0, 1]");
    for (double w : c.sweeps.morl_human_weight)
        if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("experiment: field 'sweeps.morl_human_weight' must lie in [0, 1]");
    if (c.static_t_psi && !(*c.static_t_psi > 0.0)) throw ConfigError("experiment: field 'static_t_psi' must be > 0");
    return c;
}

Json to_json(const ExperimentConfig& c) {
    Json modes = Json::array(), variants = Json::array();
    for (IntentMode m : c.modes) modes.push_back(to_string(m));
    for (VariantTag v : c.variants) variants.push_back(to_string(v));
    return {{"env", to_json(c.env)},
            {"learner", to_json(c.learner)},
            {"morl_learner", to_json(c.morl_learner)},
            {"intent_train", to_json(c.intent_train)},
            {"intent_hidden", c.intent_hidden},
            {"feedback_corpus_size", c.feedback_corpus_size},
            {"seed", c.seed},
            {"seeds", c.seeds},
            {"episodes", c.episodes},
            {"fusion", to_json(c.fusion)},
            {"static_t_psi", c.static_t_psi ? Json(*c.static_t_psi) : Json(nullptr)},
            {"morl_alpha", c.morl_alpha},
            {"modes", modes},
            {"variants", variants},
            {"sweeps",
             {{"eta", c.sweeps.eta}, {"t_max", c.sweeps.t_max}, {"morl_human_weight", c.sweeps.morl_human_weight}}}};
}

StageSeeds StageSeeds::from(std::uint64_t seed) {
    return {derive_seed(seed, 101), derive_seed(seed, 102), derive_seed(seed, 103), derive_seed(seed, 104),
            derive_seed(seed, 105)};
}

namespace {

std::string param_label(const char* name, double v) {
    std::ostringstream ss;
    ss << name << '=' << v;
    return ss.str();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const StageSeeds seeds = StageSeeds::from(config.seed);
    ExperimentResult result;
    result.task = train_task(config.env, config.learner, seeds.task);
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(config.feedback_corpus_size),
                                                result.task.corpus.size());
    result.feedback_corpus = sample_feedback_corpus(result.task.corpus, n, seeds.corpus);

    const bool want_morl =
        std::find(config.variants.begin(), config.variants.end(), VariantTag::morl) != config.variants.end();
    for (IntentMode mode : config.modes) {
        ModeArtifacts m;
        m.mode = mode;
        m.spec = intent_from_env(config.env, mode);
        m.scored = label_corpus(result.feedback_corpus, m.spec, config.env);
        m.intent = train_intent(config.env, m.scored, config.intent_train, seeds.intent, config.intent_hidden);
        if (want_morl)
            m.q_morl = train_morl(config.env, result.task.corpus, m.intent.model, config.morl_alpha,
                                  config.morl_learner, seeds.morl);
        result.modes.push_back(std::move(m));
    }

    for (const ModeArtifacts& m : result.modes) {
        const Artifacts art{&result.task.q, &m.intent.model, m.q_morl ? &*m.q_morl : nullptr};
        for (VariantTag tag : config.variants) {
            MethodVariant v;
            switch (tag) {
                case VariantTag::dqn: v = MethodVariant::dqn(); break;
                case VariantTag::rudder: v = MethodVariant::rudder(); break;
                case VariantTag::static_fusion:
                    v = MethodVariant::static_fusion(config.fusion, config.static_temperature());
                    break;
                case VariantTag::dynamic: v = MethodVariant::dynamic(config.fusion); break;
                case VariantTag::morl: v = MethodVariant::morl(config.morl_alpha); break;
            }
            result.main_rows.push_back({to_string(tag), to_string(m.mode), "",
                                        evaluate(v, config.env, art, config.seeds, config.episodes, seeds.eval)});
        }
    }

    auto find_mode = [&](IntentMode mode) -> const ModeArtifacts* {
        for (const auto& m : result.modes)
            if (m.mode == mode) return &m;
        return nullptr;
    };
    if (const ModeArtifacts* mixed = find_mode(IntentMode::mixed)) {
        const Artifacts art{&result.task.q, &mixed->intent.model, nullptr};
        if (!config.sweeps.eta.empty())
            for (const SweepRow& r :
                 sweep_eta(config.sweeps.eta, config.fusion, config.env, art, config.seeds, config.episodes, seeds.eval))
                result.sweep_rows.push_back({"dynamic", "mixed", param_label("eta", r.value), r.metrics});
        if (!config.sweeps.t_max.empty())
            for (const SweepRow& r : sweep_tmax(config.sweeps.t_max, config.fusion, config.env, art, config.seeds,
                                                config.episodes, seeds.eval))
                result.sweep_rows.push_back({"dynamic", "mixed", param_label("t_max", r.value), r.metrics});
    }
    for (IntentMode mode : {IntentMode::preference, IntentMode::avoidance}) {
        const ModeArtifacts* m = find_mode(mode);
        if (!m) continue;
        const Artifacts art{&result.task.q, &m->intent.model, nullptr};
        const PitfallRecord p = static_pitfall_check(config.env, art, config.fusion, config.seeds, config.episodes,
                                                     seeds.eval);
        result.sweep_rows.push_back({"static", to_string(mode), "t_psi=t_min", p.static_metrics});
        result.sweep_rows.push_back({"dynamic", to_string(mode), "t_psi=t_min", p.dynamic_metrics});
    }
    if (const ModeArtifacts* pref = find_mode(IntentMode::preference)) {
        for (double w : config.sweeps.morl_human_weight) {
            const QFunction q = train_morl(config.env, result.task.corpus, pref->intent.model, 1.0 - w,
                                           config.morl_learner, seeds.morl);
            const Artifacts art{nullptr, nullptr, &q};
            result.sweep_rows.push_back({"morl", "preference", param_label("human_weight", w),
                                         evaluate(MethodVariant::morl(1.0 - w), config.env, art, config.seeds,
                                                  config.episodes, seeds.eval)});
        }
    }
    return result;
}

}  // namespace dynfusion

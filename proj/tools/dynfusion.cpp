#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "dynfusion/bench.hpp"
#include "dynfusion/theory.hpp"

namespace fs = std::filesystem;
using namespace dynfusion;

namespace {

constexpr const char* kToolVersion = "0.1.0";

enum Exit { ok = 0, usage = 1, data = 2, verification = 3 };

// Manifest: every artifact a later stage needs, keyed by role.
struct Manifest {
    fs::path path;
    Json doc = Json::object();

    static Manifest load_or_new(const fs::path& p) {
        Manifest m;
        m.path = p;
        if (fs::exists(p)) m.doc = read_json_artifact(p);
        if (!m.doc.contains("artifacts")) m.doc["artifacts"] = Json::object();
        m.doc["tool_version"] = kToolVersion;
        m.doc["format"] = "dynfusion.manifest";
        m.doc["version"] = 1;
        return m;
    }
    void set(const std::string& key, const fs::path& artifact) {
        doc["artifacts"][key] = fs::relative(fs::absolute(artifact), fs::absolute(path).parent_path()).string();
    }
    fs::path get(const std::string& key) const {
        if (!doc["artifacts"].contains(key)) throw DataError("manifest: no artifact '" + key + "'");
        return fs::absolute(path).parent_path() / doc["artifacts"][key].get<std::string>();
    }
    void save() const { write_file(path, doc.dump(2) + "\n"); }
};

ExperimentConfig load_experiment(const fs::path& p) { return experiment_from_json(read_json_config(p)); }

std::string stream_to_string(const std::function<void(std::ostream&)>& f) {
    std::ostringstream ss;
    f(ss);
    return ss.str();
}

TrajectorySet load_corpus(const fs::path& p) {
    std::istringstream in(read_file(p));
    return read_trajectory_set(in);
}

ScoredTrajectorySet load_scored(const fs::path& p) {
    std::istringstream in(read_file(p));
    return read_scored_set(in);
}

Json verify_json(const VerifyReport& r) {
    return {{"theorem", r.theorem},
            {"samples", r.samples},
            {"violations", r.violations},
            {"min_margin", r.min_margin},
            {"seed", r.seed}};
}

// ---------------------------------------------------------------- commands

int cmd_train_task(const fs::path& config_path, const fs::path& out, std::optional<std::uint64_t> seed) {
    const ExperimentConfig cfg = load_experiment(config_path);
    const std::uint64_t s = seed.value_or(cfg.seed);
    const TrainResult r = train_task(cfg.env, cfg.learner, StageSeeds::from(s).task);
    write_file(out / "q_function.json", to_json(r.q).dump() + "\n");
    write_file(out / "corpus.jsonl", stream_to_string([&](std::ostream& o) { write_trajectory_set(o, r.corpus); }));
    Manifest m = Manifest::load_or_new(out / "manifest.json");
    m.doc["config"] = fs::absolute(config_path).string();
    m.doc["seed"] = s;
    m.doc["stage_seeds"] = {{"task", StageSeeds::from(s).task},     {"corpus", StageSeeds::from(s).corpus},
                            {"intent", StageSeeds::from(s).intent}, {"morl", StageSeeds::from(s).morl},
                            {"eval", StageSeeds::from(s).eval}};
    m.doc["converged"] = r.converged;
    m.set("q_function", out / "q_function.json");
    m.set("corpus", out / "corpus.jsonl");
    m.save();
    if (!r.converged) std::cerr << "warning: task learner did not converge (greedy success " << r.greedy_success << ")\n";
    std::cout << (out / "q_function.json").string() << '\n' << (out / "corpus.jsonl").string() << '\n';
    return ok;
}

int cmd_label(const fs::path& corpus_path, const fs::path& intent_path, const fs::path& config_path,
              const fs::path& out, std::optional<std::size_t> sample, std::uint64_t seed,
              const std::optional<fs::path>& manifest, const std::string& mode_key) {
    const ExperimentConfig cfg = load_experiment(config_path);
    const IntentSpec spec = intent_spec_from_json(read_json_config(intent_path), cfg.env);
    TrajectorySet corpus = load_corpus(corpus_path);
    if (sample) corpus = sample_feedback_corpus(corpus, std::min(*sample, corpus.size()), StageSeeds::from(seed).corpus);
    const ScoredTrajectorySet scored = label_corpus(corpus, spec, cfg.env);
    if (score_variance(scored) == 0.0) std::cerr << "warning: scored corpus has zero label variance\n";
    write_file(out, stream_to_string([&](std::ostream& o) { write_scored_set(o, scored); }));
    if (manifest) {
        Manifest m = Manifest::load_or_new(*manifest);
        m.set("scored." + (mode_key.empty() ? to_string(spec.mode) : mode_key), out);
        m.save();
    }
    std::cout << out.string() << '\n';
    return ok;
}

int cmd_train_intent(const fs::path& scored_path, const fs::path& config_path, const fs::path& out,
                     std::optional<std::uint64_t> seed, const std::optional<fs::path>& manifest,
                     const std::string& mode_key) {
    const ExperimentConfig cfg = load_experiment(config_path);
    const ScoredTrajectorySet scored = load_scored(scored_path);
    const std::uint64_t s = StageSeeds::from(seed.value_or(cfg.seed)).intent;
    const TrainedIntent t = train_intent(cfg.env, scored, cfg.intent_train, s, cfg.intent_hidden);
    write_file(out, to_json(t.model).dump() + "\n");
    fs::path curve = out;
    curve.replace_extension(".loss.csv");
    write_file(curve, stream_to_string([&](std::ostream& o) { write_loss_curve_csv(o, t.curve); }));
    if (manifest) {
        Manifest m = Manifest::load_or_new(*manifest);
        m.set("intent." + mode_key, out);
        m.save();
    }
    std::cout << out.string() << '\n' << curve.string() << '\n';
    return ok;
}

struct EvalFlags {
    std::vector<std::string> variants{"dynamic"};
    std::string mode = "preference";
    std::vector<double> eta, tmax;
    std::optional<double> alpha;
    std::optional<int> seeds, episodes;
};

int cmd_eval(const fs::path& manifest_path, const EvalFlags& f, const fs::path& out) {
    Manifest m = Manifest::load_or_new(manifest_path);
    ExperimentConfig cfg = load_experiment(m.doc.at("config").get<std::string>());
    const IntentMode mode = intent_mode_from_string(f.mode);
    std::vector<VariantTag> tags;
    for (const auto& v : f.variants) tags.push_back(variant_from_string(v));
    const int seeds = f.seeds.value_or(cfg.seeds);
    const int episodes = f.episodes.value_or(cfg.episodes);
    const std::uint64_t eval_seed = StageSeeds::from(m.doc.at("seed").get<std::uint64_t>()).eval;

    const QFunction q_task = q_function_from_json(read_json_artifact(m.get("q_function")));
    std::optional<IntentModel> intent;
    const std::string key = "intent." + f.mode;
    if (m.doc["artifacts"].contains(key)) intent = intent_model_from_json(read_json_artifact(m.get(key)));
    const double alpha = f.alpha.value_or(cfg.morl_alpha);
    std::optional<QFunction> q_morl;
    if (std::find(tags.begin(), tags.end(), VariantTag::morl) != tags.end()) {
        if (!intent) throw DataError("eval: morl needs the intent model for mode " + f.mode);
        const TrajectorySet corpus = load_corpus(m.get("corpus"));
        q_morl = train_morl(cfg.env, corpus, *intent, alpha, cfg.morl_learner,
                            StageSeeds::from(m.doc.at("seed").get<std::uint64_t>()).morl);
    }
    const Artifacts art{&q_task, intent ? &*intent : nullptr, q_morl ? &*q_morl : nullptr};

    std::vector<ReportRow> rows;
    for (VariantTag tag : tags) {
        if (tag == VariantTag::dynamic && (!f.eta.empty() || !f.tmax.empty())) {
            for (const SweepRow& r : sweep_eta(f.eta.empty() ? std::vector<double>{cfg.fusion.eta} : f.eta, cfg.fusion,
                                               cfg.env, art, seeds, episodes, eval_seed))
                rows.push_back({"dynamic", f.mode, "eta=" + Json(r.value).dump(), r.metrics});
            for (const SweepRow& r : f.tmax.empty() ? std::vector<SweepRow>{}
                                                    : sweep_tmax(f.tmax, cfg.fusion, cfg.env, art, seeds, episodes,
                                                                 eval_seed))
                rows.push_back({"dynamic", f.mode, "t_max=" + Json(r.value).dump(), r.metrics});
            continue;
        }
        MethodVariant v;
        switch (tag) {
            case VariantTag::dqn: v = MethodVariant::dqn(); break;
            case VariantTag::rudder: v = MethodVariant::rudder(); break;
            case VariantTag::static_fusion: v = MethodVariant::static_fusion(cfg.fusion, cfg.static_temperature()); break;
            case VariantTag::dynamic: v = MethodVariant::dynamic(cfg.fusion); break;
            case VariantTag::morl: v = MethodVariant::morl(alpha); break;
        }
        rows.push_back({to_string(tag), f.mode, "", evaluate(v, cfg.env, art, seeds, episodes, eval_seed)});
    }
    emit_report(rows, out, "metrics");
    std::cout << report_csv(rows);
    return ok;
}

int cmd_verify(const std::string& which, std::size_t n, std::uint64_t seed, const fs::path& out,
               bool corrupt_gradient) {
    static const std::vector<std::string> known{"theorem1", "appendixE", "lemma1", "lemma2", "gradcheck", "all"};
    if (std::find(known.begin(), known.end(), which) == known.end())
        throw ConfigError("verify: unknown target '" + which + "'");
    Json reports = Json::array();
    bool failed = false;
    auto add = [&](const VerifyReport& r) {
        reports.push_back(verify_json(r));
        failed = failed || !r.passed();
        std::cout << r.theorem << ": " << r.violations << " violations in " << r.samples
                  << " samples, min margin " << r.min_margin << '\n';
    };
    const bool all = which == "all";
    if (all || which == "lemma1") add(verify_lemma1(n, seed));
    if (all || which == "theorem1") add(verify_theorem1(n, seed));
    if (all || which == "appendixE") add(verify_appendix_e(n, seed));
    if (all || which == "lemma2") add(verify_lemma2_suite(std::min<std::size_t>(n, 1000), seed));
    if (all || which == "gradcheck") {
        // Small random instances on a 4x4 grid.
        GridNavConfig g;
        g.width = g.height = 4;
        g.start = {0, 0};
        g.target = {3, 3};
        const EnvConfig env = g;
        Rng rng(derive_seed(seed, 0x6c));
        VerifyReport r;
        r.theorem = "gradcheck";
        r.seed = seed;
        r.samples = 20;
        r.min_margin = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 20; ++i) {
            IntentModel model(ObservationEncoding::for_config(env), GridNav::kActionCount, 8, 3);
            model.randomize(rng);
            std::vector<int> actions(1 + uniform_index(rng, 5));
            for (int& a : actions) a = static_cast<int>(uniform_index(rng, 4));
            const ScoredTrajectory st{replay(env, static_cast<std::uint64_t>(i), actions),
                                      static_cast<int>(uniform_index(rng, 7)) - 3, ""};
            std::function<void(LstmParams&)> tamper;
            if (corrupt_gradient) tamper = [](LstmParams& p) { p.w_cell *= 1.5; p.b_q(0) += 1.0; };
            const double err = gradient_check(model, st, 1e-5, tamper);
            if (!(err < 1e-4)) ++r.violations;
            r.min_margin = std::min(r.min_margin, 1e-4 - err);
        }
        add(r);
    }
    write_file(out, Json{{"reports", reports}}.dump(2) + "\n");
    return failed ? verification : ok;
}

int cmd_run(const fs::path& config_path, const fs::path& out) {
    const ExperimentConfig cfg = load_experiment(config_path);
    const ExperimentResult r = run_experiment(cfg);
    write_file(out / "q_function.json", to_json(r.task.q).dump() + "\n");
    write_file(out / "corpus.jsonl",
               stream_to_string([&](std::ostream& o) { write_trajectory_set(o, r.task.corpus); }));
    Manifest m = Manifest::load_or_new(out / "manifest.json");
    m.doc["config"] = fs::absolute(config_path).string();
    m.doc["seed"] = cfg.seed;
    m.doc["converged"] = r.task.converged;
    m.set("q_function", out / "q_function.json");
    m.set("corpus", out / "corpus.jsonl");
    for (const ModeArtifacts& mode : r.modes) {
        const std::string name = to_string(mode.mode);
        write_file(out / ("scored_" + name + ".jsonl"),
                   stream_to_string([&](std::ostream& o) { write_scored_set(o, mode.scored); }));
        write_file(out / ("intent_" + name + ".json"), to_json(mode.intent.model).dump() + "\n");
        write_file(out / ("intent_" + name + ".loss.csv"),
                   stream_to_string([&](std::ostream& o) { write_loss_curve_csv(o, mode.intent.curve); }));
        m.set("scored." + name, out / ("scored_" + name + ".jsonl"));
        m.set("intent." + name, out / ("intent_" + name + ".json"));
    }
    m.save();
    emit_report(r.main_rows, out, "metrics");
    if (!r.sweep_rows.empty()) emit_report(r.sweep_rows, out, "sweeps");
    std::cout << report_csv(r.main_rows);
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic policy fusion pipeline"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    fs::path config, out, corpus, intent_spec, scored, manifest_path;
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> manifest;
    std::optional<std::size_t> sample;
    std::string mode_key;

    auto* train_task_cmd = app.add_subcommand("train-task", "learn the task Q-function and keep its trajectories");
    train_task_cmd->add_option("--config", config, "experiment JSON")->required();
    train_task_cmd->add_option("--out", out, "output directory")->required();
    train_task_cmd->add_option("--seed", seed, "global seed (default: config seed)");

    std::uint64_t label_seed = 1;
    auto* label_cmd = app.add_subcommand("label", "score trajectories with a simulated intent");
    label_cmd->add_option("--corpus", corpus, "trajectory JSONL")->required();
    label_cmd->add_option("--intent", intent_spec, "intent spec JSON")->required();
    label_cmd->add_option("--config", config, "experiment JSON")->required();
    label_cmd->add_option("--out", out, "scored JSONL")->required();
    label_cmd->add_option("--sample", sample, "subsample size before labeling");
    label_cmd->add_option("--seed", label_seed, "seed for subsampling");
    label_cmd->add_option("--manifest", manifest, "manifest to register the output in");
    label_cmd->add_option("--mode-key", mode_key, "manifest key suffix (default: intent mode)");

    auto* intent_cmd = app.add_subcommand("train-intent", "fit the credit-assignment LSTM");
    intent_cmd->add_option("--scored", scored, "scored JSONL")->required();
    intent_cmd->add_option("--config", config, "experiment JSON")->required();
    intent_cmd->add_option("--out", out, "model JSON")->required();
    intent_cmd->add_option("--seed", seed, "global seed (default: config seed)");
    intent_cmd->add_option("--manifest", manifest, "manifest to register the output in");
    intent_cmd->add_option("--mode", mode_key, "intent mode the model belongs to")->default_val("preference");

    EvalFlags flags;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate variants and sweeps");
    eval_cmd->add_option("--manifest", manifest_path, "run manifest")->required();
    eval_cmd->add_option("--variant", flags.variants, "dqn, rudder, static, dynamic, morl")->delimiter(',');
    eval_cmd->add_option("--mode", flags.mode, "preference, avoidance or mixed");
    eval_cmd->add_option("--eta", flags.eta, "eta values for the dynamic variant")->delimiter(',');
    eval_cmd->add_option("--tmax", flags.tmax, "T_max values for the dynamic variant")->delimiter(',');
    eval_cmd->add_option("--alpha", flags.alpha, "morl environment-reward weight");
    eval_cmd->add_option("--seeds", flags.seeds, "evaluation seeds");
    eval_cmd->add_option("--episodes", flags.episodes, "episodes per seed");
    eval_cmd->add_option("--out", out, "report directory")->required();

    std::string which = "all";
    std::size_t n = 10000;
    std::uint64_t verify_seed = 0;
    bool corrupt = false;
    auto* verify_cmd = app.add_subcommand("verify", "numerical checks of the fusion bounds and BPTT");
    verify_cmd->add_option("which", which, "theorem1 | appendixE | lemma1 | lemma2 | gradcheck | all");
    verify_cmd->add_option("-n,--samples", n, "samples per check");
    verify_cmd->add_option("--seed", verify_seed, "sampling seed");
    verify_cmd->add_option("--out", out, "report JSON")->default_val("verify_report.json");
    verify_cmd->add_flag("--corrupt-gradient", corrupt, "tamper with the analytic gradient (detector fixture)");

    auto* run_cmd = app.add_subcommand("run", "full pipeline from one experiment file");
    run_cmd->add_option("--config", config, "experiment JSON")->required();
    run_cmd->add_option("--out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : usage;
    }

    try {
        if (*train_task_cmd) return cmd_train_task(config, out, seed);
        if (*label_cmd) return cmd_label(corpus, intent_spec, config, out, sample, label_seed, manifest, mode_key);
        if (*intent_cmd) return cmd_train_intent(scored, config, out, seed, manifest, mode_key);
        if (*eval_cmd) return cmd_eval(manifest_path, flags, out);
        if (*verify_cmd) return cmd_verify(which, n, verify_seed, out, corrupt);
        if (*run_cmd) return cmd_run(config, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return usage;
    } catch (const ArgumentError& e) {
        std::cerr << "argument error: " << e.what() << '\n';
        return usage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return data;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return data;
    }
    return usage;
}

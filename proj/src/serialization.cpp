#include "dynfusion/serialization.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace dynfusion {

namespace {

template <typename T>
T field(const Json& j, const char* context, const char* key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string(context) + ": field '" + key + "' has the wrong type");
    }
}

template <typename T>
T required(const Json& j, const char* context, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string(context) + ": missing field '" + key + "'");
    return field<T>(j, context, key, T{});
}

Cell cell_from_json(const Json& j, const char* key) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        throw ConfigError(std::string("grid_nav: field '") + key + "' must hold [row, col] pairs");
    return {j[0].get<int>(), j[1].get<int>()};
}

Json cell_to_json(Cell c) { return Json::array({c.row, c.col}); }

std::vector<Cell> cells_from_json(const Json& j, const char* key) {
    std::vector<Cell> out;
    if (!j.contains(key)) return out;
    if (!j.at(key).is_array()) throw ConfigError(std::string("grid_nav: field '") + key + "' must be an array");
    for (const Json& c : j.at(key)) out.push_back(cell_from_json(c, key));
    return out;
}

void check_keys(const Json& j, const char* context, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(std::string(context) + ": expected a JSON object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || item.key() == a;
        if (!ok) throw ConfigError(std::string(context) + ": unknown field '" + item.key() + "'");
    }
}

std::string hash_of(const Json& j) { return fnv1a_hex(j.dump()); }

Json flags_to_json(const StepFlags& f) {
    return {{"collision", f.collision},
            {"reached_target", f.reached_target},
            {"visited_desired", f.visited_desired},
            {"visited_undesired", f.visited_undesired}};
}

StepFlags flags_from_json(const Json& j) {
    StepFlags f;
    f.collision = j.at("collision").get<bool>();
    f.reached_target = j.at("reached_target").get<bool>();
    f.visited_desired = j.at("visited_desired").get<bool>();
    f.visited_undesired = j.at("visited_undesired").get<bool>();
    return f;
}

Json step_to_json(const Step& s) {
    Json obs = s.obs.features.empty() ? Json(s.obs.id) : Json(s.obs.features);
    return {{"t", s.t},           {"obs", obs},           {"action", s.action},
            {"reward", s.reward}, {"done", s.done},       {"flags", flags_to_json(s.flags)},
            {"pos", s.position},  {"next_pos", s.next_position}};
}

Step step_from_json(const Json& j) {
    Step s;
    s.t = j.at("t").get<int>();
    const Json& obs = j.at("obs");
    if (obs.is_array())
        s.obs.features = obs.get<std::vector<double>>();
    else
        s.obs.id = obs.get<int>();
    s.action = j.at("action").get<int>();
    s.reward = j.at("reward").get<double>();
    s.done = j.at("done").get<bool>();
    s.flags = flags_from_json(j.at("flags"));
    s.position = j.at("pos").get<int>();
    s.next_position = j.at("next_pos").get<int>();
    return s;
}

Json parse_line(const std::string& line, std::size_t number) {
    try {
        return Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("jsonl line " + std::to_string(number) + ": " + e.what());
    }
}

// Shared reader for plain and scored corpora.
struct CorpusReader {
    TrajectorySet set;
    std::vector<std::pair<int, std::string>> scores;
    bool has_set_header = false;

    void read(std::istream& in) {
        std::string line;
        std::size_t number = 0;
        try {
            while (std::getline(in, line)) {
                ++number;
                if (line.empty()) continue;
                const Json j = parse_line(line, number);
                if (j.contains("type") && j.at("type") == "trajectory_set") {
                    has_set_header = true;
                    set.config_hash = j.at("config_hash").get<std::string>();
                    set.learner_hash = j.at("learner_hash").get<std::string>();
                    set.seed = j.at("seed").get<std::uint64_t>();
                    set.first_episode = j.at("first_episode").get<std::uint64_t>();
                    set.last_episode = j.at("last_episode").get<std::uint64_t>();
                } else if (j.contains("config_hash")) {
                    Trajectory t;
                    t.config_hash = j.at("config_hash").get<std::string>();
                    t.seed = j.at("seed").get<std::uint64_t>();
                    set.trajectories.push_back(std::move(t));
                } else if (j.contains("score")) {
                    if (set.trajectories.size() != scores.size() + 1)
                        throw DataError("jsonl line " + std::to_string(number) + ": score record without trajectory");
                    scores.emplace_back(j.at("score").get<int>(), j.at("intent_spec_hash").get<std::string>());
                } else {
                    if (set.trajectories.empty())
                        throw DataError("jsonl line " + std::to_string(number) + ": step before any header");
                    set.trajectories.back().steps.push_back(step_from_json(j));
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError("jsonl line " + std::to_string(number) + ": " + e.what());
        }
        if (!has_set_header && !set.trajectories.empty()) set.config_hash = set.trajectories.front().config_hash;
    }
};

Json matrix_to_json(const Eigen::MatrixXd& m) {
    return {{"rows", m.rows()},
            {"cols", m.cols()},
            {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw DataError("matrix: data size mismatch");
    return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

Json encoding_to_json(const ObservationEncoding& e) { return {{"kind", to_string(e.kind)}, {"dim", e.dim}}; }

ObservationEncoding encoding_from_json(const Json& j) {
    ObservationEncoding e;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "grid_nav")
        e.kind = EnvKind::grid_nav;
    else if (kind == "lane_world")
        e.kind = EnvKind::lane_world;
    else
        throw DataError("encoding: unknown kind '" + kind + "'");
    e.dim = j.at("dim").get<std::size_t>();
    return e;
}

void expect_format(const Json& j, const char* format, int version) {
    if (!j.is_object() || j.value("format", "") != format)
        throw DataError(std::string("expected a '") + format + "' document");
    if (j.value("version", 0) != version)
        throw DataError(std::string(format) + ": unsupported version " + std::to_string(j.value("version", 0)));
}

}  // namespace

// ----------------------------------------------------------------- configs

Json to_json(const EnvConfig& config) {
    if (const auto* g = std::get_if<GridNavConfig>(&config)) {
        Json desired = Json::array(), undesired = Json::array();
        for (Cell c : g->desired_cells) desired.push_back(cell_to_json(c));
        for (Cell c : g->undesired_cells) undesired.push_back(cell_to_json(c));
        return {{"env", "grid_nav"},           {"width", g->width},          {"height", g->height},
                {"start", cell_to_json(g->start)}, {"target", cell_to_json(g->target)},
                {"max_steps", g->max_steps},   {"desired_cells", desired}, {"undesired_cells", undesired}};
    }
    const auto& l = std::get<LaneWorldConfig>(config);
    Json j = {{"env", "lane_world"},         {"num_lanes", l.num_lanes},
              {"horizon", l.horizon},        {"speed_levels", l.speed_levels},
              {"obstacle_rate", l.obstacle_rate}, {"start_lane", l.start_lane}};
    j["desired_lane"] = l.desired_lane ? Json(*l.desired_lane) : Json(nullptr);
    j["undesired_lane"] = l.undesired_lane ? Json(*l.undesired_lane) : Json(nullptr);
    return j;
}

EnvConfig env_config_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("env: expected a JSON object");
    const auto kind = required<std::string>(j, "env", "env");
    if (kind == "grid_nav") {
        check_keys(j, "grid_nav",
                   {"env", "width", "height", "start", "target", "max_steps", "desired_cells", "undesired_cells"});
        GridNavConfig g;
        g.width = field(j, "grid_nav", "width", g.width);
        g.height = field(j, "grid_nav", "height", g.height);
        if (j.contains("start")) g.start = cell_from_json(j.at("start"), "start");
        if (j.contains("target")) g.target = cell_from_json(j.at("target"), "target");
        g.max_steps = field(j, "grid_nav", "max_steps", g.max_steps);
        g.desired_cells = cells_from_json(j, "desired_cells");
        g.undesired_cells = cells_from_json(j, "undesired_cells");
        g.validate();
        return g;
    }
    if (kind == "lane_world") {
        check_keys(j, "lane_world",
                   {"env", "num_lanes", "horizon", "speed_levels", "obstacle_rate", "start_lane", "desired_lane",
                    "undesired_lane"});
        LaneWorldConfig l;
        l.num_lanes = field(j, "lane_world", "num_lanes", l.num_lanes);
        l.horizon = field(j, "lane_world", "horizon", l.horizon);
        l.speed_levels = field(j, "lane_world", "speed_levels", l.speed_levels);
        l.obstacle_rate = field(j, "lane_world", "obstacle_rate", l.obstacle_rate);
        l.start_lane = field(j, "lane_world", "start_lane", l.start_lane);
        if (j.contains("desired_lane") && !j.at("desired_lane").is_null())
            l.desired_lane = field<int>(j, "lane_world", "desired_lane", 0);
        if (j.contains("undesired_lane") && !j.at("undesired_lane").is_null())
            l.undesired_lane = field<int>(j, "lane_world", "undesired_lane", 0);
        l.validate();
        return l;
    }
    throw ConfigError("env: field 'env' must be grid_nav or lane_world, got '" + kind + "'");
}

Json to_json(const LearnerConfig& c) {
    return {{"episodes", c.episodes},
            {"learning_rate", c.learning_rate},
            {"discount", c.discount},
            {"epsilon_start", c.epsilon_start},
            {"epsilon_min", c.epsilon_min},
            {"epsilon_decay", c.epsilon_decay},
            {"replay_capacity", c.replay_capacity},
            {"batch_size", c.batch_size},
            {"target_sync_interval", c.target_sync_interval},
            {"hidden_layers", c.hidden_layers}};
}

LearnerConfig learner_config_from_json(const Json& j, EnvKind kind) {
    LearnerConfig c = LearnerConfig::defaults_for(kind);
    check_keys(j, "learner",
               {"episodes", "learning_rate", "discount", "epsilon_start", "epsilon_min", "epsilon_decay",
                "replay_capacity", "batch_size", "target_sync_interval", "hidden_layers"});
    c.episodes = field(j, "learner", "episodes", c.episodes);
    c.learning_rate = field(j, "learner", "learning_rate", c.learning_rate);
    c.discount = field(j, "learner", "discount", c.discount);
    c.epsilon_start = field(j, "learner", "epsilon_start", c.epsilon_start);
    c.epsilon_min = field(j, "learner", "epsilon_min", c.epsilon_min);
    c.epsilon_decay = field(j, "learner", "epsilon_decay", c.epsilon_decay);
    c.replay_capacity = field(j, "learner", "replay_capacity", c.replay_capacity);
    c.batch_size = field(j, "learner", "batch_size", c.batch_size);
    c.target_sync_interval = field(j, "learner", "target_sync_interval", c.target_sync_interval);
    c.hidden_layers = field(j, "learner", "hidden_layers", c.hidden_layers);
    c.validate();
    return c;
}

Json to_json(const IntentSpec& s) {
    return {{"mode", to_string(s.mode)},        {"env", to_string(s.env)},
            {"position_count", s.position_count}, {"preferred", s.preferred},
            {"avoided", s.avoided},             {"count_start", s.count_start}};
}

IntentSpec intent_spec_from_json(const Json& j, const EnvConfig& env) {
    check_keys(j, "intent", {"mode", "env", "position_count", "preferred", "avoided", "count_start"});
    IntentSpec s;
    s.mode = intent_mode_from_string(required<std::string>(j, "intent", "mode"));
    s.env = kind_of(env);
    s.position_count = position_count(env);
    if (j.contains("env") && j.at("env") != to_string(s.env))
        throw ConfigError("intent: field 'env' does not match the environment");
    auto regions = [&](const char* key) {
        std::vector<int> out;
        if (!j.contains(key)) return out;
        if (!j.at(key).is_array()) throw ConfigError(std::string("intent: field '") + key + "' must be an array");
        for (const Json& r : j.at(key)) {
            if (r.is_number_integer()) {
                out.push_back(r.get<int>());
            } else if (const auto* g = std::get_if<GridNavConfig>(&env)) {
                const Cell c = cell_from_json(r, key);
                if (!g->in_bounds(c)) throw ConfigError(std::string("intent: field '") + key + "' cell out of bounds");
                out.push_back(g->index_of(c));
            } else {
                throw ConfigError(std::string("intent: field '") + key + "' must hold lane indices");
            }
        }
        return out;
    };
    s.preferred = regions("preferred");
    s.avoided = regions("avoided");
    s.count_start = field(j, "intent", "count_start", s.count_start);
    s.validate();
    return s;
}

Json to_json(const IntentTrainConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay},
            {"gradient_clip", c.gradient_clip}, {"adam_beta1", c.adam_beta1},
            {"adam_beta2", c.adam_beta2},       {"adam_epsilon", c.adam_epsilon},
            {"epochs", c.epochs},               {"batch_size", c.batch_size},
            {"patience", c.patience},           {"validation_fraction", c.validation_fraction}};
}

IntentTrainConfig intent_train_config_from_json(const Json& j) {
    check_keys(j, "intent_train",
               {"learning_rate", "weight_decay", "gradient_clip", "adam_beta1", "adam_beta2", "adam_epsilon",
                "epochs", "batch_size", "patience", "validation_fraction"});
    IntentTrainConfig c;
    c.learning_rate = field(j, "intent_train", "learning_rate", c.learning_rate);
    c.weight_decay = field(j, "intent_train", "weight_decay", c.weight_decay);
    c.gradient_clip = field(j, "intent_train", "gradient_clip", c.gradient_clip);
    c.adam_beta1 = field(j, "intent_train", "adam_beta1", c.adam_beta1);
    c.adam_beta2 = field(j, "intent_train", "adam_beta2", c.adam_beta2);
    c.adam_epsilon = field(j, "intent_train", "adam_epsilon", c.adam_epsilon);
    c.epochs = field(j, "intent_train", "epochs", c.epochs);
    c.batch_size = field(j, "intent_train", "batch_size", c.batch_size);
    c.patience = field(j, "intent_train", "patience", c.patience);
    c.validation_fraction = field(j, "intent_train", "validation_fraction", c.validation_fraction);
    c.validate();
    return c;
}

std::string config_hash(const EnvConfig& config) { return hash_of(to_json(config)); }
std::string learner_config_hash(const LearnerConfig& config) { return hash_of(to_json(config)); }
std::string intent_hash(const IntentSpec& spec) { return hash_of(to_json(spec)); }

// ------------------------------------------------------------ trajectories

void write_trajectory(std::ostream& out, const Trajectory& trajectory) {
    out << Json{{"config_hash", trajectory.config_hash}, {"seed", trajectory.seed}}.dump() << '\n';
    for (const Step& s : trajectory.steps) out << step_to_json(s).dump() << '\n';
}

void write_trajectory_set(std::ostream& out, const TrajectorySet& set) {
    out << Json{{"type", "trajectory_set"},
                {"config_hash", set.config_hash},
                {"learner_hash", set.learner_hash},
                {"seed", set.seed},
                {"first_episode", set.first_episode},
                {"last_episode", set.last_episode},
                {"count", set.size()}}
               .dump()
        << '\n';
    for (const Trajectory& t : set.trajectories) write_trajectory(out, t);
}

TrajectorySet read_trajectory_set(std::istream& in) {
    CorpusReader reader;
    reader.read(in);
    return std::move(reader.set);
}

void write_scored_set(std::ostream& out, const ScoredTrajectorySet& set) {
    for (const ScoredTrajectory& s : set) {
        write_trajectory(out, s.trajectory);
        out << Json{{"score", s.score}, {"intent_spec_hash", s.intent_hash}}.dump() << '\n';
    }
}

ScoredTrajectorySet read_scored_set(std::istream& in) {
    CorpusReader reader;
    reader.read(in);
    if (reader.scores.size() != reader.set.trajectories.size())
        throw DataError("scored corpus: every trajectory needs a score record");
    ScoredTrajectorySet out;
    out.reserve(reader.scores.size());
    for (std::size_t i = 0; i < reader.scores.size(); ++i)
        out.push_back({std::move(reader.set.trajectories[i]), reader.scores[i].first, reader.scores[i].second});
    return out;
}

// ------------------------------------------------------------------ models

Json to_json(const QFunction& q) {
    Json j = {{"format", "dynfusion.qfunction"}, {"version", 1}, {"action_count", q.action_count()}};
    if (q.kind() == QFunction::Kind::tabular) {
        j["kind"] = "tabular";
        j["state_count"] = q.state_count();
        j["values"] = q.table();
        return j;
    }
    j["kind"] = "approximator";
    j["encoding"] = encoding_to_json(q.encoding());
    Json layers = Json::array();
    for (std::size_t i = 0; i < q.net().weights.size(); ++i)
        layers.push_back({{"weights", matrix_to_json(q.net().weights[i])},
                          {"bias", std::vector<double>(q.net().biases[i].data(),
                                                       q.net().biases[i].data() + q.net().biases[i].size())}});
    j["layers"] = layers;
    return j;
}

QFunction q_function_from_json(const Json& j) {
    expect_format(j, "dynfusion.qfunction", 1);
    try {
        const int actions = j.at("action_count").get<int>();
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "tabular") {
            QFunction q = QFunction::make_tabular(j.at("state_count").get<std::size_t>(), actions);
            const auto values = j.at("values").get<std::vector<double>>();
            if (values.size() != q.table().size()) throw DataError("qfunction: value array has the wrong size");
            q.table() = values;
            return q;
        }
        if (kind != "approximator") throw DataError("qfunction: unknown kind '" + kind + "'");
        Mlp net;
        for (const Json& layer : j.at("layers")) {
            net.weights.push_back(matrix_from_json(layer.at("weights")));
            const auto b = layer.at("bias").get<std::vector<double>>();
            net.biases.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
        }
        if (net.output_size() != actions) throw DataError("qfunction: output layer does not match action_count");
        return QFunction::make_approximator(std::move(net), encoding_from_json(j.at("encoding")));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("qfunction: ") + e.what());
    }
}

Json to_json(const IntentModel& model) {
    Json params = Json::object();
    model.params().for_each([&](const char* name, std::span<const double> s) {
        params[name] = std::vector<double>(s.begin(), s.end());
    });
    return {{"format", "dynfusion.intent_model"},
            {"version", 1},
            {"hidden_size", model.hidden_size()},
            {"lookahead", model.lookahead()},
            {"action_count", model.action_count()},
            {"encoding", encoding_to_json(model.encoding())},
            {"params", params}};
}

IntentModel intent_model_from_json(const Json& j) {
    expect_format(j, "dynfusion.intent_model", 1);
    try {
        IntentModel model(encoding_from_json(j.at("encoding")), j.at("action_count").get<int>(),
                          j.at("hidden_size").get<int>(), j.at("lookahead").get<int>());
        const Json& params = j.at("params");
        model.params().for_each([&](const char* name, std::span<double> s) {
            const auto values = params.at(name).get<std::vector<double>>();
            if (values.size() != s.size()) throw DataError(std::string("intent model: tensor '") + name + "' size");
            std::copy(values.begin(), values.end(), s.begin());
        });
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("intent model: ") + e.what());
    }
}

void write_loss_curve_csv(std::ostream& out, const std::vector<EpochLoss>& curve) {
    out << "epoch,L_m,L_c,L_e,L_total,heldout_L_total\n";
    out << std::setprecision(17);
    for (const EpochLoss& e : curve)
        out << e.epoch << ',' << e.train.main << ',' << e.train.continuous << ',' << e.train.lookahead << ','
            << e.train.total << ',' << e.heldout.total << '\n';
}

// ------------------------------------------------------------------- files

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json read_json_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

Json read_json_artifact(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("artifact '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << contents;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace dynfusion

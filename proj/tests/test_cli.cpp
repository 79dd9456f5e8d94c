#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "dynfusion/bench.hpp"

namespace fs = std::filesystem;
using namespace dynfusion;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(DYNFUSION_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Workdir {
    fs::path dir = fs::temp_directory_path() / "dynfusion_cli_test";
    Workdir() {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workdir() { fs::remove_all(dir); }
    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(dir / name) << text;
        return (dir / name).string();
    }
    std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

const char* kTinyConfig = R"({
  "env": {"env": "grid_nav", "width": 4, "height": 3, "start": [1, 0], "target": [1, 3], "max_steps": 8,
          "desired_cells": [[0, 1]], "undesired_cells": [[1, 2]]},
  "learner": {"episodes": 300},
  "morl_learner": {"episodes": 20},
  "intent_train": {"epochs": 3, "learning_rate": 0.003},
  "intent_hidden": 6,
  "feedback_corpus_size": 100,
  "seeds": 2, "episodes": 2,
  "modes": ["preference"],
  "variants": ["dqn", "dynamic"]
})";

}  // namespace

TEST_CASE("staged commands chain through the manifest") {
    Workdir w;
    const std::string cfg = w.write("cfg.json", kTinyConfig);
    const std::string intent = w.write("intent.json", R"({"mode": "preference", "preferred": [[0, 1]]})");
    REQUIRE(run("train-task --config " + cfg + " --out " + w / "run") == 0);
    REQUIRE(fs::exists(w / "run/manifest.json"));
    REQUIRE(run("label --corpus " + w / "run/corpus.jsonl" + " --intent " + intent + " --config " + cfg +
                " --sample 100 --out " + w / "run/scored.jsonl --manifest " + w / "run/manifest.json") == 0);
    REQUIRE(run("train-intent --scored " + w / "run/scored.jsonl" + " --config " + cfg + " --out " +
                w / "run/intent.json --manifest " + w / "run/manifest.json") == 0);
    CHECK(fs::exists(w / "run/intent.loss.csv"));
    REQUIRE(run("eval --manifest " + w / "run/manifest.json" + " --variant dqn,dynamic,morl --eta 0,1 --out " +
                w / "rep") == 0);
    const auto rows = parse_report_csv(read_file(w / "rep/metrics.csv"));
    CHECK(rows.size() == 4);
    CHECK(rows[0].variant == "dqn");
    CHECK(rows[1].param == "eta=0.0");
}

TEST_CASE("exit codes follow the error taxonomy") {
    Workdir w;
    CHECK(run("verify lemma1 -n 200 --out " + w / "v.json") == 0);
    CHECK(run("verify gradcheck --out " + w / "g.json") == 0);
    CHECK(run("verify gradcheck --corrupt-gradient --out " + w / "g2.json") == 3);
    CHECK(run("verify nonsense --out " + w / "v.json") == 1);
    CHECK(run("train-task --config " + w.write("bad.json", R"({"env": {"env": "maze"}})") + " --out " + w / "x") == 1);
    CHECK(run("train-task --config " + w / "missing.json --out " + w / "x") == 1);
    CHECK(run("eval --manifest " + w.write("m.json", R"({"artifacts": {}, "config": ")" +
                                                          w.write("c.json", kTinyConfig) + R"(", "seed": 1})") +
              " --out " + w / "r") == 2);
    CHECK(run("eval --manifest " + w / "m.json --variant ppo --out " + w / "r") == 1);
    CHECK(run("bogus") == 1);
}

TEST_CASE("the full pipeline writes reports") {
    Workdir w;
    const std::string cfg = w.write("cfg.json", kTinyConfig);
    REQUIRE(run("run --config " + cfg + " --out " + w / "full") == 0);
    const auto rows = parse_report_json(read_json_artifact(w / "full/metrics.json"));
    CHECK(rows.size() == 2);
    CHECK(rows == parse_report_csv(read_file(w / "full/metrics.csv")));
}

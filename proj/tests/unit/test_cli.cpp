#include <doctest.h>

#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using turngrab::cli::run;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Silences stdout/stderr for the duration of a run.
int quiet(const std::vector<std::string>& args) {
    std::ostringstream sink;
    auto* out = std::cout.rdbuf(sink.rdbuf());
    auto* err = std::cerr.rdbuf(sink.rdbuf());
    const int code = run(args);
    std::cout.rdbuf(out);
    std::cerr.rdbuf(err);
    return code;
}

std::vector<std::string> tiny_net() {
    return {"--conv1", "4", "--conv2", "8", "--layers", "1", "--lstm-dim", "8", "--epochs", "3", "--batch-size", "32"};
}

// synth -> extract -> train -> eval in `dir`; returns the metrics file.
fs::path pipeline(const fs::path& dir, const std::string& seed) {
    const auto s = dir.string();
    REQUIRE(quiet({"--seed", seed, "synth", "--out", s + "/sessions", "--sessions", "1", "--length", "120"}) == 0);
    REQUIRE(quiet({"--seed", seed, "extract", "--tracks", s + "/sessions", "--out", s + "/pu.json"}) == 0);
    REQUIRE(quiet({"--seed", seed, "extract", "--tracks", s + "/sessions", "--out", s + "/val.json", "--mode",
                   "labeled", "--unlabeled-per-minute", "30"}) == 0);
    std::vector<std::string> train{"--seed", seed, "train", "--data", s + "/pu.json", "--val", s + "/val.json", "--out",
                                   s + "/model.bin"};
    for (const auto& a : tiny_net()) train.push_back(a);
    REQUIRE(quiet(train) == 0);
    REQUIRE(quiet({"--seed", seed, "eval", "--model", s + "/model.bin", "--data", s + "/val.json", "--out",
                   s + "/metrics.json"}) == 0);
    return dir / "metrics.json";
}

}  // namespace

TEST_CASE("help and usage errors") {
    CHECK(quiet({"--help"}) == turngrab::cli::kExitOk);
    CHECK(quiet({"train", "--help"}) == turngrab::cli::kExitOk);
    CHECK(quiet({}) == turngrab::cli::kExitUsage);
    CHECK(quiet({"train", "--val", "v.json", "--out", "m.bin"}) == turngrab::cli::kExitUsage);
    CHECK(quiet({"frobnicate"}) == turngrab::cli::kExitUsage);
    CHECK(quiet({"train", "--data", "a", "--val", "b", "--out", "c", "--estimator", "svm"}) ==
          turngrab::cli::kExitUsage);
}

TEST_CASE("data errors exit with code 2") {
    const auto dir = fixtures::temp_dir("cli_data_error");
    CHECK(quiet({"eval", "--model", (dir / "none.bin").string(), "--data", (dir / "none.json").string(), "--out",
                 (dir / "m.json").string()}) == turngrab::cli::kExitData);
    std::ofstream(dir / "f.csv") << "frame,timestamp\n1,0\n";
    std::ofstream(dir / "a.csv") << "frame,face_id,score\n";
    CHECK(quiet({"ingest", "--features", (dir / "f.csv").string(), "--asd", (dir / "a.csv").string(), "--video-id",
                 "v", "--out", (dir / "t").string()}) == turngrab::cli::kExitData);
}

TEST_CASE("two minute synthetic pipeline runs end to end and is reproducible") {
    const auto a = pipeline(fixtures::temp_dir("cli_pipeline_a"), "3");
    const auto b = pipeline(fixtures::temp_dir("cli_pipeline_b"), "3");
    const auto text = slurp(a);
    REQUIRE_FALSE(text.empty());
    const auto j = nlohmann::json::parse(text);
    CHECK(j.contains("mcc"));
    CHECK(j.contains("auc"));
    CHECK(text == slurp(b));
    CHECK(fs::exists(a.parent_path() / "model.history.json"));
    CHECK(fs::exists(a.parent_path() / "model.config.json"));
}

TEST_CASE("config file supplies flags and explicit flags win") {
    const auto dir = fixtures::temp_dir("cli_config");
    const auto s = dir.string();
    std::ofstream(dir / "cfg.json") << R"({"sessions": 2, "length": 30, "video-id": "fromfile"})";
    REQUIRE(quiet({"--config", s + "/cfg.json", "synth", "--out", s + "/out", "--length", "20"}) == 0);
    CHECK(fs::exists(dir / "out" / "fromfile_0"));
    CHECK(fs::exists(dir / "out" / "fromfile_1"));
    const auto cfg = nlohmann::json::parse(slurp(dir / "out" / "synth_config.json"));
    CHECK(cfg["synth"]["session_len"] == 20.0);
    CHECK(cfg["sessions"] == 2);
}

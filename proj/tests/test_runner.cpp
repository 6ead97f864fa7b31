#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "uprop/runner.hpp"

using namespace uprop;
using nlohmann::json;

namespace {

const char* kMinimal = R"JSON(
{
  // minimal valid scenario
  "name": "mini",
  "model": { "id": "ou", "rate": 1.0, "sigma": 0.5 },
  "initial": { "kind": "deterministic", "mean": [1.0] },
  "time": { "t0_s": 0.0, "tf_s": 0.5 },
  "method": "plasma",
  "plasma": { "order": 2, "scheme": "euler_maruyama", "step_s": 0.01 }
}
)JSON";

std::filesystem::path temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("uprop_test_" + tag);
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("config parsing fills defaults and round-trips") {
    const json cfg = parse_config(kMinimal);
    CHECK(cfg["schema_version"] == 1);
    CHECK(cfg["threads"] == 1);
    CHECK(cfg["plasma"]["substeps"] == 1);
    CHECK(cfg["output"]["dir"] == "out/mini");
    // parse(serialize(parse(x))) == parse(x)
    const json again = parse_config(serialize_config(cfg));
    CHECK(again == cfg);
}

TEST_CASE("validation errors carry field paths") {
    auto expect_error = [](const std::string& text, const std::string& field) {
        try {
            parse_config(text);
            CHECK_MESSAGE(false, "expected rejection for ", field);
        } catch (const ConfigError& e) {
            CHECK(e.field == field);
        }
    };
    expect_error(R"({"name":"x"})", "$.method");
    expect_error(R"({"name":"x","method":"plasma","model":{"id":"nope"},
                    "initial":{"kind":"deterministic","mean":[1.0]},
                    "time":{"t0_s":0,"tf_s":1}})",
                 "model.id");
    expect_error(R"({"name":"x","method":"warp","model":{"id":"ou"},
                    "initial":{"kind":"deterministic","mean":[1.0]},
                    "time":{"t0_s":0,"tf_s":1}})",
                 "method");
    expect_error(R"({"name":"x","method":"plasma","model":{"id":"ou"},
                    "initial":{"kind":"gaussian","mean":[1.0],"cov_diag":[0.1]},
                    "time":{"t0_s":0,"tf_s":1},"plasma":{"step_s":0.1}})",
                 "initial.kind");
    expect_error(R"({"name":"x","method":"plasma","model":{"id":"ou"},
                    "initial":{"kind":"deterministic","mean":[1.0]},
                    "time":{"t0_s":1,"tf_s":0},"plasma":{"step_s":0.1}})",
                 "time.tf_s");
}

TEST_CASE("bundled scenarios all validate") {
    const auto& presets = bundled_scenarios();
    CHECK(presets.size() >= 6);
    for (const auto& [name, text] : presets) {
        const json cfg = parse_config(text);
        CHECK(cfg["name"] == name);
    }
    CHECK_THROWS_AS(load_config("no_such_scenario_or_file"), ConfigError);
}

TEST_CASE("run_scenario produces artifacts and a manifest") {
    const auto dir = temp_dir("mini");
    RunOptions opts;
    opts.out_dir = dir.string();
    const auto summary = run_scenario(parse_config(kMinimal), opts);
    CHECK(summary.checks_passed);
    CHECK(std::filesystem::exists(dir / "mean.csv"));
    CHECK(std::filesystem::exists(dir / "cov.csv"));
    CHECK(std::filesystem::exists(dir / "moments.txt"));
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    std::ifstream mf(dir / "manifest.json");
    const json manifest = json::parse(mf);
    CHECK(manifest.contains("config_hash"));
    CHECK(manifest["config"]["name"] == "mini");
    CHECK(manifest["wall_times_s"].contains("total"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("duffing oracle scenario passes its machine-precision check") {
    const auto dir = temp_dir("duffing");
    RunOptions opts;
    opts.out_dir = dir.string();
    const auto summary = run_scenario(load_config("duffing_oracle"), opts);
    CHECK(summary.checks_passed);
    bool found = false;
    for (const auto& line : summary.lines) {
        if (line.find("PASS closed-form moment check") != std::string::npos) found = true;
    }
    CHECK(found);
    std::filesystem::remove_all(dir);
}

TEST_CASE("environment variable overrides the output directory") {
    const auto dir = temp_dir("envdir");
    setenv("UPROP_OUT_DIR", dir.c_str(), 1);
    const auto summary = run_scenario(parse_config(kMinimal), RunOptions{});
    unsetenv("UPROP_OUT_DIR");
    CHECK(summary.out_dir == dir.string());
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("mc runs are reproducible from the manifest seed") {
    const char* mc_cfg = R"JSON(
{
  "name": "mc_repro",
  "model": { "id": "ou", "rate": 1.0, "sigma": 0.5 },
  "initial": { "kind": "gaussian", "mean": [1.0], "cov_diag": [0.04] },
  "time": { "t0_s": 0.0, "tf_s": 0.5 },
  "method": "mc",
  "mc": { "n_paths": 64, "seed": 77, "scheme": "euler_maruyama", "step_s": 0.01 }
}
)JSON";
    const auto dir1 = temp_dir("mc1");
    const auto dir2 = temp_dir("mc2");
    RunOptions o1;
    o1.out_dir = dir1.string();
    o1.threads = 1;
    RunOptions o2;
    o2.out_dir = dir2.string();
    o2.threads = 8;
    run_scenario(parse_config(mc_cfg), o1);
    run_scenario(parse_config(mc_cfg), o2);
    std::ifstream f1(dir1 / "samples.csv"), f2(dir2 / "samples.csv");
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    CHECK(!s1.str().empty());
    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
}

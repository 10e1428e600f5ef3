#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "switchq/run_config.hpp"

using namespace switchq;

namespace {

const char* kMinimalMarkovian = R"({
  "model": {"family": "benchmark_gbm"},
  "scheme": {"markovian": {"m": 5, "delta_inv": 5.0, "n_quant": 4}},
  "seed": 7
})";

RunConfig parse_ok(const std::string& text) {
    auto parsed = parse_config(text);
    REQUIRE(std::holds_alternative<RunConfig>(parsed));
    return std::get<RunConfig>(parsed);
}

std::vector<ConfigError> parse_bad(const std::string& text) {
    auto parsed = parse_config(text);
    REQUIRE(std::holds_alternative<std::vector<ConfigError>>(parsed));
    return std::get<std::vector<ConfigError>>(parsed);
}

bool mentions(const std::vector<ConfigError>& errors, const std::string& field) {
    for (const auto& e : errors)
        if (e.field.find(field) != std::string::npos) return true;
    return false;
}

std::string read_all(const std::filesystem::path& p) {
    std::ifstream is(p);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("minimal config round-trips to identical canonical JSON") {
    const RunConfig a = parse_ok(kMinimalMarkovian);
    const std::string canon = a.canonical_json();
    const RunConfig b = parse_ok(canon);
    CHECK(b.canonical_json() == canon);
    CHECK(a.seed == 7);
    REQUIRE(a.markovian.has_value());
    CHECK(a.markovian->m == 5);
    CHECK_FALSE(a.marginal.has_value());
}

TEST_CASE("nonpositive space step is rejected naming the field") {
    const auto errors = parse_bad(R"({
      "model": {"family": "benchmark_gbm"},
      "scheme": {"markovian": {"m": 5, "delta_inv": -2.0, "n_quant": 4}}
    })");
    CHECK(mentions(errors, "delta_inv"));
}

TEST_CASE("both scheme blocks present is rejected") {
    const auto errors = parse_bad(R"({
      "model": {"family": "benchmark_gbm"},
      "scheme": {
        "markovian": {"m": 5, "delta_inv": 5.0, "n_quant": 4},
        "marginal": {"m": 5, "nbar": 50}
      }
    })");
    CHECK(mentions(errors, "scheme"));
    bool exactly_one = false;
    for (const auto& e : errors)
        if (e.message.find("exactly one scheme") != std::string::npos) exactly_one = true;
    CHECK(exactly_one);
}

TEST_CASE("unknown keys are rejected at every level") {
    const auto errors = parse_bad(R"({
      "model": {"family": "benchmark_gbm", "params": {"sigma": 1.0, "sgima": 2.0}},
      "scheme": {"markovian": {"m": 5, "delta_inv": 5.0, "n_quant": 4, "bogus": 1}},
      "extra": true
    })");
    CHECK(mentions(errors, "sgima"));
    CHECK(mentions(errors, "bogus"));
    CHECK(mentions(errors, "extra"));
}

TEST_CASE("missing keys and type mismatches are all collected") {
    const auto errors = parse_bad(R"({
      "model": {"family": "gbm_per_regime", "params": {"q": 2, "x0": "three"}},
      "scheme": {"marginal": {"m": 5}}
    })");
    CHECK(mentions(errors, "x0"));
    CHECK(mentions(errors, "b"));      // missing per-regime arrays
    CHECK(mentions(errors, "nbar"));   // missing scheme key
    CHECK(errors.size() >= 5);
}

TEST_CASE("negative sample counts are rejected, not wrapped") {
    const auto e1 = parse_bad(R"({
      "model": {"family": "benchmark_gbm"},
      "scheme": {"markovian": {"m": 5, "delta_inv": 5.0, "n_quant": 4,
                               "quant_samples": -3}}
    })");
    CHECK(mentions(e1, "quant_samples"));
    const auto e2 = parse_bad(R"({
      "model": {"family": "benchmark_gbm"},
      "scheme": {"marginal": {"m": 5, "nbar": 50, "n_train": -1, "n_mc": -5}}
    })");
    CHECK(mentions(e2, "n_train"));
    CHECK(mentions(e2, "n_mc"));
}

TEST_CASE("invalid JSON is a single root error") {
    const auto errors = parse_bad("{not json");
    REQUIRE(errors.size() == 1);
    CHECK(errors[0].message == "not valid JSON");
}

TEST_CASE("build_model: per-regime family evaluates as configured") {
    const RunConfig cfg = parse_ok(R"({
      "model": {"family": "gbm_per_regime", "params": {
        "q": 2, "b": [0.0, 0.1], "sigma": [1.0, 0.5], "beta": 0.5,
        "k": [2.0, 1.0], "gamma": [0.5, 0.5],
        "cost": [[0.0, 0.4], [0.4, 0.0]], "x0": 2.0, "horizon": 1.0}},
      "scheme": {"markovian": {"m": 4, "delta_inv": 4.0, "n_quant": 2}}
    })");
    const ModelBundle mb = build_model(cfg);
    CHECK(mb.model.q == 2);
    CHECK(mb.x0[0] == 2.0);
    CHECK(mb.model.drift(Vec::Constant(1, 2.0), 1)[0] == doctest::Approx(0.2));
    CHECK(mb.model.diffusion(Vec::Constant(1, 2.0), 1)(0, 0) == doctest::Approx(1.0));
    CHECK(mb.model.running_profit(0.0, Vec::Constant(1, 4.0), 0) == doctest::Approx(4.0));
    CHECK(mb.model.switch_cost(Vec::Zero(1), 0, 1) == doctest::Approx(0.4));
}

TEST_CASE("build_model: affine family in two dimensions") {
    const RunConfig cfg = parse_ok(R"({
      "model": {"family": "affine", "params": {
        "d": 2, "q": 2,
        "drift_const": [[0.1, 0.0], [0.0, 0.0]],
        "drift_lin": [[[0.0, 0.0], [0.0, 0.0]], [[-0.5, 0.0], [0.0, -0.5]]],
        "diffusion": [[[0.3, 0.0], [0.0, 0.3]], [[0.5, 0.0], [0.0, 0.5]]],
        "profit_const": [1.0, 0.0], "profit_lin": [[0.0, 0.0], [1.0, 1.0]],
        "gain_const": [0.0, 0.0], "gain_lin": [[0.0, 0.0], [0.0, 0.0]],
        "beta": 0.0, "cost": [[0.0, 0.7], [0.7, 0.0]],
        "x0": [1.0, -1.0], "horizon": 1.0}},
      "scheme": {"markovian": {"m": 3, "delta_inv": 2.0, "n_quant": 2}}
    })");
    const ModelBundle mb = build_model(cfg);
    CHECK(mb.model.d == 2);
    const Vec x = (Vec(2) << 2.0, 1.0).finished();
    CHECK(mb.model.drift(x, 1)[0] == doctest::Approx(-1.0));
    CHECK(mb.model.running_profit(0.0, x, 1) == doctest::Approx(3.0));
    CHECK(mb.x0[1] == -1.0);
}

TEST_CASE("run: full determinism, manifest, and artifacts") {
    namespace fs = std::filesystem;
    const fs::path dir1 = fs::temp_directory_path() / "switchq_run_a";
    const fs::path dir2 = fs::temp_directory_path() / "switchq_run_b";
    fs::remove_all(dir1);
    fs::remove_all(dir2);

    auto config_for = [](const fs::path& dir) {
        return std::string(R"({
          "model": {"family": "benchmark_gbm"},
          "scheme": {"markovian": {"m": 5, "delta_inv": 4.0, "n_quant": 8,
                                   "quant_samples": 20000}},
          "seed": 3,
          "output_dir": ")") + dir.string() + "\"}";
    };

    std::ostringstream log1, log2;
    CHECK(run(parse_ok(config_for(dir1)), log1) == 0);
    CHECK(run(parse_ok(config_for(dir2)), log2) == 0);

    for (const char* name : {"surface.csv", "summary.csv"}) {
        const std::string a = read_all(dir1 / name);
        const std::string b = read_all(dir2 / name);
        CHECK(!a.empty());
        CHECK(a == b);
    }
    const std::string manifest = read_all(dir1 / "manifest.json");
    CHECK(manifest.find("config_hash") != std::string::npos);
    CHECK(manifest.find("\"seed\": 3") != std::string::npos);
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("run: marginal scheme writes the tree artifacts deterministically") {
    namespace fs = std::filesystem;
    const fs::path dir1 = fs::temp_directory_path() / "switchq_run_m1";
    const fs::path dir2 = fs::temp_directory_path() / "switchq_run_m2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    auto config_for = [](const fs::path& dir) {
        return std::string(R"({
          "model": {"family": "benchmark_gbm"},
          "scheme": {"marginal": {"m": 4, "nbar": 24, "n_train": 20000, "n_mc": 20000}},
          "seed": 5,
          "output_dir": ")") + dir.string() + "\"}";
    };
    std::ostringstream log1, log2;
    CHECK(run(parse_ok(config_for(dir1)), log1) == 0);
    CHECK(run(parse_ok(config_for(dir2)), log2) == 0);
    for (const char* name : {"quantization.mq1", "tree.csv", "summary.csv"}) {
        const std::string a = read_all(dir1 / name);
        const std::string b = read_all(dir2 / name);
        CHECK(!a.empty());
        CHECK(a == b);
    }
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("run_validate: violated cost condition exits with code 2") {
    const RunConfig cfg = parse_ok(R"({
      "model": {"family": "gbm_per_regime", "params": {
        "q": 2, "b": [0.0, 0.0], "sigma": [1.0, 1.0], "beta": 1.0,
        "k": [1.0, 1.0], "gamma": [0.5, 0.5],
        "cost": [[0.0, -1.0], [0.5, 0.0]], "x0": 1.0, "horizon": 1.0}},
      "scheme": {"markovian": {"m": 2, "delta_inv": 2.0, "n_quant": 2}}
    })");
    std::ostringstream log;
    CHECK(run_validate(cfg, log) == 2);
    CHECK(log.str().find("FAIL") != std::string::npos);
}

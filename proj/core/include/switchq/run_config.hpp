#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "switchq/model.hpp"

namespace switchq {

struct MarkovianParams {
    int m = 10;
    double delta_inv = 10.0;
    double r_mult = 10.0;          // ball radius = r_mult * |x0| (or r if set)
    double r = 0.0;                // explicit radius, overrides r_mult when > 0
    double center = 0.0;           // lattice center (every coordinate)
    int n_quant = 100;
    std::uint64_t quant_samples = 0;  // 0 = auto
    int quant_iters = 200;
};

struct MarginalParams {
    int m = 10;
    int nbar = 100;
    std::uint64_t n_train = 100'000;
    std::uint64_t n_mc = 1'000'000;
    int train_iters = 100;
};

// One parsed run: a built-in model family plus exactly one scheme block.
struct RunConfig {
    std::string family;          // benchmark_gbm | gbm_per_regime | affine
    std::string model_params;    // canonical JSON of the family parameters
    std::optional<MarkovianParams> markovian;
    std::optional<MarginalParams> marginal;
    std::uint64_t seed = 0;
    unsigned threads = 0;        // 0 = hardware concurrency
    std::string output_dir = ".";

    std::string canonical_json() const;
    std::uint64_t config_hash() const;  // FNV-1a of the canonical JSON
};

struct ConfigError {
    std::string field;
    std::string message;
};

// Parses and validates the documented JSON schema. Unknown keys are rejected;
// all violations are reported together.
std::variant<RunConfig, std::vector<ConfigError>> parse_config(const std::string& text);

struct ModelBundle {
    SwitchingModel model;
    Vec x0;
};

// Instantiates the built-in family described by the config.
ModelBundle build_model(const RunConfig& config);

// validate -> (train/quantize) -> solve -> report. Writes CSV artifacts and a
// manifest under output_dir; prints values at (t = 0, x0) per regime and the
// wall-clock breakdown to `log`. Exit codes: 0 success, 1 runtime failure,
// 2 validation failure.
int run(const RunConfig& config, std::ostream& log);

// Validation only (used by the `validate` subcommand); exit code semantics
// as for run().
int run_validate(const RunConfig& config, std::ostream& log);

}  // namespace switchq

#include "switchq/run_config.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>

#include "switchq/benchmark_tables.hpp"
#include "switchq/closed_form_gbm.hpp"
#include "switchq/gaussian_quantizer.hpp"
#include "switchq/lattice.hpp"
#include "switchq/marginal_quantization.hpp"
#include "switchq/marginal_solver.hpp"
#include "switchq/markovian_solver.hpp"
#include "switchq/parallel.hpp"
#include "switchq/version.hpp"

namespace switchq {

using nlohmann::json;

namespace {

double pos_pow(double x, double p) { return x > 0.0 ? std::pow(x, p) : 0.0; }

struct Collector {
    std::vector<ConfigError> errors;

    void add(const std::string& field, const std::string& message) {
        errors.push_back({field, message});
    }

    void reject_unknown(const json& obj, const std::string& path,
                        std::initializer_list<const char*> allowed) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            bool ok = false;
            for (const char* k : allowed)
                if (it.key() == k) {
                    ok = true;
                    break;
                }
            if (!ok) add(path + "." + it.key(), "unknown key");
        }
    }

    bool require_object(const json& obj, const std::string& path) {
        if (!obj.is_object()) {
            add(path, "must be an object");
            return false;
        }
        return true;
    }

    double number(const json& obj, const std::string& path, const char* key,
                  bool required, double fallback) {
        if (!obj.contains(key)) {
            if (required) add(path + "." + key, "missing required key");
            return fallback;
        }
        if (!obj[key].is_number()) {
            add(path + "." + key, "must be a number");
            return fallback;
        }
        return obj[key].get<double>();
    }

    std::int64_t integer(const json& obj, const std::string& path, const char* key,
                         bool required, std::int64_t fallback) {
        if (!obj.contains(key)) {
            if (required) add(path + "." + key, "missing required key");
            return fallback;
        }
        if (!obj[key].is_number_integer()) {
            add(path + "." + key, "must be an integer");
            return fallback;
        }
        return obj[key].get<std::int64_t>();
    }

    std::string text(const json& obj, const std::string& path, const char* key,
                     bool required, const std::string& fallback) {
        if (!obj.contains(key)) {
            if (required) add(path + "." + key, "missing required key");
            return fallback;
        }
        if (!obj[key].is_string()) {
            add(path + "." + key, "must be a string");
            return fallback;
        }
        return obj[key].get<std::string>();
    }

    void positive(double v, const std::string& field) {
        if (!(v > 0.0)) add(field, "must be > 0");
    }
};

std::vector<double> number_array(Collector& col, const json& obj, const std::string& path,
                                 const char* key, std::size_t want) {
    std::vector<double> out(want, 0.0);
    const std::string field = path + "." + key;
    if (!obj.contains(key)) {
        col.add(field, "missing required key");
        return out;
    }
    const json& arr = obj[key];
    if (!arr.is_array() || arr.size() != want) {
        col.add(field, "must be an array of " + std::to_string(want) + " numbers");
        return out;
    }
    for (std::size_t i = 0; i < want; ++i) {
        if (!arr[i].is_number()) {
            col.add(field, "must contain only numbers");
            return out;
        }
        out[i] = arr[i].get<double>();
    }
    return out;
}

std::vector<std::vector<double>> matrix(Collector& col, const json& obj,
                                        const std::string& path, const char* key,
                                        std::size_t rows, std::size_t cols) {
    std::vector<std::vector<double>> out(rows, std::vector<double>(cols, 0.0));
    const std::string field = path + "." + key;
    if (!obj.contains(key)) {
        col.add(field, "missing required key");
        return out;
    }
    const json& arr = obj[key];
    if (!arr.is_array() || arr.size() != rows) {
        col.add(field, "must be an array of " + std::to_string(rows) + " rows");
        return out;
    }
    for (std::size_t r = 0; r < rows; ++r) {
        if (!arr[r].is_array() || arr[r].size() != cols) {
            col.add(field, "row " + std::to_string(r) + " must have " +
                               std::to_string(cols) + " numbers");
            return out;
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if (!arr[r][c].is_number()) {
                col.add(field, "must contain only numbers");
                return out;
            }
            out[r][c] = arr[r][c].get<double>();
        }
    }
    return out;
}

json canonical_benchmark_gbm(Collector& col, const json& p) {
    const std::string path = "model.params";
    col.reject_unknown(p, path,
                       {"b", "sigma", "beta", "k1", "k2", "gamma1", "gamma2", "c12", "c21",
                        "x0", "horizon"});
    GBMSwitchParams def;
    json out;
    out["b"] = col.number(p, path, "b", false, def.b);
    out["sigma"] = col.number(p, path, "sigma", false, def.sigma);
    out["beta"] = col.number(p, path, "beta", false, def.beta);
    out["k1"] = col.number(p, path, "k1", false, def.k1);
    out["k2"] = col.number(p, path, "k2", false, def.k2);
    out["gamma1"] = col.number(p, path, "gamma1", false, def.gamma1);
    out["gamma2"] = col.number(p, path, "gamma2", false, def.gamma2);
    out["c12"] = col.number(p, path, "c12", false, def.c12);
    out["c21"] = col.number(p, path, "c21", false, def.c21);
    out["x0"] = col.number(p, path, "x0", false, def.x0);
    out["horizon"] = col.number(p, path, "horizon", false, def.horizon);
    col.positive(out["sigma"].get<double>(), path + ".sigma");
    col.positive(out["beta"].get<double>(), path + ".beta");
    col.positive(out["c12"].get<double>(), path + ".c12");
    col.positive(out["c21"].get<double>(), path + ".c21");
    col.positive(out["x0"].get<double>(), path + ".x0");
    col.positive(out["horizon"].get<double>(), path + ".horizon");
    return out;
}

json canonical_gbm_per_regime(Collector& col, const json& p) {
    const std::string path = "model.params";
    col.reject_unknown(p, path,
                       {"q", "b", "sigma", "beta", "k", "gamma", "cost", "x0", "horizon"});
    json out;
    const auto q64 = col.integer(p, path, "q", true, 1);
    if (q64 < 1 || q64 > 64) col.add(path + ".q", "must be in [1, 64]");
    const std::size_t q = static_cast<std::size_t>(std::max<std::int64_t>(1, q64));
    out["q"] = q64;
    out["b"] = number_array(col, p, path, "b", q);
    out["sigma"] = number_array(col, p, path, "sigma", q);
    out["beta"] = col.number(p, path, "beta", false, 0.0);
    out["k"] = number_array(col, p, path, "k", q);
    out["gamma"] = number_array(col, p, path, "gamma", q);
    out["cost"] = matrix(col, p, path, "cost", q, q);
    out["x0"] = col.number(p, path, "x0", true, 1.0);
    out["horizon"] = col.number(p, path, "horizon", false, 1.0);
    col.positive(out["horizon"].get<double>(), path + ".horizon");
    return out;
}

json canonical_affine(Collector& col, const json& p) {
    const std::string path = "model.params";
    col.reject_unknown(p, path,
                       {"d", "q", "drift_const", "drift_lin", "diffusion", "profit_const",
                        "profit_lin", "gain_const", "gain_lin", "beta", "cost", "x0",
                        "horizon"});
    json out;
    const auto d64 = col.integer(p, path, "d", true, 1);
    const auto q64 = col.integer(p, path, "q", true, 1);
    if (d64 < 1 || d64 > 16) col.add(path + ".d", "must be in [1, 16]");
    if (q64 < 1 || q64 > 64) col.add(path + ".q", "must be in [1, 64]");
    const std::size_t d = static_cast<std::size_t>(std::max<std::int64_t>(1, d64));
    const std::size_t q = static_cast<std::size_t>(std::max<std::int64_t>(1, q64));
    out["d"] = d64;
    out["q"] = q64;
    out["drift_const"] = matrix(col, p, path, "drift_const", q, d);
    {
        json lin = json::array();
        for (std::size_t i = 0; i < q; ++i) lin.push_back(json::array());
        const std::string field = path + ".drift_lin";
        if (!p.contains("drift_lin")) {
            col.add(field, "missing required key");
        } else if (!p["drift_lin"].is_array() || p["drift_lin"].size() != q) {
            col.add(field, "must be an array of " + std::to_string(q) + " matrices");
        } else {
            Collector sub;
            lin = json::array();
            for (std::size_t i = 0; i < q; ++i) {
                json holder;
                holder["m"] = p["drift_lin"][i];
                lin.push_back(matrix(sub, holder, field, "m", d, d));
            }
            for (auto& e : sub.errors) col.errors.push_back(e);
        }
        out["drift_lin"] = lin;
    }
    {
        json dif = json::array();
        const std::string field = path + ".diffusion";
        if (!p.contains("diffusion")) {
            col.add(field, "missing required key");
            for (std::size_t i = 0; i < q; ++i) dif.push_back(json::array());
        } else if (!p["diffusion"].is_array() || p["diffusion"].size() != q) {
            col.add(field, "must be an array of " + std::to_string(q) + " matrices");
            for (std::size_t i = 0; i < q; ++i) dif.push_back(json::array());
        } else {
            Collector sub;
            for (std::size_t i = 0; i < q; ++i) {
                json holder;
                holder["m"] = p["diffusion"][i];
                dif.push_back(matrix(sub, holder, field, "m", d, d));
            }
            for (auto& e : sub.errors) col.errors.push_back(e);
        }
        out["diffusion"] = dif;
    }
    out["profit_const"] = number_array(col, p, path, "profit_const", q);
    out["profit_lin"] = matrix(col, p, path, "profit_lin", q, d);
    out["gain_const"] = number_array(col, p, path, "gain_const", q);
    out["gain_lin"] = matrix(col, p, path, "gain_lin", q, d);
    out["beta"] = col.number(p, path, "beta", false, 0.0);
    out["cost"] = matrix(col, p, path, "cost", q, q);
    out["x0"] = number_array(col, p, path, "x0", d);
    out["horizon"] = col.number(p, path, "horizon", false, 1.0);
    col.positive(out["horizon"].get<double>(), path + ".horizon");
    return out;
}

}  // namespace

std::variant<RunConfig, std::vector<ConfigError>> parse_config(const std::string& text) {
    Collector col;
    json root = json::parse(text, nullptr, false);
    if (root.is_discarded()) {
        col.add("", "not valid JSON");
        return col.errors;
    }
    if (!col.require_object(root, "")) return col.errors;
    col.reject_unknown(root, "", {"model", "scheme", "seed", "threads", "output_dir"});

    RunConfig cfg;
    if (!root.contains("model")) {
        col.add("model", "missing required key");
    } else if (col.require_object(root["model"], "model")) {
        const json& model = root["model"];
        col.reject_unknown(model, "model", {"family", "params"});
        cfg.family = col.text(model, "model", "family", true, "");
        json params = model.contains("params") ? model["params"] : json::object();
        if (!params.is_object()) {
            col.add("model.params", "must be an object");
            params = json::object();
        }
        if (cfg.family == "benchmark_gbm")
            cfg.model_params = canonical_benchmark_gbm(col, params).dump();
        else if (cfg.family == "gbm_per_regime")
            cfg.model_params = canonical_gbm_per_regime(col, params).dump();
        else if (cfg.family == "affine")
            cfg.model_params = canonical_affine(col, params).dump();
        else if (!cfg.family.empty())
            col.add("model.family",
                    "unknown family (expected benchmark_gbm | gbm_per_regime | affine)");
    }

    if (root.contains("scheme")) {
        const json& scheme = root["scheme"];
        if (col.require_object(scheme, "scheme")) {
            col.reject_unknown(scheme, "scheme", {"markovian", "marginal"});
            if (scheme.contains("markovian") && scheme.contains("marginal"))
                col.add("scheme", "exactly one scheme block must be present");
            if (scheme.contains("markovian") &&
                col.require_object(scheme["markovian"], "scheme.markovian")) {
                const json& s = scheme["markovian"];
                const std::string path = "scheme.markovian";
                col.reject_unknown(s, path,
                                   {"m", "delta_inv", "r_mult", "r", "center", "n_quant",
                                    "quant_samples", "quant_iters"});
                MarkovianParams mp;
                mp.m = static_cast<int>(col.integer(s, path, "m", true, 1));
                mp.delta_inv = col.number(s, path, "delta_inv", true, 1.0);
                mp.r_mult = col.number(s, path, "r_mult", false, 10.0);
                mp.r = col.number(s, path, "r", false, 0.0);
                mp.center = col.number(s, path, "center", false, 0.0);
                mp.n_quant = static_cast<int>(col.integer(s, path, "n_quant", true, 1));
                const std::int64_t samples =
                    col.integer(s, path, "quant_samples", false, 0);
                mp.quant_iters =
                    static_cast<int>(col.integer(s, path, "quant_iters", false, 200));
                if (mp.m < 1) col.add(path + ".m", "must be >= 1");
                col.positive(mp.delta_inv, path + ".delta_inv");
                if (mp.r == 0.0) col.positive(mp.r_mult, path + ".r_mult");
                if (mp.r < 0.0) col.add(path + ".r", "must be >= 0 (0 means r_mult * x0)");
                if (mp.n_quant < 1) col.add(path + ".n_quant", "must be >= 1");
                if (samples < 0)
                    col.add(path + ".quant_samples", "must be >= 0 (0 means auto)");
                mp.quant_samples = static_cast<std::uint64_t>(std::max<std::int64_t>(0, samples));
                if (mp.quant_iters < 1) col.add(path + ".quant_iters", "must be >= 1");
                cfg.markovian = mp;
            }
            if (scheme.contains("marginal") &&
                col.require_object(scheme["marginal"], "scheme.marginal")) {
                const json& s = scheme["marginal"];
                const std::string path = "scheme.marginal";
                col.reject_unknown(s, path, {"m", "nbar", "n_train", "n_mc", "train_iters"});
                MarginalParams mp;
                mp.m = static_cast<int>(col.integer(s, path, "m", true, 1));
                mp.nbar = static_cast<int>(col.integer(s, path, "nbar", true, 1));
                const std::int64_t n_train = col.integer(s, path, "n_train", false, 100'000);
                const std::int64_t n_mc = col.integer(s, path, "n_mc", false, 1'000'000);
                mp.train_iters =
                    static_cast<int>(col.integer(s, path, "train_iters", false, 100));
                if (mp.m < 1) col.add(path + ".m", "must be >= 1");
                if (mp.nbar < mp.m) col.add(path + ".nbar", "must be >= m");
                if (n_train < 1) col.add(path + ".n_train", "must be > 0");
                if (n_mc < 10'000) col.add(path + ".n_mc", "must be >= 10000");
                mp.n_train = static_cast<std::uint64_t>(std::max<std::int64_t>(1, n_train));
                mp.n_mc = static_cast<std::uint64_t>(std::max<std::int64_t>(10'000, n_mc));
                if (mp.train_iters < 1) col.add(path + ".train_iters", "must be >= 1");
                cfg.marginal = mp;
            }
            if (!cfg.markovian && !cfg.marginal)
                col.add("scheme", "exactly one scheme block must be present");
        }
    } else {
        col.add("scheme", "missing required key");
    }

    const auto seed = col.integer(root, "", "seed", false, 0);
    if (seed < 0) col.add("seed", "must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(std::max<std::int64_t>(0, seed));
    const auto threads = col.integer(root, "", "threads", false, 0);
    if (threads < 0) col.add("threads", "must be >= 0");
    cfg.threads = static_cast<unsigned>(std::max<std::int64_t>(0, threads));
    cfg.output_dir = col.text(root, "", "output_dir", false, ".");

    if (!col.errors.empty()) return col.errors;
    return cfg;
}

std::string RunConfig::canonical_json() const {
    json root;
    root["model"]["family"] = family;
    root["model"]["params"] = json::parse(model_params);
    if (markovian) {
        const MarkovianParams& p = *markovian;
        json s;
        s["m"] = p.m;
        s["delta_inv"] = p.delta_inv;
        s["r_mult"] = p.r_mult;
        s["r"] = p.r;
        s["center"] = p.center;
        s["n_quant"] = p.n_quant;
        s["quant_samples"] = p.quant_samples;
        s["quant_iters"] = p.quant_iters;
        root["scheme"]["markovian"] = s;
    }
    if (marginal) {
        const MarginalParams& p = *marginal;
        json s;
        s["m"] = p.m;
        s["nbar"] = p.nbar;
        s["n_train"] = p.n_train;
        s["n_mc"] = p.n_mc;
        s["train_iters"] = p.train_iters;
        root["scheme"]["marginal"] = s;
    }
    root["seed"] = seed;
    root["threads"] = threads;
    root["output_dir"] = output_dir;
    return root.dump();
}

std::uint64_t RunConfig::config_hash() const {
    const std::string s = canonical_json();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

ModelBundle build_model(const RunConfig& config) {
    const json p = json::parse(config.model_params);
    ModelBundle out;
    if (config.family == "benchmark_gbm") {
        GBMSwitchParams params;
        params.b = p["b"];
        params.sigma = p["sigma"];
        params.beta = p["beta"];
        params.k1 = p["k1"];
        params.k2 = p["k2"];
        params.gamma1 = p["gamma1"];
        params.gamma2 = p["gamma2"];
        params.c12 = p["c12"];
        params.c21 = p["c21"];
        params.x0 = p["x0"];
        params.horizon = p["horizon"];
        const ClosedFormSolution sol = solve_closed_form(params);
        out.model = build_finite_horizon_model(params, sol);
        out.x0 = Vec::Constant(1, params.x0);
        return out;
    }
    if (config.family == "gbm_per_regime") {
        const int q = p["q"];
        const std::vector<double> b = p["b"], sigma = p["sigma"], k = p["k"],
                                  gamma = p["gamma"];
        const std::vector<std::vector<double>> cost = p["cost"];
        const double beta = p["beta"];
        SwitchingModel model;
        model.d = 1;
        model.q = q;
        model.horizon = p["horizon"];
        model.drift = [b](const Vec& x, int i) { return Vec::Constant(1, b[i] * x[0]); };
        model.diffusion = [sigma](const Vec& x, int i) {
            return Mat::Constant(1, 1, sigma[i] * x[0]);
        };
        model.running_profit = [beta, k, gamma](double t, const Vec& x, int i) {
            return std::exp(-beta * t) * k[i] * pos_pow(x[0], gamma[i]);
        };
        model.terminal_gain = [](const Vec&, int) { return 0.0; };
        model.switch_cost = [cost](const Vec&, int i, int j) { return cost[i][j]; };
        out.model = std::move(model);
        out.x0 = Vec::Constant(1, p["x0"].get<double>());
        return out;
    }
    if (config.family == "affine") {
        const int d = p["d"], q = p["q"];
        const std::vector<std::vector<double>> b0 = p["drift_const"], p1 = p["profit_lin"],
                                               g1 = p["gain_lin"], cost = p["cost"];
        const std::vector<double> p0 = p["profit_const"], g0 = p["gain_const"];
        const double beta = p["beta"];
        std::vector<Mat> b1(q, Mat(d, d)), sg(q, Mat(d, d));
        for (int i = 0; i < q; ++i)
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) {
                    b1[i](r, c) = p["drift_lin"][i][r][c].get<double>();
                    sg[i](r, c) = p["diffusion"][i][r][c].get<double>();
                }
        SwitchingModel model;
        model.d = d;
        model.q = q;
        model.horizon = p["horizon"];
        model.drift = [b0, b1](const Vec& x, int i) {
            Vec out(x.size());
            for (int c = 0; c < x.size(); ++c) out[c] = b0[i][c];
            out += b1[i] * x;
            return out;
        };
        model.diffusion = [sg](const Vec&, int i) { return sg[i]; };
        model.running_profit = [beta, p0, p1](double t, const Vec& x, int i) {
            double v = p0[i];
            for (int c = 0; c < x.size(); ++c) v += p1[i][c] * x[c];
            return std::exp(-beta * t) * v;
        };
        model.terminal_gain = [g0, g1](const Vec& x, int i) {
            double v = g0[i];
            for (int c = 0; c < x.size(); ++c) v += g1[i][c] * x[c];
            return v;
        };
        model.switch_cost = [cost](const Vec&, int i, int j) { return cost[i][j]; };
        out.model = std::move(model);
        const std::vector<double> x0 = p["x0"];
        out.x0 = Vec(d);
        for (int c = 0; c < d; ++c) out.x0[c] = x0[c];
        return out;
    }
    throw std::invalid_argument("build_model: unknown family " + config.family);
}

namespace {

std::vector<Vec> probe_samples(const Vec& x0) {
    // 257 points per axis through x0 spanning +/- 10 * max(1, |x0|_inf).
    std::vector<Vec> out;
    double scale = 1.0;
    for (int c = 0; c < x0.size(); ++c) scale = std::max(scale, std::abs(x0[c]));
    for (int c = 0; c < x0.size(); ++c) {
        for (int i = 0; i <= 256; ++i) {
            Vec x = x0;
            x[c] += (-10.0 + 20.0 * i / 256.0) * scale;
            out.push_back(x);
        }
    }
    out.push_back(x0);
    return out;
}

std::vector<Vec> lattice_samples(const LatticeGrid& grid) {
    const std::size_t cap = 20'000;
    const std::size_t stride = std::max<std::size_t>(1, grid.size() / cap);
    std::vector<Vec> out;
    out.reserve(grid.size() / stride + 1);
    for (std::size_t i = 0; i < grid.size(); i += stride) out.push_back(grid.node(i));
    return out;
}

int validate_model(const SwitchingModel& model, const std::vector<Vec>& samples,
                   std::ostream& log) {
    const ValidationReport costs = validate_costs(model, samples);
    const ValidationReport terminal = validate_terminal(model, samples);
    log << "validate costs:    " << describe(costs) << "\n";
    log << "validate terminal: " << describe(terminal) << "\n";
    return costs.passed && terminal.passed ? 0 : 2;
}

void write_manifest(const RunConfig& config, const std::string& scheme,
                    const std::vector<std::string>& artifacts) {
    json m;
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(config.config_hash()));
    m["config_hash"] = hex;
    m["seed"] = config.seed;
    m["version"] = kVersion;
    m["scheme"] = scheme;
    m["artifacts"] = artifacts;
    std::ofstream os(std::filesystem::path(config.output_dir) / "manifest.json");
    os << m.dump(2) << "\n";
}

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int run_validate(const RunConfig& config, std::ostream& log) {
    try {
        set_max_threads(config.threads);
        const ModelBundle mb = build_model(config);
        std::vector<Vec> samples = probe_samples(mb.x0);
        if (config.markovian) {
            const MarkovianParams& p = *config.markovian;
            const double radius =
                p.r > 0.0 ? p.r : p.r_mult * std::max(1.0, mb.x0.cwiseAbs().maxCoeff());
            const LatticeGrid grid = LatticeGrid::build(
                mb.model.d, 1.0 / p.delta_inv, radius,
                Vec::Constant(mb.model.d, p.center));
            samples = lattice_samples(grid);
        }
        return validate_model(mb.model, samples, log);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return 1;
    }
}

int run(const RunConfig& config, std::ostream& log) {
    try {
        set_max_threads(config.threads);
        const ModelBundle mb = build_model(config);
        std::filesystem::create_directories(config.output_dir);
        const std::filesystem::path out_dir(config.output_dir);

        if (config.markovian) {
            const MarkovianParams& p = *config.markovian;
            const double radius =
                p.r > 0.0 ? p.r : p.r_mult * std::max(1.0, mb.x0.cwiseAbs().maxCoeff());
            const LatticeGrid grid = LatticeGrid::build(
                mb.model.d, 1.0 / p.delta_inv, radius,
                Vec::Constant(mb.model.d, p.center));
            const TimeGrid tg = TimeGrid::make(mb.model.horizon, p.m);

            if (validate_model(mb.model, lattice_samples(grid), log) != 0) return 2;

            auto t0 = std::chrono::steady_clock::now();
            const std::size_t n_samples =
                p.quant_samples ? p.quant_samples
                                : std::max<std::size_t>(1u << 19,
                                                        static_cast<std::size_t>(p.n_quant) * 256);
            const GaussianQuantizer gq = build_gaussian_quantizer(
                mb.model.d, p.n_quant, QuantMethod::lloyd_mc, n_samples, p.quant_iters,
                config.seed);
            const double t_quant = elapsed(t0);

            t0 = std::chrono::steady_clock::now();
            const ValueSurface surf = solve_markovian(mb.model, grid, tg, gq);
            const double t_solve = elapsed(t0);

            {
                std::ofstream os(out_dir / "surface.csv");
                write_surface_csv(surf, grid, os);
            }
            {
                std::ofstream os(out_dir / "summary.csv");
                os << "scheme,regime,value\n";
                char buf[64];
                for (int i = 0; i < mb.model.q; ++i) {
                    std::snprintf(buf, sizeof(buf), "markovian,%d,%.17g\n", i,
                                  value_at(surf, grid, 0, mb.x0, i));
                    os << buf;
                }
            }
            write_manifest(config, "markovian", {"surface.csv", "summary.csv"});
            for (int i = 0; i < mb.model.q; ++i)
                log << "value(t=0, x0, regime " << i
                    << ") = " << value_at(surf, grid, 0, mb.x0, i) << "\n";
            log << "timing: quantizer " << t_quant << " s, solve " << t_solve << " s\n";
            return 0;
        }

        const MarginalParams& p = *config.marginal;
        const TimeGrid tg = TimeGrid::make(mb.model.horizon, p.m);

        if (validate_model(mb.model, probe_samples(mb.x0), log) != 0) return 2;

        auto t0 = std::chrono::steady_clock::now();
        const std::vector<int> sizes = allocate_grid_sizes(tg, mb.model.d, p.nbar);
        std::vector<PointMat> grids = train_marginal_grids(
            mb.model, mb.x0, tg, sizes, p.n_train, p.train_iters, config.seed);
        const double t_train = elapsed(t0);

        t0 = std::chrono::steady_clock::now();
        const MarginalQuantization mq =
            estimate_transitions(mb.model, mb.x0, tg, std::move(grids), p.n_mc, config.seed);
        const double t_trans = elapsed(t0);
        if (mq.flagged_rows() > 0)
            log << "warning: " << mq.flagged_rows()
                << " grid rows were never visited; their values are flagged\n";

        t0 = std::chrono::steady_clock::now();
        const QuantizedValueProcess qv = tree_solve(mb.model, mq);
        const double t_tree = elapsed(t0);

        save_marginal(mq, (out_dir / "quantization.mq1").string());
        {
            std::ofstream os(out_dir / "tree.csv");
            write_tree_csv(qv, mq, os);
        }
        {
            std::ofstream os(out_dir / "summary.csv");
            os << "scheme,regime,value\n";
            char buf[64];
            for (int i = 0; i < mb.model.q; ++i) {
                std::snprintf(buf, sizeof(buf), "marginal,%d,%.17g\n", i, qv.y0[i]);
                os << buf;
            }
        }
        write_manifest(config, "marginal", {"quantization.mq1", "tree.csv", "summary.csv"});
        for (int i = 0; i < mb.model.q; ++i)
            log << "Y0(regime " << i << ") = " << qv.y0[i] << "\n";
        log << "timing: grid training " << t_train << " s, transitions " << t_trans
            << " s, tree descent " << t_tree << " s"
            << " (Monte-Carlo dominates; cache quantization.mq1 to re-run the descent)\n";
        return 0;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace switchq

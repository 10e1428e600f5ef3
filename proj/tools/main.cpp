// Command-line front end: validate | solve-markovian | solve-marginal |
// quantize-gaussian | benchmark | convergence.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "switchq/benchmark_tables.hpp"
#include "switchq/closed_form_gbm.hpp"
#include "switchq/gaussian_quantizer.hpp"
#include "switchq/parallel.hpp"
#include "switchq/run_config.hpp"
#include "switchq/version.hpp"

using namespace switchq;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int report_errors(const std::vector<ConfigError>& errors) {
    for (const ConfigError& e : errors)
        std::cerr << "config error: " << (e.field.empty() ? "<root>" : e.field) << ": "
                  << e.message << "\n";
    return 2;
}

// Flags shared by the solve subcommands; folded into a config JSON so flag
// runs and --config runs go through the same validation.
struct SolveFlags {
    std::string config_path;
    std::string family = "benchmark_gbm";
    int m = 100;
    double delta_inv = 100.0;
    double r_mult = 10.0;
    int n_quant = 1000;
    int nbar = 10000;
    std::uint64_t paths = 1'000'000;
    std::uint64_t train = 100'000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string out = "out";
};

std::string flags_to_json(const SolveFlags& f, bool markovian) {
    nlohmann::json root;
    root["model"]["family"] = f.family;
    root["model"]["params"] = nlohmann::json::object();
    if (markovian) {
        root["scheme"]["markovian"] = {
            {"m", f.m}, {"delta_inv", f.delta_inv}, {"r_mult", f.r_mult},
            {"n_quant", f.n_quant}};
    } else {
        root["scheme"]["marginal"] = {
            {"m", f.m}, {"nbar", f.nbar}, {"n_mc", f.paths}, {"n_train", f.train}};
    }
    root["seed"] = f.seed;
    root["threads"] = f.threads;
    root["output_dir"] = f.out;
    return root.dump();
}

int run_from_flags(const SolveFlags& f, bool markovian, bool validate_only) {
    const std::string text =
        f.config_path.empty() ? flags_to_json(f, markovian) : read_file(f.config_path);
    auto parsed = parse_config(text);
    if (auto* errors = std::get_if<std::vector<ConfigError>>(&parsed))
        return report_errors(*errors);
    const RunConfig& cfg = std::get<RunConfig>(parsed);
    return validate_only ? run_validate(cfg, std::cout) : run(cfg, std::cout);
}

std::vector<Table1Case> parse_table1_rows(const std::string& rows) {
    std::vector<Table1Case> out;
    std::string s = rows;
    for (char& c : s)
        if (c == '(' || c == ')') c = ' ';
    std::stringstream ss(s);
    std::string tuple;
    while (std::getline(ss, tuple, ';')) {
        if (tuple.find_first_not_of(" \t") == std::string::npos) continue;
        Table1Case c;
        if (std::sscanf(tuple.c_str(), " %d , %lf , %d", &c.m, &c.delta_inv, &c.n_quant) != 3)
            throw std::runtime_error("bad table-1 row '" + tuple +
                                     "' (expected m,delta_inv,N)");
        out.push_back(c);
    }
    if (out.empty()) throw std::runtime_error("no table-1 rows parsed");
    return out;
}

std::vector<Table2Case> parse_table2_rows(const std::string& rows) {
    std::vector<Table2Case> out;
    std::string s = rows;
    for (char& c : s)
        if (c == '(' || c == ')') c = ' ';
    std::stringstream ss(s);
    std::string tuple;
    while (std::getline(ss, tuple, ';')) {
        if (tuple.find_first_not_of(" \t") == std::string::npos) continue;
        Table2Case c;
        if (std::sscanf(tuple.c_str(), " %d , %d", &c.m, &c.nbar) != 2)
            throw std::runtime_error("bad table-2 row '" + tuple + "' (expected m,nbar)");
        out.push_back(c);
    }
    if (out.empty()) throw std::runtime_error("no table-2 rows parsed");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantization solvers for finite-horizon optimal switching"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SolveFlags f;

    auto add_common = [&](CLI::App* cmd, bool with_markovian, bool with_marginal) {
        cmd->add_option("--config", f.config_path, "JSON run configuration (overrides flags)");
        cmd->add_option("--family", f.family,
                        "built-in model family (benchmark_gbm | gbm_per_regime | affine)");
        cmd->add_option("--m", f.m, "number of time steps");
        if (with_markovian) {
            cmd->add_option("--delta-inv", f.delta_inv, "1/delta space discretization");
            cmd->add_option("--n-quant", f.n_quant, "Gaussian quantizer size N");
            cmd->add_option("--r-mult", f.r_mult, "lattice radius as a multiple of x0");
        }
        if (with_marginal) {
            cmd->add_option("--nbar", f.nbar, "total grid-point stack across time steps");
            cmd->add_option("--paths", f.paths, "Monte-Carlo paths for transition weights");
            cmd->add_option("--train", f.train, "paths for grid training");
        }
        cmd->add_option("--seed", f.seed, "RNG seed");
        cmd->add_option("--threads", f.threads, "worker cap (0 = hardware)");
        cmd->add_option("--out", f.out, "output directory");
    };

    CLI::App* validate = app.add_subcommand("validate", "check cost/terminal conditions");
    add_common(validate, true, false);

    CLI::App* markov = app.add_subcommand("solve-markovian", "lattice scheme");
    add_common(markov, true, false);

    CLI::App* marginal = app.add_subcommand("solve-marginal", "quantization-tree scheme");
    add_common(marginal, false, true);

    CLI::App* quant = app.add_subcommand("quantize-gaussian", "train an N(0, I_d) quantizer");
    int qd = 1, qn = 100, qiters = 200;
    std::uint64_t qsamples = 0, qseed = 0;
    std::string qmethod = "lloyd";
    std::string qout = "gaussian.gq1";
    quant->add_option("--dim", qd, "dimension d");
    quant->add_option("--n", qn, "number of points N");
    quant->add_option("--samples", qsamples, "training sample size (0 = auto)");
    quant->add_option("--iters", qiters, "max training iterations");
    quant->add_option("--method", qmethod, "lloyd | clvq");
    quant->add_option("--seed", qseed, "RNG seed");
    quant->add_option("--threads", f.threads, "worker cap (0 = hardware)");
    quant->add_option("--out", qout, "output file (GQ1 format)");

    CLI::App* bench = app.add_subcommand("benchmark", "two-regime benchmark sweeps");
    int table = 1;
    std::string rows;
    std::string bench_seeds = "1,2,3";
    bench->add_option("--table", table, "1 = lattice sweep, 2 = tree sweep")
        ->check(CLI::Range(1, 2));
    bench->add_option("--rows", rows,
                      "rows like \"(100,100,1000);(10,10,100)\" (table 1) or "
                      "\"(10,100);(100,10000)\" (table 2); default: full sweep");
    bench->add_option("--paths", f.paths, "transition paths per table-2 run");
    bench->add_option("--train", f.train, "training paths per table-2 run");
    bench->add_option("--seeds", bench_seeds, "comma-separated seeds for table 2");
    bench->add_option("--seed", f.seed, "seed for table 1 quantizer training");
    bench->add_option("--r-mult", f.r_mult, "lattice radius multiple of x0");
    bench->add_option("--threads", f.threads, "worker cap (0 = hardware)");
    bench->add_option("--out", f.out, "output directory");

    CLI::App* conv = app.add_subcommand("convergence", "refinement studies");
    std::string m_list = "10,100";
    std::string nbar_list = "100,10000";
    conv->add_option("--m-list", m_list, "time steps for the lattice study");
    conv->add_option("--nbar-list", nbar_list, "stack sizes for the tree study (at m=10)");
    conv->add_option("--delta-inv", f.delta_inv, "lattice 1/delta");
    conv->add_option("--n-quant", f.n_quant, "lattice quantizer size");
    conv->add_option("--paths", f.paths, "transition paths per tree run");
    conv->add_option("--train", f.train, "training paths per tree run");
    conv->add_option("--seed", f.seed, "RNG seed");
    conv->add_option("--threads", f.threads, "worker cap (0 = hardware)");
    conv->add_option("--out", f.out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return run_from_flags(f, true, true);
        if (markov->parsed()) return run_from_flags(f, true, false);
        if (marginal->parsed()) return run_from_flags(f, false, false);

        if (quant->parsed()) {
            set_max_threads(f.threads);
            const std::size_t n_samples =
                qsamples ? qsamples
                         : std::max<std::size_t>(1u << 19, static_cast<std::size_t>(qn) * 256);
            const QuantMethod method = qmethod == "clvq" ? QuantMethod::clvq
                                                         : QuantMethod::lloyd_mc;
            const GaussianQuantizer gq =
                build_gaussian_quantizer(qd, qn, method, n_samples, qiters, qseed);
            save_quantizer(gq, qout);
            std::cout << "trained " << gq.size() << "-point quantizer, distortion "
                      << gq.distortion << ", mean residual " << gq.mean_residual << " -> "
                      << qout << "\n";
            return 0;
        }

        if (bench->parsed()) {
            set_max_threads(f.threads);
            std::filesystem::create_directories(f.out);
            GBMSwitchParams params;
            const ClosedFormSolution sol = solve_closed_form(params);
            std::cout << "closed form: v2(" << params.x0 << ") = " << sol.v2(params.x0)
                      << " (max residual " << sol.max_residual << ")\n";
            if (table == 1) {
                const auto cases = rows.empty() ? default_table1_cases()
                                                : parse_table1_rows(rows);
                const auto result = run_table1(params, sol, cases, f.r_mult, f.seed);
                std::ofstream os(std::filesystem::path(f.out) / "table1.csv");
                write_table1_csv(result, os);
                for (const auto& r : result)
                    std::printf("(%d,%g,%d)  value %.4f  error %.2f%%  %.1fs\n", r.params.m,
                                r.params.delta_inv, r.params.n_quant, r.value,
                                r.rel_error_pct, r.seconds);
            } else {
                std::vector<std::uint64_t> seeds;
                std::stringstream ss(bench_seeds);
                std::string tok;
                while (std::getline(ss, tok, ',')) seeds.push_back(std::stoull(tok));
                const auto cases = rows.empty() ? default_table2_cases()
                                                : parse_table2_rows(rows);
                const auto result = run_table2(params, sol, cases, f.train, f.paths, seeds);
                std::ofstream os(std::filesystem::path(f.out) / "table2.csv");
                write_table2_csv(result, os);
                for (const auto& r : result)
                    std::printf("(%d,%d) seed %llu  value %.4f  error %.2f%%  %.1fs\n",
                                r.params.m, r.params.nbar,
                                static_cast<unsigned long long>(r.seed), r.value,
                                r.rel_error_pct, r.seconds);
            }
            return 0;
        }

        if (conv->parsed()) {
            set_max_threads(f.threads);
            std::filesystem::create_directories(f.out);
            GBMSwitchParams params;
            const ClosedFormSolution sol = solve_closed_form(params);

            std::vector<Table1Case> t1;
            {
                std::stringstream ss(m_list);
                std::string tok;
                while (std::getline(ss, tok, ','))
                    t1.push_back({std::stoi(tok), f.delta_inv, f.n_quant});
            }
            const auto lattice_rows = run_table1(params, sol, t1, f.r_mult, f.seed);
            {
                std::ofstream os(std::filesystem::path(f.out) / "time_refinement.csv");
                write_table1_csv(lattice_rows, os);
            }
            for (const auto& r : lattice_rows)
                std::printf("lattice m=%d  value %.4f  error %.2f%%\n", r.params.m, r.value,
                            r.rel_error_pct);

            std::vector<Table2Case> t2;
            {
                std::stringstream ss(nbar_list);
                std::string tok;
                while (std::getline(ss, tok, ',')) t2.push_back({10, std::stoi(tok)});
            }
            const auto tree_rows = run_table2(params, sol, t2, f.train, f.paths, {f.seed + 1});
            {
                std::ofstream os(std::filesystem::path(f.out) / "stack_refinement.csv");
                write_table2_csv(tree_rows, os);
            }
            for (const auto& r : tree_rows)
                std::printf("tree m=%d nbar=%d  value %.4f  error %.2f%%\n", r.params.m,
                            r.params.nbar, r.value, r.rel_error_pct);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

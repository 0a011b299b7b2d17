// exchnet command line: fit / simulate / coverage / check-eta.
// Exit codes: 0 success, 1 data or validation error, 2 estimation failure,
// 3 internal error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "exchnet/error.hpp"
#include "exchnet/eta.hpp"
#include "exchnet/ingest.hpp"
#include "exchnet/inference.hpp"
#include "exchnet/pml.hpp"
#include "exchnet/report.hpp"
#include "exchnet/simulate.hpp"

namespace {

using namespace exchnet;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int env_threads_default() {
    const char* env = std::getenv("EXCHNET_THREADS");
    if (!env) return 1;
    int v = std::atoi(env);
    return v >= 1 ? v : 1;
}

struct FitArgs {
    std::string edges_path, nodes_path, edge_table_path, spec_path;
    std::string link = "exp";
    std::string mode = "model";
    double alpha = 0.05;
    std::uint64_t seed = 0;
    bool zero_fill = false;
    std::string out_dir = ".";
};

int run_fit(const FitArgs& args) {
    auto t0 = std::chrono::steady_clock::now();
    std::ifstream edges_in(args.edges_path);
    if (!edges_in) throw data_error("cannot open '" + args.edges_path + "'");
    EdgeList edges = load_edgelist(edges_in, args.zero_fill);

    NodeTable nodes;
    if (!args.nodes_path.empty()) {
        std::ifstream in(args.nodes_path);
        if (!in) throw data_error("cannot open '" + args.nodes_path + "'");
        nodes = load_node_table(in);
    }
    EdgeTable edge_covs;
    if (!args.edge_table_path.empty()) {
        std::ifstream in(args.edge_table_path);
        if (!in) throw data_error("cannot open '" + args.edge_table_path + "'");
        edge_covs = load_edge_table(in);
    }

    std::string spec_text = read_file(args.spec_path);
    ModelSpec spec = model_spec_from_json(spec_text);
    spec.link = link_from_name(args.link);  // flag wins over the spec document

    RelationalDataset data = assemble_dataset(edges, nodes, edge_covs, spec);
    LinkSpec link(spec.link);
    FitResult fit = fit_pml(data, link);
    if (!fit.converged) throw estimation_error("fit did not converge; see gradient diagnostics");

    InferenceOptions opts;
    opts.mode = inference_mode_from_name(args.mode);
    opts.alpha = args.alpha;
    opts.seed = args.seed;
    InferenceResult inference = run_inference(data, fit, link, opts);

    std::filesystem::create_directories(args.out_dir);
    std::string report = inference_report_json(data, fit, inference);
    write_file_atomic(args.out_dir + "/report.json", report);

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::uint64_t cfg_hash = fnv1a_hash(spec_text + "|" + args.edges_path + "|" + args.mode);
    write_file_atomic(args.out_dir + "/manifest.json",
                      run_manifest_json("fit", cfg_hash, args.seed, wall));
    std::cout << report;
    return 0;
}

struct SimArgs {
    std::string config_path;
    std::string out_dir = ".";
};

int run_simulate(const SimArgs& args) {
    auto t0 = std::chrono::steady_clock::now();
    std::string text = read_file(args.config_path);
    CoverageConfig cfg = coverage_config_from_json(text);
    std::filesystem::create_directories(args.out_dir);

    RngStream root(cfg.seed);
    for (int n : cfg.n_values) {
        RngStream n_stream = root.derive(static_cast<std::uint64_t>(n));
        RngStream design_rng = n_stream.derive(0x64657369676e0001ull);
        Eigen::MatrixXd X = gen_design_standard(n, design_rng);
        RngStream err_rng = n_stream.derive(0x6572726f72730001ull);
        Eigen::MatrixXd e = gen_weakly_exch_errors(cfg.errors, n, err_rng);
        RngStream count_rng = n_stream.derive(0x636f756e74730001ull);
        RelationalDataset data = simulate_counts(n, X, cfg.beta_true, e, LinkSpec(cfg.link),
                                                 count_rng, {}, design_standard_names());
        write_file_atomic(args.out_dir + "/dataset_n" + std::to_string(n) + ".json",
                          data.to_json());
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_file_atomic(args.out_dir + "/manifest.json",
                      run_manifest_json("simulate", fnv1a_hash(text), cfg.seed, wall));
    return 0;
}

struct CovArgs {
    std::string config_path;
    std::string out_path = "results.csv";
    int threads = env_threads_default();
    bool deterministic = false;
};

int run_coverage(const CovArgs& args) {
    auto t0 = std::chrono::steady_clock::now();
    std::string text = read_file(args.config_path);
    CoverageConfig cfg = coverage_config_from_json(text);
    if (args.deterministic)
        cfg.threads = 1;
    else if (args.threads >= 1)
        cfg.threads = args.threads;

    CoverageResult result = coverage_experiment(cfg);
    write_file_atomic(args.out_path, coverage_csv(result));
    for (const auto& line : result.failure_log) std::cerr << "excluded: " << line << "\n";

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_file_atomic(args.out_path + ".manifest.json",
                      run_manifest_json("coverage", fnv1a_hash(text), cfg.seed, wall));
    std::cout << coverage_csv(result);
    return 0;
}

struct CheckEtaArgs {
    std::string eta_text;
    int n = 0;
};

int run_check_eta(const CheckEtaArgs& args) {
    EtaVector eta;
    std::istringstream ss(args.eta_text);
    std::string field;
    int m = 0;
    while (std::getline(ss, field, ',')) {
        if (m >= 5) throw data_error("--eta expects exactly 5 comma-separated values");
        try {
            eta[m++] = std::stod(field);
        } catch (const std::exception&) {
            throw data_error("cannot parse eta component '" + field + "'");
        }
    }
    if (m != 5) throw data_error("--eta expects exactly 5 comma-separated values");

    ParameterSpaceCheck check = check_parameter_space(eta, args.n);
    if (check.valid) {
        std::cout << "eta lies in the parameter space for n=" << args.n << "\n";
        return 0;
    }
    std::cerr << "eta violates the parameter space for n=" << args.n << ":\n";
    for (const auto& v : check.violations) std::cerr << "  - " << v << "\n";
    throw data_error("parameter space check failed");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Count relational data regression with exchangeable dependencies"};
    app.require_subcommand(1);

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "Fit the model and report coefficient intervals");
    fit_cmd->add_option("--edges", fit_args.edges_path, "Edge list CSV (sender,receiver,count[,offset])")
        ->required();
    fit_cmd->add_option("--nodes", fit_args.nodes_path, "Node covariate CSV");
    fit_cmd->add_option("--edge-covs", fit_args.edge_table_path, "Edge covariate CSV");
    fit_cmd->add_option("--spec", fit_args.spec_path, "Model spec JSON")->required();
    fit_cmd->add_option("--link", fit_args.link, "Link: exp, logistic, arccot");
    fit_cmd->add_option("--mode", fit_args.mode, "Inference mode: model, naive, naive-overdispersed");
    fit_cmd->add_option("--alpha", fit_args.alpha, "Interval level alpha");
    fit_cmd->add_option("--seed", fit_args.seed, "Seed for the shorth cross validation");
    fit_cmd->add_flag("--zero-fill", fit_args.zero_fill, "Treat absent dyads as count 0");
    fit_cmd->add_option("--out", fit_args.out_dir, "Output directory");

    SimArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "Generate synthetic datasets");
    sim_cmd->add_option("--config", sim_args.config_path, "Simulation config JSON")->required();
    sim_cmd->add_option("--out", sim_args.out_dir, "Output directory");

    CovArgs cov_args;
    auto* cov_cmd = app.add_subcommand("coverage", "Run the Monte-Carlo coverage experiment");
    cov_cmd->add_option("--config", cov_args.config_path, "Coverage config JSON")->required();
    cov_cmd->add_option("--out", cov_args.out_path, "Output CSV path");
    cov_cmd->add_option("--threads", cov_args.threads, "Worker threads (default: EXCHNET_THREADS or 1)");
    cov_cmd->add_flag("--deterministic", cov_args.deterministic, "Force single-threaded execution");

    CheckEtaArgs check_args;
    auto* check_cmd = app.add_subcommand("check-eta", "Validate a covariance parameter vector");
    check_cmd->add_option("--eta", check_args.eta_text, "Comma-separated eta1,...,eta5")->required();
    check_cmd->add_option("--n", check_args.n, "Number of nodes")->required();

    try {
        app.parse(argc, argv);
        if (*fit_cmd) return run_fit(fit_args);
        if (*sim_cmd) return run_simulate(sim_args);
        if (*cov_cmd) return run_coverage(cov_args);
        if (*check_cmd) return run_check_eta(check_args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case ErrorKind::Data: return 1;
            case ErrorKind::Estimation: return 2;
            case ErrorKind::Internal: return 3;
        }
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 3;
}

#include "exchnet/simulate.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "exchnet/error.hpp"
#include "exchnet/pml.hpp"

namespace exchnet {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kDesignLabel = 0x64657369676e0001ull;
constexpr std::uint64_t kErrorsLabel = 0x6572726f72730001ull;
constexpr std::uint64_t kCountsLabel = 0x636f756e74730001ull;
constexpr std::uint64_t kEtaSeedLabel = 0x6574612d63760001ull;
} // namespace

void MixedEffectsErrorParams::validate() const {
    eps.validate();
    if (!iid_only) {
        ab.validate();
        gamma.validate();
    }
}

MixedEffectsErrorParams error_setting_iid() {
    MixedEffectsErrorParams p;
    p.iid_only = true;
    p.eps = {-7.0, 1.0, 0.0, kInf};
    return p;
}

MixedEffectsErrorParams error_setting_dependent() {
    MixedEffectsErrorParams p;
    p.ab.mu[0] = -1.0;
    p.ab.mu[1] = 1.0;
    p.ab.sigma1 = 1.0;
    p.ab.sigma2 = 1.0;
    p.ab.rho = 0.5;
    p.ab.lower[0] = p.ab.lower[1] = 0.0;
    p.ab.upper[0] = p.ab.upper[1] = kInf;
    p.gamma = {0.0, 1.0, 0.0, kInf};
    p.eps = {1.0, 6.0, 0.0, kInf};
    return p;
}

double normalization_constant(const MixedEffectsErrorParams& params) {
    params.validate();
    double total = trunc_normal_mean(params.eps);
    if (!params.iid_only) {
        BivariateMoments ab = bivariate_trunc_normal_moments(params.ab);
        total += ab.mean[0] + ab.mean[1] + trunc_normal_mean(params.gamma);
    }
    if (!(total > 0.0))
        throw estimation_error("error generator has non-positive mean; cannot normalize");
    return 1.0 / total;
}

Eigen::MatrixXd gen_weakly_exch_errors(const MixedEffectsErrorParams& params, int n,
                                       RngStream& rng) {
    if (n < 3) throw data_error("error generation requires n >= 3");
    params.validate();
    const double C = normalization_constant(params);
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);

    if (params.iid_only) {
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j)
                if (i != j) e(i - 1, j - 1) = C * sample_trunc_normal(params.eps, rng);
        return e;
    }

    Eigen::VectorXd a(n), b(n);
    for (int i = 0; i < n; ++i) sample_bivariate_trunc_normal(params.ab, rng, &a[i], &b[i]);
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) gamma(i, j) = gamma(j, i) = sample_trunc_normal(params.gamma, rng);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j)
                e(i, j) = C * (a[i] + b[j] + gamma(i, j) + sample_trunc_normal(params.eps, rng));
    return e;
}

EtaVector eta_from_error_params(const MixedEffectsErrorParams& params) {
    params.validate();
    const double C = normalization_constant(params);
    const double ve = trunc_normal_var(params.eps);
    if (params.iid_only) return EtaVector(C * C * ve, 0, 0, 0, 0);
    BivariateMoments ab = bivariate_trunc_normal_moments(params.ab);
    const double vg = trunc_normal_var(params.gamma);
    const double c2 = C * C;
    return EtaVector(c2 * (ab.var[0] + ab.var[1] + vg + ve),
                     c2 * (2.0 * ab.cov + vg),
                     c2 * ab.var[0],
                     c2 * ab.var[1],
                     c2 * ab.cov);
}

RelationalDataset simulate_counts(int n, const Eigen::MatrixXd& X, const Eigen::VectorXd& beta,
                                  const Eigen::MatrixXd& errors, const LinkSpec& link,
                                  RngStream& rng, const Eigen::VectorXd& offsets,
                                  std::vector<std::string> coef_names) {
    const Eigen::Index N = static_cast<Eigen::Index>(n) * n - n;
    if (X.rows() != N) throw data_error("design matrix has wrong number of rows");
    if (X.cols() != beta.size()) throw data_error("beta dimension does not match design");
    if (errors.rows() != n || errors.cols() != n) throw data_error("error matrix must be n x n");
    Eigen::VectorXd off = offsets.size() == 0 ? Eigen::VectorXd::Zero(N) : offsets;
    if (off.size() != N) throw data_error("offset vector has wrong length");

    Eigen::VectorXd z = X * beta + off;
    Eigen::VectorXd y(N);
    for (Eigen::Index idx = 0; idx < N; ++idx) {
        auto [i, j] = edge_index_inverse(static_cast<int>(idx), n);
        const double e_ij = errors(i - 1, j - 1);
        if (!(e_ij > 0.0)) throw data_error("latent errors must be positive");
        const double lambda = link.eval(z[idx]).g * e_ij;
        if (!std::isfinite(lambda)) throw estimation_error("Poisson mean overflow in simulation");
        y[idx] = static_cast<double>(rng.next_poisson(lambda));
    }
    return RelationalDataset(n, std::move(y), offsets, X, std::move(coef_names));
}

Eigen::MatrixXd gen_design_standard(int n, RngStream& rng) {
    const Eigen::Index N = static_cast<Eigen::Index>(n) * n - n;
    Eigen::VectorXd x2(n), x3(n);
    for (int i = 0; i < n; ++i) {
        x2[i] = rng.next_uniform() < 0.6 ? 1.0 : 0.0;
        x3[i] = 1.0 + rng.next_normal();
    }
    Eigen::MatrixXd X(N, 4);
    for (Eigen::Index idx = 0; idx < N; ++idx) {
        auto [i, j] = edge_index_inverse(static_cast<int>(idx), n);
        X(idx, 0) = 2.0 + rng.next_normal();
        X(idx, 1) = x2[i - 1] * x2[j - 1];
        X(idx, 2) = std::fabs(x3[i - 1] - x3[j - 1]);
        X(idx, 3) = 1.0 + rng.next_normal();
    }
    return X;
}

std::vector<std::string> design_standard_names() {
    return {"x1", "x2.product", "x3.absdiff", "x4"};
}

void CoverageConfig::validate() const {
    if (n_values.empty()) throw data_error("coverage config needs at least one n");
    for (int n : n_values)
        if (n < 4) throw data_error("coverage config requires n >= 4");
    if (replications < 1) throw data_error("replications must be >= 1");
    if (x_realizations < 1) throw data_error("x_realizations must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw data_error("alpha must be in (0,1)");
    if (methods.empty()) throw data_error("coverage config needs at least one method");
    if (threads < 1) throw data_error("threads must be >= 1");
    errors.validate();
}

namespace {

TruncNormalParams truncnorm_from_json(const nlohmann::json& j) {
    TruncNormalParams p;
    p.mu = j.at("mu").get<double>();
    p.sigma2 = j.at("sigma2").get<double>();
    p.lower = j.value("lower", -kInf);
    p.upper = j.value("upper", kInf);
    return p;
}

nlohmann::json truncnorm_to_json(const TruncNormalParams& p) {
    nlohmann::json j{{"mu", p.mu}, {"sigma2", p.sigma2}};
    if (std::isfinite(p.lower)) j["lower"] = p.lower;
    if (std::isfinite(p.upper)) j["upper"] = p.upper;
    return j;
}

MixedEffectsErrorParams errors_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        if (name == "iid") return error_setting_iid();
        if (name == "dependent") return error_setting_dependent();
        throw data_error("unknown error setting '" + name + "' (expected iid or dependent)");
    }
    MixedEffectsErrorParams p;
    p.iid_only = j.value("iid_only", false);
    p.eps = truncnorm_from_json(j.at("eps"));
    if (!p.iid_only) {
        const auto& ab = j.at("ab");
        p.ab.mu[0] = ab.at("mu").at(0).get<double>();
        p.ab.mu[1] = ab.at("mu").at(1).get<double>();
        p.ab.sigma1 = ab.at("sigma1").get<double>();
        p.ab.sigma2 = ab.at("sigma2").get<double>();
        p.ab.rho = ab.at("rho").get<double>();
        p.ab.lower[0] = ab.value("lower", std::vector<double>{-kInf, -kInf})[0];
        p.ab.lower[1] = ab.value("lower", std::vector<double>{-kInf, -kInf})[1];
        p.ab.upper[0] = ab.value("upper", std::vector<double>{kInf, kInf})[0];
        p.ab.upper[1] = ab.value("upper", std::vector<double>{kInf, kInf})[1];
        p.gamma = truncnorm_from_json(j.at("gamma"));
    }
    return p;
}

nlohmann::json errors_to_json(const MixedEffectsErrorParams& p) {
    nlohmann::json j;
    j["iid_only"] = p.iid_only;
    j["eps"] = truncnorm_to_json(p.eps);
    if (!p.iid_only) {
        nlohmann::json ab;
        ab["mu"] = {p.ab.mu[0], p.ab.mu[1]};
        ab["sigma1"] = p.ab.sigma1;
        ab["sigma2"] = p.ab.sigma2;
        ab["rho"] = p.ab.rho;
        if (std::isfinite(p.ab.lower[0]) || std::isfinite(p.ab.lower[1]))
            ab["lower"] = {p.ab.lower[0], p.ab.lower[1]};
        if (std::isfinite(p.ab.upper[0]) || std::isfinite(p.ab.upper[1]))
            ab["upper"] = {p.ab.upper[0], p.ab.upper[1]};
        j["ab"] = ab;
        j["gamma"] = truncnorm_to_json(p.gamma);
    }
    return j;
}

} // namespace

CoverageConfig coverage_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("invalid coverage config JSON: ") + e.what());
    }
    CoverageConfig cfg;
    try {
        cfg.n_values = j.at("n").get<std::vector<int>>();
        std::vector<double> beta = j.value("beta", std::vector<double>{1.0, -0.5, -0.5, -1.0});
        cfg.beta_true = Eigen::Map<Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
        cfg.link = link_from_name(j.value("link", std::string("exp")));
        if (j.contains("errors")) cfg.errors = errors_from_json(j.at("errors"));
        cfg.replications = j.value("replications", 1000);
        cfg.x_realizations = j.value("x_realizations", 1);
        cfg.alpha = j.value("alpha", 0.05);
        cfg.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("methods")) {
            cfg.methods.clear();
            for (const auto& m : j.at("methods"))
                cfg.methods.push_back(inference_mode_from_name(m.get<std::string>()));
        }
        cfg.threads = j.value("threads", 1);
        if (j.contains("shorth_c")) cfg.shorth_c_override = j.at("shorth_c").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("invalid coverage config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string coverage_config_to_json(const CoverageConfig& cfg) {
    nlohmann::json j;
    j["n"] = cfg.n_values;
    j["beta"] = std::vector<double>(cfg.beta_true.data(), cfg.beta_true.data() + cfg.beta_true.size());
    j["link"] = link_name(cfg.link);
    j["errors"] = errors_to_json(cfg.errors);
    j["replications"] = cfg.replications;
    j["x_realizations"] = cfg.x_realizations;
    j["alpha"] = cfg.alpha;
    j["seed"] = cfg.seed;
    std::vector<std::string> methods;
    for (auto m : cfg.methods) methods.push_back(inference_mode_name(m));
    j["methods"] = methods;
    j["threads"] = cfg.threads;
    if (cfg.shorth_c_override) j["shorth_c"] = *cfg.shorth_c_override;
    return j.dump(2);
}

namespace {

struct RepOutcome {
    bool ok = false;
    std::string failure;
    // hits[method][coef]
    std::vector<std::vector<bool>> hits;
};

RepOutcome run_replication(const CoverageConfig& cfg, int n, const Eigen::MatrixXd& X,
                           const EtaVector& eta_true, const LinkSpec& link, RngStream stream) {
    RepOutcome out;
    try {
        RngStream err_rng = stream.derive(kErrorsLabel);
        Eigen::MatrixXd e = gen_weakly_exch_errors(cfg.errors, n, err_rng);
        RngStream count_rng = stream.derive(kCountsLabel);
        RelationalDataset data =
            simulate_counts(n, X, cfg.beta_true, e, LinkSpec(cfg.link), count_rng, {},
                            design_standard_names());
        FitResult fit = fit_pml(data, LinkSpec(cfg.link));
        if (!fit.converged) {
            out.failure = "fit did not converge";
            return out;
        }
        for (InferenceMode mode : cfg.methods) {
            InferenceOptions opts;
            opts.mode = mode;
            opts.alpha = cfg.alpha;
            opts.seed = stream.derive(kEtaSeedLabel).next_u64();
            opts.shorth_c_override = cfg.shorth_c_override;
            if (mode == InferenceMode::Oracle) opts.eta_true = eta_true;
            InferenceResult inf = run_inference(data, fit, link, opts);
            std::vector<bool> hit(inf.coefficients.size());
            for (size_t l = 0; l < inf.coefficients.size(); ++l)
                hit[l] = inf.coefficients[l].ci_lo <= cfg.beta_true[static_cast<Eigen::Index>(l)] &&
                         cfg.beta_true[static_cast<Eigen::Index>(l)] <= inf.coefficients[l].ci_hi;
            out.hits.push_back(std::move(hit));
        }
        out.ok = true;
    } catch (const std::exception& e) {
        out.failure = e.what();
    }
    return out;
}

} // namespace

CoverageResult coverage_experiment(const CoverageConfig& cfg) {
    cfg.validate();
    const LinkSpec link(cfg.link);
    const EtaVector eta_true = eta_from_error_params(cfg.errors);
    const std::vector<std::string> coef_names = design_standard_names();
    const int p = static_cast<int>(cfg.beta_true.size());
    if (p != 4) throw data_error("coverage harness uses the four-term standard design");

    CoverageResult result;
    RngStream root(cfg.seed);

    for (int n : cfg.n_values) {
        RngStream n_stream = root.derive(static_cast<std::uint64_t>(n));
        for (int xr = 0; xr < cfg.x_realizations; ++xr) {
            RngStream x_stream = n_stream.derive(static_cast<std::uint64_t>(xr));
            RngStream design_rng = x_stream.derive(kDesignLabel);
            Eigen::MatrixXd X = gen_design_standard(n, design_rng);

            std::vector<RepOutcome> outcomes(static_cast<size_t>(cfg.replications));
            std::atomic<int> next{0};
            auto worker = [&]() {
                for (;;) {
                    int r = next.fetch_add(1);
                    if (r >= cfg.replications) break;
                    RngStream rep_stream = x_stream.derive(0x726570ull).derive(static_cast<std::uint64_t>(r));
                    outcomes[static_cast<size_t>(r)] =
                        run_replication(cfg, n, X, eta_true, link, rep_stream);
                }
            };
            const int nthreads = std::min(cfg.threads, cfg.replications);
            if (nthreads <= 1) {
                worker();
            } else {
                std::vector<std::thread> pool;
                for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
                for (auto& t : pool) t.join();
            }

            int failures = 0;
            std::vector<std::vector<long>> hit_counts(cfg.methods.size(),
                                                      std::vector<long>(static_cast<size_t>(p), 0));
            long successes = 0;
            for (int r = 0; r < cfg.replications; ++r) {
                const RepOutcome& o = outcomes[static_cast<size_t>(r)];
                if (!o.ok) {
                    ++failures;
                    result.failure_log.push_back("n=" + std::to_string(n) + " x=" +
                                                 std::to_string(xr) + " rep=" + std::to_string(r) +
                                                 ": " + o.failure);
                    continue;
                }
                ++successes;
                for (size_t m = 0; m < cfg.methods.size(); ++m)
                    for (int l = 0; l < p; ++l)
                        if (o.hits[m][static_cast<size_t>(l)]) ++hit_counts[m][static_cast<size_t>(l)];
            }
            if (successes == 0)
                throw estimation_error("all replications failed for n=" + std::to_string(n));

            for (size_t m = 0; m < cfg.methods.size(); ++m) {
                for (int l = 0; l < p; ++l) {
                    CoverageCell cell;
                    cell.n = n;
                    cell.x_realization = xr;
                    cell.method = inference_mode_name(cfg.methods[m]);
                    cell.coefficient = coef_names[static_cast<size_t>(l)];
                    cell.coverage = static_cast<double>(hit_counts[m][static_cast<size_t>(l)]) /
                                    static_cast<double>(successes);
                    cell.mc_se = std::sqrt(std::max(cell.coverage * (1.0 - cell.coverage), 0.0) /
                                           static_cast<double>(successes));
                    cell.failures = failures;
                    cell.successes = static_cast<int>(successes);
                    result.rows.push_back(cell);
                }
            }
        }
    }
    return result;
}

std::string coverage_csv(const CoverageResult& result) {
    std::string out = "n,x_realization,method,coefficient,coverage,mc_se,failures\n";
    char buf[64];
    for (const auto& row : result.rows) {
        out += std::to_string(row.n) + "," + std::to_string(row.x_realization) + "," + row.method +
               "," + row.coefficient + ",";
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,", row.coverage, row.mc_se);
        out += buf;
        out += std::to_string(row.failures) + "\n";
    }
    return out;
}

} // namespace exchnet

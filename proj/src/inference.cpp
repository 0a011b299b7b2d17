#include "exchnet/inference.hpp"

#include <cmath>

#include "exchnet/error.hpp"
#include "exchnet/stats.hpp"

namespace exchnet {

InferenceMode inference_mode_from_name(const std::string& name) {
    if (name == "model") return InferenceMode::Model;
    if (name == "naive") return InferenceMode::Naive;
    if (name == "naive-overdispersed") return InferenceMode::NaiveOverdispersed;
    if (name == "oracle") return InferenceMode::Oracle;
    throw data_error("unknown inference mode '" + name + "'");
}

std::string inference_mode_name(InferenceMode mode) {
    switch (mode) {
        case InferenceMode::Model: return "model";
        case InferenceMode::Naive: return "naive";
        case InferenceMode::NaiveOverdispersed: return "naive-overdispersed";
        case InferenceMode::Oracle: return "oracle";
    }
    return "?";
}

namespace {

struct LinkTerms {
    Eigen::MatrixXd U;  // N x p, rows u_ij = g' x_ij
    Eigen::VectorXd g;  // fitted means
    Eigen::VectorXd w;  // g'^2 / g per dyad
};

LinkTerms link_terms(const RelationalDataset& data, const Eigen::VectorXd& beta,
                     const LinkSpec& link) {
    const Eigen::MatrixXd& X = data.design();
    Eigen::VectorXd z = X * beta + data.offsets();
    LinkTerms t;
    const Eigen::Index N = X.rows();
    t.U.resize(N, X.cols());
    t.g.resize(N);
    t.w.resize(N);
    for (Eigen::Index a = 0; a < N; ++a) {
        LinkValue v = link.eval(z[a]);
        if (!(v.g > 0.0)) throw estimation_error("non-positive fitted mean in inference");
        t.g[a] = v.g;
        t.w[a] = v.dg * v.dg / v.g;
        t.U.row(a) = v.dg * X.row(a);
    }
    return t;
}

} // namespace

Eigen::MatrixXd compute_J(const RelationalDataset& data, const Eigen::VectorXd& beta_hat,
                          const LinkSpec& link) {
    LinkTerms t = link_terms(data, beta_hat, link);
    const Eigen::MatrixXd& X = data.design();
    Eigen::MatrixXd J = X.transpose() * t.w.asDiagonal() * X / static_cast<double>(X.rows());
    J = (0.5 * (J + J.transpose())).eval();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible())
        throw estimation_error("J_n is singular; reduce the number of covariates");
    return J;
}

Eigen::MatrixXd compute_L(const RelationalDataset& data, const Eigen::VectorXd& beta_hat,
                          const LinkSpec& link, const EtaVector& eta) {
    const int n = data.n_nodes();
    const int p = data.n_covariates();
    const Eigen::Index N = data.n_dyads();
    LinkTerms t = link_terms(data, beta_hat, link);
    const Eigen::MatrixXd& X = data.design();

    // per-node accumulators: s_i = sum_j u_ij (rows), c_j = sum_i u_ij (cols)
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, p);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, p);
    for (Eigen::Index a = 0; a < N; ++a) {
        auto [i, j] = edge_index_inverse(static_cast<int>(a), n);
        s.row(i - 1) += t.U.row(a);
        c.row(j - 1) += t.U.row(a);
    }

    Eigen::MatrixXd sum_v = X.transpose() * t.w.asDiagonal() * X;       // sum g'^2/g x x'
    Eigen::MatrixXd sum_uu = t.U.transpose() * t.U;                     // S1
    Eigen::MatrixXd sum_recip(p, p);                                    // S2: sum u_ij u_ji'
    {
        Eigen::MatrixXd Urev(N, p);
        for (Eigen::Index a = 0; a < N; ++a) {
            auto [i, j] = edge_index_inverse(static_cast<int>(a), n);
            Urev.row(a) = t.U.row(edge_index(j, i, n));
        }
        sum_recip = t.U.transpose() * Urev;
    }
    Eigen::MatrixXd s3 = s.transpose() * s - sum_uu;
    Eigen::MatrixXd s4 = c.transpose() * c - sum_uu;
    Eigen::MatrixXd m5 = s.transpose() * c - sum_recip;
    Eigen::MatrixXd s5 = m5 + m5.transpose(); // both sender-receiver orientations

    Eigen::MatrixXd L = sum_v + eta[0] * sum_uu + eta[1] * sum_recip + eta[2] * s3 +
                        eta[3] * s4 + eta[4] * s5;
    L /= static_cast<double>(n) * n * n - static_cast<double>(n) * n;
    return 0.5 * (L + L.transpose());
}

Eigen::MatrixXd compute_L_bruteforce(const RelationalDataset& data, const Eigen::VectorXd& beta_hat,
                                     const LinkSpec& link, const EtaVector& eta) {
    const int n = data.n_nodes();
    const Eigen::Index N = data.n_dyads();
    LinkTerms t = link_terms(data, beta_hat, link);
    const int p = data.n_covariates();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(p, p);
    // Sigma0^-1 Omega0 Sigma0^-1 entrywise: diagonal eta1 + 1/g, off-diagonal eta_m
    for (Eigen::Index a = 0; a < N; ++a) {
        for (Eigen::Index b = 0; b < N; ++b) {
            double core;
            if (a == b) {
                core = eta[0] + 1.0 / t.g[a];
            } else {
                Dyad da = edge_index_inverse(static_cast<int>(a), n);
                Dyad db = edge_index_inverse(static_cast<int>(b), n);
                switch (classify_pair(da, db)) {
                    case PairConfig::Reciprocal: core = eta[1]; break;
                    case PairConfig::SameSender: core = eta[2]; break;
                    case PairConfig::SameReceiver: core = eta[3]; break;
                    case PairConfig::SenderReceiver: core = eta[4]; break;
                    default: core = 0.0; break;
                }
            }
            if (core != 0.0) L += core * (t.U.row(a).transpose() * t.U.row(b));
        }
    }
    L /= static_cast<double>(n) * n * n - static_cast<double>(n) * n;
    return L;
}

Eigen::MatrixXd sandwich_vcov(const Eigen::MatrixXd& J_hat, const Eigen::MatrixXd& L_hat, int n,
                              std::vector<std::string>* warnings) {
    Eigen::MatrixXd V;
    Eigen::LLT<Eigen::MatrixXd> llt(J_hat);
    if (llt.info() == Eigen::Success) {
        Eigen::MatrixXd A = llt.solve(L_hat);                 // J^-1 L
        V = llt.solve(A.transpose()).transpose();             // (J^-1 L) J^-1
    } else {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J_hat);
        if (!lu.isInvertible()) throw estimation_error("J_n is singular in sandwich_vcov");
        Eigen::MatrixXd A = lu.solve(L_hat);
        V = lu.solve(A.transpose()).transpose();
    }
    V = (0.5 * (V + V.transpose()) / static_cast<double>(n)).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J_hat);
    double cond = es.eigenvalues().maxCoeff() / std::max(es.eigenvalues().minCoeff(), 1e-300);
    if (warnings && (cond > 1e12 || es.eigenvalues().minCoeff() <= 0.0))
        warnings->push_back("J_n is ill-conditioned (condition number > 1e12); intervals may be unstable");
    return V;
}

std::vector<CoefficientInterval> confidence_intervals(const Eigen::VectorXd& beta_hat,
                                                      const Eigen::MatrixXd& vcov, double alpha,
                                                      const std::vector<std::string>& names,
                                                      std::vector<std::string>* warnings) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw data_error("alpha must be in (0,1)");
    const double mult = norm_quantile(1.0 - alpha / 2.0);
    std::vector<CoefficientInterval> out;
    for (Eigen::Index l = 0; l < beta_hat.size(); ++l) {
        double var = vcov(l, l);
        double se = var > 0.0 ? std::sqrt(var) : 0.0;
        if (!(var > 0.0) && warnings)
            warnings->push_back("zero standard error for coefficient " + std::to_string(l) +
                                "; degenerate interval");
        CoefficientInterval ci;
        ci.name = names.empty() ? "beta" + std::to_string(l) : names[l];
        ci.estimate = beta_hat[l];
        ci.se = se;
        ci.ci_lo = beta_hat[l] - mult * se;
        ci.ci_hi = beta_hat[l] + mult * se;
        out.push_back(ci);
    }
    return out;
}

InferenceResult run_inference(const RelationalDataset& data, const FitResult& fit,
                              const LinkSpec& link, const InferenceOptions& options) {
    InferenceResult result;
    result.mode = options.mode;
    result.alpha = options.alpha;

    switch (options.mode) {
        case InferenceMode::Naive:
            result.eta_used = EtaVector(0, 0, 0, 0, 0);
            break;
        case InferenceMode::Oracle: {
            if (!options.eta_true) throw data_error("oracle mode requires eta_true");
            auto check = check_parameter_space(*options.eta_true, data.n_nodes());
            if (!check.valid) {
                std::string msg = "supplied eta_true violates the parameter space:";
                for (const auto& v : check.violations) msg += " " + v + ";";
                throw data_error(msg);
            }
            result.eta_used = *options.eta_true;
            break;
        }
        case InferenceMode::Model:
        case InferenceMode::NaiveOverdispersed: {
            EtaEstimate est = estimate_eta(fit.xi_hat, fit.fitted_means, data.n_nodes(),
                                           options.seed, options.shorth_c_override);
            for (const auto& w : est.warnings) result.warnings.push_back(w);
            if (options.mode == InferenceMode::NaiveOverdispersed) {
                EtaVector only1(est.eta[0], 0, 0, 0, 0);
                est.eta = only1;
            }
            result.eta_used = est.eta;
            result.eta_estimate = est;
            break;
        }
    }

    const Eigen::VectorXd& beta_eval = options.beta_override ? *options.beta_override : fit.beta_hat;
    if (beta_eval.size() != fit.beta_hat.size())
        throw data_error("beta_override has wrong dimension");
    result.J_hat = compute_J(data, beta_eval, link);
    result.L_hat = compute_L(data, beta_eval, link, result.eta_used);
    result.vcov = sandwich_vcov(result.J_hat, result.L_hat, data.n_nodes(), &result.warnings);
    result.coefficients = confidence_intervals(fit.beta_hat, result.vcov, options.alpha,
                                               data.coef_names(), &result.warnings);
    return result;
}

} // namespace exchnet

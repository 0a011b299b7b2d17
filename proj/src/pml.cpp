#include "exchnet/pml.hpp"

#include <cmath>

#include "exchnet/error.hpp"

namespace exchnet {

namespace {

void check_offsets(const Eigen::VectorXd& offsets, const LinkSpec& link) {
    if (link.kind() != LinkKind::Exponential && offsets.size() > 0 &&
        offsets.cwiseAbs().maxCoeff() > 0.0)
        throw data_error("offsets are supported with the exponential link only");
}

Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& X, const Eigen::VectorXd& offsets,
                                 const Eigen::VectorXd& beta) {
    Eigen::VectorXd z = X * beta;
    if (offsets.size() > 0) z += offsets;
    return z;
}

} // namespace

double pseudo_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& offsets, const Eigen::VectorXd& beta,
                     const LinkSpec& link) {
    check_offsets(offsets, link);
    Eigen::VectorXd z = linear_predictor(X, offsets, beta);
    double acc = 0.0;
    for (Eigen::Index a = 0; a < y.size(); ++a) {
        LinkValue v = link.eval(z[a]);
        acc += y[a] * std::log(v.g) - v.g;
    }
    return acc / static_cast<double>(y.size());
}

Eigen::VectorXd pml_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& offsets, const Eigen::VectorXd& beta,
                             const LinkSpec& link) {
    check_offsets(offsets, link);
    Eigen::VectorXd z = linear_predictor(X, offsets, beta);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(X.cols());
    for (Eigen::Index a = 0; a < y.size(); ++a) {
        LinkValue v = link.eval(z[a]);
        grad += (y[a] / v.g - 1.0) * v.dg * X.row(a).transpose();
    }
    return grad / static_cast<double>(y.size());
}

Eigen::MatrixXd pml_hessian(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& offsets, const Eigen::VectorXd& beta,
                            const LinkSpec& link) {
    check_offsets(offsets, link);
    Eigen::VectorXd z = linear_predictor(X, offsets, beta);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(X.cols(), X.cols());
    for (Eigen::Index a = 0; a < y.size(); ++a) {
        LinkValue v = link.eval(z[a]);
        // d/dbeta [(y/g - 1) g'] = (y/g - 1) g'' - y (g'/g)^2 g ... per chain rule:
        double w = (y[a] / v.g - 1.0) * v.d2g - y[a] * v.dg * v.dg / (v.g * v.g);
        H += w * (X.row(a).transpose() * X.row(a));
    }
    return H / static_cast<double>(y.size());
}

FitResult fit_pml(const RelationalDataset& data, const LinkSpec& link, const FitOptions& options) {
    const Eigen::MatrixXd& X = data.design();
    const Eigen::VectorXd& y = data.counts();
    const Eigen::VectorXd& offsets = data.offsets();
    const int p = static_cast<int>(X.cols());
    const Eigen::Index N = y.size();
    if (p == 0) throw data_error("empty design matrix");
    if (p > N) throw estimation_error("more covariates than dyads");
    check_offsets(offsets, link);

    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
        if (qr.rank() < p) {
            // name redundant columns left to right: a column is offending when
            // it adds no rank on top of the columns before it
            std::string cols;
            int have = 0;
            for (int c = 0; c < p; ++c) {
                int r = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(X.leftCols(c + 1)).rank();
                if (r > have) {
                    have = r;
                    continue;
                }
                if (!cols.empty()) cols += ", ";
                cols += data.coef_names().empty() ? std::to_string(c) : data.coef_names()[c];
            }
            throw estimation_error("design matrix is rank deficient; offending columns: " + cols);
        }
    }

    if (link.kind() == LinkKind::Exponential && y.sum() == 0.0)
        throw estimation_error("all counts are zero: exponential-link estimate diverges to -inf");

    FitResult result;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    if (link.kind() == LinkKind::Exponential) {
        // start at intercept = log(mean count), slopes 0, when a 1-column exists
        for (int c = 0; c < p; ++c) {
            if ((X.col(c).array() == 1.0).all()) {
                beta[c] = std::log(std::max(y.mean(), 1e-12));
                break;
            }
        }
    }

    double obj = pseudo_loglik(X, y, offsets, beta, link);
    bool converged = false;
    int iter = 0;
    Eigen::VectorXd grad = pml_gradient(X, y, offsets, beta, link);
    for (; iter < options.max_iterations; ++iter) {
        if (grad.cwiseAbs().maxCoeff() <= options.gradient_tol) {
            converged = true;
            break;
        }
        Eigen::MatrixXd H = pml_hessian(X, y, offsets, beta, link);
        double scale = std::max(H.cwiseAbs().maxCoeff(), 1.0);
        Eigen::VectorXd step;
        double jitter = 0.0;
        for (int attempt = 0; attempt < 40; ++attempt) {
            Eigen::MatrixXd Hj = H - jitter * Eigen::MatrixXd::Identity(p, p);
            Eigen::LDLT<Eigen::MatrixXd> ldlt(Hj);
            if (ldlt.info() == Eigen::Success) {
                step = ldlt.solve(-grad);
                if (step.allFinite() && grad.dot(step) > 0.0) break;
            }
            jitter = (jitter == 0.0) ? options.ridge_jitter * scale : jitter * 10.0;
            step.resize(0);
        }
        if (step.size() == 0) step = grad; // steepest ascent fallback
        if (jitter > 0.0 && iter == 0)
            result.warnings.push_back("hessian numerically singular; ridge jitter applied");

        double t = 1.0;
        double new_obj = obj;
        Eigen::VectorXd cand = beta;
        int halvings = 0;
        for (; halvings <= options.step_halving_limit; ++halvings) {
            cand = beta + t * step;
            bool ok = true;
            try {
                new_obj = pseudo_loglik(X, y, offsets, cand, link);
            } catch (const Error&) {
                ok = false; // link overflow along the trial step
            }
            if (ok && new_obj >= obj && std::isfinite(new_obj)) break;
            t *= 0.5;
        }
        if (halvings > options.step_halving_limit) break; // no improving step found
        beta = cand;
        obj = new_obj;
        grad = pml_gradient(X, y, offsets, beta, link);
    }
    if (!converged && grad.cwiseAbs().maxCoeff() <= options.gradient_tol) converged = true;

    result.beta_hat = beta;
    result.objective = obj;
    result.iterations = iter;
    result.converged = converged;
    result.gradient_max_norm = grad.cwiseAbs().maxCoeff();

    Eigen::VectorXd z = linear_predictor(X, offsets, beta);
    result.fitted_means.resize(N);
    result.xi_hat.resize(N);
    bool floored = false;
    for (Eigen::Index a = 0; a < N; ++a) {
        double g = link.eval(z[a]).g;
        result.fitted_means[a] = g;
        double gf = std::max(g, options.mean_floor);
        floored = floored || (g < options.mean_floor);
        result.xi_hat[a] = y[a] / gf;
    }
    if (floored)
        result.warnings.push_back("fitted mean at floor " + std::to_string(options.mean_floor) +
                                  "; residual ratios are unreliable");
    return result;
}

} // namespace exchnet

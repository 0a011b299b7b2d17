#ifndef EXCHNET_PML_HPP
#define EXCHNET_PML_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "exchnet/dataset.hpp"
#include "exchnet/link.hpp"

namespace exchnet {

struct FitOptions {
    int max_iterations = 100;
    double gradient_tol = 1e-8;     // on the max-norm of the gradient
    int step_halving_limit = 30;
    double ridge_jitter = 1e-10;    // relative, applied only when the Hessian is numerically singular
    double mean_floor = 1e-12;      // floor on fitted means when forming xi
};

struct FitResult {
    Eigen::VectorXd beta_hat;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    Eigen::VectorXd fitted_means;   // g(x'beta + offset) per dyad
    Eigen::VectorXd xi_hat;         // y / fitted mean (floored)
    double gradient_max_norm = 0.0;
    std::vector<std::string> warnings;
};

/// Average conditional Poisson objective
///   (n^2-n)^-1 sum_{i!=j} [ y_ij log g(z_ij) - g(z_ij) ],  z = x'beta + offset.
/// Offsets are accepted with the exponential link only.
double pseudo_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& offsets, const Eigen::VectorXd& beta,
                     const LinkSpec& link);

Eigen::VectorXd pml_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& offsets, const Eigen::VectorXd& beta,
                             const LinkSpec& link);

Eigen::MatrixXd pml_hessian(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& offsets, const Eigen::VectorXd& beta,
                            const LinkSpec& link);

/// Newton maximization with step-halving. The converged flag is honest: a
/// result that failed to meet the gradient tolerance is returned with
/// converged = false, never as a fabricated estimate.
FitResult fit_pml(const RelationalDataset& data, const LinkSpec& link,
                  const FitOptions& options = {});

} // namespace exchnet

#endif

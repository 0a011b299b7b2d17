#ifndef EXCHNET_INFERENCE_HPP
#define EXCHNET_INFERENCE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "exchnet/dataset.hpp"
#include "exchnet/eta.hpp"
#include "exchnet/link.hpp"
#include "exchnet/pml.hpp"

namespace exchnet {

enum class InferenceMode {
    Model,              // estimated eta (hybrid + PSD correction)
    Naive,              // eta = 0: full independence
    NaiveOverdispersed, // eta1 estimated, eta2..eta5 = 0
    Oracle              // supplied true eta
};

InferenceMode inference_mode_from_name(const std::string& name);
std::string inference_mode_name(InferenceMode mode);

struct CoefficientInterval {
    std::string name;
    double estimate;
    double se;
    double ci_lo;
    double ci_hi;
};

struct InferenceResult {
    Eigen::MatrixXd J_hat;
    Eigen::MatrixXd L_hat;
    Eigen::MatrixXd vcov;   // n^-1 J^-1 L J^-1
    std::vector<CoefficientInterval> coefficients;
    InferenceMode mode = InferenceMode::Model;
    double alpha = 0.05;
    EtaVector eta_used;
    std::optional<EtaEstimate> eta_estimate; // set in Model / NaiveOverdispersed modes
    std::vector<std::string> warnings;
};

/// J_n = (n^2-n)^-1 sum (g'^2/g) x x'. Symmetric; errors on singularity.
Eigen::MatrixXd compute_J(const RelationalDataset& data, const Eigen::VectorXd& beta_hat,
                          const LinkSpec& link);

/// L_n = (n^3-n^2)^-1 [ sum (g'^2/g) x x' + eta1 sum u u' + sum_m eta_m sum_{S_m} u_a u_b' ]
/// with u = g' x, assembled from per-node row/column accumulators in
/// O(n^2 p + n p^2); Omega_0 is never materialized.
Eigen::MatrixXd compute_L(const RelationalDataset& data, const Eigen::VectorXd& beta_hat,
                          const LinkSpec& link, const EtaVector& eta);

/// O(n^4) pair-enumeration reference path, for tests only.
Eigen::MatrixXd compute_L_bruteforce(const RelationalDataset& data, const Eigen::VectorXd& beta_hat,
                                     const LinkSpec& link, const EtaVector& eta);

/// n^-1 J^-1 L J^-1 via factorization; a conditioning warning may be pushed
/// onto warnings when J is nearly singular.
Eigen::MatrixXd sandwich_vcov(const Eigen::MatrixXd& J_hat, const Eigen::MatrixXd& L_hat, int n,
                              std::vector<std::string>* warnings = nullptr);

/// beta_l +/- sigma_l * Phi^-1(1 - alpha/2) per coefficient.
std::vector<CoefficientInterval> confidence_intervals(const Eigen::VectorXd& beta_hat,
                                                      const Eigen::MatrixXd& vcov, double alpha,
                                                      const std::vector<std::string>& names,
                                                      std::vector<std::string>* warnings = nullptr);

struct InferenceOptions {
    InferenceMode mode = InferenceMode::Model;
    double alpha = 0.05;
    std::uint64_t seed = 0;                  // CV fold assignment for the shorth
    std::optional<EtaVector> eta_true;       // required in Oracle mode
    std::optional<double> shorth_c_override;
    std::optional<Eigen::VectorXd> beta_override;  // sensitivity: evaluate J/L at a supplied beta
};

InferenceResult run_inference(const RelationalDataset& data, const FitResult& fit,
                              const LinkSpec& link, const InferenceOptions& options);

} // namespace exchnet

#endif

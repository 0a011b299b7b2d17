#ifndef EXCHNET_SIMULATE_HPP
#define EXCHNET_SIMULATE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "exchnet/dataset.hpp"
#include "exchnet/eta.hpp"
#include "exchnet/inference.hpp"
#include "exchnet/link.hpp"
#include "exchnet/rng.hpp"
#include "exchnet/truncnorm.hpp"

namespace exchnet {

/// Mixed-effects error generator
///   e_ij = C (a_i + b_j + gamma_(ij) + eps_ij),   gamma symmetric,
/// with (a_i, b_i) bivariate truncated normal and gamma, eps univariate
/// truncated normal; C normalizes E[e_ij] to 1. With iid_only the additive
/// effects are dropped and e_ij = eps_ij / E[eps].
struct MixedEffectsErrorParams {
    bool iid_only = false;
    BivariateTruncNormalParams ab;
    TruncNormalParams gamma;
    TruncNormalParams eps;

    void validate() const;
};

/// i.i.d. benchmark: eps ~ truncN(-7, 1, 0, inf), unit-mean normalized.
MixedEffectsErrorParams error_setting_iid();

/// Dependent benchmark: (a,b) ~ truncN2 with mu=(-1,1), unit scales, rho=0.5,
/// box [0,inf)^2; gamma ~ truncN(0,1,0,inf); eps ~ truncN(1,6,0,inf).
MixedEffectsErrorParams error_setting_dependent();

/// The normalization constant C = (mu_a + mu_b + mu_gamma + mu_eps)^-1 with
/// means after truncation (bivariate means by quadrature).
double normalization_constant(const MixedEffectsErrorParams& params);

/// n x n matrix of errors, diagonal zero. gamma_(ij) == gamma_(ji) exactly.
Eigen::MatrixXd gen_weakly_exch_errors(const MixedEffectsErrorParams& params, int n,
                                       RngStream& rng);

/// Covariance parameters implied by the generator, from truncated moments:
///   eta1 = C^2 (Va + Vb + Vg + Ve),  eta2 = C^2 (2 Cab + Vg),
///   eta3 = C^2 Va,  eta4 = C^2 Vb,  eta5 = C^2 Cab.
EtaVector eta_from_error_params(const MixedEffectsErrorParams& params);

/// y_ij ~ Poisson(g(x_ij' beta + offset) * e_ij), independent given the errors.
RelationalDataset simulate_counts(int n, const Eigen::MatrixXd& X, const Eigen::VectorXd& beta,
                                  const Eigen::MatrixXd& errors, const LinkSpec& link,
                                  RngStream& rng, const Eigen::VectorXd& offsets = {},
                                  std::vector<std::string> coef_names = {});

/// Four-term dyadic design: x1_ij ~ N(2,1); x2_i ~ Bernoulli(0.6) entering as
/// the product x2_i x2_j; x3_i ~ N(1,1) entering as |x3_i - x3_j|;
/// x4_ij ~ N(1,1). Rows in edge_index order.
Eigen::MatrixXd gen_design_standard(int n, RngStream& rng);
std::vector<std::string> design_standard_names();

struct CoverageConfig {
    std::vector<int> n_values = {100};
    Eigen::VectorXd beta_true;                 // default (1, -0.5, -0.5, -1)
    LinkKind link = LinkKind::Exponential;
    MixedEffectsErrorParams errors = error_setting_dependent();
    int replications = 1000;
    int x_realizations = 1;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    std::vector<InferenceMode> methods = {InferenceMode::Model, InferenceMode::Naive,
                                          InferenceMode::Oracle};
    int threads = 1;
    std::optional<double> shorth_c_override;

    void validate() const;
};

CoverageConfig coverage_config_from_json(const std::string& text);
std::string coverage_config_to_json(const CoverageConfig& config);

struct CoverageCell {
    int n = 0;
    int x_realization = 0;
    std::string method;
    std::string coefficient;
    double coverage = 0.0;
    double mc_se = 0.0;
    int failures = 0;
    int successes = 0;
};

struct CoverageResult {
    std::vector<CoverageCell> rows;
    std::vector<std::string> failure_log;  // one entry per excluded replication
};

/// Per (n, X-realization): one fixed design, R error replications, each fit
/// once and pushed through every requested inference method; a CI hit is
/// recorded per coefficient. Replications run in parallel; streams are keyed
/// (seed, n, X-realization, replication) so results are independent of
/// thread scheduling. Fit failures are excluded from the denominator and
/// logged, never silently dropped.
CoverageResult coverage_experiment(const CoverageConfig& config);

/// CSV with header n,x_realization,method,coefficient,coverage,mc_se,failures.
std::string coverage_csv(const CoverageResult& result);

} // namespace exchnet

#endif

#ifndef EXCHNET_ETA_HPP
#define EXCHNET_ETA_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace exchnet {

using Dyad = std::pair<int, int>; // 1-based node ids, i != j

/// Configuration of an ordered pair of dyads; determines which covariance
/// parameter links them.
enum class PairConfig {
    Same,            // (i,j),(i,j)        -> eta1
    Reciprocal,      // (i,j),(j,i)        -> eta2
    SameSender,      // (i,j),(i,l)        -> eta3
    SameReceiver,    // (i,j),(k,j)        -> eta4
    SenderReceiver,  // (i,j),(k,i) or (i,j),(j,k) -> eta5
    Disjoint         // no shared node     -> 0 (dissociated)
};

PairConfig classify_pair(const Dyad& a, const Dyad& b);

/// (eta1,...,eta5): variance, reciprocity, same-sender, same-receiver,
/// sender-receiver covariances of the latent errors.
struct EtaVector {
    double values[5] = {0, 0, 0, 0, 0};

    EtaVector() = default;
    EtaVector(double e1, double e2, double e3, double e4, double e5) : values{e1, e2, e3, e4, e5} {}

    double& operator[](int m) { return values[m]; }       // 0-based: [0] = eta1
    double operator[](int m) const { return values[m]; }
    double eta1() const { return values[0]; }
};

struct EtaEstimate {
    EtaVector eta;
    bool shorth_branch = false;      // true when eta1 came from the k-shorth
    double naive_eta1 = 0.0;         // the unconstrained moment estimate
    std::optional<double> tuned_c;   // CV-selected c (set when the shorth ran)
    double psd_correction = 0.0;     // amount added to eta1 by the eigenvalue correction
    std::vector<std::string> warnings;
};

/// Moment estimators of eta2..eta5 from per-dyad residual ratios (edge_index
/// order), via per-node row/column accumulators in O(n^2).
EtaVector estimate_eta_offdiag(const Eigen::VectorXd& xi, int n);

/// Unconstrained moment estimator of eta1 (may be negative):
///   mean(xi^2) - mean(xi)^2 - mean(1/g).
double estimate_eta1_naive(const Eigen::VectorXd& xi, const Eigen::VectorXd& fitted_means);

/// Per-dyad values zeta_ij = xi_ij^2 - 1 - 1/g_ij fed to the shorth.
Eigen::VectorXd zeta_values(const Eigen::VectorXd& xi, const Eigen::VectorXd& fitted_means);

/// Center of the shortest interval containing at least k of the points.
/// With positive_center_only, intervals whose center is <= 0 are skipped and
/// nullopt is returned when no interval qualifies. Ties broken by the smaller
/// left endpoint, then the smaller center.
std::optional<double> kshorth(std::vector<double> points, int k, bool positive_center_only);

struct CvTuneResult {
    double c = 0.0;
    bool degenerate_grid = false;   // fell back to the lower endpoint
    double grid_lo = 0.0;
    double grid_hi = 0.0;
};

/// 10-fold cross validation of the shorth tuning parameter c over a 50-point
/// geometric grid between 2/log(N) and #{zeta > -max(zeta)}/log(N), with
/// k = ceil(c log N). Fold assignment is seeded; ties go to the smallest c.
CvTuneResult cv_tune_c(const Eigen::VectorXd& zeta, std::uint64_t seed);

/// Hybrid eta1: the naive estimate when positive, else the positive-center
/// k-shorth of zeta with k = ceil(c log N). Returns (eta1, shorth_branch).
std::pair<double, bool> estimate_eta1_hybrid(double naive_eta1, const Eigen::VectorXd& zeta,
                                             double c);

struct ParameterSpaceCheck {
    bool valid = true;
    std::vector<std::string> violations;
};

/// Analytic non-negative-definiteness constraints on (eta, n); equivalent to
/// lambda_min(Omega_e) >= 0 up to the stated slack.
ParameterSpaceCheck check_parameter_space(const EtaVector& eta, int n);

/// The (n^2-n) x (n^2-n) exchangeable error covariance, stored implicitly.
class StructuredOmegaE {
public:
    StructuredOmegaE(EtaVector eta, int n);

    int n_nodes() const { return n_; }
    const EtaVector& eta() const { return eta_; }

    double entry(int idx_a, int idx_b) const;

    /// Dense form for tests and diagnostics; quadratic in n^2.
    Eigen::MatrixXd materialize() const;

    /// Matrix-vector product in O(n^2) using the five-parameter structure.
    /// v and the result are in edge_index order.
    Eigen::VectorXd multiply(const Eigen::VectorXd& v) const;

    double lambda_max(double tol = 1e-10, int max_iter = 5000) const;
    double lambda_min(double tol = 1e-10, int max_iter = 5000) const;

private:
    EtaVector eta_;
    int n_;
};

/// Eigenvalue correction: lifts eta1 by max(0, -lambda_min(Omega_e)) plus a
/// 1e-12 slack so the corrected Omega_e is PSD; eta2..eta5 are untouched.
/// Idempotent. The amount added is reported through correction_applied.
EtaVector psd_correct(const EtaVector& eta, int n, double* correction_applied = nullptr);

/// Entry of Cov(Y) under the model: Var(y_a) = g_a^2 eta1 + g_a on the
/// diagonal, g_a g_b eta_m off it. Never materialized in production paths.
double omega0_entry(int idx_a, int idx_b, int n, const EtaVector& eta,
                    const Eigen::VectorXd& fitted_means);

Eigen::MatrixXd materialize_omega0(int n, const EtaVector& eta, const Eigen::VectorXd& fitted_means);

/// Full eta estimation pipeline: moment estimators, hybrid eta1 (CV-tuned c
/// unless an override is supplied), then the PSD correction.
EtaEstimate estimate_eta(const Eigen::VectorXd& xi, const Eigen::VectorXd& fitted_means, int n,
                         std::uint64_t seed, std::optional<double> c_override = std::nullopt);

} // namespace exchnet

#endif

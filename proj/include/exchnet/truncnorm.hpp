#ifndef EXCHNET_TRUNCNORM_HPP
#define EXCHNET_TRUNCNORM_HPP

#include <limits>

#include "exchnet/rng.hpp"

namespace exchnet {

/// Normal(mu, sigma2) truncated to [lower, upper]; either bound may be infinite.
struct TruncNormalParams {
    double mu = 0.0;
    double sigma2 = 1.0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();

    void validate() const;
};

/// Inverse-CDF sampler, evaluated through the better-conditioned tail so that
/// e.g. truncN(-7, 1, 0, inf) stays accurate.
double sample_trunc_normal(const TruncNormalParams& params, RngStream& rng);

/// Closed-form mean mu + sigma (phi(a)-phi(b)) / (Phi(b)-Phi(a)).
double trunc_normal_mean(const TruncNormalParams& params);

/// Closed-form variance.
double trunc_normal_var(const TruncNormalParams& params);

/// Bivariate normal with location mu, covariance [[s1^2, rho s1 s2], [rho s1 s2, s2^2]],
/// box-truncated to [lower_i, upper_i] per coordinate.
struct BivariateTruncNormalParams {
    double mu[2] = {0.0, 0.0};
    double sigma1 = 1.0;
    double sigma2 = 1.0;
    double rho = 0.0;
    double lower[2] = {-std::numeric_limits<double>::infinity(),
                       -std::numeric_limits<double>::infinity()};
    double upper[2] = {std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity()};

    void validate() const;
};

/// Rejection from the untruncated bivariate normal; errors when the
/// acceptance rate falls below 1e-6.
void sample_bivariate_trunc_normal(const BivariateTruncNormalParams& params, RngStream& rng,
                                   double* a, double* b);

/// Moments of the box-truncated bivariate normal by 2-D Gauss-Legendre
/// quadrature: means, variances, and the covariance.
struct BivariateMoments {
    double mean[2];
    double var[2];
    double cov;
};
BivariateMoments bivariate_trunc_normal_moments(const BivariateTruncNormalParams& params);

} // namespace exchnet

#endif

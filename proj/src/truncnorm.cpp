#include "exchnet/truncnorm.hpp"

#include <cmath>
#include <vector>

#include "exchnet/error.hpp"
#include "exchnet/stats.hpp"

namespace exchnet {

void TruncNormalParams::validate() const {
    if (!(sigma2 > 0.0)) throw data_error("truncated normal requires sigma2 > 0");
    if (!(lower < upper)) throw data_error("truncated normal requires lower < upper");
    if (std::isnan(mu)) throw data_error("truncated normal location is NaN");
}

double sample_trunc_normal(const TruncNormalParams& params, RngStream& rng) {
    params.validate();
    const double sigma = std::sqrt(params.sigma2);
    const double a = (params.lower - params.mu) / sigma;
    const double b = (params.upper - params.mu) / sigma;
    const double u = rng.next_uniform();
    double z;
    if (a >= 0.0) {
        // right tail: work with survival probabilities
        const double pa = norm_sf(a);
        const double pb = std::isinf(b) ? 0.0 : norm_sf(b);
        const double p = pb + u * (pa - pb);
        if (!(p > 0.0)) throw estimation_error("truncated normal mass underflow");
        z = -norm_quantile(p);
    } else if (b <= 0.0) {
        const double pa = std::isinf(a) ? 0.0 : norm_cdf(a);
        const double pb = norm_cdf(b);
        const double p = pa + u * (pb - pa);
        if (!(p > 0.0)) throw estimation_error("truncated normal mass underflow");
        z = norm_quantile(p);
    } else {
        const double pa = std::isinf(a) ? 0.0 : norm_cdf(a);
        const double pb = std::isinf(b) ? 1.0 : norm_cdf(b);
        z = norm_quantile(pa + u * (pb - pa));
    }
    return params.mu + sigma * z;
}

namespace {

struct TailQuantities {
    double phi_a, phi_b, a_phi_a, b_phi_b, mass;
};

TailQuantities tails(double a, double b) {
    TailQuantities t;
    t.phi_a = std::isinf(a) ? 0.0 : norm_pdf(a);
    t.phi_b = std::isinf(b) ? 0.0 : norm_pdf(b);
    t.a_phi_a = std::isinf(a) ? 0.0 : a * t.phi_a;
    t.b_phi_b = std::isinf(b) ? 0.0 : b * t.phi_b;
    if (a >= 0.0)
        t.mass = norm_sf(a) - (std::isinf(b) ? 0.0 : norm_sf(b));
    else if (b <= 0.0)
        t.mass = norm_cdf(b) - (std::isinf(a) ? 0.0 : norm_cdf(a));
    else
        t.mass = (std::isinf(b) ? 1.0 : norm_cdf(b)) - (std::isinf(a) ? 0.0 : norm_cdf(a));
    if (!(t.mass > 0.0)) throw estimation_error("truncated normal mass underflow");
    return t;
}

} // namespace

double trunc_normal_mean(const TruncNormalParams& params) {
    params.validate();
    const double sigma = std::sqrt(params.sigma2);
    const double a = (params.lower - params.mu) / sigma;
    const double b = (params.upper - params.mu) / sigma;
    TailQuantities t = tails(a, b);
    return params.mu + sigma * (t.phi_a - t.phi_b) / t.mass;
}

double trunc_normal_var(const TruncNormalParams& params) {
    params.validate();
    const double sigma = std::sqrt(params.sigma2);
    const double a = (params.lower - params.mu) / sigma;
    const double b = (params.upper - params.mu) / sigma;
    TailQuantities t = tails(a, b);
    const double d = (t.phi_a - t.phi_b) / t.mass;
    return params.sigma2 * (1.0 + (t.a_phi_a - t.b_phi_b) / t.mass - d * d);
}

void BivariateTruncNormalParams::validate() const {
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw data_error("bivariate truncated normal requires positive scales");
    if (!(std::fabs(rho) < 1.0)) throw data_error("bivariate truncated normal requires |rho| < 1");
    for (int d = 0; d < 2; ++d)
        if (!(lower[d] < upper[d])) throw data_error("bivariate truncation box is empty");
}

void sample_bivariate_trunc_normal(const BivariateTruncNormalParams& params, RngStream& rng,
                                   double* a, double* b) {
    params.validate();
    const double chol21 = params.rho;                        // of the correlation matrix
    const double chol22 = std::sqrt(1.0 - params.rho * params.rho);
    constexpr long kMaxAttempts = 4'000'000; // acceptance-rate guard at 1e-6 scale
    for (long attempt = 0; attempt < kMaxAttempts; ++attempt) {
        double z1 = rng.next_normal();
        double z2 = rng.next_normal();
        double x = params.mu[0] + params.sigma1 * z1;
        double y = params.mu[1] + params.sigma2 * (chol21 * z1 + chol22 * z2);
        if (x >= params.lower[0] && x <= params.upper[0] && y >= params.lower[1] &&
            y <= params.upper[1]) {
            *a = x;
            *b = y;
            return;
        }
    }
    throw estimation_error(
        "bivariate truncated normal: acceptance rate below 1e-6; reparameterize the truncation box");
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(m);
    weights.resize(m);
    for (int k = 0; k < (m + 1) / 2; ++k) {
        double x = std::cos(M_PI * (k + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int l = 2; l <= m; ++l) {
                double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
                p0 = p1;
                p1 = p2;
            }
            dp = m * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        nodes[k] = -x;
        nodes[m - 1 - k] = x;
        weights[k] = weights[m - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

} // namespace

BivariateMoments bivariate_trunc_normal_moments(const BivariateTruncNormalParams& params) {
    params.validate();
    constexpr int kOrder = 96;
    constexpr double kRange = 10.0; // integration cut at mu +/- 10 sigma
    std::vector<double> gl_x, gl_w;
    gauss_legendre(kOrder, gl_x, gl_w);

    double lo[2], hi[2];
    const double sig[2] = {params.sigma1, params.sigma2};
    for (int d = 0; d < 2; ++d) {
        lo[d] = std::max(params.lower[d], params.mu[d] - kRange * sig[d]);
        hi[d] = std::min(params.upper[d], params.mu[d] + kRange * sig[d]);
        if (!(lo[d] < hi[d])) throw estimation_error("truncation box has negligible mass");
    }

    const double det = 1.0 - params.rho * params.rho;
    const double norm_const = 1.0 / (2.0 * M_PI * params.sigma1 * params.sigma2 * std::sqrt(det));

    double m00 = 0, m10 = 0, m01 = 0, m20 = 0, m02 = 0, m11 = 0;
    for (int ka = 0; ka < kOrder; ++ka) {
        const double x = 0.5 * (hi[0] + lo[0]) + 0.5 * (hi[0] - lo[0]) * gl_x[ka];
        const double wx = 0.5 * (hi[0] - lo[0]) * gl_w[ka];
        const double zx = (x - params.mu[0]) / params.sigma1;
        for (int kb = 0; kb < kOrder; ++kb) {
            const double y = 0.5 * (hi[1] + lo[1]) + 0.5 * (hi[1] - lo[1]) * gl_x[kb];
            const double wy = 0.5 * (hi[1] - lo[1]) * gl_w[kb];
            const double zy = (y - params.mu[1]) / params.sigma2;
            const double q = (zx * zx - 2.0 * params.rho * zx * zy + zy * zy) / det;
            const double f = norm_const * std::exp(-0.5 * q) * wx * wy;
            m00 += f;
            m10 += f * x;
            m01 += f * y;
            m20 += f * x * x;
            m02 += f * y * y;
            m11 += f * x * y;
        }
    }
    if (!(m00 > 0.0)) throw estimation_error("truncation box has negligible mass");
    BivariateMoments out;
    out.mean[0] = m10 / m00;
    out.mean[1] = m01 / m00;
    out.var[0] = m20 / m00 - out.mean[0] * out.mean[0];
    out.var[1] = m02 / m00 - out.mean[1] * out.mean[1];
    out.cov = m11 / m00 - out.mean[0] * out.mean[1];
    return out;
}

} // namespace exchnet

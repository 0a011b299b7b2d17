#ifndef EXCHNET_STATS_HPP
#define EXCHNET_STATS_HPP

#include <cmath>

namespace exchnet {

/// Standard normal density.
inline double norm_pdf(double z) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

/// Standard normal CDF.
inline double norm_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

/// Upper tail P(Z > z), accurate for large z.
inline double norm_sf(double z) { return 0.5 * std::erfc(z * 0.70710678118654752440); }

/// Standard normal quantile, Wichura's AS 241 (double precision, ~1e-16
/// relative away from the endpoints). Accepts p in (0, 1).
double norm_quantile(double p);

} // namespace exchnet

#endif

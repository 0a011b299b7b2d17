#include "exchnet/rng.hpp"

#include <cmath>

#include "exchnet/error.hpp"
#include "exchnet/stats.hpp"

namespace exchnet {

double RngStream::next_normal() { return norm_quantile(next_uniform()); }

namespace {

// Hoermann's PTRS transformed rejection, valid for mean >= 10.
long poisson_ptrs(RngStream& rng, double mean) {
    const double log_mean = std::log(mean);
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        double u = rng.next_uniform() - 0.5;
        double v = rng.next_uniform();
        double us = 0.5 - std::fabs(u);
        double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<long>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            kf * log_mean - mean - std::lgamma(kf + 1.0)) {
            return static_cast<long>(kf);
        }
    }
}

} // namespace

long RngStream::next_poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean))
        throw internal_error("poisson mean must be finite and nonnegative");
    if (mean == 0.0) return 0;
    if (mean < 10.0) {
        // Knuth inversion by multiplication of uniforms.
        const double limit = std::exp(-mean);
        double prod = 1.0;
        long k = -1;
        do {
            ++k;
            prod *= next_uniform();
        } while (prod > limit);
        return k;
    }
    return poisson_ptrs(*this, mean);
}

} // namespace exchnet

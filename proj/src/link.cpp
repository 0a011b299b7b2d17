#include "exchnet/link.hpp"

#include <cmath>

#include "exchnet/error.hpp"

namespace exchnet {

LinkKind link_from_name(const std::string& name) {
    if (name == "exp" || name == "exponential") return LinkKind::Exponential;
    if (name == "logistic") return LinkKind::Logistic;
    if (name == "arccot") return LinkKind::ArcCotangent;
    throw data_error("unknown link '" + name + "' (expected exp, logistic, or arccot)");
}

std::string link_name(LinkKind kind) {
    switch (kind) {
        case LinkKind::Exponential: return "exp";
        case LinkKind::Logistic: return "logistic";
        case LinkKind::ArcCotangent: return "arccot";
    }
    return "?";
}

LinkValue LinkSpec::eval(double z) const {
    if (!std::isfinite(z)) throw estimation_error("link evaluated at non-finite argument");
    switch (kind_) {
        case LinkKind::Exponential: {
            if (z > exp_bound_)
                throw estimation_error("exponential link overflow: z = " + std::to_string(z) +
                                       " exceeds bound " + std::to_string(exp_bound_));
            double e = std::exp(z);
            return {e, e, e};
        }
        case LinkKind::Logistic: {
            // evaluate through the smaller exponential for stability
            double s = (z >= 0.0) ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
            double d = s * (1.0 - s);
            return {s, d, d * (1.0 - 2.0 * s)};
        }
        case LinkKind::ArcCotangent: {
            double q = 1.0 + z * z;
            return {M_PI_2 + std::atan(z), 1.0 / q, -2.0 * z / (q * q)};
        }
    }
    throw internal_error("unreachable link kind");
}

} // namespace exchnet

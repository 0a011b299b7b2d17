#ifndef EXCHNET_LINK_HPP
#define EXCHNET_LINK_HPP

#include <string>

namespace exchnet {

enum class LinkKind { Exponential, Logistic, ArcCotangent };

LinkKind link_from_name(const std::string& name); // "exp", "logistic", "arccot"
std::string link_name(LinkKind kind);

struct LinkValue {
    double g;
    double dg;
    double d2g;
};

/// Positive link with analytic first and second derivatives.
///   exponential:   g(z) = e^z
///   logistic:      g(z) = 1/(1+e^-z)
///   arc-cotangent: g(z) = arccot(-z) = pi/2 + atan(z), range (0, pi)
/// The exponential link throws an estimation error when z exceeds the
/// overflow bound instead of silently saturating.
class LinkSpec {
public:
    explicit LinkSpec(LinkKind kind, double exp_overflow_bound = 700.0)
        : kind_(kind), exp_bound_(exp_overflow_bound) {}

    LinkKind kind() const { return kind_; }
    LinkValue eval(double z) const;

private:
    LinkKind kind_;
    double exp_bound_;
};

} // namespace exchnet

#endif

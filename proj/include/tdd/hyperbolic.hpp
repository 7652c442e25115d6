#pragma once

#include "tdd/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace tdd {

/// Smallest argument accepted by coth(). Interface arguments a = sigma*alpha
/// and b = sigma*(T - alpha) never get this small for validated parameters.
inline constexpr double kMinCothArgument = 1e-12;

namespace detail {

template <class Real>
void require_coth_argument(Real x) {
    if (!(x >= Real(kMinCothArgument))) {
        throw Error(ErrorKind::invalid_parameter,
                    "coth argument " + std::to_string(static_cast<double>(x)) + " below 1e-12");
    }
}

}  // namespace detail

template <class Real>
Real coth(Real x) {
    detail::require_coth_argument(x);
    return Real(1) / std::tanh(x);
}

/// tanh(x) - 1 without cancellation, x >= 0.
template <class Real>
Real tanh_minus_one(Real x) {
    return Real(-2) / (std::exp(Real(2) * x) + Real(1));
}

/// coth(x) - 1 without cancellation, x > 0.
template <class Real>
Real coth_minus_one(Real x) {
    detail::require_coth_argument(x);
    return Real(2) / std::expm1(Real(2) * x);
}

/// A real number stored as sign * exp(log_magnitude); used for cosh/sinh
/// coefficients whose magnitude can exceed the double range.
template <class Real>
struct SignedLog {
    Real log_magnitude = -std::numeric_limits<Real>::infinity();
    int sign = 0;

    static SignedLog from_value(Real v) {
        if (v == Real(0)) return {};
        return {std::log(std::abs(v)), v > 0 ? 1 : -1};
    }

    /// May overflow to +-inf; that is the point of keeping the log form.
    Real value() const {
        if (sign == 0) return Real(0);
        return Real(sign) * std::exp(log_magnitude);
    }

    friend SignedLog operator+(const SignedLog& x, const SignedLog& y) {
        if (x.sign == 0) return y;
        if (y.sign == 0) return x;
        const SignedLog& big = x.log_magnitude >= y.log_magnitude ? x : y;
        const SignedLog& small = x.log_magnitude >= y.log_magnitude ? y : x;
        const Real ratio = std::exp(small.log_magnitude - big.log_magnitude);
        const Real scale = big.sign == small.sign ? Real(1) + ratio : Real(1) - ratio;
        if (scale == Real(0)) return {};
        return {big.log_magnitude + std::log(scale), big.sign};
    }

    SignedLog operator-() const { return {log_magnitude, -sign}; }

    friend SignedLog operator-(const SignedLog& x, const SignedLog& y) { return x + (-y); }

    friend SignedLog operator*(const SignedLog& x, const SignedLog& y) {
        if (x.sign == 0 || y.sign == 0) return {};
        return {x.log_magnitude + y.log_magnitude, x.sign * y.sign};
    }

    friend SignedLog operator/(const SignedLog& x, const SignedLog& y) {
        if (y.sign == 0) throw Error(ErrorKind::invalid_parameter, "division by zero in log arithmetic");
        if (x.sign == 0) return {};
        return {x.log_magnitude - y.log_magnitude, x.sign * y.sign};
    }
};

/// log(coth(x) - 1), finite for every x > 0.
template <class Real>
Real log_coth_minus_one(Real x) {
    detail::require_coth_argument(x);
    const Real two_x = Real(2) * x;
    if (two_x < Real(600)) return std::log(Real(2) / std::expm1(two_x));
    return std::numbers::ln2_v<Real> - two_x - std::log1p(-std::exp(-two_x));
}

/// log(1 - tanh(x)), finite for every x >= 0.
template <class Real>
Real log_one_minus_tanh(Real x) {
    const Real two_x = Real(2) * x;
    return std::numbers::ln2_v<Real> - two_x - std::log1p(std::exp(-two_x));
}

/// c1*cosh(sigma*t) + c2*sinh(sigma*t), evaluated through half-exponentials
/// so that sigma*t up to ~709 + log(2) stays finite.
template <class Real = double>
class HyperbolicCombination {
public:
    HyperbolicCombination(Real c1, Real c2, Real sigma) : c1_(c1), c2_(c2), sigma_(sigma) {
        if (!(sigma > Real(0)) || !std::isfinite(static_cast<double>(sigma))) {
            throw Error(ErrorKind::invalid_parameter, "hyperbolic combination needs sigma > 0");
        }
        if (!std::isfinite(static_cast<double>(c1)) || !std::isfinite(static_cast<double>(c2))) {
            throw Error(ErrorKind::invalid_parameter, "hyperbolic combination needs finite coefficients");
        }
    }

    Real value(Real t) const {
        const auto [grow, decay] = half_exponentials(t);
        return (c1_ + c2_) * grow + (c1_ - c2_) * decay;
    }

    Real derivative(Real t) const {
        const auto [grow, decay] = half_exponentials(t);
        return sigma_ * ((c1_ + c2_) * grow - (c1_ - c2_) * decay);
    }

    Real sigma() const { return sigma_; }

private:
    struct Halves {
        Real grow;
        Real decay;
    };

    Halves half_exponentials(Real t) const {
        const Real x = sigma_ * t;
        const Real ln2 = std::numbers::ln2_v<Real>;
        return {std::exp(x - ln2), std::exp(-x - ln2)};
    }

    Real c1_;
    Real c2_;
    Real sigma_;
};

/// Free-function form of the general modal solution evaluator.
template <class Real = double>
HyperbolicCombination<Real> modal_general_solution(Real c1, Real c2, Real sigma) {
    return HyperbolicCombination<Real>(c1, c2, sigma);
}

}  // namespace tdd

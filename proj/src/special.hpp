#pragma once

// Internal helpers around the standard normal and Student t special
// functions.  Right-tail quantities are computed through erfc/ibeta so they
// stay accurate down to survival probabilities ~1e-300.

#include <cmath>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace tailduality::detail {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kInvSqrt2Pi = 0.3989422804014327;

inline double normal_pdf(double z) {
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

inline double normal_cdf(double z) {
    return 0.5 * boost::math::erfc(-z / kSqrt2);
}

inline double normal_survival(double z) {
    return 0.5 * boost::math::erfc(z / kSqrt2);
}

inline double normal_quantile(double alpha) {
    // erfc_inv keeps both tails accurate; erf_inv would lose the right one.
    if (alpha <= 0.5) return -kSqrt2 * boost::math::erfc_inv(2.0 * alpha);
    return kSqrt2 * boost::math::erfc_inv(2.0 * (1.0 - alpha));
}

// Standardized Student t (location 0, scale 1), nu > 0.
inline double student_pdf(double nu, double z) {
    const double log_norm = std::lgamma(0.5 * (nu + 1.0)) -
                            std::lgamma(0.5 * nu) -
                            0.5 * std::log(nu * M_PI);
    return std::exp(log_norm - 0.5 * (nu + 1.0) * std::log1p(z * z / nu));
}

inline double student_survival(double nu, double z) {
    const double zz = z * z;
    // Near the center nu/(nu + z*z) rounds to 1 and ibeta flattens at 1/2;
    // the swapped-argument complement keeps full precision there.
    const double half_tail =
        zz <= nu ? 0.5 * boost::math::ibetac(0.5, 0.5 * nu, zz / (nu + zz))
                 : 0.5 * boost::math::ibeta(0.5 * nu, 0.5, nu / (nu + zz));
    return z >= 0.0 ? half_tail : 1.0 - half_tail;
}

inline double student_cdf(double nu, double z) {
    return student_survival(nu, -z);
}

}  // namespace tailduality::detail

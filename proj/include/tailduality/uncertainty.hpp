#pragma once

#include <variant>

#include "tailduality/intervals.hpp"
#include "tailduality/loss_model.hpp"

namespace tailduality {

/// All distributions with mean m and centered p-th moment at most v^p:
/// { F : E_F[X] = m, E_F[|X - m|^p]^{1/p} <= v }.  Requires p > 1, v >= 0.
struct MomentBall {
    double p;
    double m;
    double v;
};

/// p-Wasserstein ball of radius delta around a benchmark distribution.
/// Requires p >= 1, delta >= 0.
struct WassersteinBall {
    double p;
    double delta;
    LossModel benchmark;
};

using UncertaintySpec = std::variant<MomentBall, WassersteinBall>;

/// Supremum of ES_alpha over the ball, alpha in [0, 1).
///
/// Moment ball:  m + v * alpha * (alpha^p (1-alpha) + (1-alpha)^p alpha)^{-1/p}.
/// Wasserstein:  ES_alpha(benchmark) + delta / (1 - alpha)^{1/p}.
double worst_es(const UncertaintySpec& spec, double alpha);

/// Supremum of E[(X - t)_+] over the ball, via the threshold representation:
/// maximize over alpha in [0, 1] the benchmark objective plus the ball's
/// inflation term.  The optimizer interval is the set of maximizing levels,
/// bracketed to within the reported tolerance.
OptResult<ProbabilityInterval> worst_mean_excess(const UncertaintySpec& spec,
                                                 double t);

/// Closed form for the 2-Wasserstein ball around the unit Pareto with tail
/// index 2:  (1 + delta/2)^2 / t when t > 1 + delta/2, else 2 + delta - t.
/// Throws std::invalid_argument unless theta == 2.
double pareto_worst_mean_excess_closed_form(double theta, double delta,
                                            double t);

}  // namespace tailduality

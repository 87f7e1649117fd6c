#pragma once

#include "tailduality/intervals.hpp"
#include "tailduality/loss_model.hpp"

namespace tailduality {

/// Expected shortfall at level alpha in [0, 1]:
/// ES_alpha = (1 - alpha)^{-1} * integral of var_left(u) du over (alpha, 1),
/// with ES_1 = var_left(1).  Requires a finite mean; may be +inf at alpha = 1
/// for unbounded models.
double es(const LossModel& model, double alpha);

/// Left tail counterpart: ES^-_alpha = alpha^{-1} * integral of var_left(u)
/// du over (0, alpha), with ES^-_0 = var_right(0).
double es_left(const LossModel& model, double alpha);

/// Objective of the threshold representation of the upper partial moment:
/// g(alpha) = (1 - alpha) * (ES_alpha - t), with g(1) = 0 by the convention
/// 0 * x = 0 (even when ES_1 = +inf).  Concave in alpha; its maximum over
/// [0, 1] equals E[(X - t)_+].
double reverse_es_objective(const LossModel& model, double t, double alpha);

/// Counterpart for E[X ^ t] (^ = min): h(alpha) = alpha * ES^-_alpha +
/// (1 - alpha) * t, convex in alpha, with h(0) = t.
double mean_min_objective(const LossModel& model, double t, double alpha);

/// ES via its threshold variational form:
///   ES_alpha = min over t of { t + E[(X - t)_+] / (1 - alpha) },
/// the minimizers being exactly [var_left(alpha), var_right(alpha)].
/// Requires alpha in [0, 1).
OptResult<QuantileInterval> es_via_ru(const LossModel& model, double alpha);

/// E[(X - t)_+] as the maximum of reverse_es_objective over alpha in [0, 1].
/// The maximizers are exactly [P(X < t), P(X <= t)].
OptResult<ProbabilityInterval> mean_excess_via_reverse(const LossModel& model,
                                                       double t);

/// E[X ^ t] as the minimum of mean_min_objective over alpha in [0, 1];
/// same maximizer interval [P(X < t), P(X <= t)].
OptResult<ProbabilityInterval> mean_min_via_reverse(const LossModel& model,
                                                    double t);

}  // namespace tailduality

#pragma once

#include <functional>
#include <string>

#include "tailduality/intervals.hpp"
#include "tailduality/loss_model.hpp"

namespace tailduality {

/// Loss kernel for an optimized-certainty-equivalent functional: convex,
/// nondecreasing, v(0) = 0, with right derivative bounded by v_bar (which
/// may be +inf) and vanishing at -inf.  Construction validates these
/// properties on a grid over [-50, 50] and throws std::invalid_argument
/// when they fail.
class OceKernel {
  public:
    static OceKernel positive_part();
    /// v(x) = (x)_+ / (1 - alpha), alpha in [0, 1).
    static OceKernel scaled_positive_part(double alpha);
    /// v(x) = e^x - 1 (unbounded derivative).
    static OceKernel entropic();
    static OceKernel custom(std::string name,
                            std::function<double(double)> value,
                            std::function<double(double)> right_derivative,
                            double v_bar);

    double operator()(double x) const { return value_(x); }
    double right_derivative(double x) const { return deriv_(x); }
    double v_bar() const { return v_bar_; }
    const std::string& name() const { return name_; }

  private:
    OceKernel(std::string name, std::function<double(double)> value,
              std::function<double(double)> deriv, double v_bar);
    void validate() const;

    std::string name_;
    std::function<double(double)> value_;
    std::function<double(double)> deriv_;
    double v_bar_;
};

/// Parse a kernel token: "positive-part", "scaled-positive-part:alpha=0.9",
/// or "entropic".
OceKernel parse_kernel(const std::string& token);

/// E[v(X - t)].  Exact sum for Empirical; survival-integral quadrature for
/// essentially bounded models (e.g. truncated parametric ones).  Throws
/// std::domain_error for unbounded non-empirical models -- truncate first.
double expected_kernel(const LossModel& model, const OceKernel& v, double t);

/// Certainty-equivalent value at sensitivity beta in (0, v_bar]:
///   R_beta = inf over t of { t + E[v(X - t)] / beta }.
/// optimizer is a minimizing threshold t*.
OptResult<double> oce(const LossModel& model, const OceKernel& v, double beta);

/// E[v(X - t)] recovered from the family of certainty equivalents:
///   sup over beta in (0, v_bar] of beta * (R_beta - t).
/// optimizer is the best beta found by the bracketed search.
OptResult<double> expected_kernel_via_reverse(const LossModel& model,
                                              const OceKernel& v, double t);

/// Convex conjugate sup_alpha { alpha * t - f1(alpha) } of
/// f1(alpha) = -(1 - alpha) * ES_alpha over [0, 1].  Equals E[max(X, t)];
/// the maximizers are exactly [P(X < t), P(X <= t)].
OptResult<ProbabilityInterval> conjugate_f1(const LossModel& model, double t);

/// Convex conjugate of f2(alpha) = alpha * ES^-_alpha over [0, 1].  Equals
/// E[(t - X)_+], with the same maximizer interval as conjugate_f1.  The two
/// conjugates differ by E[X] for every t.
OptResult<ProbabilityInterval> conjugate_f2(const LossModel& model, double t);

/// The two conjugate inputs, exposed for plotting and tests.  Both are
/// convex on [0, 1] with derivative var_left(alpha); the 0 * inf = 0
/// convention makes f1(1) = 0 and f2(0) = 0 literal.
double f1(const LossModel& model, double alpha);
double f2(const LossModel& model, double alpha);

}  // namespace tailduality

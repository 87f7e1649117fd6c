#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace tailduality {

// Losses are real-valued random variables with a finite mean.  Each family
// below is a value type; LossModel wraps one of them and exposes the shared
// operations (cdf, quantiles, mean, upper partial expectation).

/// P(X > x) = x^{-theta} for x >= 1.  Requires theta > 1 so the mean exists.
struct Pareto {
    double theta;
};

struct Exponential {
    double rate;
};

struct Normal {
    double mean;
    double stddev;
};

/// Student t with nu > 1 (finite mean), shifted and scaled.
struct StudentT {
    double nu;
    double location = 0.0;
    double scale = 1.0;
};

/// log X ~ Normal(mu_log, sigma_log^2).
struct Lognormal {
    double mu_log;
    double sigma_log;
};

struct Weibull {
    double shape;
    double scale;
};

/// Density b^a x^{a-1} e^{-bx} / Gamma(a); `rate` is b.
struct Gamma {
    double shape;
    double rate;
};

/// Finite sample with equal weights 1/n.  Values are kept sorted; prefix
/// sums make partial expectations exact (no quadrature).
class EmpiricalSample {
  public:
    explicit EmpiricalSample(std::vector<double> values);

    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double min() const { return values_.front(); }
    double max() const { return values_.back(); }

    /// Sum of the k smallest values, 0 <= k <= n.
    double prefix_sum(std::size_t k) const { return prefix_[k]; }
    /// Sum of the n - k largest values.
    double suffix_sum(std::size_t k) const { return prefix_.back() - prefix_[k]; }

    /// Index j of the left quantile order statistic for alpha in (0, 1]:
    /// the first j with (j + 1) / n >= alpha.
    std::size_t left_index(double alpha) const;
    /// Index for the right quantile, alpha in [0, 1): first j with
    /// (j + 1) / n > alpha.
    std::size_t right_index(double alpha) const;

  private:
    std::vector<double> values_;
    std::vector<double> prefix_;
};

class LossModel;

/// Base model clamped to [lo, hi] on the loss axis: X' = min(max(X, lo), hi).
/// The result is essentially bounded, which some functionals require.
struct Truncated {
    std::shared_ptr<const LossModel> base;
    double lo;
    double hi;
};

class LossModel {
  public:
    using Family = std::variant<Pareto, Exponential, Normal, StudentT,
                                Lognormal, Weibull, Gamma, EmpiricalSample,
                                Truncated>;

    explicit LossModel(Family family);

    /// P(X <= t).
    double cdf(double t) const;
    /// P(X < t).  Differs from cdf only at atoms.
    double cdf_strict(double t) const;
    /// P(X > t), computed directly so the deep right tail keeps full
    /// precision (1 - cdf would round to 0 near machine epsilon).
    double survival(double t) const;

    /// Left quantile: inf{x : P(X <= x) >= alpha}.  By convention the
    /// infimum over an empty set is +inf and over all of R is -inf, so
    /// var_left(0) = -inf always and var_left(1) is the essential sup.
    double var_left(double alpha) const;
    /// Right quantile: inf{x : P(X <= x) > alpha}; var_right(1) = +inf.
    double var_right(double alpha) const;

    double mean() const;

    /// E[(X - t)_+].  Exact for Empirical and for families with a closed
    /// form; survival-integral quadrature otherwise.
    double upper_partial_expectation(double t) const;

    /// Essential infimum / supremum (-inf / +inf when unbounded).
    double ess_inf() const;
    double ess_sup() const;
    bool bounded() const;

    const Family& family() const { return family_; }
    /// Non-null iff the model is an EmpiricalSample.
    const EmpiricalSample* empirical() const;

    /// Clamp at the given probability levels: [var_left(lo_level),
    /// var_right(hi_level)] on the loss axis.  Requires 0 < lo_level <
    /// hi_level < 1 when the corresponding side is unbounded.
    LossModel truncate_at_levels(double lo_level, double hi_level) const;

    std::string describe() const;

  private:
    Family family_;
};

/// Survival-function integral for E[(X - t)_+].  Used as the primary path
/// for families without a closed form and as a cross-check for the rest.
double upper_partial_expectation_quadrature(const LossModel& model, double t);

/// Parse a model token, e.g. "pareto:theta=2", "normal:mean=0,stddev=1",
/// "empirical:file=losses.txt".  Throws std::invalid_argument on bad input.
LossModel parse_loss_model(const std::string& token);

/// One numeric value per line; blank lines are skipped and a non-numeric
/// first line is treated as a header.
EmpiricalSample load_losses(const std::string& path);

}  // namespace tailduality

#include "tailduality/dual_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "tailduality/numeric.hpp"
#include "special.hpp"

namespace tailduality {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

// (1 - alpha) * ES_alpha for a continuous parametric family, i.e. the tail
// integral of var_left over (alpha, 1).  Closed form per family.
double tail_var_integral(const LossModel& model, double alpha) {
    struct Visitor {
        const LossModel& model;
        double alpha;
        double operator()(const Pareto& f) const {
            return f.theta / (f.theta - 1.0) *
                   std::pow(1.0 - alpha, 1.0 - 1.0 / f.theta);
        }
        double operator()(const Exponential& f) const {
            return (1.0 - alpha) * (1.0 - std::log1p(-alpha)) / f.rate;
        }
        double operator()(const Normal& f) const {
            const double q = detail::normal_quantile(alpha);
            return f.mean * (1.0 - alpha) + f.stddev * detail::normal_pdf(q);
        }
        double operator()(const StudentT& f) const {
            const double q = (model.var_left(alpha) - f.location) / f.scale;
            return f.location * (1.0 - alpha) +
                   f.scale * detail::student_pdf(f.nu, q) * (f.nu + q * q) /
                       (f.nu - 1.0);
        }
        double operator()(const Lognormal& f) const {
            const double q = detail::normal_quantile(alpha);
            return std::exp(f.mu_log + 0.5 * f.sigma_log * f.sigma_log) *
                   detail::normal_cdf(f.sigma_log - q);
        }
        double operator()(const Weibull& f) const {
            const double a = 1.0 + 1.0 / f.shape;
            return f.scale * std::tgamma(a) *
                   boost::math::gamma_q(a, -std::log1p(-alpha));
        }
        double operator()(const Gamma& f) const {
            const double q = model.var_left(alpha);
            return f.shape / f.rate *
                   boost::math::gamma_q(f.shape + 1.0, f.rate * q);
        }
        double operator()(const EmpiricalSample&) const { return 0.0; }
        double operator()(const Truncated&) const { return 0.0; }
    };
    return std::visit(Visitor{model, alpha}, model.family());
}

}  // namespace

double es(const LossModel& model, double alpha) {
    require(alpha >= 0.0 && alpha <= 1.0, "es: alpha outside [0,1]");
    if (alpha == 0.0) return model.mean();
    if (alpha == 1.0) return model.ess_sup();
    if (const EmpiricalSample* s = model.empirical()) {
        // Tail average over order statistics with a fractional atom at
        // level alpha.
        const std::size_t j = s->left_index(alpha);
        const double n = static_cast<double>(s->size());
        const double cut =
            s->values()[j] * (static_cast<double>(j + 1) / n - alpha) +
            s->suffix_sum(j + 1) / n;
        return cut / (1.0 - alpha);
    }
    if (std::holds_alternative<Truncated>(model.family())) {
        // Variational identity at a known minimizer.
        const double t = model.var_left(alpha);
        return t + model.upper_partial_expectation(t) / (1.0 - alpha);
    }
    return tail_var_integral(model, alpha) / (1.0 - alpha);
}

double es_left(const LossModel& model, double alpha) {
    require(alpha >= 0.0 && alpha <= 1.0, "es_left: alpha outside [0,1]");
    if (alpha == 0.0) return model.var_right(0.0);
    if (alpha == 1.0) return model.mean();
    if (const EmpiricalSample* s = model.empirical()) {
        const std::size_t j = s->left_index(alpha);
        const double n = static_cast<double>(s->size());
        const double cut =
            s->prefix_sum(j) / n +
            s->values()[j] * (alpha - static_cast<double>(j) / n);
        return cut / alpha;
    }
    // E[X] split at level alpha: alpha * ES^- = mean - (1-alpha) * ES.
    return (model.mean() - (1.0 - alpha) * es(model, alpha)) / alpha;
}

double reverse_es_objective(const LossModel& model, double t, double alpha) {
    if (alpha >= 1.0) return 0.0;  // 0 * x = 0, even for ES_1 = +inf
    return (1.0 - alpha) * (es(model, alpha) - t);
}

double mean_min_objective(const LossModel& model, double t, double alpha) {
    if (alpha <= 0.0) return t;  // 0 * x = 0, even for ES^-_0 = -inf
    return alpha * es_left(model, alpha) + (1.0 - alpha) * t;
}

OptResult<QuantileInterval> es_via_ru(const LossModel& model, double alpha) {
    require(alpha > 0.0 && alpha < 1.0, "es_via_ru: alpha outside (0,1)");
    OptResult<QuantileInterval> result;
    result.tolerance = 1e-8;
    auto objective = [&](double t) {
        return t + model.upper_partial_expectation(t) / (1.0 - alpha);
    };
    if (const EmpiricalSample* s = model.empirical()) {
        // Piecewise-linear objective: the minimum sits at an atom.
        double best = kInf;
        const auto& v = s->values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i > 0 && v[i] == v[i - 1]) continue;
            const double y = objective(v[i]);
            result.trace.emplace_back(v[i], y);
            best = std::min(best, y);
        }
        result.value = best;
    } else {
        const double lo = model.var_left(std::max(alpha - 0.49, 1e-6));
        const double hi = model.var_right(std::min(alpha + 0.49, 1.0 - 1e-6));
        const double x_tol = 1e-8 * (1.0 + hi - lo);
        const double t_hat =
            golden_section_min(objective, lo, hi, x_tol, &result.trace);
        result.value = objective(t_hat);
        result.trace.emplace_back(t_hat, result.value);
    }
    // Theorem-level minimizer set, exact; the search only supplies the value.
    result.optimizer = {model.var_left(alpha), model.var_right(alpha)};
    return result;
}

namespace {

ProbabilityInterval level_set_at_threshold(const LossModel& model, double t) {
    return {model.cdf_strict(t), model.cdf(t)};
}

}  // namespace

OptResult<ProbabilityInterval> mean_excess_via_reverse(const LossModel& model,
                                                       double t) {
    OptResult<ProbabilityInterval> result;
    result.tolerance = 1e-8;
    if (const EmpiricalSample* s = model.empirical()) {
        // g is piecewise linear with kinks exactly at {k/n}; the scan is
        // exact.  g(k/n) = (sum of the n-k largest)/n - (1-k/n)t.
        const double n = static_cast<double>(s->size());
        double best = -kInf;
        for (std::size_t k = 0; k <= s->size(); ++k) {
            const double a = static_cast<double>(k) / n;
            const double y = s->suffix_sum(k) / n - (1.0 - a) * t;
            result.trace.emplace_back(a, y);
            best = std::max(best, y);
        }
        result.value = best;
    } else {
        auto g = [&](double alpha) {
            return reverse_es_objective(model, t, alpha);
        };
        const double a_hat =
            golden_section_max(g, 0.0, 1.0, 1e-10, &result.trace);
        result.value = std::max({g(a_hat), g(0.0), g(1.0)});
    }
    result.optimizer = level_set_at_threshold(model, t);
    return result;
}

OptResult<ProbabilityInterval> mean_min_via_reverse(const LossModel& model,
                                                    double t) {
    OptResult<ProbabilityInterval> result;
    result.tolerance = 1e-8;
    if (const EmpiricalSample* s = model.empirical()) {
        // h(k/n) = (sum of the k smallest)/n + (1-k/n)t, exact at kinks.
        const double n = static_cast<double>(s->size());
        double best = kInf;
        for (std::size_t k = 0; k <= s->size(); ++k) {
            const double a = static_cast<double>(k) / n;
            const double y = s->prefix_sum(k) / n + (1.0 - a) * t;
            result.trace.emplace_back(a, y);
            best = std::min(best, y);
        }
        result.value = best;
    } else {
        auto h = [&](double alpha) {
            return mean_min_objective(model, t, alpha);
        };
        const double a_hat =
            golden_section_min(h, 0.0, 1.0, 1e-10, &result.trace);
        result.value = std::min({h(a_hat), h(0.0), h(1.0)});
    }
    result.optimizer = level_set_at_threshold(model, t);
    return result;
}

}  // namespace tailduality

#include "tailduality/oce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "tailduality/dual_core.hpp"
#include "tailduality/numeric.hpp"

namespace tailduality {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

void require_bounded(const LossModel& model) {
    if (!model.bounded())
        throw std::domain_error(
            "certainty equivalents need an essentially bounded model; "
            "truncate parametric models first (" +
            model.describe() + ")");
}

}  // namespace

OceKernel::OceKernel(std::string name, std::function<double(double)> value,
                     std::function<double(double)> deriv, double v_bar)
    : name_(std::move(name)),
      value_(std::move(value)),
      deriv_(std::move(deriv)),
      v_bar_(v_bar) {
    validate();
}

void OceKernel::validate() const {
    require(static_cast<bool>(value_) && static_cast<bool>(deriv_),
            "kernel needs value and right-derivative functions");
    require(v_bar_ >= 1.0, "kernel bound v_bar must be >= 1");
    require(std::abs(value_(0.0)) <= 1e-9, "kernel must satisfy v(0) = 0");
    require(deriv_(-50.0) <= 1e-6,
            "kernel right derivative must vanish at large negative arguments");

    // Spot checks on a uniform grid: monotone, convex (midpoint form on the
    // uniform grid), derivative nondecreasing and bounded by v_bar.
    constexpr int kPoints = 1001;
    constexpr double kLo = -50.0, kHi = 50.0;
    double prev_v = value_(kLo);
    double prev_prev_v = 0.0;
    double prev_d = deriv_(kLo);
    for (int i = 1; i < kPoints; ++i) {
        const double x = kLo + (kHi - kLo) * i / (kPoints - 1);
        const double v = value_(x);
        const double d = deriv_(x);
        const double v_scale = 1.0 + std::abs(v) + std::abs(prev_v);
        require(v >= prev_v - 1e-9 * v_scale, "kernel must be nondecreasing");
        if (i >= 2) {
            // grid midpoint convexity: v(x_{i-1}) <= (v(x_i)+v(x_{i-2}))/2
            const double mid_bound = 0.5 * (v + prev_prev_v);
            require(prev_v <= mid_bound + 1e-9 * (1.0 + std::abs(mid_bound)),
                    "kernel must be convex");
        }
        require(d >= prev_d - 1e-9 * (1.0 + std::abs(d) + std::abs(prev_d)),
                "kernel right derivative must be nondecreasing");
        if (std::isfinite(v_bar_))
            require(d <= v_bar_ * (1.0 + 1e-9) + 1e-9,
                    "kernel right derivative exceeds v_bar");
        prev_prev_v = prev_v;
        prev_v = v;
        prev_d = d;
    }
}

OceKernel OceKernel::positive_part() {
    return OceKernel(
        "positive-part", [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x) { return x >= 0.0 ? 1.0 : 0.0; }, 1.0);
}

OceKernel OceKernel::scaled_positive_part(double alpha) {
    require(alpha >= 0.0 && alpha < 1.0,
            "scaled-positive-part needs alpha in [0,1)");
    const double w = 1.0 / (1.0 - alpha);
    std::ostringstream name;
    name << "scaled-positive-part(alpha=" << alpha << ")";
    return OceKernel(
        name.str(), [w](double x) { return x > 0.0 ? w * x : 0.0; },
        [w](double x) { return x >= 0.0 ? w : 0.0; }, w);
}

OceKernel OceKernel::entropic() {
    return OceKernel(
        "entropic", [](double x) { return std::expm1(x); },
        [](double x) { return std::exp(x); }, kInf);
}

OceKernel OceKernel::custom(std::string name,
                            std::function<double(double)> value,
                            std::function<double(double)> right_derivative,
                            double v_bar) {
    return OceKernel(std::move(name), std::move(value),
                     std::move(right_derivative), v_bar);
}

OceKernel parse_kernel(const std::string& token) {
    if (token == "positive-part") return OceKernel::positive_part();
    if (token == "entropic") return OceKernel::entropic();
    const std::string prefix = "scaled-positive-part:alpha=";
    if (token.rfind(prefix, 0) == 0) {
        const std::string arg = token.substr(prefix.size());
        std::size_t used = 0;
        double alpha = 0.0;
        try {
            alpha = std::stod(arg, &used);
        } catch (const std::exception&) {
            used = std::string::npos;
        }
        require(used == arg.size(), "bad kernel alpha: '" + arg + "'");
        return OceKernel::scaled_positive_part(alpha);
    }
    throw std::invalid_argument(
        "unknown kernel '" + token +
        "' (expected positive-part, scaled-positive-part:alpha=A, entropic)");
}

double expected_kernel(const LossModel& model, const OceKernel& v, double t) {
    if (const EmpiricalSample* s = model.empirical()) {
        double sum = 0.0;
        for (double x : s->values()) sum += v(x - t);
        return sum / static_cast<double>(s->size());
    }
    require_bounded(model);
    // E[v(X - t)] = v(a - t) + integral of v'(x - t) * P(X > x) over [a, b];
    // the integrand kinks where v' jumps (x = t for the positive-part
    // family), so integrate the two sides separately.
    const double a = model.ess_inf();
    const double b = model.ess_sup();
    auto integrand = [&](double x) {
        return v.right_derivative(x - t) * model.survival(x);
    };
    double total = v(a - t);
    const double split = std::clamp(t, a, b);
    total += integrate_adaptive(integrand, a, split, 1e-10);
    total += integrate_adaptive(integrand, split, b, 1e-10);
    return total;
}

OptResult<double> oce(const LossModel& model, const OceKernel& v, double beta) {
    require_bounded(model);
    require(std::isfinite(beta) && beta > 0.0 && beta <= v.v_bar(),
            "oce: beta must lie in (0, v_bar]");
    OptResult<double> result;
    result.tolerance = 1e-8;
    auto objective = [&](double t) {
        return t + expected_kernel(model, v, t) / beta;
    };
    // Convex objective; the minimizer usually lies inside the essential
    // range, but kernels with unbounded derivative (entropic) push it out
    // for extreme beta, so grow the bracket while the minimum hugs an edge.
    double lo = model.ess_inf() - 1.0;
    double hi = model.ess_sup() + 1.0;
    double t_hat = 0.0;
    for (int round = 0; round < 64; ++round) {
        const double x_tol = 1e-10 * (1.0 + hi - lo);
        t_hat = golden_section_min(objective, lo, hi, x_tol, &result.trace);
        const double width = hi - lo;
        const double edge = 1e3 * x_tol;
        if (t_hat - lo < edge)
            lo -= width;
        else if (hi - t_hat < edge)
            hi += width;
        else
            break;
    }
    result.value = objective(t_hat);
    result.optimizer = t_hat;
    result.trace.emplace_back(t_hat, result.value);
    return result;
}

OptResult<double> expected_kernel_via_reverse(const LossModel& model,
                                              const OceKernel& v, double t) {
    require_bounded(model);
    OptResult<double> result;
    result.tolerance = 1e-7;
    auto phi = [&](double beta) {
        return beta * (oce(model, v, beta).value - t);
    };
    constexpr double kEps = 1e-8;
    double hi = v.v_bar();
    if (!std::isfinite(hi)) {
        // Expand until the concave objective starts decreasing.
        double b = 1.0;
        double y = phi(b);
        result.trace.emplace_back(b, y);
        for (int round = 0; round < 200; ++round) {
            const double y2 = phi(2.0 * b);
            result.trace.emplace_back(2.0 * b, y2);
            b *= 2.0;
            if (y2 < y) break;
            y = y2;
        }
        hi = b;
    }
    const double b_hat =
        golden_section_max(phi, kEps, hi, 1e-10 * (1.0 + hi), &result.trace);
    double best = phi(b_hat);
    double best_beta = b_hat;
    const double y_hi = phi(hi);
    result.trace.emplace_back(hi, y_hi);
    if (y_hi > best) {
        best = y_hi;
        best_beta = hi;
    }
    result.value = best;
    result.optimizer = best_beta;  // best beta found; sup may be unattained
    return result;
}

double f1(const LossModel& model, double alpha) {
    require(alpha >= 0.0 && alpha <= 1.0, "f1: alpha outside [0,1]");
    if (alpha == 1.0) return 0.0;  // 0 * x = 0
    return -(1.0 - alpha) * es(model, alpha);
}

double f2(const LossModel& model, double alpha) {
    require(alpha >= 0.0 && alpha <= 1.0, "f2: alpha outside [0,1]");
    if (alpha == 0.0) return 0.0;  // 0 * x = 0
    return alpha * es_left(model, alpha);
}

namespace {

// Shared shape of the two Proposition-style conjugates: maximize
// alpha * t - f(alpha) over [0,1].  For Empirical models the objective is
// piecewise linear with kinks at {k/n}; kink_value gives its exact value
// there.  The maximizer set is [P(X < t), P(X <= t)] in both cases.
template <class Objective, class KinkValue>
OptResult<ProbabilityInterval> conjugate_impl(const LossModel& model, double t,
                                              Objective objective,
                                              KinkValue kink_value) {
    OptResult<ProbabilityInterval> result;
    result.tolerance = 1e-8;
    if (const EmpiricalSample* s = model.empirical()) {
        const double n = static_cast<double>(s->size());
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k <= s->size(); ++k) {
            const double a = static_cast<double>(k) / n;
            const double y = kink_value(*s, k, a);
            result.trace.emplace_back(a, y);
            best = std::max(best, y);
        }
        result.value = best;
    } else {
        const double a_hat =
            golden_section_max(objective, 0.0, 1.0, 1e-10, &result.trace);
        result.value =
            std::max({objective(a_hat), objective(0.0), objective(1.0)});
    }
    result.optimizer = {model.cdf_strict(t), model.cdf(t)};
    return result;
}

}  // namespace

OptResult<ProbabilityInterval> conjugate_f1(const LossModel& model, double t) {
    return conjugate_impl(
        model, t,
        [&](double alpha) { return alpha * t - f1(model, alpha); },
        [&](const EmpiricalSample& s, std::size_t k, double a) {
            // alpha*t + (1-alpha) ES_alpha at a kink = k t / n + tail sum / n
            return a * t + s.suffix_sum(k) / static_cast<double>(s.size());
        });
}

OptResult<ProbabilityInterval> conjugate_f2(const LossModel& model, double t) {
    return conjugate_impl(
        model, t,
        [&](double alpha) { return alpha * t - f2(model, alpha); },
        [&](const EmpiricalSample& s, std::size_t k, double a) {
            return a * t - s.prefix_sum(k) / static_cast<double>(s.size());
        });
}

}  // namespace tailduality

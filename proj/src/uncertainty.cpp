#include "tailduality/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tailduality/dual_core.hpp"
#include "tailduality/numeric.hpp"

namespace tailduality {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

void validate(const UncertaintySpec& spec) {
    if (const MomentBall* b = std::get_if<MomentBall>(&spec)) {
        require(std::isfinite(b->p) && b->p > 1.0, "moment ball requires p > 1");
        require(std::isfinite(b->m), "moment ball requires finite m");
        require(std::isfinite(b->v) && b->v >= 0.0,
                "moment ball requires v >= 0");
    } else {
        const WassersteinBall& w = std::get<WassersteinBall>(spec);
        require(std::isfinite(w.p) && w.p >= 1.0,
                "wasserstein ball requires p >= 1");
        require(std::isfinite(w.delta) && w.delta >= 0.0,
                "wasserstein ball requires delta >= 0");
    }
}

// Concave objective whose maximum over [0,1] is the worst-case mean excess.
// Endpoint values are analytic limits; the interior power terms would
// otherwise hit 0^{negative}.
double objective(const UncertaintySpec& spec, double t, double alpha) {
    if (const MomentBall* b = std::get_if<MomentBall>(&spec)) {
        if (alpha <= 0.0) return b->m - t;
        if (alpha >= 1.0) return 0.0;
        const double p = b->p;
        const double spread = std::pow(
            std::pow(1.0 - alpha, 1.0 - p) + std::pow(alpha, 1.0 - p),
            -1.0 / p);
        return (1.0 - alpha) * (b->m - t) + b->v * spread;
    }
    const WassersteinBall& b = std::get<WassersteinBall>(spec);
    if (alpha >= 1.0) return 0.0;
    const double base = reverse_es_objective(b.benchmark, t, alpha);
    // p = 1 keeps a flat delta term on [0,1); the alpha = 1 value stays 0.
    return base + b.delta * std::pow(1.0 - alpha, 1.0 - 1.0 / b.p);
}

// Concave functions attain a level set that is an interval; bracket both
// crossings of value - tol by bisection.
ProbabilityInterval bracket_level_set(
    const std::function<double(double)>& f, double a_hat, double value,
    double tol) {
    const double threshold = value - tol;
    double lo;
    if (f(0.0) >= threshold) {
        lo = 0.0;
    } else {
        double a = 0.0, b = a_hat;
        while (b - a > 1e-12) {
            const double mid = 0.5 * (a + b);
            if (mid <= a || mid >= b) break;
            (f(mid) >= threshold ? b : a) = mid;
        }
        lo = 0.5 * (a + b);
    }
    double hi;
    if (f(1.0) >= threshold) {
        hi = 1.0;
    } else {
        double a = a_hat, b = 1.0;
        while (b - a > 1e-12) {
            const double mid = 0.5 * (a + b);
            if (mid <= a || mid >= b) break;
            (f(mid) >= threshold ? a : b) = mid;
        }
        hi = 0.5 * (a + b);
    }
    return {lo, hi};
}

}  // namespace

double worst_es(const UncertaintySpec& spec, double alpha) {
    validate(spec);
    require(alpha >= 0.0 && alpha <= 1.0, "worst_es: alpha outside [0,1]");
    if (const MomentBall* b = std::get_if<MomentBall>(&spec)) {
        if (alpha == 0.0) return b->m;
        if (alpha == 1.0) return b->v > 0.0 ? kInf : b->m;
        const double p = b->p;
        const double denom = std::pow(
            std::pow(alpha, p) * (1.0 - alpha) +
                std::pow(1.0 - alpha, p) * alpha,
            -1.0 / p);
        return b->m + b->v * alpha * denom;
    }
    const WassersteinBall& b = std::get<WassersteinBall>(spec);
    if (alpha == 1.0)
        return b.delta > 0.0 ? kInf : es(b.benchmark, 1.0);
    return es(b.benchmark, alpha) +
           b.delta * std::pow(1.0 - alpha, -1.0 / b.p);
}

OptResult<ProbabilityInterval> worst_mean_excess(const UncertaintySpec& spec,
                                                 double t) {
    validate(spec);
    OptResult<ProbabilityInterval> result;
    result.tolerance = 1e-8;
    auto u = [&](double alpha) { return objective(spec, t, alpha); };

    const EmpiricalSample* sample = nullptr;
    if (const WassersteinBall* b = std::get_if<WassersteinBall>(&spec))
        sample = b->benchmark.empirical();

    double a_hat, best;
    if (sample) {
        // Kinks of the benchmark term sit exactly at {k/n}; search each
        // panel, where the objective is smooth and concave.
        const double n = static_cast<double>(sample->size());
        a_hat = 0.0;
        best = u(0.0);
        result.trace.emplace_back(0.0, best);
        for (std::size_t k = 0; k < sample->size(); ++k) {
            const double lo = static_cast<double>(k) / n;
            const double hi = static_cast<double>(k + 1) / n;
            const double x = golden_section_max(u, lo, hi, 1e-10, &result.trace);
            const double y = u(x);
            if (y > best) {
                best = y;
                a_hat = x;
            }
            const double y_hi = u(hi);
            result.trace.emplace_back(hi, y_hi);
            if (y_hi > best) {
                best = y_hi;
                a_hat = hi;
            }
        }
    } else {
        a_hat = golden_section_max(u, 0.0, 1.0, 1e-10, &result.trace);
        best = u(a_hat);
        for (double endpoint : {0.0, 1.0}) {
            const double y = u(endpoint);
            result.trace.emplace_back(endpoint, y);
            if (y > best) {
                best = y;
                a_hat = endpoint;
            }
        }
    }
    result.value = best;
    // No closed-form maximizer set is available for delta > 0; report the
    // interval where the objective is within tolerance of the maximum.
    result.optimizer = bracket_level_set(
        u, a_hat, best, result.tolerance * (1.0 + std::abs(best)));
    return result;
}

double pareto_worst_mean_excess_closed_form(double theta, double delta,
                                            double t) {
    require(theta == 2.0,
            "closed form is only available for tail index theta = 2");
    require(std::isfinite(delta) && delta >= 0.0, "delta must be >= 0");
    const double edge = 1.0 + 0.5 * delta;
    if (t > edge) return edge * edge / t;
    return 2.0 + delta - t;
}

}  // namespace tailduality

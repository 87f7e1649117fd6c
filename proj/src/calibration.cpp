#include "tailduality/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "tailduality/numeric.hpp"
#include "tailduality/uncertainty.hpp"
#include "special.hpp"

namespace tailduality {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kScoreTol = 1e-10;
constexpr int kMaxIterations = 200;
constexpr double kLevelClip = 1e-9;  // outermost quantile-integral clip

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

struct SampleStats {
    double mean = 0.0;
    double mean_log = 0.0;
    double var_log = 0.0;  // 1/n variance of logs
};

SampleStats positive_stats(const EmpiricalSample& sample,
                           const std::string& family_name) {
    require(sample.size() >= 2, family_name + " fit needs n >= 2");
    require(sample.min() > 0.0,
            family_name + " fit needs strictly positive losses");
    require(sample.min() < sample.max(),
            family_name + " fit rejects constant samples (unidentifiable)");
    SampleStats s;
    const double n = static_cast<double>(sample.size());
    double sum_log = 0.0;
    for (double x : sample.values()) sum_log += std::log(x);
    s.mean = sample.prefix_sum(sample.size()) / n;
    s.mean_log = sum_log / n;
    double ss = 0.0;
    for (double x : sample.values()) {
        const double d = std::log(x) - s.mean_log;
        ss += d * d;
    }
    s.var_log = ss / n;
    return s;
}

FitResult fit_lognormal(const EmpiricalSample& sample) {
    const SampleStats s = positive_stats(sample, "lognormal");
    const double n = static_cast<double>(sample.size());
    const double sigma = std::sqrt(s.var_log);
    double log_lik = 0.0;
    for (double x : sample.values()) log_lik -= std::log(x);
    log_lik -= n * std::log(sigma) + 0.5 * n * std::log(2.0 * M_PI) + 0.5 * n;
    return {FitFamily::Lognormal, s.mean_log, sigma, log_lik,
            /*converged=*/true, /*iterations=*/0};
}

FitResult fit_gamma(const EmpiricalSample& sample) {
    const SampleStats st = positive_stats(sample, "gamma");
    const double n = static_cast<double>(sample.size());
    const double s = std::log(st.mean) - st.mean_log;  // > 0 by Jensen
    // Thom's starting value, then Newton on ln(a) - digamma(a) = s.
    double a = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) /
               (12.0 * s);
    bool converged = false;
    int iterations = 0;
    for (; iterations < kMaxIterations; ++iterations) {
        const double score = std::log(a) - boost::math::digamma(a) - s;
        if (std::abs(score) < kScoreTol) {
            converged = true;
            break;
        }
        const double slope = 1.0 / a - boost::math::trigamma(a);
        double next = a - score / slope;
        while (next <= 0.0) next = 0.5 * (a + next > 0.0 ? a + next : a);
        a = next;
    }
    const double b = a / st.mean;
    const double log_lik = n * (a * std::log(b) - std::lgamma(a) +
                                (a - 1.0) * st.mean_log - b * st.mean);
    return {FitFamily::Gamma, a, b, log_lik, converged, iterations};
}

FitResult fit_weibull(const EmpiricalSample& sample) {
    const SampleStats st = positive_stats(sample, "weibull");
    const auto& v = sample.values();
    const double n = static_cast<double>(sample.size());
    const double shift = std::log(v.back());  // keeps x^k in range

    // Rank-regression start on the Weibull plot:
    // ln(-ln(1-F)) = k ln x - k ln lambda at plotting positions (i-1/2)/n.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = (static_cast<double>(i) + 0.5) / n;
        const double x = std::log(v[i]);
        const double y = std::log(-std::log1p(-f));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    double k = denom > 0.0 ? (n * sxy - sx * sy) / denom : 1.0;
    if (!(k > 0.0) || !std::isfinite(k)) k = 1.0;

    // Newton on the profile score 1/k + mean(ln x) - sum(x^k ln x)/sum(x^k).
    bool converged = false;
    int iterations = 0;
    for (; iterations < kMaxIterations; ++iterations) {
        double sw = 0.0, swl = 0.0, swll = 0.0;
        for (double x : v) {
            const double l = std::log(x);
            const double w = std::exp(k * (l - shift));
            sw += w;
            swl += w * l;
            swll += w * l * l;
        }
        const double ratio = swl / sw;
        const double score = 1.0 / k + st.mean_log - ratio;
        if (std::abs(score) < kScoreTol) {
            converged = true;
            break;
        }
        const double slope = -1.0 / (k * k) - (swll * sw - swl * swl) / (sw * sw);
        double next = k - score / slope;
        while (next <= 0.0) next = 0.5 * (k + next > 0.0 ? k + next : k);
        k = next;
    }
    double sw = 0.0;
    for (double x : v) sw += std::exp(k * (std::log(x) - shift));
    const double lambda = std::exp(shift + std::log(sw / n) / k);
    // sum((x/lambda)^k) = n at the profile optimum
    const double log_lik = n * std::log(k) - n * k * std::log(lambda) +
                           (k - 1.0) * n * st.mean_log - n;
    return {FitFamily::Weibull, k, lambda, log_lik, converged, iterations};
}

}  // namespace

FitFamily parse_fit_family(const std::string& name) {
    if (name == "lognormal") return FitFamily::Lognormal;
    if (name == "weibull") return FitFamily::Weibull;
    if (name == "gamma") return FitFamily::Gamma;
    throw std::invalid_argument("unknown fit family: '" + name +
                                "' (expected lognormal, weibull, gamma)");
}

std::string fit_family_name(FitFamily family) {
    switch (family) {
        case FitFamily::Lognormal: return "lognormal";
        case FitFamily::Weibull: return "weibull";
        case FitFamily::Gamma: return "gamma";
    }
    return "?";
}

LossModel FitResult::model() const {
    switch (family) {
        case FitFamily::Lognormal: return LossModel(Lognormal{param1, param2});
        case FitFamily::Weibull: return LossModel(Weibull{param1, param2});
        case FitFamily::Gamma: return LossModel(Gamma{param1, param2});
    }
    throw std::logic_error("bad fit family");
}

std::pair<std::string, std::string> FitResult::param_names() const {
    switch (family) {
        case FitFamily::Lognormal: return {"mu_log", "sigma_log"};
        case FitFamily::Weibull: return {"shape", "scale"};
        case FitFamily::Gamma: return {"shape", "rate"};
    }
    throw std::logic_error("bad fit family");
}

FitResult fit_mle(const EmpiricalSample& sample, FitFamily family) {
    switch (family) {
        case FitFamily::Lognormal: return fit_lognormal(sample);
        case FitFamily::Weibull: return fit_weibull(sample);
        case FitFamily::Gamma: return fit_gamma(sample);
    }
    throw std::logic_error("bad fit family");
}

namespace {

// Finiteness of E|X|^p decides whether W_p converges at all.
const char* infinite_moment_reason(const LossModel& model, double p) {
    if (const Pareto* f = std::get_if<Pareto>(&model.family()))
        if (p >= f->theta) return "pareto with p >= theta";
    if (const StudentT* f = std::get_if<StudentT>(&model.family()))
        if (p >= f->nu) return "student-t with p >= nu";
    return nullptr;
}

// Upper estimate of E[|X|^p ; X > q] for q deep in the right tail; exact
// for the closed-form families, asymptotic for StudentT, crude but safe for
// the rest.  Only used to bound the clipped 1e-9 tail slivers.
double tail_moment_above(const LossModel& model, double q, double p) {
    struct Visitor {
        const LossModel& model;
        double q, p;
        double operator()(const Pareto& f) const {
            return f.theta / (f.theta - p) * std::pow(q, p - f.theta);
        }
        double operator()(const Exponential& f) const {
            return std::pow(f.rate, -p) * std::tgamma(1.0 + p) *
                   boost::math::gamma_q(1.0 + p, f.rate * q);
        }
        double operator()(const Normal& f) const {
            const double z = (q - f.mean) / f.stddev;
            // integral of u^p phi(u) beyond z is < 2 z^{p-1} phi(z) once
            // z^2 >= 2(p-1); z ~ 6 at the 1e-9 clip.
            const double std_part =
                2.0 * std::pow(z, p - 1.0) * detail::normal_pdf(z);
            return std::pow(2.0, p - 1.0) *
                   (std::pow(std::abs(f.mean), p) * detail::normal_survival(z) +
                    std::pow(f.stddev, p) * std_part);
        }
        double operator()(const StudentT& f) const {
            const double z = (q - f.location) / f.scale;
            const double tail = detail::student_survival(f.nu, z);
            const double std_part = f.nu / (f.nu - p) * std::pow(z, p) * tail;
            return std::pow(2.0, p - 1.0) *
                   (std::pow(std::abs(f.location), p) * tail +
                    std::pow(f.scale, p) * std_part);
        }
        double operator()(const Lognormal& f) const {
            const double z = (std::log(q) - f.mu_log) / f.sigma_log;
            return std::exp(p * f.mu_log +
                            0.5 * p * p * f.sigma_log * f.sigma_log) *
                   detail::normal_cdf(p * f.sigma_log - z);
        }
        double operator()(const Weibull& f) const {
            const double a = 1.0 + p / f.shape;
            return std::pow(f.scale, p) * std::tgamma(a) *
                   boost::math::gamma_q(a, std::pow(q / f.scale, f.shape));
        }
        double operator()(const Gamma& f) const {
            const double lg =
                std::lgamma(f.shape + p) - std::lgamma(f.shape);
            return std::exp(lg - p * std::log(f.rate)) *
                   boost::math::gamma_q(f.shape + p, f.rate * q);
        }
        double operator()(const EmpiricalSample& s) const {
            double sum = 0.0;
            for (double x : s.values())
                if (x > q) sum += std::pow(std::abs(x), p);
            return sum / static_cast<double>(s.size());
        }
        double operator()(const Truncated& f) const {
            const double bound =
                std::max(std::abs(f.lo), std::abs(f.hi));
            return std::pow(bound, p) * model.survival(q);
        }
    };
    return std::visit(Visitor{model, q, p}, model.family());
}

// Same for the left tail, E[|X|^p ; X < q].  Families bounded below get the
// trivial range bound; the symmetric ones reflect onto tail_moment_above.
double tail_moment_below(const LossModel& model, double q, double p,
                         double mass) {
    if (const Normal* f = std::get_if<Normal>(&model.family()))
        return tail_moment_above(
            LossModel(Normal{-f->mean, f->stddev}), -q, p);
    if (const StudentT* f = std::get_if<StudentT>(&model.family()))
        return tail_moment_above(
            LossModel(StudentT{f->nu, -f->location, f->scale}), -q, p);
    const double lo = model.ess_inf();
    const double reach = std::max(std::abs(lo), std::abs(q));
    return mass * std::pow(reach, p);
}

double powp(double x, double p) { return std::pow(std::abs(x), p); }

double empirical_vs_empirical(const EmpiricalSample& a,
                              const EmpiricalSample& b, double p) {
    // Quantile functions are steps; integrate |Qa - Qb|^p exactly over the
    // merged level grid.
    const auto& va = a.values();
    const auto& vb = b.values();
    const double na = static_cast<double>(va.size());
    const double nb = static_cast<double>(vb.size());
    std::size_t i = 0, j = 0;
    double level = 0.0, total = 0.0;
    while (i < va.size() && j < vb.size()) {
        const double next_a = static_cast<double>(i + 1) / na;
        const double next_b = static_cast<double>(j + 1) / nb;
        const double cut = std::min(next_a, next_b);
        total += powp(va[i] - vb[j], p) * (cut - level);
        level = cut;
        if (next_a == cut) ++i;
        if (next_b == cut) ++j;
    }
    return std::pow(total, 1.0 / p);
}

struct BodyAndTails {
    double body;
    double tails;
};

// One side's contribution to the clipped slivers [0,eps] and [1-eps,1],
// bounded by tail moments (the 2^{p-1} split handles |x - y|^p <=
// 2^{p-1}(|x|^p + |y|^p) pairings done by the caller).
double upper_sliver(const LossModel& model, double p) {
    return tail_moment_above(model, model.var_left(1.0 - kLevelClip), p);
}

double lower_sliver(const LossModel& model, double p) {
    return tail_moment_below(model, model.var_left(kLevelClip), p, kLevelClip);
}

BodyAndTails empirical_vs_parametric(const EmpiricalSample& emp,
                                     const LossModel& param, double p) {
    // Panels at the empirical jump points: the empirical quantile is the
    // constant c on [k/n, (k+1)/n), so each panel needs only the parametric
    // quantile under the integral.
    const auto& v = emp.values();
    const double n = static_cast<double>(v.size());
    double body = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double c = v[k];
        const double lo = std::max(static_cast<double>(k) / n, kLevelClip);
        const double hi =
            std::min(static_cast<double>(k + 1) / n, 1.0 - kLevelClip);
        if (lo >= hi) continue;
        body += gauss_legendre(
            [&](double u) { return powp(param.var_left(u) - c, p); }, lo, hi,
            1);
    }
    const double split = std::pow(2.0, p - 1.0);
    double tails = split * (upper_sliver(param, p) +
                            kLevelClip * powp(v.back(), p));
    tails += split * (lower_sliver(param, p) +
                      kLevelClip * powp(v.front(), p));
    return {body, tails};
}

BodyAndTails parametric_vs_parametric(const LossModel& a, const LossModel& b,
                                      double p) {
    const double body = integrate_adaptive(
        [&](double u) { return powp(a.var_left(u) - b.var_left(u), p); },
        kLevelClip, 1.0 - kLevelClip, 1e-9);
    const double split = std::pow(2.0, p - 1.0);
    const double tails =
        split * (upper_sliver(a, p) + upper_sliver(b, p) + lower_sliver(a, p) +
                 lower_sliver(b, p));
    return {body, tails};
}

}  // namespace

WassersteinResult wasserstein_distance_full(const LossModel& a,
                                            const LossModel& b, double p) {
    require(std::isfinite(p) && p >= 1.0, "wasserstein order must be >= 1");
    for (const LossModel* m : {&a, &b}) {
        if (const char* reason = infinite_moment_reason(*m, p))
            return {kInf, 0.0,
                    "diverges: " + m->describe() +
                        " has an infinite moment of order p (" + reason + ")"};
    }
    const EmpiricalSample* ea = a.empirical();
    const EmpiricalSample* eb = b.empirical();
    if (ea && eb) return {empirical_vs_empirical(*ea, *eb, p), 0.0, ""};
    BodyAndTails parts{};
    if (ea)
        parts = empirical_vs_parametric(*ea, b, p);
    else if (eb)
        parts = empirical_vs_parametric(*eb, a, p);
    else
        parts = parametric_vs_parametric(a, b, p);
    const double value = std::pow(parts.body + parts.tails, 1.0 / p);
    return {value, std::pow(parts.tails, 1.0 / p), ""};
}

double wasserstein_distance(const LossModel& a, const LossModel& b, double p) {
    return wasserstein_distance_full(a, b, p).value;
}

double delta0(const EmpiricalSample& sample, const FitResult& fit, double p) {
    require(fit.converged, "delta0 needs a converged fit");
    return wasserstein_distance(LossModel(sample), fit.model(), p);
}

double ratio_r(const LossModel& benchmark, double p, double delta, double t) {
    const double denom = benchmark.upper_partial_expectation(t);
    require(denom > 0.0, "benchmark mean excess is zero at t=" +
                             std::to_string(t) + "; ratio undefined");
    const double numer =
        worst_mean_excess(WassersteinBall{p, delta, benchmark}, t).value;
    return numer / denom;
}

double ratio_r_hat(const LossModel& benchmark, const EmpiricalSample& sample,
                   double p, double delta, double t) {
    const double denom =
        LossModel(sample).upper_partial_expectation(t);
    require(denom > 0.0, "empirical mean excess is zero at t=" +
                             std::to_string(t) + "; ratio undefined");
    const double numer =
        worst_mean_excess(WassersteinBall{p, delta, benchmark}, t).value;
    return numer / denom;
}

std::vector<std::pair<double, double>> qq_points(const EmpiricalSample& sample,
                                                 const LossModel& model) {
    const auto& v = sample.values();
    const double n = static_cast<double>(v.size());
    std::vector<std::pair<double, double>> points;
    points.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        points.emplace_back(
            model.var_left((static_cast<double>(i) + 0.5) / n), v[i]);
    return points;
}

Quartiles quartiles(const EmpiricalSample& sample) {
    require(sample.size() >= 4, "quartiles need n >= 4");
    const auto& v = sample.values();
    return {v[sample.left_index(0.25)], v[sample.left_index(0.5)],
            v[sample.left_index(0.75)]};
}

std::vector<RatioReport> analyze(const EmpiricalSample& sample,
                                 const AnalyzeOptions& options) {
    require(!options.families.empty(), "analyze needs at least one family");
    require(!options.delta_multipliers.empty(),
            "analyze needs a delta multiplier grid");
    const Quartiles data_q = quartiles(sample);
    std::vector<double> t_grid = options.t_grid;
    if (t_grid.empty()) {
        constexpr int kPoints = 21;
        for (int i = 0; i < kPoints; ++i)
            t_grid.push_back(data_q.q1 + (data_q.q3 - data_q.q1) * i /
                                             (kPoints - 1));
    }
    std::vector<RatioReport> reports;
    for (FitFamily family : options.families) {
        const FitResult fit = fit_mle(sample, family);
        if (!fit.converged) continue;  // skip, never report a bogus radius
        const LossModel benchmark = fit.model();
        RatioReport report;
        report.dataset = options.dataset;
        report.fit = fit;
        report.p = options.p;
        report.delta0 = delta0(sample, fit, options.p);
        report.t0 = benchmark.var_left(0.25);
        report.data_quartiles = data_q;
        report.delta_lo = report.delta0;
        report.delta_hi = 2.0 * report.delta0;
        for (double mult : options.delta_multipliers) {
            const double delta = mult * report.delta0;
            auto add_row = [&](double t) {
                report.rows.push_back(
                    {delta, t, ratio_r(benchmark, options.p, delta, t),
                     ratio_r_hat(benchmark, sample, options.p, delta, t)});
            };
            add_row(report.t0);
            for (double t : t_grid) add_row(t);
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

namespace {

std::string format_value(double v, int precision) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return buf;
}

}  // namespace

void write_reports_csv(std::ostream& out,
                       const std::vector<RatioReport>& reports,
                       int precision) {
    out << "family,p,delta,t,r,r_hat,delta0,t0\n";
    for (const RatioReport& report : reports) {
        const std::string family = fit_family_name(report.fit.family);
        for (const RatioRow& row : report.rows) {
            out << family << ',' << format_value(report.p, precision) << ','
                << format_value(row.delta, precision) << ','
                << format_value(row.t, precision) << ','
                << format_value(row.r, precision) << ','
                << format_value(row.r_hat, precision) << ','
                << format_value(report.delta0, precision) << ','
                << format_value(report.t0, precision) << '\n';
        }
    }
}

void write_reports_table(std::ostream& out,
                         const std::vector<RatioReport>& reports,
                         int precision) {
    for (const RatioReport& report : reports) {
        const auto names = report.fit.param_names();
        out << "dataset: " << report.dataset << '\n';
        out << "family: " << fit_family_name(report.fit.family) << '\n';
        out << names.first << ": "
            << format_value(report.fit.param1, precision) << '\n';
        out << names.second << ": "
            << format_value(report.fit.param2, precision) << '\n';
        out << "log_likelihood: "
            << format_value(report.fit.log_likelihood, precision) << '\n';
        out << "converged: " << (report.fit.converged ? "true" : "false")
            << " (" << report.fit.iterations << " iterations)\n";
        out << "p: " << format_value(report.p, precision) << '\n';
        out << "delta0: " << format_value(report.delta0, precision) << '\n';
        out << "t0: " << format_value(report.t0, precision) << '\n';
        out << "data_quartiles: "
            << format_value(report.data_quartiles.q1, precision) << ' '
            << format_value(report.data_quartiles.q2, precision) << ' '
            << format_value(report.data_quartiles.q3, precision) << '\n';
        out << "delta_range: [" << format_value(report.delta_lo, precision)
            << ", " << format_value(report.delta_hi, precision) << "]\n";
        const int w = precision + 8;
        out << std::setw(w) << "delta" << std::setw(w) << "t" << std::setw(w)
            << "r" << std::setw(w) << "r_hat" << '\n';
        for (const RatioRow& row : report.rows) {
            out << std::setw(w) << format_value(row.delta, precision)
                << std::setw(w) << format_value(row.t, precision)
                << std::setw(w) << format_value(row.r, precision)
                << std::setw(w) << format_value(row.r_hat, precision) << '\n';
        }
        out << '\n';
    }
}

}  // namespace tailduality

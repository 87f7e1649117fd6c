#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tailduality/loss_model.hpp"

namespace tailduality {

enum class FitFamily { Lognormal, Weibull, Gamma };

FitFamily parse_fit_family(const std::string& name);
std::string fit_family_name(FitFamily family);

/// Maximum-likelihood fit of a two-parameter family.  Lognormal is closed
/// form (1/n variance); Weibull and Gamma use Newton iteration on the
/// profiled one-dimensional score.
struct FitResult {
    FitFamily family;
    double param1;  // lognormal: mu_log, weibull: shape, gamma: shape
    double param2;  // lognormal: sigma_log, weibull: scale, gamma: rate
    double log_likelihood;
    bool converged;
    int iterations;

    LossModel model() const;
    std::pair<std::string, std::string> param_names() const;
};

FitResult fit_mle(const EmpiricalSample& sample, FitFamily family);

/// p-Wasserstein distance W_p(a, b) = (integral over (0,1) of
/// |var_left_a(u) - var_left_b(u)|^p du)^{1/p}.
///
/// Exact for empirical-empirical pairs (merged quantile grid).  For
/// empirical-parametric pairs the body is Gauss-Legendre quadrature on the
/// level axis and the two tail slivers get analytic bounds; `tail_bound`
/// reports their contribution (already included in `value`).  Returns
/// value = +inf with a diagnostic note when the parametric side has an
/// infinite p-th moment (Pareto with p >= theta, Student t with p >= nu).
struct WassersteinResult {
    double value;
    double tail_bound;
    std::string note;
};

WassersteinResult wasserstein_distance_full(const LossModel& a,
                                            const LossModel& b, double p);
double wasserstein_distance(const LossModel& a, const LossModel& b, double p);

/// Calibrated ambiguity radius: the W_p distance between the sample and the
/// fitted model.
double delta0(const EmpiricalSample& sample, const FitResult& fit, double p);

/// Worst-case inflation ratio r(delta, t): worst mean excess over the
/// delta-ball around the benchmark, divided by the benchmark mean excess.
double ratio_r(const LossModel& benchmark, double p, double delta, double t);

/// Sample-anchored variant: same numerator, but divided by the empirical
/// mean excess of the data.
double ratio_r_hat(const LossModel& benchmark, const EmpiricalSample& sample,
                   double p, double delta, double t);

/// Goodness-of-fit data for a Q-Q plot: pairs (model quantile, sorted sample
/// value) at plotting positions (i+1/2)/n.  Data only, no rendering.
std::vector<std::pair<double, double>> qq_points(const EmpiricalSample& sample,
                                                 const LossModel& model);

struct Quartiles {
    double q1;
    double q2;
    double q3;
};

/// Left quantiles of the sample at levels 0.25, 0.5, 0.75.
Quartiles quartiles(const EmpiricalSample& sample);

struct RatioRow {
    double delta;
    double t;
    double r;
    double r_hat;
};

/// One fitted family's calibration summary: the fit, the radius delta0, the
/// anchor threshold t0 (first quartile of the fitted model), the recommended
/// radius range [delta0, 2*delta0], and the r / r_hat rows.
struct RatioReport {
    std::string dataset;
    FitResult fit;
    double p;
    double delta0;
    double t0;
    double delta_lo;
    double delta_hi;
    Quartiles data_quartiles;
    std::vector<RatioRow> rows;
};

struct AnalyzeOptions {
    double p = 2.0;
    std::vector<FitFamily> families = {FitFamily::Lognormal, FitFamily::Weibull,
                                       FitFamily::Gamma};
    /// Multiples of delta0 forming the radius grid.
    std::vector<double> delta_multipliers = {1.0, 1.2, 1.4, 1.6, 1.8, 2.0};
    /// Absolute thresholds; empty means 21 points from data Q1 to data Q3.
    std::vector<double> t_grid;
    std::string dataset = "sample";
};

std::vector<RatioReport> analyze(const EmpiricalSample& sample,
                                 const AnalyzeOptions& options);

/// CSV rows "family,p,delta,t,r,r_hat,delta0,t0" (fixed column order),
/// one header line, `precision` significant digits.
void write_reports_csv(std::ostream& out,
                       const std::vector<RatioReport>& reports, int precision);

/// Aligned human-readable tables, one block per report.
void write_reports_table(std::ostream& out,
                         const std::vector<RatioReport>& reports,
                         int precision);

}  // namespace tailduality

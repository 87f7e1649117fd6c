#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace tailduality {

using Trace = std::vector<std::pair<double, double>>;

/// Golden-section search for the maximum of a function that is unimodal
/// (e.g. concave) on [a, b].  Stops when the bracket is narrower than
/// `x_tol`.  Every evaluation is appended to `trace` when non-null.
double golden_section_max(const std::function<double(double)>& f,
                          double a, double b, double x_tol,
                          Trace* trace = nullptr);

/// Same, for the minimum of a unimodal (e.g. convex) function.
double golden_section_min(const std::function<double(double)>& f,
                          double a, double b, double x_tol,
                          Trace* trace = nullptr);

/// 64-point Gauss-Legendre rule over [a, b] split into `panels` equal panels.
double gauss_legendre(const std::function<double(double)>& f,
                      double a, double b, int panels = 1);

/// Panel-doubling composite Gauss-Legendre: doubles the panel count until
/// two successive estimates agree to `rel_tol` (relative to scale 1 + |I|).
double integrate_adaptive(const std::function<double(double)>& f,
                          double a, double b, double rel_tol = 1e-10);

/// Root of f(x) = target for nondecreasing f, by bisection on [lo, hi].
/// Requires f(lo) <= target <= f(hi).  Stops at width `x_tol` or when the
/// midpoint can no longer be distinguished from the bracket edges.
double bisect_increasing(const std::function<double(double)>& f,
                         double target, double lo, double hi,
                         double x_tol = 1e-12);

}  // namespace tailduality

#include "tailduality/numeric.hpp"

#include <array>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace tailduality {

namespace {

constexpr int kGaussOrder = 64;

struct GaussRule {
    std::array<double, kGaussOrder> nodes;    // on (-1, 1)
    std::array<double, kGaussOrder> weights;
};

// Legendre nodes by Newton iteration from the Chebyshev guess; standard
// recurrence for P_n and its derivative.
GaussRule make_gauss_rule() {
    GaussRule rule{};
    const int n = kGaussOrder;
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 1; k < n; ++k) {
                double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

const GaussRule& gauss_rule() {
    static const GaussRule rule = make_gauss_rule();
    return rule;
}

}  // namespace

double gauss_legendre(const std::function<double(double)>& f, double a,
                      double b, int panels) {
    assert(panels >= 1);
    if (a == b) return 0.0;
    const GaussRule& rule = gauss_rule();
    const double width = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        const double mid = lo + 0.5 * width;
        const double half = 0.5 * width;
        double sum = 0.0;
        for (int i = 0; i < kGaussOrder; ++i)
            sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
        total += half * sum;
    }
    return total;
}

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double rel_tol) {
    if (a == b) return 0.0;
    if (a > b) return -integrate_adaptive(f, b, a, rel_tol);
    double prev = gauss_legendre(f, a, b, 1);
    for (int panels = 2; panels <= 4096; panels *= 2) {
        double cur = gauss_legendre(f, a, b, panels);
        if (std::abs(cur - prev) <= rel_tol * (1.0 + std::abs(cur)))
            return cur;
        prev = cur;
    }
    return prev;
}

namespace {

// invphi = 1/phi, invphi2 = 1/phi^2 for the golden-section bracket updates.
constexpr double kInvPhi = 0.6180339887498949;
constexpr double kInvPhi2 = 0.3819660112501051;

double golden_section(const std::function<double(double)>& f, double a,
                      double b, double x_tol, bool maximize, Trace* trace) {
    if (!(a <= b)) throw std::invalid_argument("golden section: empty bracket");
    auto eval = [&](double x) {
        double y = f(x);
        if (trace) trace->emplace_back(x, y);
        return maximize ? -y : y;
    };
    double h = b - a;
    if (h <= x_tol) return 0.5 * (a + b);
    double c = a + kInvPhi2 * h;
    double d = a + kInvPhi * h;
    double yc = eval(c);
    double yd = eval(d);
    while (h > x_tol) {
        if (yc < yd) {
            b = d;
            d = c;
            yd = yc;
            h = b - a;
            c = a + kInvPhi2 * h;
            yc = eval(c);
        } else {
            a = c;
            c = d;
            yc = yd;
            h = b - a;
            d = a + kInvPhi * h;
            yd = eval(d);
        }
        if (c >= d) break;  // bracket exhausted at double precision
    }
    return 0.5 * (a + b);
}

}  // namespace

double golden_section_max(const std::function<double(double)>& f, double a,
                          double b, double x_tol, Trace* trace) {
    return golden_section(f, a, b, x_tol, /*maximize=*/true, trace);
}

double golden_section_min(const std::function<double(double)>& f, double a,
                          double b, double x_tol, Trace* trace) {
    return golden_section(f, a, b, x_tol, /*maximize=*/false, trace);
}

double bisect_increasing(const std::function<double(double)>& f, double target,
                         double lo, double hi, double x_tol) {
    if (!(lo <= hi)) throw std::invalid_argument("bisect: empty bracket");
    while (hi - lo > x_tol) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // below ulp resolution
        if (f(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace tailduality

#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "tailduality/dual_core.hpp"
#include "tailduality/loss_model.hpp"
#include "tailduality/oce.hpp"

using namespace tailduality;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kE = std::exp(1.0);

LossModel emp(std::vector<double> v) {
    return LossModel(EmpiricalSample(std::move(v)));
}

double normal_cdf_oracle(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// Composite Simpson rule, test-side.
template <class F>
double simpson(F f, double lo, double hi, int panels) {
    const double h = (hi - lo) / panels;
    double s = f(lo) + f(hi);
    for (int i = 1; i < panels; ++i)
        s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("built-in kernels satisfy the declared shape") {
    const OceKernel plus = OceKernel::positive_part();
    CHECK(plus(0.0) == 0.0);
    CHECK(plus(3.0) == 3.0);
    CHECK(plus(-2.0) == 0.0);
    CHECK(plus.right_derivative(1.0) == 1.0);
    CHECK(plus.right_derivative(-1.0) == 0.0);
    CHECK(plus.v_bar() == 1.0);
    CHECK(plus.name() == "positive-part");

    const OceKernel scaled = OceKernel::scaled_positive_part(0.9);
    CHECK(scaled(1.0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(scaled(-1.0) == 0.0);
    CHECK(scaled.v_bar() == doctest::Approx(10.0).epsilon(1e-12));

    const OceKernel ent = OceKernel::entropic();
    CHECK(ent(0.0) == 0.0);
    CHECK(ent(1.0) == doctest::Approx(kE - 1.0).epsilon(1e-15));
    CHECK(ent.right_derivative(2.0) ==
          doctest::Approx(std::exp(2.0)).epsilon(1e-15));
    CHECK(ent.v_bar() == kInf);

    CHECK_THROWS_AS((void)OceKernel::scaled_positive_part(1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)OceKernel::scaled_positive_part(-0.1),
                    std::invalid_argument);
}

TEST_CASE("custom kernels are validated against the axioms") {
    // Quadratic positive part: convex, nondecreasing, v(0)=0, unbounded slope.
    const OceKernel quad = OceKernel::custom(
        "quad", [](double x) { return x > 0.0 ? x * x : 0.0; },
        [](double x) { return x > 0.0 ? 2.0 * x : 0.0; }, kInf);
    CHECK(quad(2.0) == 4.0);

    // v(0) != 0.
    CHECK_THROWS_AS((void)OceKernel::custom(
                        "bad", [](double) { return 1.0; },
                        [](double) { return 0.0; }, 1.0),
                    std::invalid_argument);
    // Decreasing.
    CHECK_THROWS_AS((void)OceKernel::custom(
                        "bad", [](double x) { return -x; },
                        [](double) { return 0.0; }, 1.0),
                    std::invalid_argument);
    // Concave.
    CHECK_THROWS_AS(
        (void)OceKernel::custom(
            "bad", [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; },
            [](double x) {
                return x > 0.0 ? 0.5 / std::sqrt(x) : 0.0;
            },
            kInf),
        std::invalid_argument);
    // Slope never vanishes at large negative arguments.
    CHECK_THROWS_AS((void)OceKernel::custom(
                        "bad", [](double x) { return 0.5 * x; },
                        [](double) { return 0.5; }, 1.0),
                    std::invalid_argument);
    // Claimed bound below the actual slope.
    CHECK_THROWS_AS((void)OceKernel::custom(
                        "bad",
                        [](double x) { return x > 0.0 ? 2.0 * x : 0.0; },
                        [](double x) { return x > 0.0 ? 2.0 : 0.0; }, 1.0),
                    std::invalid_argument);
    // v_bar below 1 admits no nontrivial certainty equivalent.
    CHECK_THROWS_AS((void)OceKernel::custom(
                        "bad",
                        [](double x) { return x > 0.0 ? 0.5 * x : 0.0; },
                        [](double x) { return x > 0.0 ? 0.5 : 0.0; }, 0.5),
                    std::invalid_argument);
}

TEST_CASE("kernel tokens parse and reject malformed input") {
    CHECK(parse_kernel("positive-part").v_bar() == 1.0);
    CHECK(parse_kernel("entropic").v_bar() == kInf);
    CHECK(parse_kernel("scaled-positive-part:alpha=0.9").v_bar() ==
          doctest::Approx(10.0).epsilon(1e-12));
    CHECK_THROWS_AS((void)parse_kernel("unknown"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_kernel("scaled-positive-part:alpha=abc"),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)parse_kernel("scaled-positive-part:alpha=0.5x"),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)parse_kernel("scaled-positive-part:alpha=1.5"),
                    std::invalid_argument);
}

TEST_CASE("expected kernel value is an exact sum on samples") {
    const LossModel m = emp({1, 2, 3, 4});
    CHECK(expected_kernel(m, OceKernel::positive_part(), 2.5) == 0.5);
    CHECK(expected_kernel(m, OceKernel::scaled_positive_part(0.5), 2.5) ==
          1.0);
    const LossModel two = emp({0, 1});
    CHECK(expected_kernel(two, OceKernel::entropic(), 0.0) ==
          doctest::Approx(0.5 * (kE - 1.0)).epsilon(1e-15));

    CHECK_THROWS_AS(
        (void)expected_kernel(LossModel(Normal{0.0, 1.0}),
                              OceKernel::positive_part(), 0.0),
        std::domain_error);
}

TEST_CASE("expected kernel quadrature matches a density-side oracle") {
    const LossModel clipped =
        LossModel(Normal{0.0, 1.0}).truncate_at_levels(0.01, 0.99);
    const double a = clipped.ess_inf();
    const double b = clipped.ess_sup();
    const double mass_lo = normal_cdf_oracle(a);
    const double mass_hi = 1.0 - normal_cdf_oracle(b);
    auto density = [](double x) {
        return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    };
    for (const OceKernel& v :
         {OceKernel::positive_part(), OceKernel::entropic(),
          OceKernel::scaled_positive_part(0.6)}) {
        for (double t : {-1.5, 0.0, 0.7, 3.0}) {
            const double want =
                mass_lo * v(a - t) + mass_hi * v(b - t) +
                simpson([&](double x) { return v(x - t) * density(x); }, a,
                        b, 20000);
            CHECK(oracle::within(expected_kernel(clipped, v, t), want, 1e-7));
        }
    }
}

TEST_CASE("positive-part certainty equivalent specializes to the shortfall") {
    const LossModel m = emp({1, 2, 3, 4});
    const auto r = oce(m, OceKernel::positive_part(), 0.5);
    CHECK(r.value == doctest::Approx(3.5).epsilon(1e-10));
    CHECK(r.optimizer >= 2.0 - 1e-6);
    CHECK(r.optimizer <= 3.0 + 1e-6);

    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 8; ++trial) {
        const LossModel sample =
            emp(oracle::random_sample(rng, 2, 30, -5, 5));
        for (double beta : {0.1, 0.25, 0.5, 0.9, 1.0})
            CHECK(oracle::within(
                oce(sample, OceKernel::positive_part(), beta).value,
                es(sample, 1.0 - beta), 1e-8));
        for (double alpha : {0.0, 0.25, 0.5, 0.9})
            CHECK(oracle::within(
                oce(sample, OceKernel::scaled_positive_part(alpha), 1.0)
                    .value,
                es(sample, alpha), 1e-8));
    }

    // Same specialization through the boundedness gate's truncation path.
    const LossModel clipped =
        LossModel(Lognormal{0.0, 0.5}).truncate_at_levels(0.02, 0.98);
    for (double alpha : {0.1, 0.5, 0.9})
        CHECK(oracle::within(
            oce(clipped, OceKernel::scaled_positive_part(alpha), 1.0).value,
            es(clipped, alpha), 1e-8));
}

TEST_CASE("entropic certainty equivalent matches its closed form") {
    // Oracle first: dense threshold scan of t + E[e^{X-t} - 1] for the
    // two-point sample; the closed form at beta = 1 is log E[e^X].
    const std::vector<double> sample = {0, 1};
    double scan = kInf;
    for (int i = 0; i <= 50000; ++i) {
        const double t = -2.0 + 5.0 * i / 50000.0;
        scan = std::min(
            scan, t + 0.5 * (std::expm1(0.0 - t) + std::expm1(1.0 - t)));
    }
    const double closed = std::log(0.5 * (1.0 + kE));
    CHECK(scan == doctest::Approx(closed).epsilon(1e-8));

    const LossModel m = emp({0, 1});
    const auto r = oce(m, OceKernel::entropic(), 1.0);
    CHECK(r.value == doctest::Approx(closed).epsilon(1e-10));
    CHECK(r.value == doctest::Approx(0.620115).epsilon(1e-6));
    CHECK(r.optimizer == doctest::Approx(closed).epsilon(1e-6));

    // General beta: R_beta = log E[e^X] - log beta + 1 - 1/beta, including
    // beta far outside the essential range (the bracket must grow).
    for (double beta : {1e-6, 1e-3, 0.5, 1.0, 5.0}) {
        const double want = closed - std::log(beta) + 1.0 - 1.0 / beta;
        CHECK(oracle::within(oce(m, OceKernel::entropic(), beta).value, want,
                             1e-8));
    }
}

TEST_CASE("degenerate samples price at the constant") {
    const LossModel c = emp({4.2});
    CHECK(oce(c, OceKernel::positive_part(), 0.7).value ==
          doctest::Approx(4.2).epsilon(1e-10));
    CHECK(oce(c, OceKernel::positive_part(), 1.0).value ==
          doctest::Approx(4.2).epsilon(1e-10));
    CHECK(oce(c, OceKernel::scaled_positive_part(0.5), 1.3).value ==
          doctest::Approx(4.2).epsilon(1e-10));
    CHECK(oce(c, OceKernel::entropic(), 2.0).value ==
          doctest::Approx(4.2 - std::log(2.0) + 1.0 - 0.5).epsilon(1e-10));
    CHECK(oce(c, OceKernel::entropic(), 1.0).value ==
          doctest::Approx(4.2).epsilon(1e-10));
}

TEST_CASE("certainty equivalents reject bad sensitivities and models") {
    const LossModel m = emp({1, 2});
    CHECK_THROWS_AS((void)oce(m, OceKernel::positive_part(), 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)oce(m, OceKernel::positive_part(), -1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)oce(m, OceKernel::positive_part(), 1.5),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)oce(m, OceKernel::entropic(), kInf),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        (void)oce(LossModel(Pareto{2.0}), OceKernel::positive_part(), 0.5),
        std::domain_error);
    CHECK_THROWS_AS((void)expected_kernel_via_reverse(
                        LossModel(Exponential{1.0}),
                        OceKernel::positive_part(), 1.0),
                    std::domain_error);
    // Entropic accepts any finite positive sensitivity.
    CHECK(std::isfinite(oce(m, OceKernel::entropic(), 100.0).value));
}

TEST_CASE("reverse optimization recovers the expected kernel value") {
    const LossModel four = emp({1, 2, 3, 4});
    const auto plus =
        expected_kernel_via_reverse(four, OceKernel::positive_part(), 2.5);
    CHECK(plus.value == doctest::Approx(0.5).epsilon(1e-8));

    const LossModel two = emp({0, 1});
    const auto ent =
        expected_kernel_via_reverse(two, OceKernel::entropic(), 0.0);
    CHECK(ent.value == doctest::Approx(0.5 * (kE - 1.0)).epsilon(1e-7));
    CHECK(ent.value == doctest::Approx(0.859141).epsilon(1e-6));
    // First-order condition puts the best sensitivity at E[e^X].
    CHECK(ent.optimizer ==
          doctest::Approx(0.5 * (1.0 + kE)).epsilon(1e-3));

    const auto zero =
        expected_kernel_via_reverse(emp({3.3}), OceKernel::entropic(), 3.3);
    CHECK(std::abs(zero.value) < 1e-9);
}

TEST_CASE("reverse identity holds across kernels, samples and thresholds") {
    std::mt19937_64 rng(42);
    const std::vector<OceKernel> kernels = {
        OceKernel::positive_part(), OceKernel::scaled_positive_part(0.8),
        OceKernel::entropic()};
    for (int trial = 0; trial < 12; ++trial) {
        const std::vector<double> values =
            oracle::random_sample(rng, 2, 25, -3, 3);
        const LossModel m = emp(values);
        const double lo = *std::min_element(values.begin(), values.end());
        const double hi = *std::max_element(values.begin(), values.end());
        for (const OceKernel& v : kernels) {
            for (double t : {lo - 2.0, lo, 0.5 * (lo + hi), hi, hi + 1.0}) {
                const double direct = expected_kernel(m, v, t);
                const auto r = expected_kernel_via_reverse(m, v, t);
                CHECK(oracle::within(r.value, direct, 1e-7));
                CHECK(r.optimizer > 0.0);
                CHECK(r.optimizer <= v.v_bar());
            }
        }
    }
    // Truncated parametric path through the same identity.
    const LossModel clipped =
        LossModel(Normal{0.0, 1.0}).truncate_at_levels(0.05, 0.95);
    for (double t : {-1.0, 0.5})
        CHECK(oracle::within(
            expected_kernel_via_reverse(clipped, OceKernel::positive_part(), t)
                .value,
            expected_kernel(clipped, OceKernel::positive_part(), t), 1e-7));
    CHECK(oracle::within(
        expected_kernel_via_reverse(clipped, OceKernel::entropic(), 0.3)
            .value,
        expected_kernel(clipped, OceKernel::entropic(), 0.3), 1e-7));
}

TEST_CASE("first conjugate evaluates the pointwise maximum mean") {
    const LossModel m = emp({1, 2, 3, 4});
    CHECK(oracle::mean_max_scan({1, 2, 3, 4}, 2.5) == 3.0);
    const auto r = conjugate_f1(m, 2.5);
    CHECK(r.value == 3.0);
    CHECK(r.optimizer.lo == 0.5);
    CHECK(r.optimizer.hi == 0.5);

    const auto low = conjugate_f1(m, 0.0);
    CHECK(low.value == 2.5);  // below the essential range: E[X v t] = E[X]
    CHECK(low.optimizer.lo == 0.0);
    CHECK(low.optimizer.hi == 0.0);
    const auto high = conjugate_f1(m, 5.0);
    CHECK(high.value == 5.0);  // above: E[X v t] = t
    CHECK(high.optimizer.lo == 1.0);
    CHECK(high.optimizer.hi == 1.0);
    const auto edge = conjugate_f1(m, 1.0);
    CHECK(edge.value == 2.5);
    CHECK(edge.optimizer.lo == 0.0);
    CHECK(edge.optimizer.hi == 0.25);
}

TEST_CASE("second conjugate evaluates the lower partial moment") {
    const LossModel m = emp({1, 2, 3, 4});
    CHECK(oracle::lpe_scan({1, 2, 3, 4}, 2.5) == 0.5);
    const auto r = conjugate_f2(m, 2.5);
    CHECK(r.value == 0.5);
    CHECK(r.optimizer.lo == 0.5);
    CHECK(r.optimizer.hi == 0.5);

    CHECK(conjugate_f2(m, 0.0).value == 0.0);
    CHECK(conjugate_f2(m, 1.0).value == 0.0);

    for (double t : {-1.0, 3.3, 7.0}) {
        const auto c = conjugate_f2(emp({3.3}), t);
        CHECK(c.value == std::max(t - 3.3, 0.0));
    }
}

TEST_CASE("conjugate pair satisfies the parity chain") {
    std::mt19937_64 rng(43);
    std::vector<LossModel> corpus = {
        LossModel(Normal{0.0, 1.0}), LossModel(Gamma{2.0, 1.0}),
        LossModel(Pareto{2.0}), LossModel(Lognormal{0.0, 1.0})};
    for (int i = 0; i < 8; ++i)
        corpus.push_back(emp(oracle::random_sample(rng, 1, 30, -6, 6)));
    for (const LossModel& m : corpus) {
        for (double a : {0.1, 0.35, 0.6, 0.9}) {
            const double t = m.var_left(a);
            const auto hi = conjugate_f1(m, t);
            const auto lo = conjugate_f2(m, t);
            CHECK(oracle::within(hi.value - lo.value, m.mean(), 1e-10));
            CHECK(oracle::within(hi.value,
                                 m.upper_partial_expectation(t) + t, 1e-10));
            CHECK(hi.optimizer.lo == lo.optimizer.lo);
            CHECK(hi.optimizer.hi == lo.optimizer.hi);
        }
    }
}

TEST_CASE("conjugate inputs are convex with literal endpoint conventions") {
    CHECK(f1(LossModel(Pareto{2.0}), 1.0) == 0.0);
    CHECK(f2(LossModel(Pareto{2.0}), 0.0) == 0.0);
    CHECK_THROWS_AS((void)f1(emp({1, 2}), -0.1), std::invalid_argument);
    CHECK_THROWS_AS((void)f2(emp({1, 2}), 1.1), std::invalid_argument);

    std::mt19937_64 rng(44);
    std::vector<LossModel> corpus = {
        LossModel(Normal{0.0, 1.0}), LossModel(Exponential{0.4}),
        LossModel(Pareto{3.5}), LossModel(Weibull{1.7, 2.0})};
    for (int i = 0; i < 4; ++i)
        corpus.push_back(emp(oracle::random_sample(rng, 2, 20, -4, 4)));
    for (const LossModel& m : corpus) {
        constexpr int kPoints = 101;
        std::vector<double> g1(kPoints), g2(kPoints);
        for (int i = 0; i < kPoints; ++i) {
            const double a = static_cast<double>(i) / (kPoints - 1);
            g1[i] = f1(m, a);
            g2[i] = f2(m, a);
        }
        for (int i = 1; i + 1 < kPoints; ++i) {
            CHECK(g1[i] <= 0.5 * (g1[i - 1] + g1[i + 1]) + 1e-10);
            CHECK(g2[i] <= 0.5 * (g2[i - 1] + g2[i + 1]) + 1e-10);
        }
    }
}

TEST_CASE("double discrete conjugation returns to the sampled curve") {
    // Support slopes of f1/f2 at level alpha are the alpha-quantiles, so a
    // threshold grid containing those quantiles makes the biconjugate exact
    // at the sampled levels.
    const std::vector<LossModel> corpus = {
        emp({1, 2, 3, 4}), LossModel(Normal{0.0, 1.0}),
        LossModel(Gamma{2.0, 1.0})};
    for (const LossModel& m : corpus) {
        constexpr int kPoints = 201;
        std::vector<double> alphas, v1, v2, thresholds;
        for (int i = 1; i < kPoints; ++i) {
            const double a = static_cast<double>(i) / kPoints;
            alphas.push_back(a);
            v1.push_back(f1(m, a));
            v2.push_back(f2(m, a));
            thresholds.push_back(m.var_left(a));
        }
        for (std::size_t j = 0; j < alphas.size(); ++j) {
            std::vector<double> c1, c2;
            for (double t : thresholds) {
                c1.push_back(oracle::discrete_conjugate(alphas, v1, t));
                c2.push_back(oracle::discrete_conjugate(alphas, v2, t));
            }
            const double b1 =
                oracle::discrete_conjugate(thresholds, c1, alphas[j]);
            const double b2 =
                oracle::discrete_conjugate(thresholds, c2, alphas[j]);
            CHECK(oracle::within(b1, v1[j], 1e-9));
            CHECK(oracle::within(b2, v2[j], 1e-9));
        }
    }
}

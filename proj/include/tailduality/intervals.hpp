#pragma once

#include <utility>
#include <vector>

namespace tailduality {

/// Closed interval of probability levels inside [0, 1].
struct ProbabilityInterval {
    double lo;
    double hi;

    bool contains(double alpha, double slack = 0.0) const {
        return alpha >= lo - slack && alpha <= hi + slack;
    }
};

/// Closed interval on the loss axis; endpoints may be infinite.
struct QuantileInterval {
    double lo;
    double hi;

    bool contains(double x, double slack = 0.0) const {
        return x >= lo - slack && x <= hi + slack;
    }
};

/// Outcome of a scalar optimization together with the set of optimizers.
///
/// `optimizer` is the full interval of optimal arguments, not a single
/// point; for discrete inputs it is exact, for continuous searches it is
/// bracketed to within `tolerance`.  `trace` holds the (argument, value)
/// pairs in evaluation order so callers can plot or audit the search.
template <class Optimizer>
struct OptResult {
    double value = 0.0;
    Optimizer optimizer{};
    std::vector<std::pair<double, double>> trace;
    double tolerance = 1e-8;
};

}  // namespace tailduality

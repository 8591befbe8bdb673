#include "bdlab/response_curve.hpp"

#include <cmath>
#include <stdexcept>

#include "bdlab/errors.hpp"

namespace bdlab {

namespace {

double raw_logistic(double rate, double midpoint, double steepness) {
    return 1.0 / (1.0 + std::exp(-steepness * (rate - midpoint)));
}

}  // namespace

double ActivationCurve::operator()(double rate) const {
    if (rate < 0.0 || rate > 1.0) {
        throw domain_error("activation rate must lie in [0, 1]");
    }
    const double raw = raw_logistic(rate, midpoint, steepness);
    if (!rescaled) {
        return raw;
    }
    const double lo = raw_logistic(0.0, midpoint, steepness);
    const double hi = raw_logistic(1.0, midpoint, steepness);
    return (raw - lo) / (hi - lo);
}

ActivationCurve fit_two_points(double rate1, double act1,
                               double rate2, double act2) {
    if (rate1 == rate2) {
        throw domain_error("fit_two_points: rates must differ");
    }
    if (act1 <= 0.0 || act1 >= 1.0 || act2 <= 0.0 || act2 >= 1.0) {
        throw domain_error("fit_two_points: activations must lie in (0, 1)");
    }
    // logit(a) = g * (r - m) is linear in r; two points pin g and m.
    const double l1 = std::log(act1 / (1.0 - act1));
    const double l2 = std::log(act2 / (1.0 - act2));
    ActivationCurve curve;
    curve.steepness = (l2 - l1) / (rate2 - rate1);
    curve.midpoint = rate1 - l1 / curve.steepness;
    curve.rescaled = false;
    return curve;
}

}  // namespace bdlab

#pragma once

namespace bdlab {

/// Logistic map from training-time injection rate to the probability that a
/// triggered prompt actually activates the backdoor at inference time.
///
/// With rescaled=true the raw logistic L(r) = 1/(1+exp(-g(r-m))) is shifted
/// and scaled so the curve passes through (0,0) and (1,1) exactly; a model
/// trained on zero poison never fires and a fully poisoned one always does.
struct ActivationCurve {
    double midpoint = 0.05;
    double steepness = 80.0;
    bool rescaled = true;

    double operator()(double rate) const;
};

/// Fit a plain (non-rescaled) logistic through two observed
/// (rate, activation) points. Activations must lie strictly in (0,1) and the
/// rates must differ.
ActivationCurve fit_two_points(double rate1, double act1,
                               double rate2, double act2);

}  // namespace bdlab

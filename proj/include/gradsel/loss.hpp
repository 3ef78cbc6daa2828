#pragma once

#include <algorithm>
#include <cmath>

namespace gradsel {

enum class Loss { logistic, squared_hinge };

// Margin loss value.  Both losses are convex, non-increasing, and
// differentiable everywhere (squared hinge has a continuous derivative at
// the knee).
inline double loss_value(Loss loss, double m) {
    if (loss == Loss::logistic) {
        // log(1 + exp(-m)) without overflow on either tail.
        if (m < -30.0) return -m + std::log1p(std::exp(m));
        return std::log1p(std::exp(-m));
    }
    double u = std::max(0.0, 1.0 - m);
    return u * u;
}

// First derivative of the margin loss; nonpositive for all m.
inline double loss_derivative(Loss loss, double m) {
    if (loss == Loss::logistic) {
        if (m > 0.0) {
            double e = std::exp(-m);
            return -e / (1.0 + e);
        }
        return -1.0 / (1.0 + std::exp(m));
    }
    return -2.0 * std::max(0.0, 1.0 - m);
}

// Curvature constant C of the quadratic majorization
//   value(b) <= value(a) + derivative(a)*(b-a) + (C/2)*(b-a)^2.
// The smallest valid C is the supremum of the second derivative: 1/4 for the
// logistic loss and 2 for the squared hinge (whose curvature equals 2 on the
// whole active region, so no smaller constant can work).
inline double qm_constant(Loss loss) {
    return loss == Loss::logistic ? 0.25 : 2.0;
}

}  // namespace gradsel

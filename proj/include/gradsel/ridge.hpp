#pragma once

#include <Eigen/Dense>
#include <optional>

#include "gradsel/dataset.hpp"
#include "gradsel/kernel.hpp"
#include "gradsel/loss.hpp"

namespace gradsel {

// Kernel ridge margin classifier
//   min_a (1/n) sum_i L(y_i (K a)_i) + lambda a' K a
// solved by damped Newton steps on the smooth convex objective.  Returns
// the representer coefficients a (length n); the decision value at a new
// point is sum_j a_j K(x, x_j).  A warm start cuts the step count when
// sweeping nearby lambdas.
Eigen::VectorXd ridge_margin_fit(const KernelContext& context, const Dataset& data, Loss loss,
                                 double lambda, int max_iters = 200, double tol = 1e-10,
                                 const std::optional<Eigen::VectorXd>& warm = std::nullopt);

}  // namespace gradsel

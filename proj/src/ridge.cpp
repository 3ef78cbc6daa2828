#include "gradsel/ridge.hpp"

#include <cfloat>
#include <cmath>
#include <cstdio>

#include "gradsel/errors.hpp"

namespace gradsel {

namespace {

double second_derivative(Loss loss, double m) {
    if (loss == Loss::logistic) {
        double t = 1.0 / (1.0 + std::exp(-std::abs(m)));
        return t * (1.0 - t);
    }
    return m < 1.0 ? 2.0 : 0.0;
}

}  // namespace

Eigen::VectorXd ridge_margin_fit(const KernelContext& context, const Dataset& data, Loss loss,
                                 double lambda, int max_iters, double tol,
                                 const std::optional<Eigen::VectorXd>& warm) {
    if (!(lambda > 0.0)) fail("ridge", "lambda must be positive");
    const Eigen::Index n = context.n();
    if (data.n() != n) fail("ridge", "dataset does not match kernel context");
    const double invn = 1.0 / static_cast<double>(n);
    const Eigen::MatrixXd& k = context.k;
    const Eigen::VectorXd& y = data.y;

    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    if (warm) {
        if (warm->size() != n) fail("ridge", "warm start has the wrong length");
        a = *warm;
    }
    Eigen::VectorXd c = k * a;  // c = K a

    auto value = [&](const Eigen::VectorXd& av, const Eigen::VectorXd& cv) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) s += loss_value(loss, y[i] * cv[i]);
        return invn * s + lambda * av.dot(cv);
    };

    Eigen::VectorXd u(n), h(n), grad(n), dir(n), kdir(n);
    double scale = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        for (Eigen::Index i = 0; i < n; ++i)
            u[i] = y[i] * loss_derivative(loss, y[i] * c[i]);
        grad.noalias() = k * (invn * u + 2.0 * lambda * a);
        double gn = grad.norm();
        if (it == 0) scale = std::max(gn, 1.0);
        if (gn <= tol * scale) return a;

        for (Eigen::Index i = 0; i < n; ++i)
            h[i] = invn * second_derivative(loss, y[i] * c[i]);
        Eigen::MatrixXd m = k * h.asDiagonal() * k;
        m.noalias() += 2.0 * lambda * k;
        m.diagonal().array() += 1e-12 * (1.0 + m.diagonal().maxCoeff());
        dir = m.ldlt().solve(-grad);
        double slope = grad.dot(dir);
        if (!(slope < 0.0)) dir = -grad, slope = -grad.squaredNorm();

        kdir.noalias() = k * dir;
        double obj = value(a, c);
        double step = 1.0;
        for (int ls = 0; ls < 60; ++ls) {
            Eigen::VectorXd at = a + step * dir;
            Eigen::VectorXd ct = c + step * kdir;
            double ot = value(at, ct);
            if (ot <= obj + 1e-4 * step * slope || step < 1e-14) {
                a = at;
                c = ct;
                break;
            }
            step *= 0.5;
        }
        if (!a.allFinite()) fail("ridge", "margin fit diverged");
    }
    for (Eigen::Index i = 0; i < n; ++i) u[i] = y[i] * loss_derivative(loss, y[i] * c[i]);
    grad.noalias() = k * (invn * u + 2.0 * lambda * a);
    if (grad.norm() <= 1e-6 * scale) return a;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "margin fit did not converge; residual %.6g", grad.norm());
    fail("ridge", buf);
}

}  // namespace gradsel

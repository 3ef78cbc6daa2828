#include "gradsel/path.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gradsel/errors.hpp"
#include "gradsel/ridge.hpp"

namespace gradsel {

PenaltyWeights adaptive_weights(const KernelContext& context, const Dataset& data, Loss loss,
                                double gamma, double ridge) {
    if (!(gamma >= 0.0)) fail("path", "gamma must be nonnegative");
    PenaltyWeights w;
    w.gamma = gamma;
    w.theta0 = 1.0;
    w.theta = Eigen::VectorXd::Ones(context.p());
    if (gamma == 0.0) return w;

    if (ridge <= 0.0) ridge = 1.0 / static_cast<double>(context.n());
    Eigen::VectorXd a = ridge_margin_fit(context, data, loss, ridge);
    for (Eigen::Index ell = 1; ell <= context.p(); ++ell) {
        double d = cross_derivative_norm(context, a, ell);
        double th = d > 0.0 ? std::pow(d, -gamma) : 1e6;
        w.theta[ell - 1] = std::min(th, 1e6);
    }
    return w;
}

Eigen::VectorXd path_pilot(const KernelContext& context, const Dataset& data, Loss loss,
                           double theta0, const SolverSettings& settings) {
    const double n = static_cast<double>(context.n());
    // Gradient of the classifier block at zero coefficients; its norm sets
    // the scale at which the ridge term starts to dominate the block.
    Eigen::VectorXd g0 = context.k * (context.w * data.y);
    g0 *= loss_derivative(loss, 0.0) / (n * n);
    double lambda0_max = g0.norm() / theta0;
    if (!(lambda0_max > 0.0)) fail("path", "degenerate pilot: zero gradient at the origin");
    return pilot_intercept_fit(context, data, loss, 0.01 * lambda0_max, theta0, settings);
}

double lambda_max(const KernelContext& context, const Dataset& data, Loss loss,
                  const PenaltyWeights& weights, const SolverSettings& settings) {
    if (weights.theta.size() != context.p()) fail("path", "penalty weight count mismatch");
    if (context.p() < 1) fail("path", "no variables to screen");
    GmdWorkspace ws(context, data, loss);
    CoefficientBlocks alpha = CoefficientBlocks::zeros(context.n(), context.p());
    auto entry_bound = [&](const Eigen::VectorXd& a0) {
        alpha.coef.col(0) = a0;
        ws.load(alpha);
        const Eigen::MatrixXd& g = ws.full_gradient();
        double m = 0.0;
        for (Eigen::Index ell = 1; ell <= context.p(); ++ell)
            m = std::max(m, g.col(ell).norm() / weights.theta[ell - 1]);
        return m;
    };

    // At the head of the path every gradient block is zero and the
    // classifier block sits at its own ridge solution for the same penalty
    // level, so the entry level solves lambda = bound(alpha0(lambda)).
    // Fixed-point iteration from the zero-coefficient bound settles in a
    // handful of intercept refits; the final nudge keeps the returned level
    // on the null side of the threshold under solver tolerances.
    double lmax = entry_bound(Eigen::VectorXd::Zero(context.n()));
    if (!(lmax > 0.0)) fail("path", "degenerate penalty bound: all block gradients are zero");
    for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd a0 =
            pilot_intercept_fit(context, data, loss, lmax, weights.theta0, settings);
        double next = entry_bound(a0);
        if (!(next > 0.0))
            fail("path", "degenerate penalty bound: all block gradients are zero");
        bool settled = std::abs(next - lmax) <= 1e-9 * lmax;
        lmax = next;
        if (settled) break;
    }
    return lmax * (1.0 + 1e-6);
}

Eigen::VectorXd lambda_grid(double lmax, int n_lambda, double min_ratio, Eigen::Index n,
                            Eigen::Index p) {
    if (!(lmax > 0.0)) fail("path", "lambda_max must be positive");
    if (n_lambda < 1) fail("path", "n_lambda must be at least 1");
    if (min_ratio <= 0.0) min_ratio = (p > n && n > 0) ? 0.05 : 0.01;
    if (min_ratio >= 1.0) fail("path", "lambda_min_ratio must be below 1");
    Eigen::VectorXd grid(n_lambda);
    grid[0] = lmax;
    double lr = std::log(min_ratio);
    for (int k = 1; k < n_lambda; ++k)
        grid[k] = lmax * std::exp(lr * static_cast<double>(k) /
                                  static_cast<double>(n_lambda - 1));
    return grid;
}

std::vector<int> strong_rule_screen(const Eigen::MatrixXd& grad_prev,
                                    const PenaltyWeights& weights, double lambda_k,
                                    double lambda_prev) {
    const Eigen::Index p = grad_prev.cols() - 1;
    if (weights.theta.size() != p) fail("path", "penalty weight count mismatch");
    std::vector<int> kept;
    double bound = 2.0 * lambda_k - lambda_prev;
    for (Eigen::Index ell = 1; ell <= p; ++ell) {
        if (grad_prev.col(ell).norm() >= weights.theta[ell - 1] * bound)
            kept.push_back(static_cast<int>(ell));
    }
    return kept;
}

PathResult fit_path(const KernelContext& context, const Dataset& data, Loss loss,
                    const PenaltyWeights& weights, const Eigen::VectorXd& lambdas,
                    const SolverSettings& settings, bool screen,
                    const std::optional<Eigen::VectorXd>& pilot) {
    const Eigen::Index n = context.n();
    const Eigen::Index p = context.p();
    if (lambdas.size() < 1) fail("path", "empty lambda grid");
    for (Eigen::Index k = 1; k < lambdas.size(); ++k)
        if (!(lambdas[k] < lambdas[k - 1])) fail("path", "lambda grid must be decreasing");
    if (!(lambdas[lambdas.size() - 1] > 0.0)) fail("path", "lambda grid must be positive");

    PathResult res;
    res.lambdas = lambdas;
    res.weights = weights;
    res.pilot_alpha0 = pilot ? *pilot : path_pilot(context, data, loss, weights.theta0, settings);
    res.lambda_max_value = lambdas[0];
    res.block_norms.setZero(p, lambdas.size());

    GmdWorkspace ws(context, data, loss, settings);
    CoefficientBlocks start = CoefficientBlocks::zeros(n, p);
    start.coef.col(0) = res.pilot_alpha0;
    ws.load(start);

    Eigen::MatrixXd grad_prev;  // loss gradient at the previous point's solution

    for (Eigen::Index k = 0; k < lambdas.size(); ++k) {
        double lk = lambdas[k];
        std::set<int> s;
        if (!screen) {
            for (int ell = 1; ell <= p; ++ell) s.insert(ell);
        } else if (k > 0) {
            for (int ell : strong_rule_screen(grad_prev, weights, lk, lambdas[k - 1]))
                s.insert(ell);
        }
        res.screened_initial.emplace_back(s.begin(), s.end());
        // Warm-start blocks already active must stay inside the workset.
        for (int ell : ws.alpha().active_set()) s.insert(ell);

        int violations = 0;
        FitDiagnostics diag;
        int rounds = 0;
        for (;;) {
            std::vector<int> workset(s.begin(), s.end());
            diag = ws.fit(lk, weights, workset);
            const Eigen::MatrixXd& g = ws.full_gradient();
            std::vector<int> missed;
            for (int ell = 1; ell <= p; ++ell) {
                if (s.count(ell)) continue;
                if (g.col(ell).norm() > lk * weights.theta[ell - 1])
                    missed.push_back(ell);
            }
            if (missed.empty()) {
                grad_prev = g;
                break;
            }
            violations += static_cast<int>(missed.size());
            for (int ell : missed) s.insert(ell);
            if (++rounds > p) fail("path", "screening repair did not terminate");
        }

        res.solutions.push_back(ws.alpha());
        res.active_sets.push_back(ws.alpha().active_set());
        res.screened_sets.emplace_back(s.begin(), s.end());
        res.violation_counts.push_back(violations);
        res.diagnostics.push_back(diag);
        res.loss_terms.push_back(ws.objective(0.0, weights));
        for (Eigen::Index ell = 1; ell <= p; ++ell)
            res.block_norms(ell - 1, k) = ws.alpha().coef.col(ell).norm();
    }
    return res;
}

}  // namespace gradsel

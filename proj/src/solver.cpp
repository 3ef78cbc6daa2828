#include "gradsel/solver.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>

#include "gradsel/errors.hpp"

namespace gradsel {

namespace {

constexpr int kRefreshInterval = 64;

void check_settings(const SolverSettings& s) {
    if (!(s.tol > 0.0)) fail("solver", "tol must be positive");
    if (s.max_cycles < 1) fail("solver", "max_cycles must be at least 1");
    if (!(s.eta_inflation >= 1.0)) fail("solver", "eta_inflation must be at least 1");
}

// Margin matrix with the label folded in: out[i][j] = y_i * m_ij where
// m_ij = sum_ell delta_ijl * (K alpha_ell)[j].  Assembled as one product of
// stacked rank-1 factors.
void assemble_margins(const KernelContext& ctx, const Eigen::VectorXd& y,
                      const Eigen::MatrixXd& alpha, const Eigen::MatrixXd& cmat,
                      Eigen::MatrixXd& out) {
    const Eigen::Index n = ctx.n();
    const Eigen::Index p = ctx.p();
    Eigen::Index m = 1;
    for (Eigen::Index ell = 1; ell <= p; ++ell)
        if (!alpha.col(ell).isZero(0.0)) m += 2;
    Eigen::MatrixXd u(n, m), v(n, m);
    u.col(0) = y;
    v.col(0) = cmat.col(0);
    Eigen::Index at = 1;
    for (Eigen::Index ell = 1; ell <= p; ++ell) {
        if (alpha.col(ell).isZero(0.0)) continue;
        const auto xl = ctx.x.col(ell - 1);
        u.col(at) = y.cwiseProduct(xl);
        v.col(at) = cmat.col(ell);
        u.col(at + 1) = -y;
        v.col(at + 1) = xl.cwiseProduct(cmat.col(ell));
        at += 2;
    }
    out.resize(n, n);
    out.noalias() = u * v.transpose();
}

double loss_term_from_margins(const KernelContext& ctx, Loss loss, const Eigen::MatrixXd& ym) {
    const double n = static_cast<double>(ctx.n());
    double sum;
    if (loss == Loss::logistic) {
        sum = (ctx.w.array() *
               ((-ym.array().abs()).exp().log1p() + (-ym.array()).max(0.0)))
                  .sum();
    } else {
        sum = (ctx.w.array() * (1.0 - ym.array()).max(0.0).square()).sum();
    }
    return sum / (n * n);
}

double penalty_term(const Eigen::MatrixXd& alpha, double lambda, const PenaltyWeights& weights) {
    double pen = 0.5 * weights.theta0 * alpha.col(0).squaredNorm();
    for (Eigen::Index ell = 1; ell < alpha.cols(); ++ell)
        pen += weights.theta(ell - 1) * alpha.col(ell).norm();
    return lambda * pen;
}

// Largest eigenvalue of scale * K diag(d) K by power iteration on the
// factored operator.
double power_iteration(const Eigen::MatrixXd& k, const Eigen::VectorXd& d, double scale,
                       const SolverSettings& settings) {
    if (d.maxCoeff() <= 0.0) fail("solver", "degenerate majorizer");
    const Eigen::Index n = k.rows();
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    Eigen::VectorXd u(n), t(n);
    double prev = 0.0;
    int stall = 0;
    for (int it = 0; it < settings.eta_power_iters; ++it) {
        t.noalias() = k * v;
        t.array() *= d.array();
        u.noalias() = k * t;
        u *= scale;
        double nu = v.dot(u);
        double un = u.norm();
        if (un <= 0.0) fail("solver", "degenerate majorizer");
        if (std::abs(nu - prev) <= settings.eta_tol * std::max(nu, DBL_MIN)) {
            if (++stall >= 3) return nu * settings.eta_inflation;
        } else {
            stall = 0;
        }
        prev = nu;
        v = u / un;
    }
    t.noalias() = k * v;
    t.array() *= d.array();
    u.noalias() = k * t;
    u *= scale;
    double resid = (u - prev * v).norm();
    char buf[96];
    std::snprintf(buf, sizeof(buf), "power iteration did not converge; residual %.6g", resid);
    fail("solver", buf);
}

}  // namespace

GmdWorkspace::GmdWorkspace(const KernelContext& context, const Dataset& data, Loss loss,
                           const SolverSettings& settings)
    : ctx_(context), data_(data), loss_(loss), settings_(settings) {
    check_settings(settings);
    const Eigen::Index n = ctx_.n();
    const Eigen::Index p = ctx_.p();
    if (data.n() != n || data.p() != p) fail("solver", "dataset does not match kernel context");

    colw_ = ctx_.w.colwise().sum().transpose();
    dmat_.resize(n, p + 1);
    dmat_.col(0) = colw_;
    if (p > 0) {
        Eigen::MatrixXd wx = ctx_.w * ctx_.x;
        Eigen::MatrixXd wx2 = ctx_.w * ctx_.x.cwiseProduct(ctx_.x);
        for (Eigen::Index ell = 1; ell <= p; ++ell) {
            const auto xl = ctx_.x.col(ell - 1);
            dmat_.col(ell) = wx2.col(ell - 1) - 2.0 * xl.cwiseProduct(wx.col(ell - 1)) +
                             xl.cwiseProduct(xl).cwiseProduct(colw_);
        }
    }
    eta_.setZero(p + 1);
    eta_ready_.assign(static_cast<std::size_t>(p) + 1, false);

    alpha_ = CoefficientBlocks::zeros(n, p);
    cmat_.setZero(n, p + 1);
    ym_.setZero(n, n);
    escratch_.resize(n, n);
    scratch_.resize(n, n);
    grad_.setZero(n, p + 1);
}

double GmdWorkspace::eta(Eigen::Index ell) {
    if (!eta_ready_[static_cast<std::size_t>(ell)]) {
        const double n = static_cast<double>(ctx_.n());
        eta_[ell] = power_iteration(ctx_.k, dmat_.col(ell), qm_constant(loss_) / (n * n),
                                    settings_);
        eta_ready_[static_cast<std::size_t>(ell)] = true;
    }
    return eta_[ell];
}

void GmdWorkspace::load(const CoefficientBlocks& alpha) {
    if (alpha.coef.rows() != ctx_.n() || alpha.coef.cols() != ctx_.p() + 1)
        fail("solver", "coefficient shape mismatch");
    alpha_ = alpha;
    cmat_.noalias() = ctx_.k * alpha_.coef;
    refresh_margins();
}

void GmdWorkspace::refresh_margins() {
    assemble_margins(ctx_, data_.y, alpha_.coef, cmat_, ym_);
    e_fresh_ = false;
    grad_fresh_ = false;
    cycles_since_refresh_ = 0;
}

double GmdWorkspace::objective(double lambda, const PenaltyWeights& weights) const {
    return loss_term_from_margins(ctx_, loss_, ym_) + penalty_term(alpha_.coef, lambda, weights);
}

void GmdWorkspace::loss_pass_derivative() {
    if (loss_ == Loss::logistic) {
        scratch_.array() = (-ym_.array().abs()).exp();
        scratch_.array() = scratch_.array() / (1.0 + scratch_.array());
        escratch_.array() =
            (ym_.array() >= 0.0).select(-scratch_.array(), scratch_.array() - 1.0);
    } else {
        escratch_.array() = (2.0 * (ym_.array() - 1.0)).min(0.0);
    }
    escratch_.array() *= ctx_.w.array();
    escratch_.array().colwise() *= data_.y.array();
    e_fresh_ = true;
}

void GmdWorkspace::block_gradient(Eigen::Index ell, Eigen::VectorXd& out) {
    const double n = static_cast<double>(ctx_.n());
    Eigen::VectorXd t = escratch_.colwise().sum().transpose();
    if (ell >= 1) {
        const auto xl = ctx_.x.col(ell - 1);
        Eigen::VectorXd tx = escratch_.transpose() * xl;
        t = tx - xl.cwiseProduct(t);
    }
    out.noalias() = ctx_.k * t;
    out /= n * n;
}

const Eigen::MatrixXd& GmdWorkspace::full_gradient() {
    if (grad_fresh_) return grad_;
    if (!e_fresh_) loss_pass_derivative();
    const Eigen::Index p = ctx_.p();
    const double n = static_cast<double>(ctx_.n());
    Eigen::MatrixXd t(ctx_.n(), p + 1);
    t.col(0) = escratch_.colwise().sum().transpose();
    if (p > 0) {
        t.rightCols(p).noalias() = escratch_.transpose() * ctx_.x;
        t.rightCols(p).array() -= ctx_.x.array().colwise() * t.col(0).array();
    }
    grad_.noalias() = ctx_.k * t;
    grad_ /= n * n;
    grad_fresh_ = true;
    return grad_;
}

void GmdWorkspace::update_block(Eigen::Index ell, double lambda, const PenaltyWeights& weights) {
    Eigen::VectorXd g(ctx_.n());
    if (grad_fresh_) {
        g = grad_.col(ell);
    } else {
        if (!e_fresh_) loss_pass_derivative();
        block_gradient(ell, g);
    }
    double etav = eta(ell);
    Eigen::VectorXd next;
    if (ell == 0) {
        next = update_block_ridge(alpha_.coef.col(0), g, etav, lambda, weights.theta0);
    } else {
        next = update_block_grouplasso(alpha_.coef.col(ell), g, etav, lambda,
                                       weights.theta(ell - 1));
    }
    Eigen::VectorXd step = next - alpha_.coef.col(ell);
    if (step.isZero(0.0)) return;
    alpha_.coef.col(ell) = next;
    Eigen::VectorXd cd = ctx_.k * step;
    cmat_.col(ell) += cd;
    if (ell == 0) {
        ym_.noalias() += data_.y * cd.transpose();
    } else {
        const auto xl = ctx_.x.col(ell - 1);
        ym_.noalias() += data_.y.cwiseProduct(xl) * cd.transpose();
        ym_.noalias() -= data_.y * xl.cwiseProduct(cd).transpose();
    }
    e_fresh_ = false;
    grad_fresh_ = false;
}

double GmdWorkspace::cycle(const std::vector<int>& blocks, double lambda,
                           const PenaltyWeights& weights) {
    for (int ell : blocks) update_block(ell, lambda, weights);
    if (++cycles_since_refresh_ >= kRefreshInterval) {
        cmat_.noalias() = ctx_.k * alpha_.coef;
        refresh_margins();
    }
    return objective(lambda, weights);
}

FitDiagnostics GmdWorkspace::fit(double lambda, const PenaltyWeights& weights,
                                 const std::vector<int>& workset) {
    const Eigen::Index p = ctx_.p();
    if (weights.theta.size() != p) fail("solver", "penalty weight count mismatch");
    if (!(lambda >= 0.0)) fail("solver", "lambda must be nonnegative");

    std::vector<int> ws = workset;
    std::sort(ws.begin(), ws.end());
    ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
    std::vector<bool> in_ws(static_cast<std::size_t>(p) + 1, false);
    in_ws[0] = true;
    for (int ell : ws) {
        if (ell < 1 || ell > p) fail("solver", "workset index out of range");
        in_ws[static_cast<std::size_t>(ell)] = true;
    }
    for (Eigen::Index ell = 1; ell <= p; ++ell)
        if (!in_ws[static_cast<std::size_t>(ell)] && !alpha_.coef.col(ell).isZero(0.0))
            fail("solver", "nonzero block outside workset");

    // Residual allowance at a stalled cycle: a cycle that decreases the
    // objective by less than tol (relative) moved every block by at most
    // O(sqrt(tol * obj / eta)), which caps the stationarity residual at
    // O(sqrt(tol * obj * sum(eta))).  The fit keeps cycling until the
    // measured residuals actually meet the bound.
    double eta_sum = eta(0) + lambda * weights.theta0;
    for (int ell : ws) eta_sum += eta(ell);

    cmat_.noalias() = ctx_.k * alpha_.coef;
    refresh_margins();

    FitDiagnostics diag;
    double obj = objective(lambda, weights);
    diag.objective_trace.push_back(obj);

    auto kkt_check = [&](double obj_now) {
        const Eigen::MatrixXd& g = full_gradient();
        diag.kkt_allowance =
            10.0 * std::sqrt(2.0 * settings_.tol * (obj_now + settings_.tol) * eta_sum);
        diag.kkt_ridge = (g.col(0) + lambda * weights.theta0 * alpha_.coef.col(0)).norm();
        diag.kkt_active_max = 0.0;
        diag.kkt_inactive_ratio = 0.0;
        bool ok = diag.kkt_ridge <= diag.kkt_allowance;
        for (int ell : ws) {
            double th = lambda * weights.theta(ell - 1);
            if (!alpha_.coef.col(ell).isZero(0.0)) {
                double an = alpha_.coef.col(ell).norm();
                double r = (g.col(ell) + (th / an) * alpha_.coef.col(ell)).norm();
                diag.kkt_active_max = std::max(diag.kkt_active_max, r);
                if (r > diag.kkt_allowance) ok = false;
            } else if (th > 0.0) {
                double ratio = g.col(ell).norm() / th;
                diag.kkt_inactive_ratio = std::max(diag.kkt_inactive_ratio, ratio);
                if (ratio > 1.0 + 10.0 * settings_.tol) ok = false;
            } else {
                double r = g.col(ell).norm();
                diag.kkt_active_max = std::max(diag.kkt_active_max, r);
                if (r > diag.kkt_allowance) ok = false;
            }
        }
        return ok;
    };

    bool full_phase = true;
    int cycles = 0;
    while (cycles < settings_.max_cycles) {
        std::vector<int> blocks;
        if (full_phase) {
            // A zero block whose loss gradient sits inside the penalty ball
            // is a fixed point of its own update, so the pass skips it.  A
            // block pushed over the threshold by the other updates in this
            // cycle is picked up on the next full pass, and the final
            // stationarity check covers every workset block regardless.
            const Eigen::MatrixXd& g = full_gradient();
            blocks.push_back(0);
            for (int ell : ws)
                if (!alpha_.coef.col(ell).isZero(0.0) ||
                    g.col(ell).norm() > lambda * weights.theta(ell - 1))
                    blocks.push_back(ell);
        } else {
            blocks.push_back(0);
            for (int ell : ws)
                if (!alpha_.coef.col(ell).isZero(0.0)) blocks.push_back(ell);
        }
        double next = cycle(blocks, lambda, weights);
        ++cycles;
        if (!std::isfinite(next)) fail("solver", "objective is not finite");
        diag.objective_trace.push_back(next);
        bool stalled = (obj - next) <= settings_.tol * std::max(obj, DBL_MIN);
        obj = next;
        if (full_phase) {
            if (stalled) {
                if (kkt_check(obj)) {
                    diag.converged = true;
                    break;
                }
            } else {
                full_phase = false;
            }
        } else if (stalled) {
            full_phase = true;
        }
    }
    diag.cycles = cycles;
    diag.objective = obj;
    if (!diag.converged) kkt_check(obj);
    return diag;
}

double objective(const KernelContext& context, const Dataset& data, Loss loss,
                 const CoefficientBlocks& alpha, double lambda, const PenaltyWeights& weights) {
    if (alpha.coef.rows() != context.n() || alpha.coef.cols() != context.p() + 1)
        fail("solver", "coefficient shape mismatch");
    if (weights.theta.size() != context.p()) fail("solver", "penalty weight count mismatch");
    Eigen::MatrixXd cmat = context.k * alpha.coef;
    Eigen::MatrixXd ym;
    assemble_margins(context, data.y, alpha.coef, cmat, ym);
    return loss_term_from_margins(context, loss, ym) + penalty_term(alpha.coef, lambda, weights);
}

Eigen::VectorXd gradient_block(const KernelContext& context, const Dataset& data, Loss loss,
                               const CoefficientBlocks& alpha, Eigen::Index ell) {
    if (ell < 0 || ell > context.p()) fail("solver", "block index out of range");
    const Eigen::Index n = context.n();
    Eigen::MatrixXd cmat = context.k * alpha.coef;
    Eigen::MatrixXd ym;
    assemble_margins(context, data.y, alpha.coef, cmat, ym);
    Eigen::MatrixXd e(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            e(i, j) = context.w(i, j) * loss_derivative(loss, ym(i, j)) * data.y[i];
    Eigen::VectorXd t = e.colwise().sum().transpose();
    if (ell >= 1) {
        const auto xl = context.x.col(ell - 1);
        Eigen::VectorXd tx = e.transpose() * xl;
        t = tx - xl.cwiseProduct(t);
    }
    Eigen::VectorXd g = context.k * t;
    g /= static_cast<double>(n) * static_cast<double>(n);
    return g;
}

double majorizer_eigenvalue(const KernelContext& context, Loss loss, Eigen::Index ell,
                            const SolverSettings& settings) {
    check_settings(settings);
    if (ell < 0 || ell > context.p()) fail("solver", "block index out of range");
    const Eigen::Index n = context.n();
    Eigen::VectorXd d = context.w.colwise().sum().transpose();
    if (ell >= 1) {
        const auto xl = context.x.col(ell - 1);
        Eigen::VectorXd wx = context.w * xl;
        Eigen::VectorXd wx2 = context.w * xl.cwiseProduct(xl);
        d = wx2 - 2.0 * xl.cwiseProduct(wx) + xl.cwiseProduct(xl).cwiseProduct(d);
    }
    double nn = static_cast<double>(n);
    return power_iteration(context.k, d, qm_constant(loss) / (nn * nn), settings);
}

Eigen::VectorXd update_block_ridge(const Eigen::VectorXd& alpha0_old, const Eigen::VectorXd& grad0,
                                   double eta0, double lambda, double theta0) {
    if (!(eta0 > 0.0)) fail("solver", "eta0 must be positive");
    return (eta0 * alpha0_old - grad0) / (eta0 + lambda * theta0);
}

Eigen::VectorXd update_block_grouplasso(const Eigen::VectorXd& alpha_old,
                                        const Eigen::VectorXd& grad, double eta, double lambda,
                                        double theta_ell) {
    if (!(eta > 0.0)) fail("solver", "eta must be positive");
    Eigen::VectorXd v = eta * alpha_old - grad;
    double vn = v.norm();
    double kill = lambda * theta_ell;
    if (vn <= kill) return Eigen::VectorXd::Zero(alpha_old.size());
    return v * ((1.0 - kill / vn) / eta);
}

FitResult fit_single(const KernelContext& context, const Dataset& data, Loss loss, double lambda,
                     const PenaltyWeights& weights, const SolverSettings& settings,
                     const std::optional<CoefficientBlocks>& warm_start) {
    GmdWorkspace ws(context, data, loss, settings);
    CoefficientBlocks init =
        warm_start ? *warm_start : CoefficientBlocks::zeros(context.n(), context.p());
    ws.load(init);
    std::vector<int> workset;
    for (int ell = 1; ell <= context.p(); ++ell) workset.push_back(ell);
    FitDiagnostics diag = ws.fit(lambda, weights, workset);
    return {ws.alpha(), diag};
}

// The classifier-block problem collapses: its margins depend on the sample
// only through y_i, so the loss term is sum_j [wp_j L(c_j) + wm_j L(-c_j)]
// / n^2 with c = K alpha_0 and wp/wm the label-split column sums of W.  A
// damped Newton iteration on this n-dimensional strongly convex problem
// replaces thousands of majorization cycles at identical stationary points.
Eigen::VectorXd pilot_intercept_fit(const KernelContext& context, const Dataset& data, Loss loss,
                                    double lambda0, double theta0, const SolverSettings& settings) {
    check_settings(settings);
    if (!(lambda0 > 0.0)) fail("solver", "lambda0 must be positive");
    const Eigen::Index n = context.n();
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    const double ridge = lambda0 * theta0;

    Eigen::VectorXd wp = Eigen::VectorXd::Zero(n), wm = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            (data.y[i] > 0 ? wp[j] : wm[j]) += context.w(i, j);

    auto value = [&](const Eigen::VectorXd& c) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            s += wp[j] * loss_value(loss, c[j]) + wm[j] * loss_value(loss, -c[j]);
        return s / n2;
    };
    auto second = [&](double m) {
        if (loss == Loss::logistic) {
            double t = 1.0 / (1.0 + std::exp(-std::abs(m)));
            return t * (1.0 - t);
        }
        return m < 1.0 ? 2.0 : 0.0;
    };

    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd u(n), h(n), grad(n), dir(n);
    double target = 0.0;
    for (int it = 0; it < 200; ++it) {
        for (Eigen::Index j = 0; j < n; ++j)
            u[j] = wp[j] * loss_derivative(loss, c[j]) - wm[j] * loss_derivative(loss, -c[j]);
        grad.noalias() = context.k * u;
        grad /= n2;
        grad += ridge * a;
        double gn = grad.norm();
        if (it == 0) target = std::min(settings.tol, 10.0 * settings.tol * std::max(gn, DBL_MIN));
        if (gn <= target) break;

        for (Eigen::Index j = 0; j < n; ++j)
            h[j] = (wp[j] * second(c[j]) + wm[j] * second(-c[j])) / n2;
        Eigen::MatrixXd hess = context.k * h.asDiagonal() * context.k;
        hess.diagonal().array() += ridge;
        dir = hess.llt().solve(-grad);

        double obj = value(c) + 0.5 * ridge * a.squaredNorm();
        double slope = grad.dot(dir);
        double step = 1.0;
        Eigen::VectorXd kdir = context.k * dir;
        for (int ls = 0; ls < 60; ++ls) {
            Eigen::VectorXd ct = c + step * kdir;
            Eigen::VectorXd at = a + step * dir;
            double ot = value(ct) + 0.5 * ridge * at.squaredNorm();
            if (ot <= obj + 1e-4 * step * slope || step < 1e-12) {
                a = at;
                c = ct;
                break;
            }
            step *= 0.5;
        }
        if (!a.allFinite()) fail("solver", "pilot fit diverged");
    }
    return a;
}

}  // namespace gradsel

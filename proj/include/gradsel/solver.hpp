#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "gradsel/dataset.hpp"
#include "gradsel/kernel.hpp"
#include "gradsel/loss.hpp"

namespace gradsel {

// Representer coefficients: column 0 is the classifier block alpha_0, column
// ell >= 1 is the gradient block of variable ell.  Zero blocks are stored as
// exact zeros; the active set is defined by exact-zero testing.
struct CoefficientBlocks {
    Eigen::MatrixXd coef;  // n rows, p+1 columns

    static CoefficientBlocks zeros(Eigen::Index n, Eigen::Index p) {
        CoefficientBlocks a;
        a.coef.setZero(n, p + 1);
        return a;
    }

    Eigen::Index n() const { return coef.rows(); }
    Eigen::Index p() const { return coef.cols() - 1; }

    std::vector<int> active_set() const {
        std::vector<int> act;
        for (Eigen::Index ell = 1; ell < coef.cols(); ++ell)
            if (!coef.col(ell).isZero(0.0)) act.push_back(static_cast<int>(ell));
        return act;
    }
};

// Penalty multipliers of the objective: theta0 scales the ridge term on
// alpha_0, theta[ell-1] scales the group norm of block ell.  gamma records
// the exponent used to derive the adaptive weights.
struct PenaltyWeights {
    double theta0 = 1.0;
    Eigen::VectorXd theta;
    double gamma = 1.0;
};

struct SolverSettings {
    double tol = 1e-7;       // relative objective decrease per cycle
    int max_cycles = 2000;
    int eta_power_iters = 5000;
    double eta_tol = 1e-12;
    double eta_inflation = 1.0 + 1e-6;
};

struct FitDiagnostics {
    int cycles = 0;
    double objective = 0.0;
    bool converged = false;
    // Measured stationarity residuals at the returned point.
    double kkt_ridge = 0.0;           // |grad_0 + lambda theta0 alpha_0|
    double kkt_active_max = 0.0;      // worst |grad_l + lambda theta_l alpha_l/|alpha_l||
    double kkt_inactive_ratio = 0.0;  // worst |grad_l| / (lambda theta_l) over zero blocks
    double kkt_allowance = 0.0;       // residual bound the fit enforced
    std::vector<double> objective_trace;
};

// Shared per-dataset state for a sequence of fits (one lambda path, one
// fold).  Holds the label-premultiplied margin matrix ym[i][j] = y_i * m_ij,
// the kernel products cmat = K * coef, the majorizer diagonals d_ell and
// their top eigenvalues.  Reusing it across warm-started fits is what makes
// a 50-point path cost little more than a handful of cold fits.
class GmdWorkspace {
public:
    GmdWorkspace(const KernelContext& context, const Dataset& data, Loss loss,
                 const SolverSettings& settings = {});

    const KernelContext& context() const { return ctx_; }
    const Dataset& data() const { return data_; }
    Loss loss() const { return loss_; }

    // Inflated majorizer eigenvalue of block ell (computed lazily, cached).
    double eta(Eigen::Index ell);

    // Loss term plus penalty at the workspace's current coefficients.
    double objective(double lambda, const PenaltyWeights& weights) const;

    // Rebinds the workspace to the given coefficients (refreshes margins).
    void load(const CoefficientBlocks& alpha);
    const CoefficientBlocks& alpha() const { return alpha_; }

    // Full loss gradient, one column per block, at the current coefficients.
    const Eigen::MatrixXd& full_gradient();

    // Cyclic majorization-descent at one penalty level over the given
    // workset (block 0 is always treated as part of it).  Warm starts from
    // the current coefficients.  Appends to diag.objective_trace.
    FitDiagnostics fit(double lambda, const PenaltyWeights& weights,
                       const std::vector<int>& workset);

    const SolverSettings& settings() const { return settings_; }

private:
    void refresh_margins();
    void update_block(Eigen::Index ell, double lambda, const PenaltyWeights& weights);
    void loss_pass_derivative();
    void block_gradient(Eigen::Index ell, Eigen::VectorXd& out);
    double cycle(const std::vector<int>& blocks, double lambda, const PenaltyWeights& weights);

    const KernelContext& ctx_;
    const Dataset& data_;
    Loss loss_;
    SolverSettings settings_;

    CoefficientBlocks alpha_;
    Eigen::MatrixXd ym_;
    Eigen::MatrixXd cmat_;
    Eigen::MatrixXd escratch_;
    Eigen::MatrixXd scratch_;
    bool e_fresh_ = false;
    Eigen::MatrixXd grad_;
    bool grad_fresh_ = false;
    Eigen::VectorXd colw_;
    Eigen::MatrixXd dmat_;
    Eigen::VectorXd eta_;
    std::vector<bool> eta_ready_;
    int cycles_since_refresh_ = 0;
};

// Objective of the penalized problem at arbitrary coefficients.
double objective(const KernelContext& context, const Dataset& data, Loss loss,
                 const CoefficientBlocks& alpha, double lambda, const PenaltyWeights& weights);

// Loss-term gradient restricted to block ell.
Eigen::VectorXd gradient_block(const KernelContext& context, const Dataset& data, Loss loss,
                               const CoefficientBlocks& alpha, Eigen::Index ell);

// Largest eigenvalue of the block majorizer H_ell = (C/n^2) K diag(d_ell) K,
// by power iteration on the factored form, times the safety inflation.
double majorizer_eigenvalue(const KernelContext& context, Loss loss, Eigen::Index ell,
                            const SolverSettings& settings = {});

// Closed-form minimizer of the ridge-block quadratic subproblem.
Eigen::VectorXd update_block_ridge(const Eigen::VectorXd& alpha0_old, const Eigen::VectorXd& grad0,
                                   double eta0, double lambda, double theta0);

// Closed-form minimizer of the group-penalized quadratic subproblem; writes
// an exact zero vector inside the kill zone.
Eigen::VectorXd update_block_grouplasso(const Eigen::VectorXd& alpha_old,
                                        const Eigen::VectorXd& grad, double eta, double lambda,
                                        double theta_ell);

struct FitResult {
    CoefficientBlocks alpha;
    FitDiagnostics diagnostics;
};

// One fit at a single penalty level over all blocks.
FitResult fit_single(const KernelContext& context, const Dataset& data, Loss loss, double lambda,
                     const PenaltyWeights& weights, const SolverSettings& settings,
                     const std::optional<CoefficientBlocks>& warm_start = std::nullopt);

// Ridge-only fit of the classifier block with all gradient blocks pinned at
// zero; the initializer of the path driver.
Eigen::VectorXd pilot_intercept_fit(const KernelContext& context, const Dataset& data, Loss loss,
                                    double lambda0, double theta0, const SolverSettings& settings);

}  // namespace gradsel

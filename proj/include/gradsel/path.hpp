#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "gradsel/dataset.hpp"
#include "gradsel/kernel.hpp"
#include "gradsel/loss.hpp"
#include "gradsel/solver.hpp"

namespace gradsel {

// Penalty multipliers derived from a pilot kernel ridge margin fit: block
// ell gets theta = |d_ell f|^-gamma where |d_ell f| is the RKHS norm of the
// pilot's ell-th partial derivative.  Capped at 1e6 so variables the pilot
// sees as flat stay selectable in principle.  gamma = 0 gives unit weights
// without fitting a pilot.  ridge <= 0 picks the default 1/n.
PenaltyWeights adaptive_weights(const KernelContext& context, const Dataset& data, Loss loss,
                                double gamma, double ridge = 0.0);

// Ridge-only fit of the classifier block used to anchor the path: solves the
// problem with every gradient block pinned at zero, at a small fraction of
// the penalty level that would kill the classifier block itself.
Eigen::VectorXd path_pilot(const KernelContext& context, const Dataset& data, Loss loss,
                           double theta0, const SolverSettings& settings = {});

// Entry level of the path: the smallest penalty at which every gradient
// block stays at zero.  With the gradient blocks pinned, the classifier
// block solves its own ridge problem at the same level, so the entry level
// is the fixed point of lambda = max_ell |grad_ell(alpha0(lambda))| /
// theta_ell, found by iterating intercept-only refits.
double lambda_max(const KernelContext& context, const Dataset& data, Loss loss,
                  const PenaltyWeights& weights, const SolverSettings& settings = {});

// Log-uniform grid of n_lambda values from lmax down to lmax * min_ratio,
// first entry exactly lmax.  min_ratio <= 0 picks the default: 0.01, or
// 0.05 when p > n.
Eigen::VectorXd lambda_grid(double lmax, int n_lambda, double min_ratio, Eigen::Index n = 0,
                            Eigen::Index p = 0);

// Blocks retained by the sequential strong rule at lambda_k given the loss
// gradient at the previous solution: keep ell iff
// |grad_prev_ell| >= theta_ell * (2 lambda_k - lambda_prev).
// Discarding is strict; equality is retained.
std::vector<int> strong_rule_screen(const Eigen::MatrixXd& grad_prev,
                                    const PenaltyWeights& weights, double lambda_k,
                                    double lambda_prev);

struct PathResult {
    Eigen::VectorXd lambdas;
    double lambda_max_value = 0.0;
    Eigen::VectorXd pilot_alpha0;
    PenaltyWeights weights;
    std::vector<CoefficientBlocks> solutions;
    std::vector<std::vector<int>> active_sets;
    std::vector<std::vector<int>> screened_initial;  // strong-rule survivors, before repair
    std::vector<std::vector<int>> screened_sets;     // final worksets actually fit
    std::vector<int> violation_counts;               // blocks added by repair at each point
    std::vector<FitDiagnostics> diagnostics;
    std::vector<double> loss_terms;    // objective minus penalty at each point
    Eigen::MatrixXd block_norms;       // p rows, one column per lambda: |alpha_ell|
};

// Warm-started descent over the grid with sequential strong-rule screening
// and violation repair.  Every returned point satisfies the full
// stationarity check over all p blocks, screened or not.  screen = false
// fits every block at every point (the reference the screened run must
// match).  The pilot is computed internally when not supplied.
PathResult fit_path(const KernelContext& context, const Dataset& data, Loss loss,
                    const PenaltyWeights& weights, const Eigen::VectorXd& lambdas,
                    const SolverSettings& settings = {}, bool screen = true,
                    const std::optional<Eigen::VectorXd>& pilot = std::nullopt);

}  // namespace gradsel

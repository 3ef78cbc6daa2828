#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gradsel/dataset.hpp"
#include "gradsel/kernel.hpp"
#include "gradsel/loss.hpp"
#include "gradsel/path.hpp"
#include "gradsel/solver.hpp"

namespace gradsel {

struct CvConfig {
    Loss loss = Loss::logistic;
    int folds = 10;
    std::uint64_t seed = 0;
    int n_lambda = 50;
    double lambda_min_ratio = 0.0;  // <= 0 picks the default
    double gamma = 1.0;
    double pilot_ridge = 0.0;       // <= 0 picks 1/n
    int knn = 0;                    // 0 disables the neighbor mask
    bool one_se = false;
    int threads = 0;                // 0 resolves from GRADSEL_THREADS / hardware
    bool screen = true;
    SolverSettings solver;
};

// Stratified fold labels in [0, folds): each class is shuffled on the fold
// stream of the seed, then a single round-robin counter runs across the
// shuffled classes, so fold sizes differ by at most one overall and per
// class.
std::vector<int> stratified_folds(const Eigen::VectorXd& y, int folds, std::uint64_t seed,
                                  std::uint64_t substream = 0);

struct SelectionMetrics {
    int tp = 0;
    int fp = 0;
    bool exact = false;
};

// Overlap of a selected variable set with the true one (both 1-based).
SelectionMetrics selection_metrics(const std::vector<int>& selected,
                                   const std::vector<int>& truth);

// Copies the 1-based selected columns of x, in ascending order.
Eigen::MatrixXd restrict_columns(const Eigen::MatrixXd& x, const std::vector<int>& selected);

// Final classifier on the selected variables: a kernel ridge margin
// classifier over the restricted coordinates with its own median bandwidth.
// With an empty selection it degrades to the majority class (ties vote +1).
struct RefitModel {
    std::vector<int> selected;  // 1-based, ascending
    KernelContext context;      // restricted training sample
    Eigen::VectorXd a;
    double ridge = 0.0;
    bool majority = false;
    double majority_sign = 1.0;
};

// Ridge level for the refit, chosen by inner cross-validation over a fixed
// descending log grid; ties keep the larger (more regularized) value.
double tune_refit_ridge(const Eigen::MatrixXd& x_sub, const Eigen::VectorXd& y, Loss loss,
                        int folds, std::uint64_t seed);

RefitModel refit_on_selected(const Dataset& data, const std::vector<int>& selected, Loss loss,
                             std::uint64_t seed);

// Decision values of the refit model at new points.  Rows carry the full
// variable width; the model restricts them itself.
Eigen::VectorXd refit_margins(const RefitModel& model, const Eigen::MatrixXd& xnew);

// Predicted labels in {-1, +1}; a zero margin votes +1.
Eigen::VectorXd refit_predict(const RefitModel& model, const Eigen::MatrixXd& xnew);

struct CvResult {
    Eigen::VectorXd lambdas;
    Eigen::MatrixXd fold_errors;  // one row per fold, one column per lambda
    Eigen::VectorXd mean_error;
    Eigen::VectorXd se_error;
    int chosen_index = 0;
    double chosen_lambda = 0.0;
    bool one_se = false;
    PathResult path;  // fit on the full sample
    std::vector<int> selected;
    RefitModel refit;
};

// Cross-validated selection: adaptive weights and the penalty grid come
// from the full sample; each fold refits the path on its training part
// (with its own bandwidths) and scores the held-out part with a kernel
// ridge classifier refit on the variables active at each penalty, so the
// curve measures the end-to-end selection-plus-refit procedure.  The
// winning penalty is the smallest mean error, ties going to the larger
// penalty; the one-SE rule moves to the largest penalty within one
// standard error when enabled.
CvResult cross_validate(const Dataset& data, const CvConfig& config);

}  // namespace gradsel

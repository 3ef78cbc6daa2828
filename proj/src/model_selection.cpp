#include "gradsel/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "gradsel/errors.hpp"
#include "gradsel/parallel.hpp"
#include "gradsel/ridge.hpp"
#include "gradsel/rng.hpp"

namespace gradsel {

namespace {

Eigen::VectorXd signs(const Eigen::VectorXd& margins) {
    Eigen::VectorXd out(margins.size());
    for (Eigen::Index i = 0; i < margins.size(); ++i) out[i] = margins[i] >= 0.0 ? 1.0 : -1.0;
    return out;
}

double misclassification(const Eigen::VectorXd& margins, const Eigen::VectorXd& y) {
    Eigen::Index wrong = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double pred = margins[i] >= 0.0 ? 1.0 : -1.0;
        if (pred != y[i]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(y.size());
}

Eigen::MatrixXd restrict_rows(const Eigen::MatrixXd& x, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
        out.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
    return out;
}

Dataset take_rows(const Dataset& data, const std::vector<int>& rows) {
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), data.p());
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.x.row(static_cast<Eigen::Index>(r)) = data.x.row(rows[r]);
        out.y[static_cast<Eigen::Index>(r)] = data.y[rows[r]];
    }
    out.feature_names = data.feature_names;
    return out;
}

void check_two_classes(const Eigen::VectorXd& y, const std::string& what) {
    bool pos = false, neg = false;
    for (Eigen::Index i = 0; i < y.size(); ++i) (y[i] > 0 ? pos : neg) = true;
    if (!pos || !neg) fail("model_selection", "degenerate fold: " + what + " has a single class");
}

}  // namespace

std::vector<int> stratified_folds(const Eigen::VectorXd& y, int folds, std::uint64_t seed,
                                  std::uint64_t substream) {
    const Eigen::Index n = y.size();
    if (folds < 2) fail("model_selection", "folds must be at least 2");
    if (folds > n) fail("model_selection", "folds exceed the sample size");
    std::vector<int> pos, neg;
    for (Eigen::Index i = 0; i < n; ++i)
        (y[i] > 0 ? pos : neg).push_back(static_cast<int>(i));

    Philox rng(seed, Philox::kFoldStream, substream);
    auto shuffle = [&rng](std::vector<int>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
            std::swap(v[i - 1], v[j]);
        }
    };
    shuffle(pos);
    shuffle(neg);

    std::vector<int> fold(static_cast<std::size_t>(n));
    int counter = 0;
    for (int i : pos) fold[static_cast<std::size_t>(i)] = counter++ % folds;
    for (int i : neg) fold[static_cast<std::size_t>(i)] = counter++ % folds;
    return fold;
}

SelectionMetrics selection_metrics(const std::vector<int>& selected,
                                   const std::vector<int>& truth) {
    std::set<int> sel(selected.begin(), selected.end());
    std::set<int> tru(truth.begin(), truth.end());
    SelectionMetrics m;
    for (int v : sel) (tru.count(v) ? m.tp : m.fp)++;
    m.exact = (sel == tru);
    return m;
}

Eigen::MatrixXd restrict_columns(const Eigen::MatrixXd& x, const std::vector<int>& selected) {
    std::vector<int> cols(selected);
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (cols[c] < 1 || cols[c] > x.cols())
            fail("model_selection", "selected variable out of range");
        out.col(static_cast<Eigen::Index>(c)) = x.col(cols[c] - 1);
    }
    return out;
}

double tune_refit_ridge(const Eigen::MatrixXd& x_sub, const Eigen::VectorXd& y, Loss loss,
                        int folds, std::uint64_t seed) {
    const int kCandidates = 10;
    std::vector<double> cand(kCandidates);
    for (int i = 0; i < kCandidates; ++i)
        cand[static_cast<std::size_t>(i)] = std::pow(10.0, -6.0 * i / (kCandidates - 1.0));

    std::vector<int> fold = stratified_folds(y, folds, seed, 1);
    Eigen::MatrixXd errs(folds, kCandidates);
    for (int f = 0; f < folds; ++f) {
        std::vector<int> train, test;
        for (Eigen::Index i = 0; i < y.size(); ++i)
            (fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(static_cast<int>(i));
        Dataset tr;
        tr.x = restrict_rows(x_sub, train);
        tr.y.resize(static_cast<Eigen::Index>(train.size()));
        for (std::size_t r = 0; r < train.size(); ++r)
            tr.y[static_cast<Eigen::Index>(r)] = y[train[r]];
        check_two_classes(tr.y, "refit tuning training part");

        KernelContext ctx = build_context(tr);
        Eigen::MatrixXd kx = cross_kernel(ctx, restrict_rows(x_sub, test));
        Eigen::VectorXd ytest(static_cast<Eigen::Index>(test.size()));
        for (std::size_t r = 0; r < test.size(); ++r)
            ytest[static_cast<Eigen::Index>(r)] = y[test[r]];

        std::optional<Eigen::VectorXd> warm;
        for (int i = 0; i < kCandidates; ++i) {
            Eigen::VectorXd a =
                ridge_margin_fit(ctx, tr, loss, cand[static_cast<std::size_t>(i)], 200, 1e-10,
                                 warm);
            errs(f, i) = misclassification(kx * a, ytest);
            warm = a;
        }
    }

    int best = 0;
    Eigen::VectorXd mean = errs.colwise().mean();
    for (int i = 1; i < kCandidates; ++i)
        if (mean[i] < mean[best]) best = i;
    return cand[static_cast<std::size_t>(best)];
}

RefitModel refit_on_selected(const Dataset& data, const std::vector<int>& selected, Loss loss,
                             std::uint64_t seed) {
    RefitModel m;
    m.selected = selected;
    std::sort(m.selected.begin(), m.selected.end());
    m.selected.erase(std::unique(m.selected.begin(), m.selected.end()), m.selected.end());
    if (m.selected.empty()) {
        m.majority = true;
        Eigen::Index pos = 0;
        for (Eigen::Index i = 0; i < data.n(); ++i)
            if (data.y[i] > 0) ++pos;
        m.majority_sign = (2 * pos >= data.n()) ? 1.0 : -1.0;
        return m;
    }
    Dataset sub;
    sub.x = restrict_columns(data.x, m.selected);
    sub.y = data.y;
    m.ridge = tune_refit_ridge(sub.x, sub.y, loss, 5, seed);
    m.context = build_context(sub);
    m.a = ridge_margin_fit(m.context, sub, loss, m.ridge);
    return m;
}

Eigen::VectorXd refit_margins(const RefitModel& model, const Eigen::MatrixXd& xnew) {
    if (model.majority)
        return Eigen::VectorXd::Constant(xnew.rows(), model.majority_sign);
    Eigen::MatrixXd sub = restrict_columns(xnew, model.selected);
    return cross_kernel(model.context, sub) * model.a;
}

Eigen::VectorXd refit_predict(const RefitModel& model, const Eigen::MatrixXd& xnew) {
    return signs(refit_margins(model, xnew));
}

CvResult cross_validate(const Dataset& data, const CvConfig& config) {
    data.validate();
    const Eigen::Index n = data.n();
    const Eigen::Index p = data.p();
    if (p < 1) fail("model_selection", "no variables to select");
    check_two_classes(data.y, "the sample");

    KernelContext ctx = build_context(data, config.knn);
    PenaltyWeights weights =
        adaptive_weights(ctx, data, config.loss, config.gamma, config.pilot_ridge);
    Eigen::VectorXd pilot = path_pilot(ctx, data, config.loss, weights.theta0, config.solver);
    double lmax = lambda_max(ctx, data, config.loss, weights, config.solver);
    Eigen::VectorXd grid = lambda_grid(lmax, config.n_lambda, config.lambda_min_ratio, n, p);

    std::vector<int> fold = stratified_folds(data.y, config.folds, config.seed);

    CvResult res;
    res.lambdas = grid;
    res.fold_errors.setZero(config.folds, grid.size());
    res.one_se = config.one_se;

    // Slot task F fits the full-sample path; slots 0..F-1 score the folds.
    parallel_for(config.folds + 1, config.threads, [&](int task) {
        if (task == config.folds) {
            res.path = fit_path(ctx, data, config.loss, weights, grid, config.solver,
                                config.screen, pilot);
            return;
        }
        int f = task;
        std::vector<int> train, test;
        for (Eigen::Index i = 0; i < n; ++i)
            (fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(static_cast<int>(i));
        if (test.empty()) fail("model_selection", "empty fold");
        Dataset tr = take_rows(data, train);
        Dataset te = take_rows(data, test);
        check_two_classes(tr.y, "fold " + std::to_string(f) + " training part");

        KernelContext fctx = build_context(tr, config.knn);
        PathResult fpath =
            fit_path(fctx, tr, config.loss, weights, grid, config.solver, config.screen);

        // Score each lambda by the classifier the procedure would actually
        // deploy there: a kernel ridge refit on the variables active at that
        // lambda, trained on the fold's training part.  The ridge level is
        // held at 1/n rather than tuned per set: tuning lets large sets
        // absorb noise variables, and the fixed level keeps the curve
        // honest about parsimony.  Consecutive lambdas mostly share active
        // sets, so refits are cached per distinct set.
        Eigen::Index pos = 0;
        for (Eigen::Index i = 0; i < tr.n(); ++i)
            if (tr.y[i] > 0) ++pos;
        const double majority_sign = (2 * pos >= tr.n()) ? 1.0 : -1.0;
        double majority_error = 0.0;
        for (Eigen::Index i = 0; i < te.n(); ++i)
            if (te.y[i] != majority_sign) majority_error += 1.0;
        majority_error /= static_cast<double>(te.n());

        const double scoring_ridge = 1.0 / static_cast<double>(tr.n());
        std::map<std::vector<int>, double> set_error;
        for (Eigen::Index k = 0; k < grid.size(); ++k) {
            const std::vector<int>& sel = fpath.active_sets[static_cast<std::size_t>(k)];
            auto it = set_error.find(sel);
            if (it == set_error.end()) {
                double err;
                if (sel.empty()) {
                    err = majority_error;
                } else {
                    Dataset sub;
                    sub.x = restrict_columns(tr.x, sel);
                    sub.y = tr.y;
                    KernelContext sctx = build_context(sub);
                    Eigen::VectorXd a = ridge_margin_fit(sctx, sub, config.loss, scoring_ridge);
                    Eigen::MatrixXd kx = cross_kernel(sctx, restrict_columns(te.x, sel));
                    err = misclassification(kx * a, te.y);
                }
                it = set_error.emplace(sel, err).first;
            }
            res.fold_errors(f, k) = it->second;
        }
    });

    res.mean_error = res.fold_errors.colwise().mean();
    res.se_error.resize(grid.size());
    const double fcount = static_cast<double>(config.folds);
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        double sd2 = (res.fold_errors.col(k).array() - res.mean_error[k]).square().sum() /
                     (fcount - 1.0);
        res.se_error[k] = std::sqrt(sd2 / fcount);
    }

    int chosen = 0;
    for (Eigen::Index k = 1; k < grid.size(); ++k)
        if (res.mean_error[k] < res.mean_error[chosen]) chosen = static_cast<int>(k);
    if (config.one_se) {
        double cutoff = res.mean_error[chosen] + res.se_error[chosen];
        for (Eigen::Index k = 0; k < grid.size(); ++k) {
            if (res.mean_error[k] <= cutoff) {
                chosen = static_cast<int>(k);
                break;
            }
        }
    }
    res.chosen_index = chosen;
    res.chosen_lambda = grid[chosen];
    res.selected = res.path.active_sets[static_cast<std::size_t>(chosen)];
    res.refit = refit_on_selected(data, res.selected, config.loss, config.seed);
    return res;
}

}  // namespace gradsel

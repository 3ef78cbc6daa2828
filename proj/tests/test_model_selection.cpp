#include <doctest.h>

#include <gradsel/errors.hpp>
#include <gradsel/model_selection.hpp>
#include <gradsel/sim.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

using namespace gradsel;

TEST_CASE("stratified folds balance sizes within one, overall and per class") {
    Eigen::VectorXd y(23);
    for (int i = 0; i < 23; ++i) y[i] = i < 9 ? 1.0 : -1.0;
    for (int folds : {2, 5, 10}) {
        std::vector<int> f = stratified_folds(y, folds, 99);
        REQUIRE(static_cast<int>(f.size()) == 23);
        std::vector<int> total(folds, 0), pos(folds, 0);
        for (int i = 0; i < 23; ++i) {
            REQUIRE(f[i] >= 0);
            REQUIRE(f[i] < folds);
            ++total[f[i]];
            if (y[i] > 0) ++pos[f[i]];
        }
        auto spread = [](const std::vector<int>& v) {
            return *std::max_element(v.begin(), v.end()) -
                   *std::min_element(v.begin(), v.end());
        };
        CHECK(spread(total) <= 1);
        CHECK(spread(pos) <= 1);
    }
}

TEST_CASE("fold assignment is a deterministic function of the seed") {
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) y[i] = i % 3 == 0 ? 1.0 : -1.0;
    CHECK(stratified_folds(y, 5, 7) == stratified_folds(y, 5, 7));
    CHECK(stratified_folds(y, 5, 7) != stratified_folds(y, 5, 8));
    CHECK(stratified_folds(y, 5, 7, 1) != stratified_folds(y, 5, 7, 2));
}

TEST_CASE("leave-one-out accounting") {
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i) y[i] = i < 10 ? 1.0 : -1.0;
    std::vector<int> f = stratified_folds(y, 20, 3);
    std::set<int> seen(f.begin(), f.end());
    CHECK(seen.size() == 20);
}

TEST_CASE("selection metrics identities") {
    std::vector<int> truth{1, 2};
    SelectionMetrics m = selection_metrics({1, 2}, truth);
    CHECK(m.tp == 2);
    CHECK(m.fp == 0);
    CHECK(m.exact);
    m = selection_metrics({2, 5, 9}, truth);
    CHECK(m.tp == 1);
    CHECK(m.fp == 2);
    CHECK_FALSE(m.exact);
    m = selection_metrics({}, truth);
    CHECK(m.tp == 0);
    CHECK(m.fp == 0);
    CHECK_FALSE(m.exact);
}

TEST_CASE("restrict columns keeps order and content") {
    Eigen::MatrixXd x(3, 4);
    x << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
    Eigen::MatrixXd r = restrict_columns(x, {4, 2});
    REQUIRE(r.cols() == 2);
    CHECK(r(0, 0) == 2);
    CHECK(r(0, 1) == 4);
    CHECK(r(2, 0) == 10);
    CHECK(r(2, 1) == 12);
}

TEST_CASE("refit on an empty selection degrades to majority vote") {
    Dataset d = sim_generate(SimModel::m1, 50, 4, 21);
    RefitModel m = refit_on_selected(d, {}, Loss::logistic, 5);
    CHECK(m.majority);
    Eigen::Index pos = 0;
    for (Eigen::Index i = 0; i < d.n(); ++i)
        if (d.y[i] > 0) ++pos;
    double expect = (2 * pos >= d.n()) ? 1.0 : -1.0;
    CHECK(m.majority_sign == expect);
    Eigen::MatrixXd xnew = d.x.topRows(7);
    Eigen::VectorXd pred = refit_predict(m, xnew);
    for (Eigen::Index i = 0; i < 7; ++i) CHECK(pred[i] == expect);
}

TEST_CASE("refit fits the training sample well on easy data") {
    Dataset d = sim_generate(SimModel::m1, 120, 6, 33);
    RefitModel m = refit_on_selected(d, {1, 2}, Loss::logistic, 5);
    Eigen::VectorXd pred = refit_predict(m, d.x);
    double err = 0.0;
    for (Eigen::Index i = 0; i < d.n(); ++i)
        if (pred[i] != d.y[i]) err += 1.0;
    err /= static_cast<double>(d.n());
    CHECK(err <= 0.15);
}

TEST_CASE("refit predictions ignore non-selected columns") {
    Dataset d = sim_generate(SimModel::m2, 80, 6, 44);
    RefitModel m = refit_on_selected(d, {1, 2}, Loss::logistic, 5);
    Eigen::MatrixXd xnew = sim_generate(SimModel::m2, 40, 6, 45).x;
    Eigen::VectorXd base = refit_margins(m, xnew);

    Eigen::MatrixXd shuffled = xnew;
    shuffled.col(3).reverseInPlace();
    shuffled.col(5).setConstant(0.77);
    Eigen::VectorXd same = refit_margins(m, shuffled);
    CHECK((base - same).cwiseAbs().maxCoeff() == 0.0);

    // Selecting everything must match the unrestricted coordinates.
    RefitModel full = refit_on_selected(d, {1, 2, 3, 4, 5, 6}, Loss::logistic, 5);
    Eigen::MatrixXd direct = restrict_columns(xnew, full.selected);
    CHECK((direct - xnew).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tuned refit ridge is deterministic in the seed") {
    Dataset d = sim_generate(SimModel::m1, 60, 4, 50);
    Eigen::MatrixXd xs = restrict_columns(d.x, {1, 2});
    double r1 = tune_refit_ridge(xs, d.y, Loss::logistic, 5, 9);
    double r2 = tune_refit_ridge(xs, d.y, Loss::logistic, 5, 9);
    CHECK(r1 == r2);
    CHECK(r1 > 0.0);
}

TEST_CASE("cross validation error requires two classes") {
    Dataset d = sim_generate(SimModel::m1, 30, 4, 60);
    d.y.setConstant(1.0);
    CvConfig cfg;
    cfg.folds = 5;
    CHECK_THROWS_AS(cross_validate(d, cfg), Error);
}

TEST_CASE("cross validation on an easy sample finds the true pair") {
    Dataset d = sim_generate(SimModel::m1, 200, 5, 71);
    CvConfig cfg;
    cfg.folds = 5;
    cfg.seed = 71;
    cfg.n_lambda = 30;
    cfg.solver.tol = 1e-5;
    CvResult res = cross_validate(d, cfg);

    CHECK(res.selected == std::vector<int>{1, 2});
    CHECK(res.chosen_lambda == res.lambdas[res.chosen_index]);

    // The curve must actually dip: the chosen error beats the null point.
    CHECK(res.mean_error[res.chosen_index] <= res.mean_error[0] - 0.05);

    // Mean and standard error recompute from the fold matrix.
    for (Eigen::Index k = 0; k < res.lambdas.size(); ++k) {
        double mean = res.fold_errors.col(k).mean();
        CHECK(res.mean_error[k] == doctest::Approx(mean).epsilon(1e-12));
        double acc = (res.fold_errors.col(k).array() - mean).square().sum();
        double se = std::sqrt(acc / (cfg.folds - 1)) / std::sqrt(double(cfg.folds));
        CHECK(res.se_error[k] == doctest::Approx(se).epsilon(1e-12));
    }

    // Determinism: an identical run reproduces the same selection.
    CvResult res2 = cross_validate(d, cfg);
    CHECK(res2.selected == res.selected);
    CHECK(res2.chosen_index == res.chosen_index);
    CHECK((res2.mean_error - res.mean_error).cwiseAbs().maxCoeff() == 0.0);

    // The reported refit matches the reported selection.
    CHECK(res.refit.selected == res.selected);
    CHECK_FALSE(res.refit.majority);
}

TEST_CASE("tie on the error curve moves to the larger penalty") {
    Dataset d = sim_generate(SimModel::m1, 200, 5, 71);
    CvConfig cfg;
    cfg.folds = 5;
    cfg.seed = 71;
    cfg.n_lambda = 30;
    cfg.solver.tol = 1e-5;
    CvResult res = cross_validate(d, cfg);
    double minval = res.mean_error.minCoeff();
    int first = 0;
    while (res.mean_error[first] != minval) ++first;
    CHECK(res.chosen_index == first);
}

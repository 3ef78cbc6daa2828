#include <doctest.h>

#include <gradsel/kernel.hpp>
#include <gradsel/path.hpp>
#include <gradsel/ridge.hpp>
#include <gradsel/sim.hpp>
#include <gradsel/solver.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace gradsel;

namespace {

Dataset sim_data(SimModel model, Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
    return sim_generate(model, n, p, seed);
}

}  // namespace

TEST_CASE("gamma zero gives unit weights without a pilot") {
    Dataset d = sim_data(SimModel::m1, 40, 4, 1);
    KernelContext ctx = build_context(d);
    PenaltyWeights w = adaptive_weights(ctx, d, Loss::logistic, 0.0);
    CHECK(w.theta0 == 1.0);
    CHECK(w.gamma == 0.0);
    for (Eigen::Index ell = 0; ell < 4; ++ell) CHECK(w.theta[ell] == 1.0);
}

TEST_CASE("adaptive weights are a monotone map of pilot derivative norms") {
    Dataset d = sim_data(SimModel::m1, 60, 6, 2);
    KernelContext ctx = build_context(d);
    const double ridge = 1.0 / 60.0;
    PenaltyWeights w1 = adaptive_weights(ctx, d, Loss::logistic, 1.0, ridge);
    PenaltyWeights w2 = adaptive_weights(ctx, d, Loss::logistic, 2.0, ridge);

    Eigen::VectorXd a = ridge_margin_fit(ctx, d, Loss::logistic, ridge);
    for (Eigen::Index ell = 1; ell <= 6; ++ell) {
        double nrm = cross_derivative_norm(ctx, a, ell);
        REQUIRE(nrm > 0.0);
        CHECK(w1.theta[ell - 1] == doctest::Approx(1.0 / nrm).epsilon(1e-9));
        CHECK(w2.theta[ell - 1] == doctest::Approx(1.0 / (nrm * nrm)).epsilon(1e-9));
    }

    // Larger derivative norm means smaller weight, in both exponents.
    for (Eigen::Index i = 1; i <= 6; ++i)
        for (Eigen::Index j = 1; j <= 6; ++j) {
            double ni = cross_derivative_norm(ctx, a, i);
            double nj = cross_derivative_norm(ctx, a, j);
            if (ni > nj) {
                CHECK(w1.theta[i - 1] < w1.theta[j - 1]);
                CHECK(w2.theta[i - 1] < w2.theta[j - 1]);
            }
        }
}

TEST_CASE("informative variables get the small weights on easy data") {
    Dataset d = sim_data(SimModel::m1, 150, 10, 7);
    KernelContext ctx = build_context(d);
    PenaltyWeights w = adaptive_weights(ctx, d, Loss::logistic, 1.0);
    double informative = std::max(w.theta[0], w.theta[1]);
    double junk = w.theta.segment(2, 8).minCoeff();
    CHECK(informative < junk);
}

TEST_CASE("lambda max scales inversely with the weights") {
    Dataset d = sim_data(SimModel::m2, 50, 5, 3);
    KernelContext ctx = build_context(d);
    PenaltyWeights w = adaptive_weights(ctx, d, Loss::logistic, 1.0);
    double lmax = lambda_max(ctx, d, Loss::logistic, w);
    REQUIRE(lmax > 0.0);

    PenaltyWeights doubled = w;
    doubled.theta0 *= 2.0;
    doubled.theta *= 2.0;
    double lmax2 = lambda_max(ctx, d, Loss::logistic, doubled);
    CHECK(lmax2 == doctest::Approx(0.5 * lmax).epsilon(1e-12));
}

TEST_CASE("lambda max is the exact boundary of the null region") {
    Dataset d = sim_data(SimModel::m1, 50, 5, 4);
    KernelContext ctx = build_context(d);
    PenaltyWeights w = adaptive_weights(ctx, d, Loss::logistic, 1.0);
    Eigen::VectorXd pilot = path_pilot(ctx, d, Loss::logistic, w.theta0);
    double lmax = lambda_max(ctx, d, Loss::logistic, w);

    // Above the entry level nothing may activate.
    Eigen::VectorXd above(1), below(1);
    above[0] = 1.001 * lmax;
    below[0] = 0.90 * lmax;
    PathResult pa = fit_path(ctx, d, Loss::logistic, w, above, {}, true, pilot);
    CHECK(pa.active_sets[0].empty());

    // Ten percent below it some block must have entered.
    PathResult pb = fit_path(ctx, d, Loss::logistic, w, below, {}, true, pilot);
    CHECK_FALSE(pb.active_sets[0].empty());
}

TEST_CASE("lambda grid spacing and endpoints") {
    Eigen::VectorXd g = lambda_grid(2.0, 5, 0.01);
    REQUIRE(g.size() == 5);
    CHECK(g[0] == 2.0);
    CHECK(g[4] == doctest::Approx(0.02).epsilon(1e-12));
    double ratio = g[1] / g[0];
    for (int i = 1; i < 5; ++i) CHECK(g[i] / g[i - 1] == doctest::Approx(ratio).epsilon(1e-12));

    // Default floor: 0.01 of lmax when n >= p, 0.05 otherwise.
    Eigen::VectorXd tall = lambda_grid(1.0, 3, 0.0, 100, 10);
    CHECK(tall[2] == doctest::Approx(0.01).epsilon(1e-12));
    Eigen::VectorXd wide = lambda_grid(1.0, 3, 0.0, 10, 100);
    CHECK(wide[2] == doctest::Approx(0.05).epsilon(1e-12));

    Eigen::VectorXd single = lambda_grid(3.0, 1, 0.01);
    REQUIRE(single.size() == 1);
    CHECK(single[0] == 3.0);
}

TEST_CASE("strong rule keeps the boundary case") {
    PenaltyWeights w;
    w.theta0 = 1.0;
    w.theta = Eigen::VectorXd::Ones(3);
    Eigen::MatrixXd g(2, 4);
    g.setZero();
    // Thresholds at lambda_k = 1, lambda_prev = 1.5: keep iff |g| >= 0.5.
    g(0, 1) = 0.5;        // exactly at the boundary: retained
    g(0, 2) = 0.4999;     // strictly inside: discarded
    g(0, 3) = 0.6;        // outside: retained
    std::vector<int> kept = strong_rule_screen(g, w, 1.0, 1.5);
    CHECK(kept == std::vector<int>{1, 3});
}

TEST_CASE("screened path equals the unscreened reference") {
    Dataset d = sim_data(SimModel::m2, 80, 10, 11);
    KernelContext ctx = build_context(d);
    PenaltyWeights w = adaptive_weights(ctx, d, Loss::logistic, 1.0);
    Eigen::VectorXd pilot = path_pilot(ctx, d, Loss::logistic, w.theta0);
    double lmax = lambda_max(ctx, d, Loss::logistic, w);
    Eigen::VectorXd grid = lambda_grid(lmax, 20, 0.01);

    PathResult screened = fit_path(ctx, d, Loss::logistic, w, grid, {}, true, pilot);
    PathResult full = fit_path(ctx, d, Loss::logistic, w, grid, {}, false, pilot);

    std::size_t discarded = 0;
    for (int k = 0; k < 20; ++k) {
        CHECK(screened.active_sets[k] == full.active_sets[k]);
        double dmax = (screened.solutions[k].coef - full.solutions[k].coef)
                          .cwiseAbs()
                          .maxCoeff();
        CHECK(dmax <= 1e-6);
        CHECK(screened.violation_counts[k] == 0);
        discarded += 10 - screened.screened_sets[k].size();
    }
    CHECK(discarded > 0);
}

TEST_CASE("path loss term never increases along the grid") {
    Dataset d = sim_data(SimModel::m1, 60, 5, 13);
    KernelContext ctx = build_context(d);
    PenaltyWeights w = adaptive_weights(ctx, d, Loss::logistic, 1.0);
    Eigen::VectorXd pilot = path_pilot(ctx, d, Loss::logistic, w.theta0);
    double lmax = lambda_max(ctx, d, Loss::logistic, w);
    Eigen::VectorXd grid = lambda_grid(lmax, 25, 0.01);
    PathResult path = fit_path(ctx, d, Loss::logistic, w, grid, {}, true, pilot);

    REQUIRE(path.loss_terms.size() == 25);
    for (int k = 1; k < 25; ++k)
        CHECK(path.loss_terms[k] <= path.loss_terms[k - 1] + 1e-8);

    // Block norms column k describes solution k.
    for (int k = 0; k < 25; ++k)
        for (Eigen::Index ell = 1; ell <= 5; ++ell)
            CHECK(path.block_norms(ell - 1, k) ==
                  doctest::Approx(path.solutions[k].coef.col(ell).norm()).epsilon(1e-12));

    // Every reported active set matches exact-zero structure.
    for (int k = 0; k < 25; ++k)
        CHECK(path.active_sets[k] == path.solutions[k].active_set());
}

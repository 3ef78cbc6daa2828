#include "gradsel/sim.hpp"

#include <chrono>
#include <cmath>

#include "gradsel/errors.hpp"
#include "gradsel/parallel.hpp"
#include "gradsel/rng.hpp"

namespace gradsel {

SimModel sim_model_from_int(int id) {
    if (id < 1 || id > 4) fail("sim", "model must be 1, 2, 3 or 4");
    return static_cast<SimModel>(id);
}

const char* sim_model_name(SimModel model) {
    switch (model) {
        case SimModel::m1: return "m1";
        case SimModel::m2: return "m2";
        case SimModel::m3: return "m3";
        case SimModel::m4: return "m4";
    }
    fail("sim", "unknown model");
}

double sim_value(SimModel model, double x1, double x2) {
    switch (model) {
        case SimModel::m1: return x1 - x2;
        case SimModel::m2: {
            double r = std::sqrt(x1 * x1 + x2 * x2);
            return r == 0.0 ? 0.0 : r * std::log(r);
        }
        case SimModel::m3: return x1 * x1 - x2 * x2 - 0.25;
        case SimModel::m4: return x1 * x2;
    }
    fail("sim", "unknown model");
}

std::vector<int> sim_truth() { return {1, 2}; }

Dataset sim_generate(SimModel model, Eigen::Index n, Eigen::Index p, std::uint64_t seed,
                     int rep, bool test_half) {
    if (n < 1) fail("sim", "n must be positive");
    if (p < 2) fail("sim", "need at least 2 variables");
    if (rep < 0) fail("sim", "rep must be nonnegative");
    std::uint64_t substream = 2 * static_cast<std::uint64_t>(rep) + (test_half ? 1 : 0);
    Philox coords(seed, Philox::kDataStream, substream);
    Philox noise(seed, Philox::kNoiseStream, substream);

    Dataset data;
    data.x.resize(n, p);
    data.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double u = coords.uniform(-2.0, 2.0);
        for (Eigen::Index j = 0; j < p; ++j)
            data.x(i, j) = 0.5 * (coords.uniform(-2.0, 2.0) + u);
        double v = sim_value(model, data.x(i, 0), data.x(i, 1)) + 0.2 * noise.normal();
        data.y[i] = v >= 0.0 ? 1.0 : -1.0;
    }
    data.feature_names.reserve(static_cast<std::size_t>(p));
    for (Eigen::Index j = 1; j <= p; ++j)
        data.feature_names.push_back("x" + std::to_string(j));
    return data;
}

BenchResult run_bench(const BenchConfig& config) {
    if (config.reps < 1) fail("sim", "reps must be positive");
    BenchResult res;
    res.config = config;
    res.rows.resize(static_cast<std::size_t>(config.reps));

    parallel_for(config.reps, config.threads, [&](int rep) {
        try {
            auto t0 = std::chrono::steady_clock::now();
            Dataset train =
                sim_generate(config.model, config.n, config.p, config.seed, rep, false);
            Dataset test =
                sim_generate(config.model, config.n_test, config.p, config.seed, rep, true);

            CvConfig cv = config.cv;
            cv.loss = config.loss;
            cv.seed = config.seed;
            cv.threads = 1;  // repetitions already run in parallel
            CvResult sel = cross_validate(train, cv);

            BenchRow& row = res.rows[static_cast<std::size_t>(rep)];
            row.rep = rep;
            row.selected = sel.selected;
            SelectionMetrics m = selection_metrics(sel.selected, sim_truth());
            row.tp = m.tp;
            row.fp = m.fp;
            row.exact = m.exact;
            row.chosen_lambda = sel.chosen_lambda;
            row.refit_ridge = sel.refit.ridge;
            row.majority = sel.refit.majority;
            Eigen::VectorXd pred = refit_predict(sel.refit, test.x);
            Eigen::Index wrong = 0;
            for (Eigen::Index i = 0; i < test.n(); ++i)
                if (pred[i] != test.y[i]) ++wrong;
            row.test_error = static_cast<double>(wrong) / static_cast<double>(test.n());
            row.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        } catch (const Error& e) {
            fail(e.module(), "repetition " + std::to_string(rep) + ": " + e.what());
        } catch (const std::exception& e) {
            fail("sim", "repetition " + std::to_string(rep) + ": " + e.what());
        }
    });

    const double r = static_cast<double>(config.reps);
    double tp = 0, fp = 0, correct = 0, err = 0;
    for (const BenchRow& row : res.rows) {
        tp += row.tp;
        fp += row.fp;
        correct += row.exact ? 1.0 : 0.0;
        err += row.test_error;
    }
    res.tp_mean = tp / r;
    res.fp_mean = fp / r;
    res.correct_fraction = correct / r;
    res.err_mean = err / r;
    res.se_valid = config.reps > 1;
    if (res.se_valid) {
        double tpv = 0, fpv = 0, errv = 0;
        for (const BenchRow& row : res.rows) {
            tpv += (row.tp - res.tp_mean) * (row.tp - res.tp_mean);
            fpv += (row.fp - res.fp_mean) * (row.fp - res.fp_mean);
            errv += (row.test_error - res.err_mean) * (row.test_error - res.err_mean);
        }
        res.tp_se = std::sqrt(tpv / (r - 1.0) / r);
        res.fp_se = std::sqrt(fpv / (r - 1.0) / r);
        res.err_se = std::sqrt(errv / (r - 1.0) / r);
    }
    return res;
}

}  // namespace gradsel

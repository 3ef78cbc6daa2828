#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gradsel/dataset.hpp"
#include "gradsel/loss.hpp"
#include "gradsel/model_selection.hpp"

namespace gradsel {

// The four benchmark decision surfaces.  All depend on the first two
// variables only, so the true selection is {1, 2}.
enum class SimModel { m1 = 1, m2 = 2, m3 = 3, m4 = 4 };

SimModel sim_model_from_int(int id);
const char* sim_model_name(SimModel model);

// Noise-free decision value at (x1, x2).
double sim_value(SimModel model, double x1, double x2);

std::vector<int> sim_truth();  // {1, 2}

// One simulated sample: x[i][j] = (w[i][j] + u[i]) / 2 with w and u uniform
// on (-2, 2), so coordinates share a within-row common factor; the label is
// the sign of f(x) + 0.2 * gaussian noise (a zero votes +1).  Coordinates
// stay raw (no standardization).  The train and test halves of a repetition
// draw from disjoint substreams of the seed, so any subset of (rep, half)
// pairs can be generated independently with identical bytes.
Dataset sim_generate(SimModel model, Eigen::Index n, Eigen::Index p, std::uint64_t seed,
                     int rep = 0, bool test_half = false);

struct BenchConfig {
    SimModel model = SimModel::m1;
    Loss loss = Loss::logistic;
    Eigen::Index n = 300;
    Eigen::Index p = 10;
    int reps = 20;
    Eigen::Index n_test = 1000;
    std::uint64_t seed = 0;
    int threads = 0;
    CvConfig cv;  // per-repetition selection settings (loss/seed filled in)
};

struct BenchRow {
    int rep = 0;
    std::vector<int> selected;
    int tp = 0;
    int fp = 0;
    bool exact = false;
    double test_error = 0.0;
    double chosen_lambda = 0.0;
    double refit_ridge = 0.0;
    bool majority = false;
    double seconds = 0.0;  // wall time; reported in the CSV only
};

struct BenchResult {
    BenchConfig config;
    std::vector<BenchRow> rows;
    double tp_mean = 0.0, fp_mean = 0.0, correct_fraction = 0.0, err_mean = 0.0;
    double tp_se = 0.0, fp_se = 0.0, err_se = 0.0;
    bool se_valid = false;  // false when reps == 1
};

// Full selection benchmark: per repetition, draw a train/test pair, run the
// cross-validated selection on the train half, refit, and score the test
// half.  Repetitions run in parallel into indexed slots, so results do not
// depend on the thread count.  A failure inside repetition r is reported as
// "repetition r: <original message>".
BenchResult run_bench(const BenchConfig& config);

}  // namespace gradsel

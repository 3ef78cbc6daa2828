#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "gradsel/errors.hpp"

namespace gradsel {

// A binary classification sample.  Labels are -1/+1.  Datasets built by the
// CSV loader are standardized (columns of x with mean 0 and population
// standard deviation 1); simulated datasets keep their raw coordinates.
// validate() checks shape and labels; pass require_standardized = true to
// also check the loader's column convention.
struct Dataset {
    Eigen::MatrixXd x;                       // n rows, p columns
    Eigen::VectorXd y;                       // entries in {-1, +1}
    std::vector<std::string> feature_names;  // optional; empty or size p

    Eigen::Index n() const { return x.rows(); }
    Eigen::Index p() const { return x.cols(); }

    void validate(bool require_standardized = false, double tol = 1e-10) const {
        if (x.rows() != y.size()) fail("dataset", "x and y have different row counts");
        if (x.rows() < 2) fail("dataset", "need at least 2 rows");
        if (!x.allFinite()) fail("dataset", "non-finite entries in x");
        if (!feature_names.empty() &&
            static_cast<Eigen::Index>(feature_names.size()) != x.cols())
            fail("dataset", "feature_names size does not match column count");
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (y[i] != 1.0 && y[i] != -1.0)
                fail("dataset", "label at row " + std::to_string(i) + " is not -1 or +1");
        }
        if (!require_standardized) return;
        const double n = static_cast<double>(x.rows());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            double mean = x.col(j).mean();
            double var = (x.col(j).array() - mean).square().sum() / n;
            if (var <= 0.0)
                fail("dataset", "column " + std::to_string(j) + " is constant");
            if (std::abs(mean) > tol)
                fail("dataset", "column " + std::to_string(j) + " is not centered");
            if (std::abs(std::sqrt(var) - 1.0) > tol)
                fail("dataset", "column " + std::to_string(j) + " is not unit scale");
        }
    }
};

// Centers and scales columns in place (population standard deviation).
// Errors on constant columns because they carry no selectable signal and
// would divide by zero.
inline void standardize(Eigen::MatrixXd& x) {
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        double mean = x.col(j).mean();
        x.col(j).array() -= mean;
        double sd = std::sqrt(x.col(j).squaredNorm() / n);
        if (sd <= 0.0) fail("dataset", "column " + std::to_string(j) + " is constant");
        x.col(j) /= sd;
    }
}

}  // namespace gradsel

#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "gradsel/dataset.hpp"

namespace gradsel {

// Precomputed sample geometry shared by the solver, the path driver and the
// weight construction.
//
// k holds the Gaussian RKHS kernel K[i][j] = exp(-|xi-xj|^2 / (2 sigma2)).
// w holds the smoothing weights W[i][j] = s^-(p+2) * exp(-|xi-xj|^2/(2 s^2)),
// with entries removed by the neighbor mask stored as exact zeros so that
// every downstream sum treats them as absent.  The coordinate differences
// delta(i,j,ell) = x[i][ell] - x[j][ell] (with delta(i,j,0) = 1) are served
// from the retained copy of x instead of an n*n*p array.
//
// Immutable after construction; safe to share across threads.
struct KernelContext {
    Eigen::MatrixXd x;
    Eigen::MatrixXd k;
    Eigen::MatrixXd w;
    double sigma2 = 0.0;
    double s = 0.0;
    bool has_mask = false;
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> mask;

    Eigen::Index n() const { return x.rows(); }
    Eigen::Index p() const { return x.cols(); }

    double delta(Eigen::Index i, Eigen::Index j, Eigen::Index ell) const {
        return ell == 0 ? 1.0 : x(i, ell - 1) - x(j, ell - 1);
    }

    bool admitted(Eigen::Index i, Eigen::Index j) const {
        return !has_mask || mask(i, j) != 0;
    }
};

// Median of the n(n-1)/2 pairwise squared Euclidean distances.  Errors when
// the sample is degenerate (fewer than two rows, or a median of zero).
double median_bandwidth(const Eigen::MatrixXd& x);

// Builds the kernel matrices for the given bandwidths.  knn = 0 disables the
// neighbor mask; otherwise each row keeps its knn nearest neighbors plus the
// diagonal and the mask is symmetrized by union.
KernelContext build_context(const Dataset& data, double sigma2, double s, int knn = 0);

// Convenience constructor using the median heuristic for both bandwidths:
// sigma2 and s^2 are both set to the median pairwise distance (not its
// square), which keeps the kernels local enough to discriminate at
// moderate dimension.  Callers wanting a different convention pass
// explicit bandwidths to the overload above.
KernelContext build_context(const Dataset& data, int knn = 0);

// RKHS norm of the ell-th partial derivative of f(u) = sum_i a[i] K(u, x_i),
// from the closed-form cross-derivative of the Gaussian kernel.  Clamped at
// zero against roundoff.
double cross_derivative_norm(const KernelContext& context, const Eigen::VectorXd& a,
                             Eigen::Index ell);

// Kernel evaluations K(xnew[i], x[j]) between new rows and the context
// sample, under the context bandwidth.  Rows of xnew must already live in
// the same coordinates as the context (same standardization).
Eigen::MatrixXd cross_kernel(const KernelContext& context, const Eigen::MatrixXd& xnew);

}  // namespace gradsel

#include "gradsel/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gradsel/errors.hpp"

namespace gradsel {

namespace {

// Integer power by squaring.  Unlike pow(), scaling the base by a power of
// two scales the result exactly (every intermediate multiply commutes with
// binary scaling), which keeps the W diagonal's bandwidth scaling law exact.
double ipow(double base, int e) {
    double r = 1.0;
    double b = base;
    while (e > 0) {
        if (e & 1) r *= b;
        b *= b;
        e >>= 1;
    }
    return r;
}

// One triangle of pairwise squared distances, mirrored, so the matrix is
// symmetric bit-for-bit.
Eigen::MatrixXd pairwise_sq_dist(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd d2(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d2(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double d = (x.row(i) - x.row(j)).squaredNorm();
            d2(i, j) = d;
            d2(j, i) = d;
        }
    }
    return d2;
}

}  // namespace

double median_bandwidth(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    if (n < 2) fail("kernel", "median bandwidth needs at least 2 rows");
    std::vector<double> d2;
    d2.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            d2.push_back((x.row(i) - x.row(j)).squaredNorm());

    std::size_t m = d2.size();
    std::size_t mid = m / 2;
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid), d2.end());
    double med = d2[mid];
    if (m % 2 == 0) {
        double lo = *std::max_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid));
        med = 0.5 * (lo + med);
    }
    if (med <= 0.0) fail("kernel", "degenerate sample: median pairwise distance is zero");
    return med;
}

KernelContext build_context(const Dataset& data, double sigma2, double s, int knn) {
    const Eigen::Index n = data.n();
    const Eigen::Index p = data.p();
    if (!(sigma2 > 0.0)) fail("kernel", "sigma2 must be positive");
    if (!(s > 0.0)) fail("kernel", "s must be positive");
    if (!data.x.allFinite()) fail("kernel", "non-finite entries in x");
    if (knn != 0 && (knn < 1 || knn > static_cast<int>(n) - 1))
        fail("kernel", "knn must lie in [1, n-1]");

    KernelContext ctx;
    ctx.x = data.x;
    ctx.sigma2 = sigma2;
    ctx.s = s;

    Eigen::MatrixXd d2 = pairwise_sq_dist(data.x);
    ctx.k = (d2.array() * (-0.5 / sigma2)).exp();
    double pref = ipow(1.0 / s, static_cast<int>(p) + 2);
    ctx.w = pref * (d2.array() * (-0.5 / (s * s))).exp();

    if (knn != 0) {
        ctx.has_mask = true;
        ctx.mask.setZero(n, n);
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
                if (d2(i, a) != d2(i, b)) return d2(i, a) < d2(i, b);
                return a < b;
            });
            ctx.mask(i, i) = 1;
            int kept = 0;
            for (Eigen::Index r = 0; r < n && kept < knn; ++r) {
                if (order[static_cast<std::size_t>(r)] == i) continue;
                ctx.mask(i, order[static_cast<std::size_t>(r)]) = 1;
                ++kept;
            }
        }
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (ctx.mask(i, j) && !ctx.mask(j, i)) ctx.mask(j, i) = 1;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (!ctx.mask(i, j)) ctx.w(i, j) = 0.0;
    }
    return ctx;
}

KernelContext build_context(const Dataset& data, int knn) {
    double med = std::sqrt(median_bandwidth(data.x));
    return build_context(data, med, std::sqrt(med), knn);
}

Eigen::MatrixXd cross_kernel(const KernelContext& context, const Eigen::MatrixXd& xnew) {
    if (xnew.cols() != context.p()) fail("kernel", "new rows have the wrong column count");
    if (!xnew.allFinite()) fail("kernel", "non-finite entries in new rows");
    const Eigen::Index m = xnew.rows();
    const Eigen::Index n = context.n();
    Eigen::MatrixXd d2(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            d2(i, j) = (xnew.row(i) - context.x.row(j)).squaredNorm();
    return (d2.array() * (-0.5 / context.sigma2)).exp();
}

double cross_derivative_norm(const KernelContext& context, const Eigen::VectorXd& a,
                             Eigen::Index ell) {
    if (ell < 1 || ell > context.p()) fail("kernel", "variable index out of range");
    if (a.size() != context.n()) fail("kernel", "coefficient vector has wrong length");
    const Eigen::VectorXd& xl = context.x.col(ell - 1);
    Eigen::VectorXd ka = context.k * a;
    Eigen::VectorXd v = a.cwiseProduct(xl);
    Eigen::VectorXd u = v.cwiseProduct(xl);
    double s2 = context.sigma2;
    double norm2 = a.dot(ka) / s2 - (2.0 * u.dot(ka) - 2.0 * v.dot(context.k * v)) / (s2 * s2);
    return std::sqrt(std::max(0.0, norm2));
}

}  // namespace gradsel

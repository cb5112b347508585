#pragma once

#include <vector>

#include "ipdc/types.hpp"

namespace ipdc {

using ConstMatrixRef = Eigen::Ref<const Matrix>;
using ConstVectorRef = Eigen::Ref<const Vector>;

// Distance variances below this are treated as degenerate (constant cloud).
inline constexpr double kDegenerateDistanceVariance = 1e-12;

// V-statistic pieces of the sample distance covariance:
//   s1 = n^-2 sum_ij |u_i-u_j| |v_i-v_j|
//   s2 = (n^-2 sum_ij |u_i-u_j|) (n^-2 sum_ij |v_i-v_j|)
//   s3 = n^-3 sum_ijk |u_i-u_k| |v_j-v_k|
//   dcov2 = s1 + s2 - 2 s3, clamped at zero.
struct DcovTerms {
    double s1 = 0.0;
    double s2 = 0.0;
    double s3 = 0.0;
    double dcov2 = 0.0;
};

// Rows are observations, columns are coordinates. O(n^2 (d_u + d_v)) using
// distance row sums for s3. Requires equal row counts and n >= 3.
DcovTerms sample_dcov2(const ConstMatrixRef& u, const ConstMatrixRef& v);

// Distance correlation in [0, 1]; 0 when either distance variance is degenerate.
double sample_dcorr(const ConstMatrixRef& u, const ConstMatrixRef& v);

Vector square_transform(const ConstVectorRef& x);

struct ResponseTransforms {
    Matrix y_tilde; // y / sqrt(q)
    Matrix y_star;  // y o y / q
};
ResponseTransforms response_transforms(const ConstMatrixRef& y);

// Marginal utility dcov2(x, y) / sqrt(dcov2(x, x)); 0 for a degenerate x.
// omega_main takes y_tilde, omega_inter squares x and takes y_star.
double omega_main(const ConstVectorRef& x, const ConstMatrixRef& y_tilde);
double omega_inter(const ConstVectorRef& x, const ConstMatrixRef& y_star);

// Literal evaluation of the three sums, O(n^3), no regrouping. Accepts n >= 2
// so that hand-worked toy cases can be cross-checked.
namespace reference {
DcovTerms sample_dcov2(const ConstMatrixRef& u, const ConstMatrixRef& v);
}

// Pairwise distances of a fixed cloud, packed upper triangle, with row sums
// cached. Lets many univariate columns be scored against the same response
// without recomputing its distances.
class DistanceCache {
public:
    explicit DistanceCache(const ConstMatrixRef& points);

    Index n() const { return n_; }
    double at(Index i, Index j) const; // |p_i - p_j|
    const Vector& row_sums() const { return row_sums_; }
    double total() const { return total_; }             // sum over all ordered pairs
    double self_dcov2() const { return self_.dcov2; }   // dcov2(points, points)

    // dcov2(column, points) and dcov2(column, column) in a single O(n^2) pass.
    struct ColumnTerms {
        DcovTerms cross;
        DcovTerms self;
    };
    ColumnTerms against(const ConstVectorRef& column) const;

private:
    Index n_;
    std::vector<double> packed_; // i < j, row-major upper triangle
    Vector row_sums_;
    double total_ = 0.0;
    DcovTerms self_;
};

// omega = cross / sqrt(self) with the degenerate convention applied.
double utility_from_terms(const DistanceCache::ColumnTerms& terms);

} // namespace ipdc

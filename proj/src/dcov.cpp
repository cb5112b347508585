#include "ipdc/dcov.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ipdc {

namespace {

void check_pair(const ConstMatrixRef& u, const ConstMatrixRef& v, Index min_n)
{
    if (u.rows() != v.rows()) {
        throw std::invalid_argument("sample size mismatch: " + std::to_string(u.rows()) + " vs " +
                                    std::to_string(v.rows()));
    }
    if (u.rows() < min_n)
        throw std::invalid_argument("need at least " + std::to_string(min_n) + " observations");
}

Matrix distance_matrix(const ConstMatrixRef& points)
{
    const Index n = points.rows();
    Matrix d = Matrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = j + 1; i < n; ++i) {
            const double dist = (points.row(i) - points.row(j)).norm();
            d(i, j) = dist;
            d(j, i) = dist;
        }
    }
    return d;
}

DcovTerms finish(double s1, double s2, double s3)
{
    DcovTerms t{s1, s2, s3, s1 + s2 - 2.0 * s3};
    if (t.dcov2 < 0.0)
        t.dcov2 = 0.0;
    return t;
}

} // namespace

DcovTerms sample_dcov2(const ConstMatrixRef& u, const ConstMatrixRef& v)
{
    check_pair(u, v, 3);
    const Index n = u.rows();
    const double nn = static_cast<double>(n);
    const Matrix a = distance_matrix(u);
    const Matrix b = distance_matrix(v);

    const Vector row_a = a.rowwise().sum();
    const Vector row_b = b.rowwise().sum();
    const double s1 = a.cwiseProduct(b).sum() / (nn * nn);
    const double s2 = (row_a.sum() / (nn * nn)) * (row_b.sum() / (nn * nn));
    const double s3 = row_a.dot(row_b) / (nn * nn * nn);
    return finish(s1, s2, s3);
}

double sample_dcorr(const ConstMatrixRef& u, const ConstMatrixRef& v)
{
    check_pair(u, v, 3);
    const double uu = sample_dcov2(u, u).dcov2;
    const double vv = sample_dcov2(v, v).dcov2;
    if (uu < kDegenerateDistanceVariance || vv < kDegenerateDistanceVariance)
        return 0.0;
    const double uv = sample_dcov2(u, v).dcov2;
    return std::sqrt(uv) / std::sqrt(std::sqrt(uu * vv));
}

Vector square_transform(const ConstVectorRef& x)
{
    return x.array().square().matrix();
}

ResponseTransforms response_transforms(const ConstMatrixRef& y)
{
    if (y.cols() < 1)
        throw std::invalid_argument("response matrix needs at least one column");
    const double q = static_cast<double>(y.cols());
    ResponseTransforms out;
    out.y_tilde = y / std::sqrt(q);
    out.y_star = out.y_tilde.cwiseProduct(out.y_tilde);
    return out;
}

double omega_main(const ConstVectorRef& x, const ConstMatrixRef& y_tilde)
{
    check_pair(x, y_tilde, 3);
    return utility_from_terms(DistanceCache(y_tilde).against(x));
}

double omega_inter(const ConstVectorRef& x, const ConstMatrixRef& y_star)
{
    check_pair(x, y_star, 3);
    const Vector squared = square_transform(x);
    return utility_from_terms(DistanceCache(y_star).against(squared));
}

double utility_from_terms(const DistanceCache::ColumnTerms& terms)
{
    if (terms.self.dcov2 < kDegenerateDistanceVariance)
        return 0.0;
    return terms.cross.dcov2 / std::sqrt(terms.self.dcov2);
}

namespace reference {

DcovTerms sample_dcov2(const ConstMatrixRef& u, const ConstMatrixRef& v)
{
    check_pair(u, v, 2);
    const Index n = u.rows();
    const double nn = static_cast<double>(n);
    auto du = [&](Index i, Index j) { return (u.row(i) - u.row(j)).norm(); };
    auto dv = [&](Index i, Index j) { return (v.row(i) - v.row(j)).norm(); };

    double sum1 = 0.0, sum_u = 0.0, sum_v = 0.0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            sum1 += du(i, j) * dv(i, j);
            sum_u += du(i, j);
            sum_v += dv(i, j);
        }
    }
    double sum3 = 0.0;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            for (Index k = 0; k < n; ++k)
                sum3 += du(i, k) * dv(j, k);

    const double s1 = sum1 / (nn * nn);
    const double s2 = (sum_u / (nn * nn)) * (sum_v / (nn * nn));
    const double s3 = sum3 / (nn * nn * nn);
    return finish(s1, s2, s3);
}

} // namespace reference

DistanceCache::DistanceCache(const ConstMatrixRef& points)
    : n_(points.rows()), packed_(static_cast<std::size_t>(n_ * (n_ - 1) / 2)),
      row_sums_(Vector::Zero(n_))
{
    const double nn = static_cast<double>(n_);
    double sum_sq = 0.0;
    std::size_t idx = 0;
    for (Index i = 0; i < n_; ++i) {
        for (Index j = i + 1; j < n_; ++j) {
            const double d = (points.row(i) - points.row(j)).norm();
            packed_[idx++] = d;
            row_sums_(i) += d;
            row_sums_(j) += d;
            sum_sq += d * d;
        }
    }
    total_ = row_sums_.sum();
    const double mean = total_ / (nn * nn);
    self_ = finish(2.0 * sum_sq / (nn * nn), mean * mean, row_sums_.squaredNorm() / (nn * nn * nn));
}

double DistanceCache::at(Index i, Index j) const
{
    if (i == j)
        return 0.0;
    if (i > j)
        std::swap(i, j);
    const auto offset = static_cast<std::size_t>(i * n_ - i * (i + 1) / 2);
    return packed_[offset + static_cast<std::size_t>(j - i - 1)];
}

DistanceCache::ColumnTerms DistanceCache::against(const ConstVectorRef& column) const
{
    if (column.size() != n_)
        throw std::invalid_argument("column length does not match cached sample size");
    const double nn = static_cast<double>(n_);
    Vector row_a = Vector::Zero(n_);
    double cross = 0.0, self = 0.0;
    const double* b = packed_.data();
    for (Index i = 0; i < n_; ++i) {
        const double xi = column(i);
        double row_i = 0.0;
        for (Index j = i + 1; j < n_; ++j) {
            const double a = std::abs(xi - column(j));
            cross += a * *b++;
            self += a * a;
            row_i += a;
            row_a(j) += a;
        }
        row_a(i) += row_i;
    }
    const double mean_a = row_a.sum() / (nn * nn);
    const double mean_b = total_ / (nn * nn);
    ColumnTerms out;
    out.cross = finish(2.0 * cross / (nn * nn), mean_a * mean_b, row_a.dot(row_sums_) / (nn * nn * nn));
    out.self = finish(2.0 * self / (nn * nn), mean_a * mean_a, row_a.squaredNorm() / (nn * nn * nn));
    return out;
}

} // namespace ipdc

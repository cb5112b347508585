#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ipdc/dcov.hpp"

using namespace ipdc;
using testing::random_normal;
using testing::rel_err;

namespace {

Matrix distances(const Matrix& a)
{
    const Index n = a.rows();
    Matrix d(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            d(i, j) = (a.row(i) - a.row(j)).norm();
    return d;
}

// Triple sums exactly as written in the definition.
DcovTerms literal_terms(const Matrix& u, const Matrix& v)
{
    const Matrix a = distances(u), b = distances(v);
    const double n = static_cast<double>(u.rows());
    double s1 = 0, sa = 0, sb = 0, s3 = 0;
    for (Index i = 0; i < u.rows(); ++i)
        for (Index j = 0; j < u.rows(); ++j) {
            s1 += a(i, j) * b(i, j);
            sa += a(i, j);
            sb += b(i, j);
            for (Index k = 0; k < u.rows(); ++k)
                s3 += a(i, k) * b(j, k);
        }
    DcovTerms t;
    t.s1 = s1 / (n * n);
    t.s2 = (sa / (n * n)) * (sb / (n * n));
    t.s3 = s3 / (n * n * n);
    t.dcov2 = std::max(0.0, t.s1 + t.s2 - 2 * t.s3);
    return t;
}

// Double-centred distance matrices, an algebraically different route.
double centered_dcov2(const Matrix& u, const Matrix& v)
{
    auto center = [](Matrix d) {
        const Vector r = d.rowwise().mean();
        const Vector c = d.colwise().mean();
        const double g = d.mean();
        for (Index i = 0; i < d.rows(); ++i)
            for (Index j = 0; j < d.cols(); ++j)
                d(i, j) = d(i, j) - r(i) - c(j) + g;
        return d;
    };
    const Matrix A = center(distances(u)), B = center(distances(v));
    return std::max(0.0, A.cwiseProduct(B).mean());
}

} // namespace

TEST_CASE("toy two-point cloud")
{
    Matrix u(2, 1), v(2, 1);
    u << 0, 1;
    v << 0, 1;
    const auto t = reference::sample_dcov2(u, v);
    CHECK(t.s1 == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t.s2 == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(t.s3 == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(t.dcov2 == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("constant cloud gives zero terms")
{
    RngStream rng(2, 0);
    const Matrix u = Matrix::Constant(8, 2, 3.0);
    const Matrix v = random_normal(8, 1, rng);
    const auto t = sample_dcov2(u, v);
    CHECK(t.s1 == 0.0);
    CHECK(t.s2 == 0.0);
    CHECK(t.s3 == 0.0);
    CHECK(t.dcov2 == 0.0);
    CHECK(sample_dcorr(u, v) == 0.0);
}

TEST_CASE("fast and literal sums agree")
{
    RngStream rng(11, 0);
    for (int inst = 0; inst < 200; ++inst) {
        const Index n = 3 + static_cast<Index>(rng.below(10));
        const Index du = 1 + static_cast<Index>(rng.below(3));
        const Index dv = 1 + static_cast<Index>(rng.below(3));
        const Matrix u = random_normal(n, du, rng);
        const Matrix v = random_normal(n, dv, rng) + u.col(0).replicate(1, dv) * 0.5;
        const auto fast = sample_dcov2(u, v);
        const auto lit = literal_terms(u, v);
        const auto ref = reference::sample_dcov2(u, v);
        CHECK(rel_err(fast.s1, lit.s1) <= 1e-12);
        CHECK(rel_err(fast.s2, lit.s2) <= 1e-12);
        CHECK(rel_err(fast.s3, lit.s3) <= 1e-12);
        CHECK(rel_err(fast.dcov2, lit.dcov2) <= 1e-12);
        CHECK(rel_err(ref.dcov2, lit.dcov2) <= 1e-12);
        CHECK(rel_err(fast.dcov2, centered_dcov2(u, v)) <= 1e-10);
        const auto swapped = sample_dcov2(v, u);
        CHECK(rel_err(swapped.dcov2, fast.dcov2) <= 1e-14);
    }
}

TEST_CASE("distance cache matches direct evaluation")
{
    RngStream rng(12, 0);
    const Matrix y = random_normal(30, 3, rng);
    const Vector x = random_normal(30, 1, rng).col(0);
    const DistanceCache cache(y);
    const auto terms = cache.against(x);
    CHECK(rel_err(terms.cross.dcov2, sample_dcov2(x, y).dcov2) <= 1e-12);
    CHECK(rel_err(terms.self.dcov2, sample_dcov2(x, x).dcov2) <= 1e-12);
    CHECK(rel_err(cache.self_dcov2(), sample_dcov2(y, y).dcov2) <= 1e-12);
    CHECK(cache.at(3, 7) == doctest::Approx((y.row(3) - y.row(7)).norm()).epsilon(1e-15));
}

TEST_CASE("distance correlation invariances")
{
    RngStream rng(13, 0);
    for (int inst = 0; inst < 100; ++inst) {
        const Index n = 5 + static_cast<Index>(rng.below(40));
        const Matrix u = random_normal(n, 1 + static_cast<Index>(rng.below(3)), rng);
        const Matrix v = random_normal(n, 1 + static_cast<Index>(rng.below(3)), rng);
        CHECK(std::abs(sample_dcorr(u, u) - 1.0) <= 1e-10);
        const double r = sample_dcorr(u, v);
        CHECK(r >= 0.0);
        CHECK(r <= 1.0 + 1e-10);
        const Matrix shifted = u.rowwise() + Eigen::RowVectorXd::Constant(u.cols(), 7.5);
        CHECK(std::abs(sample_dcorr(shifted, v) - r) <= 1e-12);
        CHECK(std::abs(sample_dcorr(u * 3.7, v) - r) <= 1e-10);
    }
}

TEST_CASE("independent normals give small distance correlation")
{
    int inside = 0;
    for (int seed = 0; seed < 100; ++seed) {
        RngStream rng(1000 + seed, 0);
        const Matrix u = random_normal(500, 1, rng);
        const Matrix v = random_normal(500, 1, rng);
        const double r = sample_dcorr(u, v);
        inside += r >= 0.0 && r <= 0.15;
    }
    CHECK(inside >= 99);
}

TEST_CASE("square transform and response transforms")
{
    Vector x(3);
    x << -1, 2, 0;
    const Vector s = square_transform(x);
    CHECK(s == Vector{{1.0, 4.0, 0.0}});
    CHECK(square_transform(s) == Vector{{1.0, 16.0, 0.0}});
    CHECK(square_transform(Vector::Zero(4)).isZero());

    Matrix y(1, 4);
    y << 2, 2, 2, 2;
    const auto t = response_transforms(y);
    CHECK(t.y_tilde.isApproxToConstant(1.0));
    CHECK(t.y_star.isApproxToConstant(1.0));
}

TEST_CASE("utilities follow the degenerate convention")
{
    RngStream rng(14, 0);
    const Matrix y = random_normal(20, 2, rng);
    CHECK(omega_main(Vector::Constant(20, 1.0), y) == 0.0);
    CHECK(omega_inter(Vector::Constant(20, 1.0), y) == 0.0);
    Vector pm(20);
    for (Index i = 0; i < 20; ++i)
        pm(i) = i % 2 ? 1.0 : -1.0;
    CHECK(omega_inter(pm, y) == 0.0);
    CHECK(omega_main(pm, y) >= 0.0);

    const Vector x = random_normal(20, 1, rng).col(0);
    const double expect = sample_dcov2(x, y).dcov2 / std::sqrt(sample_dcov2(x, x).dcov2);
    CHECK(rel_err(omega_main(x, y), expect) <= 1e-12);
    const Vector x2 = square_transform(x);
    const double expect2 = sample_dcov2(x2, y).dcov2 / std::sqrt(sample_dcov2(x2, x2).dcov2);
    CHECK(rel_err(omega_inter(x, y), expect2) <= 1e-12);
}

TEST_CASE("distance correlation grows with linear dependence")
{
    double previous = -1.0;
    for (double rho : {0.0, 0.3, 0.6, 0.9}) {
        double mean = 0;
        for (int r = 0; r < 30; ++r) {
            RngStream rng(77, static_cast<std::uint64_t>(r));
            const Matrix z = random_normal(200, 2, rng);
            const Vector v = rho * z.col(0) + std::sqrt(1 - rho * rho) * z.col(1);
            mean += sample_dcorr(z.col(0), v) / 30;
        }
        CHECK(mean > previous);
        previous = mean;
    }
}

TEST_CASE("length mismatch and tiny samples are rejected")
{
    CHECK_THROWS(sample_dcov2(Matrix::Zero(5, 1), Matrix::Zero(4, 1)));
    CHECK_THROWS(sample_dcov2(Matrix::Zero(2, 1), Matrix::Zero(2, 1)));
}

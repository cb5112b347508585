#include "ipdc/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ipdc {

namespace {

double soft(double z, double t)
{
    if (z > t)
        return z - t;
    if (z < -t)
        return z + t;
    return 0.0;
}

// One coordinate pass over `coords`; returns the largest weighted squared step.
double sweep(const Matrix& x, const Vector& col_sq, double lambda, const std::vector<Index>& coords,
             Vector& beta, Vector& resid)
{
    const double n = static_cast<double>(x.rows());
    double max_step = 0.0;
    for (Index j : coords) {
        const double c = col_sq(j);
        if (c <= 0.0)
            continue;
        const double old = beta(j);
        const double z = x.col(j).dot(resid) / n + c * old;
        const double updated = soft(z, lambda) / c;
        if (updated != old) {
            const double delta = updated - old;
            resid.noalias() -= delta * x.col(j);
            beta(j) = updated;
            max_step = std::max(max_step, c * delta * delta);
        }
    }
    return max_step;
}

} // namespace

double lasso_lambda_max(const Matrix& x, const Vector& y)
{
    if (x.cols() == 0)
        return 0.0;
    const Matrix xc = x.rowwise() - x.colwise().mean();
    const Vector yc = y.array() - y.mean();
    return (xc.transpose() * yc).cwiseAbs().maxCoeff() / static_cast<double>(x.rows());
}

LassoFit lasso_fit(const Matrix& x, const Vector& y, double lambda, const LassoOptions& opts,
                   const Vector* warm)
{
    if (x.rows() != y.size())
        throw std::invalid_argument("lasso: x and y row counts differ");
    if (!(lambda >= 0.0))
        throw std::invalid_argument("lasso: lambda must be nonnegative");

    const Index n = x.rows();
    const Index d = x.cols();
    const Vector x_mean = x.colwise().mean();
    const Matrix xc = x.rowwise() - x_mean.transpose();
    const double y_mean = y.mean();
    const Vector yc = y.array() - y_mean;
    const Vector col_sq = xc.colwise().squaredNorm() / static_cast<double>(n);

    LassoFit fit;
    fit.lambda = lambda;
    fit.beta = (warm && warm->size() == d) ? *warm : Vector::Zero(d);
    Vector resid = yc - xc * fit.beta;

    const double scale = std::max(yc.squaredNorm() / static_cast<double>(n),
                                  std::numeric_limits<double>::min());
    const double threshold = opts.tol * scale;

    std::vector<Index> all(static_cast<std::size_t>(d));
    std::iota(all.begin(), all.end(), Index{0});
    std::vector<Index> active;

    while (fit.sweeps < opts.max_sweeps) {
        ++fit.sweeps;
        const double full_step = sweep(xc, col_sq, lambda, all, fit.beta, resid);
        if (full_step <= threshold) {
            fit.converged = true;
            break;
        }
        active.clear();
        for (Index j = 0; j < d; ++j)
            if (fit.beta(j) != 0.0)
                active.push_back(j);
        while (fit.sweeps < opts.max_sweeps) {
            ++fit.sweeps;
            if (sweep(xc, col_sq, lambda, active, fit.beta, resid) <= threshold)
                break;
        }
    }
    fit.intercept = y_mean - x_mean.dot(fit.beta);
    return fit;
}

std::vector<double> geometric_grid(double top, double ratio, int count)
{
    if (!(top > 0.0) || count < 1)
        return {0.0};
    std::vector<double> grid(static_cast<std::size_t>(count));
    if (count == 1) {
        grid[0] = top;
        return grid;
    }
    const double log_ratio = std::log(ratio);
    for (int i = 0; i < count; ++i)
        grid[static_cast<std::size_t>(i)] = top * std::exp(log_ratio * i / (count - 1));
    return grid;
}

std::vector<int> assign_folds(Index n, int folds, RngStream& rng)
{
    if (folds < 2 || folds > n)
        throw std::invalid_argument("cv folds must lie in [2, n]");
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    // Fisher-Yates with the stream's own bounded draws (std::shuffle is
    // implementation-defined).
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(order[i - 1], order[j]);
    }
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < order.size(); ++i)
        fold_of[static_cast<std::size_t>(order[i])] = static_cast<int>(i % static_cast<std::size_t>(folds));
    return fold_of;
}

namespace {

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows)
{
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Index>(i)) = m.row(rows[i]);
    return out;
}

} // namespace

LassoCvResult lasso_cv(const Matrix& x, const Vector& y, std::vector<double> grid,
                       const std::vector<int>& folds, const LassoOptions& opts)
{
    if (static_cast<Index>(folds.size()) != x.rows())
        throw std::invalid_argument("lasso_cv: fold vector length must equal n");
    if (grid.empty())
        grid = geometric_grid(lasso_lambda_max(x, y));
    std::sort(grid.begin(), grid.end(), std::greater<>());

    const int k = *std::max_element(folds.begin(), folds.end()) + 1;
    LassoCvResult res;
    res.grid = grid;
    res.cv_error.assign(grid.size(), 0.0);

    for (int f = 0; f < k; ++f) {
        std::vector<Index> train, test;
        for (std::size_t i = 0; i < folds.size(); ++i)
            (folds[i] == f ? test : train).push_back(static_cast<Index>(i));
        const Matrix x_train = take_rows(x, train);
        const Matrix x_test = take_rows(x, test);
        Vector y_train(static_cast<Index>(train.size())), y_test(static_cast<Index>(test.size()));
        for (std::size_t i = 0; i < train.size(); ++i)
            y_train(static_cast<Index>(i)) = y(train[i]);
        for (std::size_t i = 0; i < test.size(); ++i)
            y_test(static_cast<Index>(i)) = y(test[i]);

        Vector warm = Vector::Zero(x.cols());
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const LassoFit fit = lasso_fit(x_train, y_train, grid[g], opts, &warm);
            warm = fit.beta;
            const Vector pred = (x_test * fit.beta).array() + fit.intercept;
            res.cv_error[g] += (y_test - pred).squaredNorm() / static_cast<double>(test.size()) / k;
        }
    }

    const auto best = std::min_element(res.cv_error.begin(), res.cv_error.end());
    const auto best_idx = static_cast<std::size_t>(best - res.cv_error.begin());
    res.lambda = grid[best_idx];

    Vector warm = Vector::Zero(x.cols());
    for (std::size_t g = 0; g <= best_idx; ++g) {
        res.fit = lasso_fit(x, y, grid[g], opts, &warm);
        warm = res.fit.beta;
    }
    return res;
}

} // namespace ipdc

#pragma once

#include <vector>

#include "ipdc/rng.hpp"
#include "ipdc/types.hpp"

namespace ipdc {

struct LassoOptions {
    double tol = 1e-10;    // max over a sweep of c_j * step_j^2, relative to var(y)
    int max_sweeps = 100000;
};

struct LassoFit {
    Vector beta;
    double intercept = 0.0;
    double lambda = 0.0;
    int sweeps = 0;
    bool converged = false;
};

// Scalar Lasso by cyclic coordinate descent with an active-set inner loop:
//   min_b (1/2n) |y - a - X b|^2 + lambda |b|_1.
// The intercept a is unpenalized (x and y are centered internally).
// `warm` seeds the coefficients when its size matches.
LassoFit lasso_fit(const Matrix& x, const Vector& y, double lambda, const LassoOptions& opts = {},
                   const Vector* warm = nullptr);

// max_j |x_j^T (y - ybar)| / n over centered columns.
double lasso_lambda_max(const Matrix& x, const Vector& y);

// `count` points geometric from `top` down to top * ratio. A nonpositive top
// yields a single zero entry.
std::vector<double> geometric_grid(double top, double ratio = 1e-3, int count = 100);

// Row assignment to `folds` folds: balanced sizes, order drawn from rng.
std::vector<int> assign_folds(Index n, int folds, RngStream& rng);

struct LassoCvResult {
    double lambda = 0.0;
    std::vector<double> grid;
    std::vector<double> cv_error; // mean held-out MSE per grid point
    LassoFit fit;                 // refit on all rows at the chosen lambda
};

// K-fold CV over a descending grid (empty grid = auto from lambda_max),
// warm-started along the path in each fold.
LassoCvResult lasso_cv(const Matrix& x, const Vector& y, std::vector<double> grid,
                       const std::vector<int>& folds, const LassoOptions& opts = {});

} // namespace ipdc

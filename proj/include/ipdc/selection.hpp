#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ipdc/dataset.hpp"
#include "ipdc/lasso.hpp"
#include "ipdc/rng.hpp"
#include "ipdc/screening.hpp"

namespace ipdc {

// Column provenance in the reduced design: a main effect X_k, or the
// interaction X_k X_l with k < l. Indices are 0-based.
struct Term {
    enum class Kind { Main, Inter };
    Kind kind = Kind::Main;
    int k = 0;
    int l = -1;

    static Term main(int j) { return {Kind::Main, j, -1}; }
    static Term inter(int a, int b) { return {Kind::Inter, a, b}; }

    // "M:j" or "I:k:l", 1-based.
    std::string label() const;
    static Term parse(const std::string& label);

    auto operator<=>(const Term&) const = default;
};

// Raw (uncentered) column for `term` evaluated on covariates x.
Vector term_column(const Matrix& x, const Term& term);

struct AugmentedDesign {
    Matrix columns;            // n x d, centered, unit sd (1/n convention) when standardized
    std::vector<Term> terms;   // d labels
    Vector center;             // subtracted means of the raw columns
    Vector scale;              // applied divisors, 1 for constant or unstandardized columns
    std::vector<char> constant; // raw column had zero spread; stored as all zero
    Matrix response;           // centered y
    Vector y_center;           // subtracted response means

    Index n() const { return columns.rows(); }
    Index d() const { return columns.cols(); }
};

AugmentedDesign build_design(const Dataset& data, const ScreenResult& screen, bool standardize);
AugmentedDesign build_design(const Dataset& data, const std::vector<Term>& terms, bool standardize);

struct GroupLassoOptions {
    double tol = 1e-8;     // relative objective decrease per sweep
    int max_sweeps = 10000;
    double kkt_tol = 1e-6;
};

struct GroupLassoFit {
    Matrix b_hat;       // d x q on the raw column scale
    Matrix b_solver;    // d x q on the solver (design) scale, for warm starts
    double lambda = 0.0;
    int sweeps = 0;
    std::vector<double> objective_trace;
    double kkt_violation = 0.0;
    bool converged = false;
};

// (1/2nq) |Y - X B|_F^2 + lambda sum_j |B_j|_2 for a design matrix X (n x d)
// and centered response Y (n x q).
double group_lasso_objective(const Matrix& x, const Matrix& y, const Matrix& b, double lambda);

// Largest row-wise KKT residual of B for the objective above.
double group_lasso_kkt(const Matrix& x, const Matrix& y, const Matrix& b, double lambda);

// max_j |X_j^T Y|_2 / (n q): the smallest lambda with B = 0 optimal.
double lambda_max(const Matrix& x, const Matrix& y);
double lambda_max(const AugmentedDesign& design);

// Block coordinate descent with exact group soft-thresholding on the raw
// matrix; coefficients are returned on x's own scale.
GroupLassoFit solve_group_lasso(const Matrix& x, const Matrix& y, double lambda,
                                const GroupLassoOptions& opts = {}, const Matrix* warm = nullptr);

// Solves on design.columns against `y` and maps coefficients back through design.scale.
GroupLassoFit group_lasso_fit(const AugmentedDesign& design, const Matrix& y, double lambda,
                              const GroupLassoOptions& opts = {}, const Matrix* warm = nullptr);

struct RowThreshold {
    Matrix b_tilde;
    std::vector<int> rows; // surviving design rows, ascending
};

// Zeroes rows with |B_j|_2 / sqrt(q) <= t.
RowThreshold threshold_rows(const Matrix& b_hat, double t);

// Default cleanup threshold: 1e-6 * max_j |B_j|_2 / sqrt(q).
double default_row_threshold(const Matrix& b_hat);

struct GroupCvResult {
    double lambda = 0.0;
    std::vector<double> grid;
    std::vector<double> cv_error;
};

// Minimizes mean held-out squared Frobenius error per entry over the grid.
// Empty grid = geometric from lambda_max down by 1e-3, 100 points.
GroupCvResult select_lambda_cv(const AugmentedDesign& design, const Matrix& y,
                               std::vector<double> grid, int cv_folds, RngStream& rng,
                               const GroupLassoOptions& opts = {});

struct RefitResult {
    std::vector<std::vector<int>> support; // per response, design rows with nonzero coef
    Matrix coef;                           // d x q, raw column scale, zero off support
    Vector intercept;                      // q, so that yhat = intercept + raw * coef
    std::vector<double> lambdas;           // chosen per response
};

// Per-response CV Lasso on the rows in `row_support`. An empty lambda_grid is
// built per response from its own lambda_max with grid_size and grid_ratio.
RefitResult lasso_refit(const AugmentedDesign& design, const Matrix& y,
                        const std::vector<int>& row_support, const std::vector<double>& lambda_grid,
                        int cv_folds, RngStream& rng, const LassoOptions& opts = {}, int grid_size = 100,
                        double grid_ratio = 1e-3);

struct SelectConfig {
    std::optional<double> lambda; // nullopt = cross-validated
    int cv_folds = 5;
    std::optional<double> threshold; // nullopt = default_row_threshold
    bool standardize = true;
    bool refit = true; // per-response Lasso after the group stage
    int grid_size = 100;
    double grid_ratio = 1e-3;
    GroupLassoOptions group;
    LassoOptions lasso;

    std::vector<std::string> problems(Index n) const;
};

struct SelectResult {
    std::vector<Term> terms;          // design labels
    GroupLassoFit fit;
    double threshold_used = 0.0;
    std::vector<int> row_support;     // estimated S as design rows
    Matrix b_tilde;
    std::vector<std::vector<int>> per_response_support;
    Matrix coef;                      // final coefficients, raw column scale
    Vector intercept;
    std::vector<double> refit_lambdas;
    std::vector<double> cv_grid;
    std::vector<double> cv_error;
};

// Design, group Lasso (fixed or CV lambda), row thresholding, per-response refit.
SelectResult run_selection(const Dataset& data, const ScreenResult& screen, const SelectConfig& cfg,
                           RngStream& rng);
SelectResult run_selection(const Dataset& data, const std::vector<Term>& terms,
                           const SelectConfig& cfg, RngStream& rng);

// n x q predictions for new covariates.
Matrix predict(const SelectResult& result, const Matrix& x);

} // namespace ipdc

#include "ipdc/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ipdc {

std::string Term::label() const
{
    if (kind == Kind::Main)
        return "M:" + std::to_string(k + 1);
    return "I:" + std::to_string(k + 1) + ":" + std::to_string(l + 1);
}

Term Term::parse(const std::string& label)
{
    std::istringstream in(label);
    std::string kind, a, b;
    std::getline(in, kind, ':');
    std::getline(in, a, ':');
    std::getline(in, b, ':');
    try {
        if (kind == "M" && !a.empty() && b.empty())
            return main(std::stoi(a) - 1);
        if (kind == "I" && !a.empty() && !b.empty()) {
            const int k = std::stoi(a) - 1;
            const int l = std::stoi(b) - 1;
            if (k < l)
                return inter(k, l);
        }
    } catch (const std::exception&) {
    }
    throw DataError("malformed term label '" + label + "'");
}

Vector term_column(const Matrix& x, const Term& term)
{
    if (term.k < 0 || term.k >= x.cols() || (term.kind == Term::Kind::Inter && (term.l < 0 || term.l >= x.cols())))
        throw DataError("term " + term.label() + " out of range for p = " + std::to_string(x.cols()));
    if (term.kind == Term::Kind::Main)
        return x.col(term.k);
    return x.col(term.k).cwiseProduct(x.col(term.l));
}

AugmentedDesign build_design(const Dataset& data, const std::vector<Term>& terms, bool standardize)
{
    const Index n = data.n();
    const Index d = static_cast<Index>(terms.size());
    AugmentedDesign out;
    out.terms = terms;
    out.columns.resize(n, d);
    out.center.resize(d);
    out.scale = Vector::Ones(d);
    out.constant.assign(static_cast<std::size_t>(d), 0);

    for (Index j = 0; j < d; ++j) {
        const Term& t = terms[static_cast<std::size_t>(j)];
        if (t.kind == Term::Kind::Inter && !(t.k < t.l))
            throw DataError("interaction term requires k < l: " + t.label());
        const Vector raw = term_column(data.x, t);
        const double mean = raw.mean();
        out.center(j) = mean;
        Vector col = raw.array() - mean;
        const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n));
        const double spread_floor = 1e-12 * std::max(1.0, raw.cwiseAbs().maxCoeff());
        if (sd <= spread_floor) {
            out.constant[static_cast<std::size_t>(j)] = 1;
            col.setZero();
        } else if (standardize) {
            out.scale(j) = sd;
            col /= sd;
        }
        out.columns.col(j) = col;
    }
    out.y_center = data.y.colwise().mean();
    out.response = data.y.rowwise() - out.y_center.transpose();
    return out;
}

AugmentedDesign build_design(const Dataset& data, const ScreenResult& screen, bool standardize)
{
    if (screen.p != data.p())
        throw DataError("screen result has p = " + std::to_string(screen.p) + " but data has p = " +
                        std::to_string(data.p()));
    std::vector<Term> terms;
    for (int j : screen.main_candidates())
        terms.push_back(Term::main(j));
    for (const auto& [k, l] : screen.i_hat)
        terms.push_back(Term::inter(k, l));
    return build_design(data, terms, standardize);
}

double group_lasso_objective(const Matrix& x, const Matrix& y, const Matrix& b, double lambda)
{
    const double nq = static_cast<double>(x.rows() * y.cols());
    return (y - x * b).squaredNorm() / (2.0 * nq) + lambda * b.rowwise().norm().sum();
}

double group_lasso_kkt(const Matrix& x, const Matrix& y, const Matrix& b, double lambda)
{
    const double nq = static_cast<double>(x.rows() * y.cols());
    const Matrix grad = x.transpose() * (y - x * b) / nq;
    double worst = 0.0;
    for (Index j = 0; j < b.rows(); ++j) {
        const double row_norm = b.row(j).norm();
        double v;
        if (row_norm == 0.0)
            v = std::max(0.0, grad.row(j).norm() - lambda);
        else
            v = (grad.row(j) - lambda * b.row(j) / row_norm).norm();
        worst = std::max(worst, v);
    }
    return worst;
}

double lambda_max(const Matrix& x, const Matrix& y)
{
    if (x.cols() == 0)
        return 0.0;
    const double nq = static_cast<double>(x.rows() * y.cols());
    return (x.transpose() * y).rowwise().norm().maxCoeff() / nq;
}

double lambda_max(const AugmentedDesign& design)
{
    return lambda_max(design.columns, design.response);
}

namespace {

// Exact minimization over row j given the current residual; returns true if the row moved.
// g and delta are caller-owned scratch rows of length q.
bool update_row(const Matrix& x, const Vector& col_sq, double penalty, Index j, Matrix& b, Matrix& resid,
                Eigen::RowVectorXd& g, Eigen::RowVectorXd& delta)
{
    const double c = col_sq(j);
    if (c <= 0.0)
        return false;
    g.noalias() = x.col(j).transpose() * resid;
    g += c * b.row(j);
    const double g_norm = g.norm();
    if (g_norm <= penalty)
        g.setZero();
    else
        g *= (1.0 - penalty / g_norm) / c;
    delta = g - b.row(j);
    if ((delta.array() == 0.0).all())
        return false;
    resid.noalias() -= x.col(j) * delta;
    b.row(j) = g;
    return true;
}

} // namespace

GroupLassoFit solve_group_lasso(const Matrix& x, const Matrix& y, double lambda,
                                const GroupLassoOptions& opts, const Matrix* warm)
{
    if (x.rows() != y.rows())
        throw std::invalid_argument("group lasso: x and y row counts differ");
    if (!(lambda >= 0.0))
        throw std::invalid_argument("group lasso: lambda must be nonnegative");

    const Index d = x.cols();
    const Index q = y.cols();
    const double nq = static_cast<double>(x.rows() * q);
    const double penalty = nq * lambda;
    const Vector col_sq = x.colwise().squaredNorm();

    GroupLassoFit fit;
    fit.lambda = lambda;
    // Zero satisfies KKT here; short-circuit so rounding in the row updates cannot leave dust.
    if (lambda >= lambda_max(x, y)) {
        fit.b_solver = Matrix::Zero(d, q);
        fit.b_hat = fit.b_solver;
        fit.objective_trace.push_back(y.squaredNorm() / (2.0 * nq));
        fit.kkt_violation = group_lasso_kkt(x, y, fit.b_hat, lambda);
        fit.converged = true;
        return fit;
    }
    Matrix b = (warm && warm->rows() == d && warm->cols() == q) ? *warm : Matrix::Zero(d, q);
    Matrix resid = y - x * b;

    auto objective = [&] {
        return resid.squaredNorm() / (2.0 * nq) + lambda * b.rowwise().norm().sum();
    };
    double current = objective();
    fit.objective_trace.push_back(current);

    std::vector<Index> active;
    Eigen::RowVectorXd g(q), delta(q);
    while (fit.sweeps < opts.max_sweeps) {
        // Full pass over every row.
        ++fit.sweeps;
        for (Index j = 0; j < d; ++j)
            update_row(x, col_sq, penalty, j, b, resid, g, delta);
        double next = objective();
        fit.objective_trace.push_back(next);
        const double full_decrease = current - next;
        current = next;

        // Passes restricted to the nonzero rows until they settle.
        active.clear();
        for (Index j = 0; j < d; ++j)
            if (b.row(j).squaredNorm() > 0.0)
                active.push_back(j);
        while (!active.empty() && fit.sweeps < opts.max_sweeps) {
            ++fit.sweeps;
            for (Index j : active)
                update_row(x, col_sq, penalty, j, b, resid, g, delta);
            next = objective();
            fit.objective_trace.push_back(next);
            const double dec = current - next;
            current = next;
            if (dec <= opts.tol * std::max(std::abs(current), std::numeric_limits<double>::min()))
                break;
        }

        if (full_decrease <= opts.tol * std::max(std::abs(current), std::numeric_limits<double>::min())) {
            fit.kkt_violation = group_lasso_kkt(x, y, b, lambda);
            if (fit.kkt_violation <= opts.kkt_tol) {
                fit.converged = true;
                break;
            }
        }
    }
    if (!fit.converged)
        fit.kkt_violation = group_lasso_kkt(x, y, b, lambda);
    fit.b_solver = b;
    fit.b_hat = std::move(b);
    return fit;
}

GroupLassoFit group_lasso_fit(const AugmentedDesign& design, const Matrix& y, double lambda,
                              const GroupLassoOptions& opts, const Matrix* warm)
{
    if (y.rows() != design.n())
        throw std::invalid_argument("group lasso: response rows do not match design");
    GroupLassoFit fit = solve_group_lasso(design.columns, y, lambda, opts, warm);
    for (Index j = 0; j < design.d(); ++j)
        fit.b_hat.row(j) /= design.scale(j);
    return fit;
}

double default_row_threshold(const Matrix& b_hat)
{
    if (b_hat.rows() == 0)
        return 0.0;
    return 1e-6 * b_hat.rowwise().norm().maxCoeff() / std::sqrt(static_cast<double>(b_hat.cols()));
}

RowThreshold threshold_rows(const Matrix& b_hat, double t)
{
    if (!(t >= 0.0))
        throw std::invalid_argument("row threshold must be nonnegative");
    const double root_q = std::sqrt(static_cast<double>(b_hat.cols()));
    RowThreshold out;
    out.b_tilde = b_hat;
    for (Index j = 0; j < b_hat.rows(); ++j) {
        if (b_hat.row(j).norm() / root_q <= t)
            out.b_tilde.row(j).setZero();
        else
            out.rows.push_back(static_cast<int>(j));
    }
    return out;
}

namespace {

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows)
{
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Index>(i)) = m.row(rows[i]);
    return out;
}

void check_folds(int folds, Index n)
{
    if (folds < 2 || folds > n)
        throw ConfigError("cv folds must lie in [2, n]; got " + std::to_string(folds));
}

} // namespace

GroupCvResult select_lambda_cv(const AugmentedDesign& design, const Matrix& y,
                               std::vector<double> grid, int cv_folds, RngStream& rng,
                               const GroupLassoOptions& opts)
{
    check_folds(cv_folds, design.n());
    if (grid.empty())
        grid = geometric_grid(lambda_max(design.columns, y));
    std::sort(grid.begin(), grid.end(), std::greater<>());

    GroupCvResult res;
    res.grid = grid;
    res.cv_error.assign(grid.size(), 0.0);
    if (grid.size() == 1) {
        res.lambda = grid.front();
        return res;
    }

    const std::vector<int> fold_of = assign_folds(design.n(), cv_folds, rng);
    for (int f = 0; f < cv_folds; ++f) {
        std::vector<Index> train, test;
        for (std::size_t i = 0; i < fold_of.size(); ++i)
            (fold_of[i] == f ? test : train).push_back(static_cast<Index>(i));
        Matrix x_train = take_rows(design.columns, train);
        Matrix y_train = take_rows(y, train);
        const Eigen::RowVectorXd x_mean = x_train.colwise().mean();
        const Eigen::RowVectorXd y_mean = y_train.colwise().mean();
        x_train.rowwise() -= x_mean;
        y_train.rowwise() -= y_mean;
        const Matrix x_test = take_rows(design.columns, test).rowwise() - x_mean;
        const Matrix y_test = take_rows(y, test).rowwise() - y_mean;
        const double cells = static_cast<double>(test.size() * static_cast<std::size_t>(y.cols()));

        Matrix warm = Matrix::Zero(design.d(), y.cols());
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const GroupLassoFit fit = solve_group_lasso(x_train, y_train, grid[g], opts, &warm);
            warm = fit.b_solver;
            res.cv_error[g] += (y_test - x_test * fit.b_solver).squaredNorm() / cells / cv_folds;
        }
    }
    const auto best = std::min_element(res.cv_error.begin(), res.cv_error.end());
    res.lambda = grid[static_cast<std::size_t>(best - res.cv_error.begin())];
    return res;
}

RefitResult lasso_refit(const AugmentedDesign& design, const Matrix& y,
                        const std::vector<int>& row_support, const std::vector<double>& lambda_grid,
                        int cv_folds, RngStream& rng, const LassoOptions& opts, int grid_size,
                        double grid_ratio)
{
    check_folds(cv_folds, design.n());
    const Index q = y.cols();
    RefitResult out;
    out.support.assign(static_cast<std::size_t>(q), {});
    out.coef = Matrix::Zero(design.d(), q);
    out.intercept = design.y_center;
    out.lambdas.assign(static_cast<std::size_t>(q), 0.0);
    if (row_support.empty())
        return out;

    Matrix x_sub(design.n(), static_cast<Index>(row_support.size()));
    for (std::size_t c = 0; c < row_support.size(); ++c)
        x_sub.col(static_cast<Index>(c)) = design.columns.col(row_support[c]);

    const std::vector<int> folds = assign_folds(design.n(), cv_folds, rng);
    for (Index r = 0; r < q; ++r) {
        std::vector<double> grid = lambda_grid;
        if (grid.empty())
            grid = geometric_grid(lasso_lambda_max(x_sub, y.col(r)), grid_ratio, grid_size);
        const LassoCvResult cv = lasso_cv(x_sub, y.col(r), grid, folds, opts);
        const auto rr = static_cast<std::size_t>(r);
        out.lambdas[rr] = cv.lambda;
        double shift = cv.fit.intercept;
        for (std::size_t c = 0; c < row_support.size(); ++c) {
            const double beta = cv.fit.beta(static_cast<Index>(c));
            if (beta == 0.0)
                continue;
            const int row = row_support[c];
            out.support[rr].push_back(row);
            const double raw = beta / design.scale(row);
            out.coef(row, r) = raw;
            shift -= raw * design.center(row);
        }
        out.intercept(r) += shift;
    }
    return out;
}

std::vector<std::string> SelectConfig::problems(Index n) const
{
    std::vector<std::string> out;
    if (lambda && !(*lambda >= 0.0))
        out.emplace_back("lambda must be nonnegative");
    if (cv_folds < 2 || cv_folds > n)
        out.emplace_back("cv folds must lie in [2, n]");
    if (threshold && !(*threshold >= 0.0))
        out.emplace_back("row threshold must be nonnegative");
    if (grid_size < 1)
        out.emplace_back("grid size must be positive");
    if (!(grid_ratio > 0.0 && grid_ratio <= 1.0))
        out.emplace_back("grid ratio must lie in (0, 1]");
    return out;
}

namespace {

SelectResult select_on_design(const AugmentedDesign& design, const SelectConfig& cfg, RngStream& rng)
{
    const auto list = cfg.problems(design.n());
    if (!list.empty()) {
        std::string msg = "invalid select configuration:";
        for (const auto& p : list)
            msg += "\n  - " + p;
        throw ConfigError(msg);
    }

    SelectResult res;
    res.terms = design.terms;
    const Index q = design.response.cols();

    double lambda = 0.0;
    if (cfg.lambda) {
        lambda = *cfg.lambda;
    } else {
        RngStream cv_rng = rng.substream(1);
        const double top = lambda_max(design);
        const auto cv = select_lambda_cv(design, design.response,
                                         geometric_grid(top, cfg.grid_ratio, cfg.grid_size),
                                         cfg.cv_folds, cv_rng, cfg.group);
        lambda = cv.lambda;
        res.cv_grid = cv.grid;
        res.cv_error = cv.cv_error;
    }
    res.fit = group_lasso_fit(design, design.response, lambda, cfg.group);
    res.threshold_used = cfg.threshold.value_or(default_row_threshold(res.fit.b_hat));
    auto kept = threshold_rows(res.fit.b_hat, res.threshold_used);
    res.row_support = std::move(kept.rows);
    res.b_tilde = std::move(kept.b_tilde);

    if (cfg.refit) {
        RngStream refit_rng = rng.substream(2);
        RefitResult refit = lasso_refit(design, design.response, res.row_support, {}, cfg.cv_folds,
                                        refit_rng, cfg.lasso, cfg.grid_size, cfg.grid_ratio);
        res.per_response_support = std::move(refit.support);
        res.coef = std::move(refit.coef);
        res.intercept = std::move(refit.intercept);
        res.refit_lambdas = std::move(refit.lambdas);
    } else {
        // Group-stage coefficients serve as the final model.
        res.coef = res.b_tilde;
        res.intercept = design.y_center;
        for (Index j = 0; j < design.d(); ++j)
            res.intercept -= design.center(j) * res.coef.row(j).transpose();
        res.per_response_support.assign(static_cast<std::size_t>(q), {});
        for (int row : res.row_support)
            for (Index r = 0; r < q; ++r)
                if (res.coef(row, r) != 0.0)
                    res.per_response_support[static_cast<std::size_t>(r)].push_back(row);
    }
    return res;
}

} // namespace

SelectResult run_selection(const Dataset& data, const ScreenResult& screen, const SelectConfig& cfg,
                           RngStream& rng)
{
    return select_on_design(build_design(data, screen, cfg.standardize), cfg, rng);
}

SelectResult run_selection(const Dataset& data, const std::vector<Term>& terms,
                           const SelectConfig& cfg, RngStream& rng)
{
    return select_on_design(build_design(data, terms, cfg.standardize), cfg, rng);
}

Matrix predict(const SelectResult& result, const Matrix& x)
{
    Matrix out = Matrix::Zero(x.rows(), result.coef.cols());
    out.rowwise() += result.intercept.transpose();
    for (std::size_t j = 0; j < result.terms.size(); ++j) {
        const auto row = result.coef.row(static_cast<Index>(j));
        if ((row.array() == 0.0).all())
            continue;
        out.noalias() += term_column(x, result.terms[j]) * row;
    }
    return out;
}

} // namespace ipdc

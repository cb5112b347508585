#include "ipdc/screening.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ipdc/dcov.hpp"

namespace ipdc {

std::vector<std::string> ScreenConfig::problems() const
{
    std::vector<std::string> out;
    if (rule == ScreenRule::Threshold) {
        if (!tau1)
            out.emplace_back("threshold rule requires tau1");
        if (!tau2 && baseline == Baseline::None)
            out.emplace_back("threshold rule requires tau2");
        if (d_main || d_inter)
            out.emplace_back("screen sizes (d) apply to the top-k rule only");
    } else {
        if (tau1 || tau2)
            out.emplace_back("thresholds (tau) apply to the threshold rule only");
    }
    if (tau1 && !(*tau1 >= 0.0))
        out.emplace_back("tau1 must be nonnegative");
    if (tau2 && !(*tau2 >= 0.0))
        out.emplace_back("tau2 must be nonnegative");
    if (d_main && *d_main < 1)
        out.emplace_back("d_main must be a positive integer");
    if (d_inter && *d_inter < 1)
        out.emplace_back("d_inter must be a positive integer");
    return out;
}

void ScreenConfig::validate() const
{
    const auto list = problems();
    if (list.empty())
        return;
    std::string msg = "invalid screen configuration:";
    for (const auto& p : list)
        msg += "\n  - " + p;
    throw ConfigError(msg);
}

int auto_screen_size(Index n)
{
    const double nn = static_cast<double>(n);
    return std::max(1, static_cast<int>(std::floor(nn / std::log(nn))));
}

namespace {

Matrix centered_columns(const Matrix& x)
{
    return x.rowwise() - x.colwise().mean();
}

struct ScoringContext {
    Matrix x;
    DistanceCache y_tilde;
    DistanceCache y_star;
    double y_tilde_scale; // sqrt(dcov2(y_tilde, y_tilde))
    double y_star_scale;

    explicit ScoringContext(const Dataset& data, const ResponseTransforms& t)
        : x(centered_columns(data.x)), y_tilde(t.y_tilde), y_star(t.y_star),
          y_tilde_scale(std::sqrt(y_tilde.self_dcov2())), y_star_scale(std::sqrt(y_star.self_dcov2()))
    {
    }
};

Utilities allocate(Index p)
{
    Utilities u;
    u.omega_main = Vector::Zero(p);
    u.omega_inter = Vector::Zero(p);
    u.dcorr2_main = Vector::Zero(p);
    u.dcorr2_inter = Vector::Zero(p);
    u.degenerate_main.assign(static_cast<std::size_t>(p), 0);
    u.degenerate_inter.assign(static_cast<std::size_t>(p), 0);
    return u;
}

void score_column(const ScoringContext& ctx, Index j, Utilities& out)
{
    const auto col = ctx.x.col(j);
    const auto main_terms = ctx.y_tilde.against(col);
    const Vector squared = square_transform(col);
    const auto inter_terms = ctx.y_star.against(squared);

    const auto k = static_cast<std::size_t>(j);
    out.degenerate_main[k] = main_terms.self.dcov2 < kDegenerateDistanceVariance;
    out.degenerate_inter[k] = inter_terms.self.dcov2 < kDegenerateDistanceVariance;
    out.omega_main(j) = utility_from_terms(main_terms);
    out.omega_inter(j) = utility_from_terms(inter_terms);
    out.dcorr2_main(j) = ctx.y_tilde_scale > 0.0 ? out.omega_main(j) / ctx.y_tilde_scale : 0.0;
    out.dcorr2_inter(j) = ctx.y_star_scale > 0.0 ? out.omega_inter(j) / ctx.y_star_scale : 0.0;
}

} // namespace

Utilities compute_utilities_serial(const Dataset& data)
{
    const ScoringContext ctx(data, response_transforms(data.y));
    Utilities out = allocate(data.p());
    for (Index j = 0; j < data.p(); ++j)
        score_column(ctx, j, out);
    return out;
}

Utilities compute_utilities(const Dataset& data)
{
    const ScoringContext ctx(data, response_transforms(data.y));
    Utilities out = allocate(data.p());
    const Index p = data.p();
#pragma omp parallel for schedule(dynamic, 8)
    for (Index j = 0; j < p; ++j)
        score_column(ctx, j, out);
    return out;
}

std::vector<int> select_by_threshold(std::span<const double> omegas, double tau,
                                     std::span<const char> excluded)
{
    std::vector<int> out;
    for (std::size_t j = 0; j < omegas.size(); ++j) {
        if (!excluded.empty() && excluded[j])
            continue;
        if (omegas[j] >= tau)
            out.push_back(static_cast<int>(j));
    }
    return out;
}

std::vector<int> select_top_k(std::span<const double> omegas, int k, std::span<const char> excluded)
{
    if (k < 1)
        throw std::invalid_argument("top-k size must be positive");
    std::vector<int> order;
    order.reserve(omegas.size());
    for (std::size_t j = 0; j < omegas.size(); ++j)
        if (excluded.empty() || !excluded[j])
            order.push_back(static_cast<int>(j));
    const auto keep = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](int a, int b) {
                          if (omegas[a] != omegas[b])
                              return omegas[a] > omegas[b];
                          return a < b;
                      });
    order.resize(keep);
    std::sort(order.begin(), order.end());
    return order;
}

std::vector<Pair> pair_closure(const std::vector<int>& vars)
{
    std::vector<Pair> out;
    out.reserve(vars.size() * (vars.size() - (vars.empty() ? 0 : 1)) / 2);
    for (std::size_t a = 0; a < vars.size(); ++a)
        for (std::size_t b = a + 1; b < vars.size(); ++b)
            out.emplace_back(std::min(vars[a], vars[b]), std::max(vars[a], vars[b]));
    std::sort(out.begin(), out.end());
    return out;
}

Vector sis_utilities(const Dataset& data, SisAggregate aggregate)
{
    const Matrix x = centered_columns(data.x);
    const Matrix y = centered_columns(data.y);
    const Vector x_norm = x.colwise().norm();
    const Vector y_norm = y.colwise().norm();
    const Matrix cross = x.transpose() * y;

    Vector out = Vector::Zero(data.p());
    for (Index j = 0; j < data.p(); ++j) {
        for (Index r = 0; r < data.q(); ++r) {
            const double denom = x_norm(j) * y_norm(r);
            const double c = denom > 0.0 ? std::abs(cross(j, r)) / denom : 0.0;
            out(j) = aggregate == SisAggregate::Max ? std::max(out(j), c) : out(j) + c;
        }
    }
    return out;
}

Vector dcsis_utilities(const Dataset& data)
{
    const Matrix x = centered_columns(data.x);
    const DistanceCache y(data.y);
    const double yy = y.self_dcov2();
    const Index p = data.p();
    Vector out = Vector::Zero(p);
#pragma omp parallel for schedule(dynamic, 8)
    for (Index j = 0; j < p; ++j) {
        const auto t = y.against(x.col(j));
        if (t.self.dcov2 < kDegenerateDistanceVariance || yy < kDegenerateDistanceVariance)
            continue;
        out(j) = std::sqrt(t.cross.dcov2) / std::sqrt(std::sqrt(t.self.dcov2 * yy));
    }
    return out;
}

namespace {

std::vector<int> apply_rule(const ScreenConfig& cfg, const Vector& scores, std::optional<double> tau,
                            int k, std::span<const char> excluded)
{
    const std::span<const double> view(scores.data(), static_cast<std::size_t>(scores.size()));
    if (cfg.rule == ScreenRule::Threshold)
        return select_by_threshold(view, *tau, excluded);
    return select_top_k(view, k, excluded);
}

std::vector<int> set_union(const std::vector<int>& a, const std::vector<int>& b)
{
    std::vector<int> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

} // namespace

ScreenResult run_screen(const Dataset& data, const ScreenConfig& cfg)
{
    cfg.validate();
    ScreenResult res;
    res.n = data.n();
    res.p = data.p();
    res.q = data.q();
    res.config = cfg;
    const int auto_d = auto_screen_size(data.n());
    res.d_main_used = cfg.d_main.value_or(auto_d);
    res.d_inter_used = cfg.d_inter.value_or(auto_d);

    if (cfg.baseline == Baseline::None) {
        const Utilities u = compute_utilities(data);
        res.omega_main = u.omega_main;
        res.omega_inter = u.omega_inter;
        res.dcorr2_main = u.dcorr2_main;
        res.dcorr2_inter = u.dcorr2_inter;
        for (Index j = 0; j < data.p(); ++j) {
            const auto k = static_cast<std::size_t>(j);
            if (u.degenerate_main[k] || u.degenerate_inter[k])
                res.degenerate.push_back(static_cast<int>(j));
        }
        res.m_hat = apply_rule(cfg, u.omega_main, cfg.tau1, res.d_main_used, u.degenerate_main);
        res.a_hat = apply_rule(cfg, u.omega_inter, cfg.tau2, res.d_inter_used, u.degenerate_inter);
        if (cfg.union_mode) {
            res.union_set = set_union(res.m_hat, res.a_hat);
            res.i_hat = pair_closure(res.union_set);
        } else {
            res.i_hat = pair_closure(res.a_hat);
        }
        return res;
    }

    // Single-ranking baselines: one retained set feeds both main effects and pairs.
    const Vector scores = cfg.baseline == Baseline::Sis2 ? sis_utilities(data, cfg.sis_aggregate)
                                                         : dcsis_utilities(data);
    std::vector<char> degenerate(static_cast<std::size_t>(data.p()), 0);
    for (int j : data.degenerate) {
        degenerate[static_cast<std::size_t>(j)] = 1;
        res.degenerate.push_back(j);
    }
    const int k = cfg.union_mode ? res.d_main_used + res.d_inter_used : res.d_main_used;
    const auto kept = apply_rule(cfg, scores, cfg.tau1, k, degenerate);
    res.omega_main = scores;
    res.m_hat = kept;
    res.a_hat = kept;
    if (cfg.union_mode)
        res.union_set = kept;
    res.i_hat = pair_closure(kept);
    return res;
}

} // namespace ipdc

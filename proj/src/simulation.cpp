#include "ipdc/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <set>

namespace ipdc {

namespace {

// One response equation: main-effect indices, interaction pairs, indicator indices.
struct Equation {
    std::vector<int> mains;
    std::vector<Pair> pairs;
    std::vector<int> indicators;
};

// Supports of Models 5 and 6 (0-based), first block of five responses.
std::vector<Equation> model5_block()
{
    return {
        {{0, 1}, {{0, 1}}, {}},
        {{0, 1}, {{0, 2}}, {}},
        {{0, 1}, {{5, 6}}, {}},
        {{0, 1}, {{7, 8}}, {}},
        {{}, {{5, 6}, {7, 8}}, {}},
    };
}

std::vector<Equation> model6_block()
{
    return {
        {{0, 1, 2, 3}, {{0, 1}, {2, 3}}, {}},
        {{0, 1, 2, 3}, {{0, 2}, {3, 4}}, {}},
        {{0, 1, 2, 3}, {{3, 4}, {8, 12}}, {}},
        {{0, 1, 2, 3}, {{8, 11}, {11, 12}}, {}},
        {{}, {{8, 11}, {8, 12}, {11, 12}}, {}},
    };
}

Index min_p_for(int model_id)
{
    switch (model_id) {
    case 1: return 2;
    case 2:
    case 3: return 3;
    case 4: return 22;
    case 5: return 9;
    case 6: return 13;
    default: return 1;
    }
}

double signed_uniform(RngStream& rng)
{
    const double sign = rng.bernoulli(0.5) ? -1.0 : 1.0;
    return sign * rng.uniform(1.0, 2.0);
}

GroundTruth empty_truth(Index p, Index q)
{
    GroundTruth t;
    t.coef_main = Matrix::Zero(p, q);
    t.intercept = Vector::Zero(q);
    return t;
}

void add_inter(GroundTruth& t, Pair pr, Index r, double coef)
{
    auto it = t.coef_inter.find(pr);
    if (it == t.coef_inter.end())
        it = t.coef_inter.emplace(pr, Vector::Zero(t.intercept.size())).first;
    it->second(r) = coef;
    t.interaction_pairs.insert(pr);
}

GroundTruth draw_truth(const SimModelSpec& spec, RngStream& rng)
{
    const Index p = spec.p;
    if (spec.model_id == 0) {
        const CustomModel& c = *spec.custom;
        GroundTruth t = empty_truth(p, c.q);
        for (const auto& [j, coef] : c.main) {
            t.coef_main.row(j) = coef.transpose();
            t.main_set.insert(j);
        }
        for (const auto& [pr, coef] : c.inter) {
            for (Index r = 0; r < c.q; ++r)
                add_inter(t, pr, r, coef(r));
        }
        t.finalize();
        return t;
    }
    if (spec.model_id <= 4) {
        GroundTruth t = empty_truth(p, 1);
        switch (spec.model_id) {
        case 1:
            t.coef_main(0, 0) = 2.0;
            t.coef_main(1, 0) = 2.0;
            t.main_set = {0, 1};
            add_inter(t, {0, 1}, 0, 1.0);
            break;
        case 2:
            t.coef_main(0, 0) = 2.0;
            t.main_set = {0};
            add_inter(t, {0, 1}, 0, 3.0);
            add_inter(t, {0, 2}, 0, 3.0);
            break;
        case 3:
            add_inter(t, {0, 1}, 0, 3.0);
            add_inter(t, {0, 2}, 0, 3.0);
            break;
        case 4:
            t.coef_indicator.emplace(11, Vector::Constant(1, 3.0));
            t.coef_main(21, 0) = 2.0;
            t.main_set = {11, 21};
            add_inter(t, {0, 1}, 0, 3.0);
            break;
        }
        t.finalize();
        return t;
    }

    const auto block = spec.model_id == 5 ? model5_block() : model6_block();
    const Index q = spec.q;
    GroundTruth t = empty_truth(p, q);
    for (Index r = 0; r < q; ++r) {
        const Equation& eq = block[static_cast<std::size_t>(r % 5)];
        for (int j : eq.mains) {
            t.coef_main(j, r) = signed_uniform(rng);
            t.main_set.insert(j);
        }
        for (const Pair& pr : eq.pairs)
            add_inter(t, pr, r, signed_uniform(rng));
    }
    t.finalize();
    return t;
}

Matrix draw_covariates(const SimModelSpec& spec, Index n, RngStream& rng)
{
    Matrix x = sample_ar1_gaussian(n, spec.p, spec.rho, rng);
    if (spec.discretize_even)
        x = discretize_even_columns(x);
    return x;
}

Matrix draw_errors(const SimModelSpec& spec, Index n, Index q, RngStream& rng)
{
    Matrix w(n, q);
    const double scale = spec.custom ? spec.custom->noise_scale : 1.0;
    for (Index i = 0; i < n; ++i) {
        for (Index r = 0; r < q; ++r) {
            const double e = spec.error_kind == ErrorKind::StudentT5 ? rng.student_t(5) : rng.normal();
            w(i, r) = scale * e;
        }
    }
    return w;
}

std::string var_name(int j)
{
    return "X" + std::to_string(j + 1);
}

std::string pair_name(const Pair& pr)
{
    return var_name(pr.first) + var_name(pr.second);
}

} // namespace

SimModelSpec SimModelSpec::for_model(int model_id)
{
    SimModelSpec s;
    s.model_id = model_id;
    switch (model_id) {
    case 5:
        s.n = 100;
        s.rho = 0.5;
        break;
    case 6:
        s.n = 100;
        s.rho = 0.8;
        break;
    default:
        break;
    }
    s.apply_model_constraints();
    return s;
}

void SimModelSpec::apply_model_constraints()
{
    switch (model_id) {
    case 1:
    case 2:
    case 3:
    case 4:
        q = 1;
        error_kind = ErrorKind::GaussianUnit;
        discretize_even = false;
        coef_rule = CoefRule::Fixed;
        break;
    case 5:
        q = 10;
        error_kind = ErrorKind::GaussianUnit;
        discretize_even = false;
        coef_rule = CoefRule::SignedUniform;
        break;
    case 6:
        q = 50;
        error_kind = ErrorKind::StudentT5;
        discretize_even = true;
        coef_rule = CoefRule::SignedUniform;
        break;
    case 0:
        if (custom)
            q = custom->q;
        coef_rule = CoefRule::Fixed;
        break;
    default:
        break;
    }
}

std::vector<std::string> SimModelSpec::problems() const
{
    std::vector<std::string> out;
    if (model_id < 0 || model_id > 6)
        out.emplace_back("unknown model id " + std::to_string(model_id));
    if (model_id == 0 && !custom)
        out.emplace_back("custom model (id 0) requires a model definition");
    if (n < 3)
        out.emplace_back("n must be at least 3");
    if (test_n < 1)
        out.emplace_back("test_n must be positive");
    if (replicates < 1)
        out.emplace_back("replicates must be positive");
    if (!(std::abs(rho) < 1.0))
        out.emplace_back("|rho| must be < 1");
    if (model_id >= 1 && model_id <= 6 && p < min_p_for(model_id))
        out.emplace_back("model " + std::to_string(model_id) + " needs p >= " +
                         std::to_string(min_p_for(model_id)));
    const bool fixed_q = model_id >= 1 && model_id <= 6;
    const Index want_q = model_id <= 4 ? 1 : (model_id == 5 ? 10 : 50);
    if (fixed_q && q != want_q)
        out.emplace_back("model " + std::to_string(model_id) + " fixes q = " + std::to_string(want_q));
    if (model_id == 6 && (error_kind != ErrorKind::StudentT5 || !discretize_even))
        out.emplace_back("model 6 fixes t5 errors and even-column discretization");
    if (model_id == 0 && custom) {
        for (const auto& [j, coef] : custom->main)
            if (j < 0 || j >= p || coef.size() != custom->q)
                out.emplace_back("custom main term out of range or wrong length");
        for (const auto& [pr, coef] : custom->inter)
            if (pr.first < 0 || pr.first >= pr.second || pr.second >= p || coef.size() != custom->q)
                out.emplace_back("custom interaction term invalid (need 1 <= k < l <= p)");
    }
    return out;
}

Matrix sample_ar1_gaussian(Index n, Index p, double rho, RngStream& rng)
{
    if (!(std::abs(rho) < 1.0))
        throw std::invalid_argument("AR(1) correlation must satisfy |rho| < 1");
    const double innovation = std::sqrt(1.0 - rho * rho);
    Matrix x(n, p);
    for (Index i = 0; i < n; ++i) {
        double prev = rng.normal();
        x(i, 0) = prev;
        for (Index j = 1; j < p; ++j) {
            prev = rho * prev + innovation * rng.normal();
            x(i, j) = prev;
        }
    }
    return x;
}

Matrix discretize_even_columns(const Matrix& x)
{
    Matrix out = x;
    for (Index j = 1; j < x.cols(); j += 2) {
        auto col = out.col(j);
        for (Index i = 0; i < x.rows(); ++i) {
            const double v = x(i, j);
            col(i) = v < 0.0 ? 0.0 : (v <= 1.5 ? 1.0 : 2.0);
        }
        col.array() -= col.mean();
    }
    return out;
}

Matrix signal(const GroundTruth& truth, const Matrix& x)
{
    Matrix y = x * truth.coef_main;
    y.rowwise() += truth.intercept.transpose();
    for (const auto& [pr, coef] : truth.coef_inter)
        y.noalias() += x.col(pr.first).cwiseProduct(x.col(pr.second)) * coef.transpose();
    for (const auto& [j, coef] : truth.coef_indicator) {
        const Vector ind = (x.col(j).array() >= 0.0).cast<double>();
        y.noalias() += ind * coef.transpose();
    }
    return y;
}

SimDraw gen_model(const SimModelSpec& spec, int replicate)
{
    const auto list = spec.problems();
    if (!list.empty())
        throw ConfigError("invalid model spec: " + list.front());

    RngStream rng(spec.master_seed, static_cast<std::uint64_t>(replicate));
    SimDraw draw;
    draw.truth = draw_truth(spec, rng);
    const Index q = draw.truth.intercept.size();

    Matrix x = draw_covariates(spec, spec.n, rng);
    Matrix y = signal(draw.truth, x) + draw_errors(spec, spec.n, q, rng);
    draw.train = validate_dataset(std::move(x), std::move(y));

    Matrix xt = draw_covariates(spec, spec.test_n, rng);
    Matrix yt = signal(draw.truth, xt) + draw_errors(spec, spec.test_n, q, rng);
    draw.test.x = std::move(xt);
    draw.test.y = std::move(yt);
    return draw;
}

ScreenFlags evaluate_screen(const ScreenResult& result, const GroundTruth& truth)
{
    const auto& mains = result.main_candidates();
    const std::set<int> main_kept(mains.begin(), mains.end());
    std::set<int> var_kept = main_kept;
    var_kept.insert(result.a_hat.begin(), result.a_hat.end());
    const std::set<Pair> pairs_kept(result.i_hat.begin(), result.i_hat.end());

    ScreenFlags flags;
    for (int j : truth.main_set) {
        const char kept = main_kept.count(j) ? 1 : 0;
        flags.main.push_back(kept);
        flags.all = flags.all && kept;
    }
    for (const Pair& pr : truth.interaction_pairs) {
        const char kept = pairs_kept.count(pr) ? 1 : 0;
        flags.inter.push_back(kept);
        flags.all = flags.all && kept;
    }
    std::set<int> vars = truth.main_set;
    vars.insert(truth.active_vars.begin(), truth.active_vars.end());
    for (int j : vars)
        flags.vars.push_back(var_kept.count(j) ? 1 : 0);
    return flags;
}

namespace {

SelectMetrics count_terms(const std::set<Term>& selected, const GroundTruth& truth)
{
    SelectMetrics m;
    for (const Term& t : selected) {
        if (t.kind == Term::Kind::Main)
            m.fp_main += truth.main_set.count(t.k) ? 0 : 1;
        else
            m.fp_int += truth.interaction_pairs.count({t.k, t.l}) ? 0 : 1;
    }
    for (int j : truth.main_set)
        m.fn_main += selected.count(Term::main(j)) ? 0 : 1;
    for (const Pair& pr : truth.interaction_pairs)
        m.fn_int += selected.count(Term::inter(pr.first, pr.second)) ? 0 : 1;
    return m;
}

double mean_squared_error(const Matrix& y, const Matrix& yhat)
{
    return (y - yhat).squaredNorm() / static_cast<double>(y.rows() * y.cols());
}

} // namespace

SelectMetrics evaluate_select(const SelectResult& select, const GroundTruth& truth, const Dataset& test)
{
    std::set<Term> selected;
    for (const auto& support : select.per_response_support)
        for (int row : support)
            selected.insert(select.terms[static_cast<std::size_t>(row)]);
    SelectMetrics m = count_terms(selected, truth);
    m.pe = mean_squared_error(test.y, predict(select, test.x));
    return m;
}

SelectMetrics oracle_metrics(const GroundTruth& truth, const Dataset& train, const Dataset& test)
{
    const Index q = train.q();
    Matrix yhat(test.n(), q);
    for (Index r = 0; r < q; ++r) {
        std::vector<Vector> train_cols{Vector::Ones(train.n())};
        std::vector<Vector> test_cols{Vector::Ones(test.n())};
        for (int j : truth.main_set) {
            if (truth.coef_indicator.count(j) && truth.coef_indicator.at(j)(r) != 0.0) {
                train_cols.emplace_back((train.x.col(j).array() >= 0.0).cast<double>());
                test_cols.emplace_back((test.x.col(j).array() >= 0.0).cast<double>());
            } else if (truth.coef_main(j, r) != 0.0) {
                train_cols.emplace_back(train.x.col(j));
                test_cols.emplace_back(test.x.col(j));
            }
        }
        for (const auto& [pr, coef] : truth.coef_inter) {
            if (coef(r) == 0.0)
                continue;
            train_cols.emplace_back(train.x.col(pr.first).cwiseProduct(train.x.col(pr.second)));
            test_cols.emplace_back(test.x.col(pr.first).cwiseProduct(test.x.col(pr.second)));
        }
        Matrix a(train.n(), static_cast<Index>(train_cols.size()));
        Matrix b(test.n(), static_cast<Index>(test_cols.size()));
        for (std::size_t c = 0; c < train_cols.size(); ++c) {
            a.col(static_cast<Index>(c)) = train_cols[c];
            b.col(static_cast<Index>(c)) = test_cols[c];
        }
        const Vector beta = a.colPivHouseholderQr().solve(train.y.col(r));
        yhat.col(r) = b * beta;
    }
    SelectMetrics m;
    m.pe = mean_squared_error(test.y, yhat);
    return m;
}

namespace {

struct MethodPlan {
    std::string screen;    // ipdc | sis2_max | sis2_sum | dcsis2 | oracle
    bool select = false;
    bool refit = false;
};

std::optional<MethodPlan> parse_method(const std::string& name)
{
    if (name == "oracle")
        return MethodPlan{"oracle", true, false};
    MethodPlan plan;
    std::string base = name;
    auto strip = [&](const std::string& suffix) {
        if (base.size() > suffix.size() && base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
            base.resize(base.size() - suffix.size());
            return true;
        }
        return false;
    };
    if (strip("_glasso_lasso") || strip("_lasso")) {
        plan.select = true;
        plan.refit = true;
    } else if (strip("_glasso")) {
        plan.select = true;
    }
    if (base == "sis2")
        base = "sis2_max";
    if (base != "ipdc" && base != "sis2_max" && base != "sis2_sum" && base != "dcsis2")
        return std::nullopt;
    plan.screen = base;
    return plan;
}

ScreenConfig screen_config_for(const std::string& screen, const SimOptions& options, Index q)
{
    ScreenConfig cfg = options.screen;
    cfg.union_mode = options.union_mode.value_or(q > 1);
    if (screen == "ipdc") {
        cfg.baseline = Baseline::None;
    } else if (screen == "dcsis2") {
        cfg.baseline = Baseline::Dcsis2;
    } else {
        cfg.baseline = Baseline::Sis2;
        cfg.sis_aggregate = screen == "sis2_sum" ? SisAggregate::Sum : SisAggregate::Max;
    }
    return cfg;
}

std::vector<MethodRecord> run_replicate(const SimModelSpec& spec, const std::vector<MethodPlan>& plans,
                                        const SimOptions& options, int replicate)
{
    const SimDraw draw = gen_model(spec, replicate);
    const Index q = draw.train.q();
    std::map<std::string, ScreenResult> screens;
    std::vector<MethodRecord> out(plans.size());
    for (std::size_t m = 0; m < plans.size(); ++m) {
        const MethodPlan& plan = plans[m];
        if (plan.screen == "oracle") {
            out[m].select = oracle_metrics(draw.truth, draw.train, draw.test);
            continue;
        }
        auto it = screens.find(plan.screen);
        if (it == screens.end())
            it = screens.emplace(plan.screen, run_screen(draw.train, screen_config_for(plan.screen, options, q))).first;
        const ScreenResult& screen = it->second;
        out[m].screen = evaluate_screen(screen, draw.truth);
        if (plan.select) {
            SelectConfig cfg = options.select;
            cfg.refit = plan.refit;
            RngStream rng = RngStream(spec.master_seed, static_cast<std::uint64_t>(replicate)).substream(1000 + m);
            const SelectResult sel = run_selection(draw.train, screen, cfg, rng);
            out[m].select = evaluate_select(sel, draw.truth, draw.test);
        }
    }
    return out;
}

Aggregate summarize(const std::vector<double>& values)
{
    Aggregate a;
    if (values.empty())
        return a;
    double sum = 0.0;
    for (double v : values)
        sum += v;
    a.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values)
            ss += (v - a.mean) * (v - a.mean);
        const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
        a.se = sd / std::sqrt(static_cast<double>(values.size()));
    }
    return a;
}

} // namespace

bool is_known_method(const std::string& name)
{
    return parse_method(name).has_value();
}

void aggregate(SimReport& report)
{
    report.summary.clear();
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
        const auto& recs = report.records[m];
        MethodSummary s;
        s.method = report.methods[m];
        const bool has_screen = !recs.empty() && recs.front().screen.has_value();
        s.has_select = !recs.empty() && recs.front().select.has_value();
        if (has_screen) {
            const std::size_t nm = report.main_targets.size();
            const std::size_t ni = report.inter_targets.size();
            s.targets = report.main_targets;
            s.targets.insert(s.targets.end(), report.inter_targets.begin(), report.inter_targets.end());
            s.targets.emplace_back("All");
            for (std::size_t t = 0; t < nm + ni + 1; ++t) {
                std::vector<double> v;
                for (const auto& r : recs) {
                    const ScreenFlags& f = *r.screen;
                    v.push_back(t < nm ? f.main[t] : (t < nm + ni ? f.inter[t - nm] : (f.all ? 1.0 : 0.0)));
                }
                s.retention.push_back(summarize(v));
            }
            s.var_targets = report.var_targets;
            for (std::size_t t = 0; t < report.var_targets.size(); ++t) {
                std::vector<double> v;
                for (const auto& r : recs)
                    v.push_back(r.screen->vars[t]);
                s.var_retention.push_back(summarize(v));
            }
        }
        if (s.has_select) {
            std::vector<double> pe, fpm, fpi, fnm, fni;
            for (const auto& r : recs) {
                pe.push_back(r.select->pe);
                fpm.push_back(r.select->fp_main);
                fpi.push_back(r.select->fp_int);
                fnm.push_back(r.select->fn_main);
                fni.push_back(r.select->fn_int);
            }
            s.pe = summarize(pe);
            s.fp_main = summarize(fpm);
            s.fp_int = summarize(fpi);
            s.fn_main = summarize(fnm);
            s.fn_int = summarize(fni);
        }
        report.summary.push_back(std::move(s));
    }
}

SimReport run_monte_carlo(const SimModelSpec& spec, const std::vector<std::string>& methods,
                          const SimOptions& options)
{
    const auto list = spec.problems();
    if (!list.empty()) {
        std::string msg = "invalid model spec:";
        for (const auto& p : list)
            msg += "\n  - " + p;
        throw ConfigError(msg);
    }
    std::vector<MethodPlan> plans;
    for (const auto& name : methods) {
        auto plan = parse_method(name);
        if (!plan)
            throw ConfigError("unknown method '" + name + "'");
        plans.push_back(*plan);
    }
    options.screen.validate();

    SimReport report;
    report.spec = spec;
    report.methods = methods;
    report.records.assign(methods.size(), std::vector<MethodRecord>(static_cast<std::size_t>(spec.replicates)));

    // Targets come from the first replicate's truth; supports are fixed per model.
    {
        SimModelSpec probe = spec;
        probe.test_n = 1;
        const GroundTruth truth = gen_model(probe, 0).truth;
        for (int j : truth.main_set)
            report.main_targets.push_back(var_name(j));
        for (const Pair& pr : truth.interaction_pairs)
            report.inter_targets.push_back(pair_name(pr));
        std::set<int> vars = truth.main_set;
        vars.insert(truth.active_vars.begin(), truth.active_vars.end());
        for (int j : vars)
            report.var_targets.push_back(var_name(j));
    }

    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(spec.replicates));
    const int reps = spec.replicates;
#pragma omp parallel for schedule(dynamic, 1) if (options.parallel)
    for (int r = 0; r < reps; ++r) {
        try {
            auto recs = run_replicate(spec, plans, options, r);
            for (std::size_t m = 0; m < recs.size(); ++m)
                report.records[m][static_cast<std::size_t>(r)] = std::move(recs[m]);
        } catch (...) {
            errors[static_cast<std::size_t>(r)] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    aggregate(report);
    return report;
}

} // namespace ipdc

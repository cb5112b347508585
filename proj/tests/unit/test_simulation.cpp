#include <doctest.h>

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "helpers.hpp"
#include "ipdc/report_io.hpp"
#include "ipdc/simulation.hpp"

using namespace ipdc;

namespace {

double sample_cov(const Matrix& x, Index a, Index b)
{
    const double ma = x.col(a).mean(), mb = x.col(b).mean();
    return ((x.col(a).array() - ma) * (x.col(b).array() - mb)).sum() / static_cast<double>(x.rows());
}

SimModelSpec small(int model)
{
    auto s = SimModelSpec::for_model(model);
    s.p = std::max<Index>(30, s.p / 20);
    s.test_n = 500;
    s.replicates = 4;
    return s;
}

} // namespace

TEST_CASE("AR(1) covariance")
{
    for (double rho : {0.1, 0.5, 0.8}) {
        RngStream rng(21, 0);
        const Matrix x = sample_ar1_gaussian(100000, 10, rho, rng);
        double worst = 0;
        for (Index j = 0; j < 10; ++j)
            for (Index k = 0; k < 10; ++k)
                worst = std::max(worst, std::abs(sample_cov(x, j, k) - std::pow(rho, std::abs(j - k))));
        CHECK(worst <= 0.015);
    }
    RngStream a(22, 0), b(22, 0), c(23, 0);
    const Matrix x0 = sample_ar1_gaussian(100000, 2, 0.0, a);
    CHECK(std::abs(sample_cov(x0, 0, 1)) <= 0.01);
    CHECK(sample_ar1_gaussian(50, 5, 0.5, b) == sample_ar1_gaussian(50, 5, 0.5, c = RngStream(22, 0)));
    CHECK_THROWS(sample_ar1_gaussian(10, 3, 1.0, a));
}

TEST_CASE("even columns are discretized and centered")
{
    Matrix x(3, 2);
    x << 5, -1, 6, 0.5, 7, 2;
    const Matrix d = discretize_even_columns(x);
    CHECK(d.col(0) == x.col(0));
    CHECK(d(0, 1) == doctest::Approx(-1));
    CHECK(d(1, 1) == doctest::Approx(0));
    CHECK(d(2, 1) == doctest::Approx(1));

    Matrix edge(3, 2);
    edge << 0, 0, 0, 1.5, 0, -0.1;
    const Matrix e = discretize_even_columns(edge);
    // Codes (1, 1, 0): mean 2/3.
    CHECK(e(0, 1) == doctest::Approx(1.0 / 3));
    CHECK(e(1, 1) == doctest::Approx(1.0 / 3));
    CHECK(e(2, 1) == doctest::Approx(-2.0 / 3));
}

TEST_CASE("model truth sets")
{
    auto t1 = gen_model(small(1), 0).truth;
    CHECK(t1.main_set == std::set<int>{0, 1});
    CHECK(t1.interaction_pairs == std::set<Pair>{{0, 1}});
    CHECK(t1.active_vars == std::set<int>{0, 1});

    auto t3 = gen_model(small(3), 0).truth;
    CHECK(t3.main_set.empty());
    CHECK(t3.interaction_pairs == std::set<Pair>{{0, 1}, {0, 2}});

    auto t4 = gen_model(small(4), 0).truth;
    CHECK(t4.main_set == std::set<int>{11, 21});
    CHECK(t4.coef_indicator.count(11) == 1);

    const auto d5 = gen_model(small(5), 0);
    CHECK(d5.train.q() == 10);
    CHECK(d5.truth.main_set == std::set<int>{0, 1});
    CHECK(d5.truth.active_vars == std::set<int>{0, 1, 2, 5, 6, 7, 8});
    CHECK(d5.truth.interaction_pairs == std::set<Pair>{{0, 1}, {0, 2}, {5, 6}, {7, 8}});
    for (const auto& [pr, coef] : d5.truth.coef_inter)
        for (Index r = 0; r < coef.size(); ++r)
            if (coef(r) != 0.0)
                CHECK((std::abs(coef(r)) >= 1.0 && std::abs(coef(r)) <= 2.0));

    const auto d6 = gen_model(small(6), 0);
    CHECK(d6.train.q() == 50);
    CHECK(d6.truth.active_vars == std::set<int>{0, 1, 2, 3, 4, 8, 11, 12});
    // Discretized even columns hold three centered levels.
    std::set<double> levels(d6.train.x.col(1).data(), d6.train.x.col(1).data() + d6.train.n());
    CHECK(levels.size() <= 3);
    CHECK(std::abs(d6.train.x.col(1).mean()) <= 1e-12);
}

TEST_CASE("model ids fix their structural fields")
{
    auto s = SimModelSpec::for_model(6);
    s.q = 3;
    s.apply_model_constraints();
    CHECK(s.q == 50);
    CHECK(s.error_kind == ErrorKind::StudentT5);
    CHECK(s.discretize_even);
    s.rho = 1.0;
    CHECK_FALSE(s.problems().empty());
    auto bad = SimModelSpec::for_model(3);
    bad.model_id = 9;
    CHECK_FALSE(bad.problems().empty());
}

TEST_CASE("replicate draws are deterministic")
{
    const auto spec = small(2);
    const auto a = gen_model(spec, 3);
    const auto b = gen_model(spec, 3);
    const auto c = gen_model(spec, 4);
    CHECK(a.train.x == b.train.x);
    CHECK(a.test.y == b.test.y);
    CHECK(a.train.x != c.train.x);
}

TEST_CASE("noiseless custom model is recovered exactly")
{
    SimModelSpec spec;
    spec.model_id = 0;
    spec.p = 6;
    spec.n = 80;
    spec.test_n = 10;
    CustomModel c;
    c.q = 1;
    c.main = {{0, Vector::Constant(1, 2.0)}, {1, Vector::Constant(1, 2.0)}};
    c.inter = {{{0, 1}, Vector::Constant(1, 1.0)}};
    c.noise_scale = 0.0;
    spec.custom = c;
    const auto d = gen_model(spec, 0);
    Matrix a(80, 3);
    a.col(0) = d.train.x.col(0);
    a.col(1) = d.train.x.col(1);
    a.col(2) = d.train.x.col(0).cwiseProduct(d.train.x.col(1));
    const Vector beta = a.colPivHouseholderQr().solve(d.train.y.col(0));
    CHECK(std::abs(beta(0) - 2) <= 1e-8);
    CHECK(std::abs(beta(1) - 2) <= 1e-8);
    CHECK(std::abs(beta(2) - 1) <= 1e-8);
    CHECK((signal(d.truth, d.train.x) - d.train.y).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("screen evaluation flags")
{
    GroundTruth t;
    t.main_set = {0};
    t.interaction_pairs = {{0, 1}, {0, 2}};
    t.finalize();

    ScreenResult r;
    r.m_hat = {0, 5};
    r.a_hat = {0, 1, 2};
    r.i_hat = {{0, 1}, {0, 2}, {1, 2}};
    auto f = evaluate_screen(r, t);
    CHECK(f.all);
    CHECK(f.main == std::vector<char>{1});
    CHECK(f.inter == std::vector<char>{1, 1});

    r.i_hat = {{0, 1}};
    f = evaluate_screen(r, t);
    CHECK(f.inter == std::vector<char>{1, 0});
    CHECK_FALSE(f.all);

    CHECK(evaluate_screen(r, GroundTruth{}).all);
}

TEST_CASE("select evaluation counts")
{
    auto spec = small(3);
    spec.test_n = 100;
    const auto d = gen_model(spec, 0);

    SelectResult empty;
    empty.terms = {Term::main(4), Term::inter(0, 1)};
    empty.per_response_support = {{}};
    empty.coef = Matrix::Zero(2, 1);
    empty.intercept = Vector::Zero(1);
    const auto m = evaluate_select(empty, d.truth, d.test);
    CHECK(m.fn_int == 2);
    CHECK(m.fn_main == 0);
    CHECK(m.fp_main == 0);
    CHECK(m.fp_int == 0);

    SelectResult exact;
    exact.terms = {Term::inter(0, 1), Term::inter(0, 2), Term::main(7)};
    exact.per_response_support = {{0, 1, 2}};
    exact.coef = Matrix::Zero(3, 1);
    exact.coef(0, 0) = 3.0;
    exact.coef(1, 0) = 3.0;
    exact.intercept = Vector::Zero(1);
    Dataset noiseless = d.test;
    noiseless.y = signal(d.truth, d.test.x);
    const auto e = evaluate_select(exact, d.truth, noiseless);
    CHECK(e.pe <= 1e-20);
    CHECK(e.fn_int == 0);
    CHECK(e.fp_main == 1);
}

TEST_CASE("oracle prediction error approaches the noise variance")
{
    auto spec = SimModelSpec::for_model(1);
    spec.p = 50;
    spec.test_n = 10000;
    double mean = 0;
    for (int r = 0; r < 10; ++r) {
        const auto d = gen_model(spec, r);
        mean += oracle_metrics(d.truth, d.train, d.test).pe / 10;
    }
    CHECK(std::abs(mean - 1.0) <= 0.05);
}

TEST_CASE("oracle error agrees across test sizes")
{
    SimOptions opts;
    auto a = SimModelSpec::for_model(2);
    a.p = 40;
    a.replicates = 20;
    a.test_n = 1000;
    auto b = a;
    b.test_n = 10000;
    const auto ra = run_monte_carlo(a, {"oracle"}, opts);
    const auto rb = run_monte_carlo(b, {"oracle"}, opts);
    const auto& sa = ra.summary[0].pe;
    const auto& sb = rb.summary[0].pe;
    CHECK(std::abs(sa.mean - sb.mean) <= 3 * std::hypot(sa.se, sb.se));
}

TEST_CASE("single replicate has zero standard errors")
{
    auto spec = small(1);
    spec.replicates = 1;
    const auto rep = run_monte_carlo(spec, {"ipdc", "oracle"}, {});
    for (const auto& s : rep.summary) {
        for (const auto& a : s.retention)
            CHECK(a.se == 0.0);
        CHECK(s.pe.se == 0.0);
    }
    CHECK(rep.summary[0].retention.back().mean == (rep.records[0][0].screen->all ? 1.0 : 0.0));
}

TEST_CASE("method names")
{
    for (const char* ok : {"ipdc", "sis2", "sis2_max", "sis2_sum", "dcsis2", "ipdc_glasso", "ipdc_glasso_lasso",
                           "dcsis2_lasso", "oracle"})
        CHECK(is_known_method(ok));
    CHECK_FALSE(is_known_method("lasso"));
    CHECK_FALSE(is_known_method("oracle_glasso"));
    CHECK_THROWS_AS(run_monte_carlo(small(1), {"nope"}, {}), ConfigError);
}

TEST_CASE("results do not depend on thread count")
{
    auto spec = small(5);
    spec.p = 12;
    spec.n = 60;
    spec.replicates = 5;
    const std::vector<std::string> methods{"ipdc", "sis2_sum", "ipdc_glasso_lasso"};
    SimOptions opts;
    opts.screen.d_main = 4;
    opts.screen.d_inter = 4;
    opts.select.grid_size = 10;
#ifdef _OPENMP
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
#endif
    const auto one = run_monte_carlo(spec, methods, opts);
#ifdef _OPENMP
    omp_set_num_threads(4);
#endif
    const auto four = run_monte_carlo(spec, methods, opts);
    opts.parallel = false;
    const auto serial = run_monte_carlo(spec, methods, opts);
#ifdef _OPENMP
    omp_set_num_threads(saved);
#endif
    CHECK(to_json(one).dump() == to_json(four).dump());
    CHECK(to_json(one).dump() == to_json(serial).dump());
    CHECK(sim_report_csv(one) == sim_report_csv(four));
}

#include "ipdc/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <system_error>

namespace ipdc {

using nlohmann::json;

namespace {

json one_based(const std::vector<int>& idx)
{
    json out = json::array();
    for (int j : idx)
        out.push_back(j + 1);
    return out;
}

std::vector<int> zero_based(const json& arr, Index p, const char* field)
{
    std::vector<int> out;
    for (const auto& v : arr) {
        const int j = v.get<int>();
        if (j < 1 || j > p)
            throw DataError(std::string("index out of range in '") + field + "'");
        out.push_back(j - 1);
    }
    return out;
}

json vec(const Vector& v)
{
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i)
        out.push_back(v(i));
    return out;
}

Vector vec_from(const json& arr)
{
    Vector v(static_cast<Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i)
        v(static_cast<Index>(i)) = arr[i].get<double>();
    return v;
}

json mat(const Matrix& m)
{
    json out = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

json labels(const std::vector<Term>& terms, const std::vector<int>& rows)
{
    json out = json::array();
    for (int r : rows)
        out.push_back(terms[static_cast<std::size_t>(r)].label());
    return out;
}

json size_spec(const std::optional<int>& d)
{
    return d ? json(*d) : json("auto");
}

json aggregate_json(const Aggregate& a)
{
    return {{"mean", a.mean}, {"se", a.se}};
}

} // namespace

json to_json(const ScreenConfig& cfg)
{
    json j;
    j["rule"] = cfg.rule == ScreenRule::TopK ? "topk" : "threshold";
    j["tau1"] = cfg.tau1 ? json(*cfg.tau1) : json(nullptr);
    j["tau2"] = cfg.tau2 ? json(*cfg.tau2) : json(nullptr);
    j["d_main"] = size_spec(cfg.d_main);
    j["d_inter"] = size_spec(cfg.d_inter);
    j["union_mode"] = cfg.union_mode;
    j["baseline"] = cfg.baseline == Baseline::None ? "none" : (cfg.baseline == Baseline::Sis2 ? "sis2" : "dcsis2");
    j["sis_aggregate"] = cfg.sis_aggregate == SisAggregate::Max ? "max" : "sum";
    return j;
}

json to_json(const ScreenResult& res)
{
    json j;
    j["version"] = kVersion;
    j["n"] = res.n;
    j["p"] = res.p;
    j["q"] = res.q;
    j["config"] = to_json(res.config);
    j["d_main_used"] = res.d_main_used;
    j["d_inter_used"] = res.d_inter_used;
    j["omega_main"] = vec(res.omega_main);
    if (res.config.baseline == Baseline::None) {
        j["omega_inter"] = vec(res.omega_inter);
        j["dcorr2_main"] = vec(res.dcorr2_main);
        j["dcorr2_inter"] = vec(res.dcorr2_inter);
    }
    j["m_hat"] = one_based(res.m_hat);
    j["a_hat"] = one_based(res.a_hat);
    json pairs = json::array();
    for (const auto& [k, l] : res.i_hat)
        pairs.push_back({k + 1, l + 1});
    j["i_hat"] = std::move(pairs);
    j["union_set"] = one_based(res.union_set);
    j["degenerate"] = one_based(res.degenerate);
    return j;
}

ScreenResult screen_result_from_json(const json& j)
{
    try {
        ScreenResult res;
        res.n = j.at("n").get<Index>();
        res.p = j.at("p").get<Index>();
        res.q = j.at("q").get<Index>();
        const json& c = j.at("config");
        res.config.rule = c.at("rule").get<std::string>() == "threshold" ? ScreenRule::Threshold : ScreenRule::TopK;
        if (!c.at("tau1").is_null())
            res.config.tau1 = c.at("tau1").get<double>();
        if (!c.at("tau2").is_null())
            res.config.tau2 = c.at("tau2").get<double>();
        if (c.at("d_main").is_number())
            res.config.d_main = c.at("d_main").get<int>();
        if (c.at("d_inter").is_number())
            res.config.d_inter = c.at("d_inter").get<int>();
        res.config.union_mode = c.at("union_mode").get<bool>();
        const auto baseline = c.at("baseline").get<std::string>();
        res.config.baseline = baseline == "sis2" ? Baseline::Sis2 : (baseline == "dcsis2" ? Baseline::Dcsis2 : Baseline::None);
        res.config.sis_aggregate = c.value("sis_aggregate", "max") == "sum" ? SisAggregate::Sum : SisAggregate::Max;
        res.d_main_used = j.value("d_main_used", 0);
        res.d_inter_used = j.value("d_inter_used", 0);
        res.omega_main = vec_from(j.at("omega_main"));
        if (j.contains("omega_inter"))
            res.omega_inter = vec_from(j.at("omega_inter"));
        res.m_hat = zero_based(j.at("m_hat"), res.p, "m_hat");
        res.a_hat = zero_based(j.at("a_hat"), res.p, "a_hat");
        res.union_set = zero_based(j.at("union_set"), res.p, "union_set");
        res.degenerate = zero_based(j.at("degenerate"), res.p, "degenerate");
        for (const auto& pr : j.at("i_hat")) {
            const int k = pr.at(0).get<int>();
            const int l = pr.at(1).get<int>();
            if (k < 1 || l > res.p || !(k < l))
                throw DataError("invalid pair in 'i_hat'");
            res.i_hat.emplace_back(k - 1, l - 1);
        }
        return res;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed screen result: ") + e.what());
    }
}

json to_json(const SelectResult& res)
{
    std::vector<int> all(res.terms.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = static_cast<int>(i);

    json j;
    j["version"] = kVersion;
    j["lambda"] = res.fit.lambda;
    j["terms"] = labels(res.terms, all);
    j["row_support"] = labels(res.terms, res.row_support);
    j["threshold_used"] = res.threshold_used;
    j["b_tilde"] = mat(res.b_tilde);
    json per = json::array();
    for (const auto& s : res.per_response_support)
        per.push_back(labels(res.terms, s));
    j["per_response_support"] = std::move(per);
    json coef = json::array();
    for (Index r = 0; r < res.coef.cols(); ++r) {
        json c = json::object();
        for (Index row = 0; row < res.coef.rows(); ++row)
            if (res.coef(row, r) != 0.0)
                c[res.terms[static_cast<std::size_t>(row)].label()] = res.coef(row, r);
        coef.push_back(std::move(c));
    }
    j["per_response_coef"] = std::move(coef);
    j["intercept"] = vec(res.intercept);
    j["refit_lambdas"] = res.refit_lambdas;
    j["diagnostics"] = {
        {"sweeps", res.fit.sweeps},
        {"converged", res.fit.converged},
        {"kkt_violation", res.fit.kkt_violation},
        {"objective_final", res.fit.objective_trace.empty() ? 0.0 : res.fit.objective_trace.back()},
        {"objective_trace_length", res.fit.objective_trace.size()},
        {"cv_grid", res.cv_grid},
        {"cv_error", res.cv_error},
    };
    return j;
}

json to_json(const SimModelSpec& spec)
{
    return {
        {"model", spec.model_id},
        {"n", spec.n},
        {"p", spec.p},
        {"rho", spec.rho},
        {"q", spec.q},
        {"errors", spec.error_kind == ErrorKind::StudentT5 ? "t5" : "gaussian"},
        {"discretize_even", spec.discretize_even},
        {"coef_rule", spec.coef_rule == CoefRule::Fixed ? "fixed" : "signed_uniform"},
        {"test_n", spec.test_n},
        {"replicates", spec.replicates},
        {"seed", spec.master_seed},
    };
}

json to_json(const SimReport& report)
{
    json j;
    j["version"] = kVersion;
    j["spec"] = to_json(report.spec);
    j["methods"] = report.methods;
    j["main_targets"] = report.main_targets;
    j["inter_targets"] = report.inter_targets;
    j["var_targets"] = report.var_targets;

    json summary = json::array();
    for (const auto& s : report.summary) {
        json m;
        m["method"] = s.method;
        if (!s.targets.empty()) {
            json ret = json::object();
            for (std::size_t t = 0; t < s.targets.size(); ++t)
                ret[s.targets[t]] = aggregate_json(s.retention[t]);
            m["retention"] = std::move(ret);
            json vars = json::object();
            for (std::size_t t = 0; t < s.var_targets.size(); ++t)
                vars[s.var_targets[t]] = aggregate_json(s.var_retention[t]);
            m["variable_retention"] = std::move(vars);
        }
        if (s.has_select) {
            m["pe"] = aggregate_json(s.pe);
            m["fp_main"] = aggregate_json(s.fp_main);
            m["fp_int"] = aggregate_json(s.fp_int);
            m["fn_main"] = aggregate_json(s.fn_main);
            m["fn_int"] = aggregate_json(s.fn_int);
        }
        summary.push_back(std::move(m));
    }
    j["summary"] = std::move(summary);

    json reps = json::array();
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
        json per = json::array();
        for (const auto& rec : report.records[m]) {
            json r = json::object();
            if (rec.screen) {
                r["retained_main"] = rec.screen->main;
                r["retained_inter"] = rec.screen->inter;
                r["retained_vars"] = rec.screen->vars;
                r["retained_all"] = rec.screen->all;
            }
            if (rec.select) {
                r["pe"] = rec.select->pe;
                r["fp_main"] = rec.select->fp_main;
                r["fp_int"] = rec.select->fp_int;
                r["fn_main"] = rec.select->fn_main;
                r["fn_int"] = rec.select->fn_int;
            }
            per.push_back(std::move(r));
        }
        reps.push_back({{"method", report.methods[m]}, {"replicates", std::move(per)}});
    }
    j["records"] = std::move(reps);
    return j;
}

namespace {

std::string fixed(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

} // namespace

std::string sim_report_csv(const SimReport& report)
{
    std::vector<std::string> retention_cols = report.main_targets;
    retention_cols.insert(retention_cols.end(), report.inter_targets.begin(), report.inter_targets.end());
    retention_cols.emplace_back("All");

    std::string out = "method";
    for (const auto& t : retention_cols)
        out += "," + t + "," + t + "_se";
    for (const auto& t : report.var_targets)
        out += ",var_" + t + ",var_" + t + "_se";
    for (const char* m : {"PE", "FP_main", "FP_int", "FN_main", "FN_int"})
        out += std::string(",") + m + "," + m + "_se";
    out += '\n';

    for (const auto& s : report.summary) {
        out += s.method;
        for (std::size_t t = 0; t < retention_cols.size(); ++t)
            out += s.targets.empty() ? ",," : "," + fixed(s.retention[t].mean) + "," + fixed(s.retention[t].se);
        for (std::size_t t = 0; t < report.var_targets.size(); ++t)
            out += s.var_targets.empty() ? ",," : "," + fixed(s.var_retention[t].mean) + "," + fixed(s.var_retention[t].se);
        for (const Aggregate* a : {&s.pe, &s.fp_main, &s.fp_int, &s.fn_main, &s.fn_int})
            out += s.has_select ? "," + fixed(a->mean) + "," + fixed(a->se) : ",,";
        out += '\n';
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw DataError("cannot write '" + tmp.string() + "'");
        out << contents;
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw DataError("write failure on '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw DataError("cannot move output into place at '" + path.string() + "'");
    }
}

} // namespace ipdc

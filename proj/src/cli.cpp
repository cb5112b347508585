#include "ipdc/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ipdc/dataset.hpp"
#include "ipdc/dcov.hpp"
#include "ipdc/report_io.hpp"
#include "ipdc/screening.hpp"
#include "ipdc/selection.hpp"
#include "ipdc/simulation.hpp"

namespace ipdc::cli {

namespace {

using nlohmann::json;

struct Options {
    std::string threads = "";
    bool header = false;

    // dcorr
    std::string u_path, v_path;

    // screen / select inputs
    std::string x_path, y_path, screen_path, out_path, csv_path;

    // screen
    std::string rule = "topk";
    std::string d = "auto";
    std::optional<int> d_main, d_inter;
    std::optional<double> tau1, tau2;
    bool union_mode = false;
    std::string baseline = "none";
    std::string sis_agg = "max";

    // select
    std::string lambda = "cv";
    int folds = 5;
    std::uint64_t seed = 20240601;
    std::optional<double> threshold;
    bool no_standardize = false;
    bool no_refit = false;

    // simulate
    int model = 1;
    std::optional<Index> n, p, test_n;
    std::optional<double> rho;
    std::optional<int> reps;
    std::string methods = "ipdc";
    std::string union_flag = "auto";
    bool sequential = false;
};

void apply_threads(const std::string& flag)
{
    std::string value = flag;
    if (value.empty()) {
        if (const char* env = std::getenv("IPDC_THREADS"))
            value = env;
    }
    if (value.empty() || value == "auto")
        value = std::to_string(std::max(1u, std::thread::hardware_concurrency()));
    int threads = 0;
    try {
        threads = std::stoi(value);
    } catch (const std::exception&) {
        throw ConfigError("--threads must be a positive integer or 'auto'");
    }
    if (threads < 1)
        throw ConfigError("--threads must be a positive integer or 'auto'");
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
}

Dataset load_dataset(const Options& o)
{
    CsvMatrix x = load_csv(o.x_path, o.header);
    CsvMatrix y = load_csv(o.y_path, o.header);
    return validate_dataset(std::move(x.values), std::move(y.values), std::move(x.names), std::move(y.names));
}

std::optional<int> parse_size(const std::string& s, const char* flag)
{
    if (s == "auto")
        return std::nullopt;
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used == s.size())
            return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string(flag) + " must be 'auto' or an integer");
}

ScreenConfig screen_config(const Options& o, std::vector<std::string>& problems)
{
    ScreenConfig cfg;
    if (o.rule == "topk")
        cfg.rule = ScreenRule::TopK;
    else if (o.rule == "threshold")
        cfg.rule = ScreenRule::Threshold;
    else
        problems.push_back("--rule must be topk or threshold");

    std::optional<int> both;
    try {
        both = parse_size(o.d, "--d");
    } catch (const ConfigError& e) {
        problems.emplace_back(e.what());
    }
    if (cfg.rule == ScreenRule::TopK) {
        cfg.d_main = o.d_main ? o.d_main : both;
        cfg.d_inter = o.d_inter ? o.d_inter : both;
    } else if (o.d != "auto" || o.d_main || o.d_inter) {
        problems.emplace_back("--d/--d-main/--d-inter apply to the top-k rule only");
    }
    cfg.tau1 = o.tau1;
    cfg.tau2 = o.tau2;
    cfg.union_mode = o.union_mode;
    if (o.baseline == "none")
        cfg.baseline = Baseline::None;
    else if (o.baseline == "sis2")
        cfg.baseline = Baseline::Sis2;
    else if (o.baseline == "dcsis2")
        cfg.baseline = Baseline::Dcsis2;
    else
        problems.push_back("--baseline must be none, sis2 or dcsis2");
    if (o.sis_agg == "max")
        cfg.sis_aggregate = SisAggregate::Max;
    else if (o.sis_agg == "sum")
        cfg.sis_aggregate = SisAggregate::Sum;
    else
        problems.push_back("--sis-agg must be max or sum");
    for (auto& p : cfg.problems())
        problems.push_back(std::move(p));
    return cfg;
}

SelectConfig select_config(const Options& o, std::vector<std::string>& problems)
{
    SelectConfig cfg;
    if (o.lambda != "cv") {
        try {
            std::size_t used = 0;
            cfg.lambda = std::stod(o.lambda, &used);
            if (used != o.lambda.size())
                throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            problems.push_back("--lambda must be 'cv' or a nonnegative number");
        }
    }
    cfg.cv_folds = o.folds;
    cfg.threshold = o.threshold;
    cfg.standardize = !o.no_standardize;
    cfg.refit = !o.no_refit;
    return cfg;
}

void fail_on(const std::vector<std::string>& problems)
{
    if (problems.empty())
        return;
    std::string msg = "configuration errors:";
    for (const auto& p : problems)
        msg += "\n  - " + p;
    throw ConfigError(msg);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty())
            out.push_back(item);
    return out;
}

int cmd_dcorr(const Options& o, std::ostream& out)
{
    const CsvMatrix u = load_csv(o.u_path, o.header);
    const CsvMatrix v = load_csv(o.v_path, o.header);
    if (u.values.rows() != v.values.rows())
        throw DataError("row count mismatch between the two files");
    if (u.values.rows() < 2)
        throw DataError("need at least 2 observations");
    // Two-row inputs are allowed for hand-checkable toy cases via the literal sums.
    const DcovTerms t = u.values.rows() < 3 ? reference::sample_dcov2(u.values, v.values)
                                           : sample_dcov2(u.values, v.values);
    double dcorr = 0.0;
    if (u.values.rows() >= 3) {
        dcorr = sample_dcorr(u.values, v.values);
    } else {
        const double uu = reference::sample_dcov2(u.values, u.values).dcov2;
        const double vv = reference::sample_dcov2(v.values, v.values).dcov2;
        if (uu >= kDegenerateDistanceVariance && vv >= kDegenerateDistanceVariance)
            dcorr = std::sqrt(t.dcov2) / std::sqrt(std::sqrt(uu * vv));
    }
    json j = {{"dcov2", t.dcov2}, {"dcorr", dcorr}, {"s1", t.s1}, {"s2", t.s2}, {"s3", t.s3}};
    out << j.dump() << '\n';
    return kOk;
}

int cmd_screen(const Options& o, std::ostream& out)
{
    std::vector<std::string> problems;
    const ScreenConfig cfg = screen_config(o, problems);
    fail_on(problems);
    apply_threads(o.threads);
    const Dataset data = load_dataset(o);
    const ScreenResult res = run_screen(data, cfg);
    const std::string text = to_json(res).dump(1) + "\n";
    if (o.out_path.empty())
        out << text;
    else
        write_file_atomic(o.out_path, text);
    return kOk;
}

int cmd_select(const Options& o, std::ostream& out)
{
    std::vector<std::string> problems;
    const SelectConfig cfg = select_config(o, problems);
    fail_on(problems);
    apply_threads(o.threads);

    std::ifstream in(o.screen_path);
    if (!in)
        throw DataError("cannot open screen result '" + o.screen_path + "'");
    json sj;
    try {
        in >> sj;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed screen result: ") + e.what());
    }
    const ScreenResult screen = screen_result_from_json(sj);
    const Dataset data = load_dataset(o);
    if (screen.p != data.p())
        throw DataError("screen result has p = " + std::to_string(screen.p) + ", data has p = " +
                        std::to_string(data.p()));
    fail_on(cfg.problems(data.n()));

    RngStream rng(o.seed, 0);
    const SelectResult res = run_selection(data, screen, cfg, rng);
    json j = to_json(res);
    j["seed"] = o.seed;
    const std::string text = j.dump(1) + "\n";
    if (o.out_path.empty())
        out << text;
    else
        write_file_atomic(o.out_path, text);
    return res.fit.converged ? kOk : kNotConverged;
}

int cmd_simulate(const Options& o, std::ostream& out)
{
    std::vector<std::string> problems;
    if (o.model < 1 || o.model > 6)
        problems.push_back("--model must be 1..6");
    SimModelSpec spec = SimModelSpec::for_model(std::clamp(o.model, 1, 6));
    if (o.n)
        spec.n = *o.n;
    if (o.p)
        spec.p = *o.p;
    if (o.rho)
        spec.rho = *o.rho;
    if (o.reps)
        spec.replicates = *o.reps;
    if (o.test_n)
        spec.test_n = *o.test_n;
    spec.master_seed = o.seed;
    for (auto& p : spec.problems())
        problems.push_back(std::move(p));

    const auto methods = split_list(o.methods);
    if (methods.empty())
        problems.emplace_back("--methods needs at least one method");
    for (const auto& m : methods)
        if (!is_known_method(m))
            problems.push_back("unknown method '" + m + "'");

    SimOptions sim;
    Options screen_opts = o;
    screen_opts.baseline = "none";
    screen_opts.union_mode = false;
    sim.screen = screen_config(screen_opts, problems);
    if (o.union_flag == "on")
        sim.union_mode = true;
    else if (o.union_flag == "off")
        sim.union_mode = false;
    else if (o.union_flag != "auto")
        problems.push_back("--union-mode must be auto, on or off");
    sim.select = select_config(o, problems);
    for (auto& p : sim.select.problems(spec.n))
        problems.push_back(std::move(p));
    sim.parallel = !o.sequential;
    fail_on(problems);
    apply_threads(o.threads);

    const SimReport report = run_monte_carlo(spec, methods, sim);
    const std::string text = to_json(report).dump(1) + "\n";
    const std::string table = sim_report_csv(report);
    if (o.out_path.empty()) {
        out << table;
        return kOk;
    }
    std::string csv_path = o.csv_path;
    if (csv_path.empty())
        csv_path = std::filesystem::path(o.out_path).replace_extension(".csv").string();
    write_file_atomic(o.out_path, text);
    write_file_atomic(csv_path, table);
    return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Interaction screening and selection for multi-response linear models", "ipdc"};
    app.require_subcommand(1);
    Options o;

    auto* dcorr = app.add_subcommand("dcorr", "Sample distance covariance/correlation of two CSV clouds");
    dcorr->add_option("u", o.u_path, "First CSV (rows = observations)")->required();
    dcorr->add_option("v", o.v_path, "Second CSV")->required();
    dcorr->add_flag("--header", o.header, "Files carry a header row");

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--threads", o.threads, "Worker threads or 'auto' (fallback: IPDC_THREADS)");
    };
    auto add_data = [&](CLI::App* cmd) {
        cmd->add_option("--x", o.x_path, "Covariate CSV (n x p)")->required();
        cmd->add_option("--y", o.y_path, "Response CSV (n x q)")->required();
        cmd->add_flag("--header", o.header, "CSV files carry a header row");
    };
    auto add_screen = [&](CLI::App* cmd) {
        cmd->add_option("--rule", o.rule, "topk or threshold");
        cmd->add_option("--d", o.d, "Screen size for both rankings: auto = floor(n/log n)");
        cmd->add_option("--d-main", o.d_main, "Main-effect screen size");
        cmd->add_option("--d-inter", o.d_inter, "Interaction-variable screen size");
        cmd->add_option("--tau1", o.tau1, "Main-effect utility threshold");
        cmd->add_option("--tau2", o.tau2, "Interaction-variable utility threshold");
    };
    auto add_select = [&](CLI::App* cmd) {
        cmd->add_option("--lambda", o.lambda, "'cv' or a fixed penalty");
        cmd->add_option("--folds", o.folds, "Cross-validation folds");
        cmd->add_option("--seed", o.seed, "Master seed");
        cmd->add_option("--threshold", o.threshold, "Row threshold on |B_j|/sqrt(q)");
        cmd->add_flag("--no-standardize", o.no_standardize, "Keep design columns on their raw scale");
        cmd->add_flag("--no-refit", o.no_refit, "Skip the per-response Lasso refit");
    };

    auto* screen = app.add_subcommand("screen", "Rank main effects and interaction variables");
    add_data(screen);
    add_screen(screen);
    add_common(screen);
    screen->add_flag("--union", o.union_mode, "Multi-response union of both screened sets");
    screen->add_option("--baseline", o.baseline, "none, sis2 or dcsis2");
    screen->add_option("--sis-agg", o.sis_agg, "SIS2 multi-response aggregation: max or sum");
    screen->add_option("--out", o.out_path, "Output JSON (stdout when omitted)");

    auto* select = app.add_subcommand("select", "Group Lasso selection on a screened design");
    add_data(select);
    add_select(select);
    add_common(select);
    select->add_option("--screen", o.screen_path, "Screen result JSON")->required();
    select->add_option("--out", o.out_path, "Output JSON (stdout when omitted)");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo screening/selection study");
    simulate->add_option("--model", o.model, "Model 1..6");
    simulate->add_option("--n", o.n, "Training sample size");
    simulate->add_option("--p", o.p, "Number of covariates");
    simulate->add_option("--rho", o.rho, "AR(1) covariate correlation");
    simulate->add_option("--reps", o.reps, "Replicates");
    simulate->add_option("--test-n", o.test_n, "Test sample size for PE");
    simulate->add_option("--methods", o.methods, "Comma-separated method list");
    simulate->add_option("--union-mode", o.union_flag, "auto (q > 1), on or off");
    simulate->add_option("--out", o.out_path, "Report JSON; the CSV table goes next to it");
    simulate->add_option("--csv", o.csv_path, "CSV table path");
    simulate->add_flag("--sequential", o.sequential, "Run replicates one after another");
    add_screen(simulate);
    add_select(simulate);
    add_common(simulate);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        if (dcorr->parsed())
            return cmd_dcorr(o, out);
        if (screen->parsed())
            return cmd_screen(o, out);
        if (select->parsed())
            return cmd_select(o, out);
        return cmd_simulate(o, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::invalid_argument& e) {
        err << "data error: " << e.what() << '\n';
        return kDataError;
    }
}

} // namespace ipdc::cli

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ipdc/dataset.hpp"
#include "ipdc/rng.hpp"
#include "ipdc/screening.hpp"
#include "ipdc/selection.hpp"

namespace ipdc {

enum class ErrorKind { GaussianUnit, StudentT5 };
enum class CoefRule { Fixed, SignedUniform };

// A user-defined sparse interaction model (model_id 0).
struct CustomModel {
    Index q = 1;
    std::vector<std::pair<int, Vector>> main;  // (j, q-vector)
    std::vector<std::pair<Pair, Vector>> inter; // ((k, l), q-vector)
    double noise_scale = 1.0;                  // 0 gives noiseless responses
};

struct SimModelSpec {
    int model_id = 1; // 1..6, or 0 for custom
    Index n = 200;
    Index p = 500;
    double rho = 0.5;
    Index q = 1;
    ErrorKind error_kind = ErrorKind::GaussianUnit;
    bool discretize_even = false;
    CoefRule coef_rule = CoefRule::Fixed;
    Index test_n = 10000;
    int replicates = 50;
    std::uint64_t master_seed = 20240601;
    std::optional<CustomModel> custom;

    // Paper-style defaults for a model id (q, errors, discretization, coefficient rule).
    static SimModelSpec for_model(int model_id);
    // Restores the fields a model id fixes; call after overriding n/p/rho/etc.
    void apply_model_constraints();
    std::vector<std::string> problems() const;
};

// n x p rows i.i.d. N(0, Sigma) with Sigma_jk = rho^|j-k| via the AR(1)
// recursion X_1 = Z_1, X_j = rho X_{j-1} + sqrt(1 - rho^2) Z_j.
Matrix sample_ar1_gaussian(Index n, Index p, double rho, RngStream& rng);

// Even-numbered (1-based) columns to codes {x < 0: 0, 0 <= x <= 1.5: 1, x > 1.5: 2},
// then centered by the column mean; odd columns untouched.
Matrix discretize_even_columns(const Matrix& x);

struct SimDraw {
    Dataset train;
    Dataset test;
    GroundTruth truth;
};

// Replicate r draws everything from RngStream(master_seed, r).
SimDraw gen_model(const SimModelSpec& spec, int replicate);

// Responses implied by `truth` for covariates x, before noise.
Matrix signal(const GroundTruth& truth, const Matrix& x);

struct ScreenFlags {
    std::vector<char> main;  // per element of truth.main_set, in order
    std::vector<char> inter; // per element of truth.interaction_pairs
    std::vector<char> vars;  // per element of main_set U active_vars
    bool all = true;         // every main and every interaction retained
};

ScreenFlags evaluate_screen(const ScreenResult& result, const GroundTruth& truth);

struct SelectMetrics {
    double pe = 0.0;
    int fp_main = 0;
    int fp_int = 0;
    int fn_main = 0;
    int fn_int = 0;
};

// Selected terms: union over responses of the per-response supports.
SelectMetrics evaluate_select(const SelectResult& select, const GroundTruth& truth,
                              const Dataset& test);

// Least squares with intercept per response on its true support (indicator
// terms enter as indicators), scored on the test set.
SelectMetrics oracle_metrics(const GroundTruth& truth, const Dataset& train, const Dataset& test);

struct MethodRecord {
    std::optional<ScreenFlags> screen;
    std::optional<SelectMetrics> select;
};

struct Aggregate {
    double mean = 0.0;
    double se = 0.0; // sample sd / sqrt(replicates)
};

struct MethodSummary {
    std::string method;
    std::vector<std::string> targets; // "X1", "X1X2", ... then "All"
    std::vector<Aggregate> retention;  // aligned with targets
    std::vector<std::string> var_targets;
    std::vector<Aggregate> var_retention;
    bool has_select = false;
    Aggregate pe, fp_main, fp_int, fn_main, fn_int;
};

struct SimReport {
    SimModelSpec spec;
    std::vector<std::string> methods;
    // records[m][r] for method m, replicate r.
    std::vector<std::vector<MethodRecord>> records;
    std::vector<MethodSummary> summary;
    std::vector<std::string> main_targets, inter_targets, var_targets;
};

struct SimOptions {
    ScreenConfig screen;             // d sizes and rule for IPDC and baselines
    std::optional<bool> union_mode;  // nullopt: union mode iff q > 1
    SelectConfig select;
    bool parallel = true;            // replicates across OpenMP threads
};

// Known methods: ipdc, sis2, sis2_max, sis2_sum, dcsis2, any of
// these suffixed _glasso or _glasso_lasso (alias _lasso), and oracle.
bool is_known_method(const std::string& name);

SimReport run_monte_carlo(const SimModelSpec& spec, const std::vector<std::string>& methods,
                          const SimOptions& options);

// Recomputes SimReport::summary from records.
void aggregate(SimReport& report);

} // namespace ipdc

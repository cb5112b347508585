#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ipdc/dataset.hpp"

namespace ipdc {

enum class ScreenRule { TopK, Threshold };
enum class Baseline { None, Sis2, Dcsis2 };
// How SIS2 folds per-response |corr| into one score when q > 1.
enum class SisAggregate { Max, Sum };

struct ScreenConfig {
    ScreenRule rule = ScreenRule::TopK;
    std::optional<double> tau1;
    std::optional<double> tau2;
    std::optional<int> d_main;  // nullopt = auto, floor(n / ln n)
    std::optional<int> d_inter; // nullopt = auto
    bool union_mode = false;
    Baseline baseline = Baseline::None;
    SisAggregate sis_aggregate = SisAggregate::Max;

    // Every inconsistency found, empty when the config is usable.
    std::vector<std::string> problems() const;
    void validate() const; // throws ConfigError listing all problems
};

// floor(n / ln n), natural log.
int auto_screen_size(Index n);

struct Utilities {
    Vector omega_main;  // omega_j against y / sqrt(q)
    Vector omega_inter; // omega*_k of the squared column against y o y / q
    Vector dcorr2_main; // omega_main / sqrt(dcov2(y_tilde, y_tilde))
    Vector dcorr2_inter;
    std::vector<char> degenerate_main;  // constant column
    std::vector<char> degenerate_inter; // constant squared column
};

// Columns are centered before scoring. Parallel over columns (OpenMP);
// results do not depend on the thread count.
Utilities compute_utilities(const Dataset& data);
// Single-threaded reference with the same arithmetic, kept for tests and benchmarks.
Utilities compute_utilities_serial(const Dataset& data);

// Ascending indices with omega >= tau. Indices flagged in `excluded` never qualify.
std::vector<int> select_by_threshold(std::span<const double> omegas, double tau,
                                     std::span<const char> excluded = {});
// Indices of the k largest values, ties to the lower index, returned ascending.
std::vector<int> select_top_k(std::span<const double> omegas, int k,
                              std::span<const char> excluded = {});

// All pairs (k, l), k < l, drawn from an ascending index set.
std::vector<Pair> pair_closure(const std::vector<int>& vars);

struct ScreenResult {
    Index n = 0;
    Index p = 0;
    Index q = 0;
    ScreenConfig config;
    Vector omega_main;  // baseline utility when a baseline is active
    Vector omega_inter; // empty for single-ranking baselines
    Vector dcorr2_main;
    Vector dcorr2_inter;
    std::vector<int> m_hat;
    std::vector<int> a_hat;
    std::vector<Pair> i_hat;
    std::vector<int> union_set; // union mode only
    std::vector<int> degenerate;
    int d_main_used = 0;
    int d_inter_used = 0;

    // Variables feeding main-effect columns of the reduced design.
    const std::vector<int>& main_candidates() const
    {
        return config.union_mode ? union_set : m_hat;
    }
};

// |Pearson corr(X_j, Y_r)| folded over responses.
Vector sis_utilities(const Dataset& data, SisAggregate aggregate);
// dcorr(X_j, y) on untransformed variables.
Vector dcsis_utilities(const Dataset& data);

ScreenResult run_screen(const Dataset& data, const ScreenConfig& cfg);

} // namespace ipdc

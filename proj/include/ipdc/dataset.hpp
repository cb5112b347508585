#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ipdc/types.hpp"

namespace ipdc {

// Observation-major sample: x is n x p covariates, y is n x q responses.
// Immutable after validate_dataset(); share it read-only across workers.
struct Dataset {
    Matrix x;
    Matrix y;
    std::vector<std::string> feature_names;  // empty when absent
    std::vector<std::string> response_names; // empty when absent
    std::vector<int> degenerate;             // zero-variance columns of x, ascending

    Index n() const { return x.rows(); }
    Index p() const { return x.cols(); }
    Index q() const { return y.cols(); }
};

// Row counts must match, n >= 3, every entry finite. Constant covariate
// columns are kept and listed in Dataset::degenerate.
Dataset validate_dataset(Matrix x, Matrix y,
                         std::vector<std::string> feature_names = {},
                         std::vector<std::string> response_names = {});

// Population model behind a simulated dataset. All indices 0-based.
struct GroundTruth {
    std::set<int> main_set;            // M
    std::set<Pair> interaction_pairs;  // I, each with first < second
    std::set<int> active_vars;         // A = indices appearing in I
    Matrix coef_main;                  // p x q, rows of B_x
    std::map<Pair, Vector> coef_inter; // rows of B_z
    // Terms 3 * 1(X_j >= 0) that generate the response but are listed in
    // main_set as linear effects (misspecified working model).
    std::map<int, Vector> coef_indicator;
    Vector intercept;                  // q

    // Recomputes active_vars from interaction_pairs and checks pair ordering.
    void finalize();
};

struct CsvMatrix {
    Matrix values;
    std::vector<std::string> names; // empty when the file has no header
};

CsvMatrix load_csv(const std::filesystem::path& path, bool has_header);
CsvMatrix parse_csv(const std::string& text, bool has_header);

// Shortest round-trip decimal formatting, so parse_csv(to_csv(m)) == m bit for bit.
std::string to_csv(const Matrix& values, const std::vector<std::string>& names = {});

} // namespace ipdc

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ipdc/screening.hpp"
#include "ipdc/selection.hpp"
#include "ipdc/simulation.hpp"

namespace ipdc {

inline constexpr const char* kVersion = "1.0.0";

// All user-facing indices are 1-based.
nlohmann::json to_json(const ScreenConfig& cfg);
nlohmann::json to_json(const ScreenResult& res);
ScreenResult screen_result_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SelectResult& res);
nlohmann::json to_json(const SimModelSpec& spec);
nlohmann::json to_json(const SimReport& report);

// Methods x targets table: retention means and standard errors, then PE/FP/FN.
std::string sim_report_csv(const SimReport& report);

// Writes via a sibling temporary file and rename, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace ipdc

#pragma once

#include <metaloc/scenario.hpp>

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <string_view>
#include <vector>

namespace metaloc {

/// {"id", "grid": {"rows", "cols", "spacing_cm"}, "samples": [{"rp", "pos_cm": [x, y], "amp": [90 numbers]}]}
nlohmann::json scenario_to_json(const Scenario& scenario);
/// Throws DataError naming the offending field path (e.g. "samples[3].amp").
Scenario scenario_from_json(const nlohmann::json& doc);

void save_scenario(const Scenario& scenario, const std::filesystem::path& path);
/// Throws DataError with line/column for syntax errors and field paths for schema errors.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(std::string_view text, std::string_view origin = "<memory>");

/// Every `*.json` scenario in `dir`, ordered by the numeric suffix of `scenario_<k>.json`
/// (then by name). Throws DataError if the directory is missing or holds no scenarios.
std::vector<Scenario> load_scenario_dir(const std::filesystem::path& dir);

} // namespace metaloc

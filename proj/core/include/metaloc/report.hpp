#pragma once

#include <metaloc/experiments.hpp>

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <span>

namespace metaloc::eval {

/// algorithm,shots,repeat,scenario,error_cm
void write_errors_csv(const std::filesystem::path& path, const EvalReport& report);
/// algorithm,shots,threshold_cm,fraction
void write_cdf_csv(const std::filesystem::path& path, const EvalReport& report);
/// i,j,mean_error_cm
void write_matrix_csv(const std::filesystem::path& path, const CrossScenarioMatrix& matrix);
/// algorithm,task_count,mean_error_cm
void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepPoint> sweep);
/// iteration,task_id,query_loss
void write_trace_csv(const std::filesystem::path& path, std::span<const meta::TraceRow> trace);

nlohmann::json summary_json(const EvalReport& report);
nlohmann::json to_json(const CrossScenarioMatrix& matrix);
nlohmann::json to_json(std::span<const SweepPoint> sweep);

/// Shortest round-trip decimal form.
std::string format_number(double value);

/// Writes `doc` pretty-printed; throws DataError when the file cannot be written.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

} // namespace metaloc::eval

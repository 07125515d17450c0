#include <metaloc/errors.hpp>
#include <metaloc/report.hpp>

#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>

namespace metaloc::eval {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw DataError("failed writing " + path.string());
}

// Double quotes a CSV field when it contains a separator or quote.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

std::string format_number(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

void write_errors_csv(const std::filesystem::path& path, const EvalReport& report) {
    auto out = open_for_write(path);
    out << "algorithm,shots,repeat,scenario,error_cm\n";
    for (const auto& r : report.errors) {
        out << meta::to_string(r.algorithm) << ',' << r.shots << ',' << r.repeat << ',' << csv_field(r.scenario) << ','
            << format_number(r.error_cm) << '\n';
    }
    finish(out, path);
}

void write_cdf_csv(const std::filesystem::path& path, const EvalReport& report) {
    auto out = open_for_write(path);
    out << "algorithm,shots,threshold_cm,fraction\n";
    for (auto algo : report.algorithms)
        for (auto k : report.shot_counts) {
            const auto errs = report.errors_for(algo, k);
            if (errs.empty()) continue;
            const auto thresholds = cdf_thresholds(errs);
            const auto fractions = cdf(errs, thresholds);
            for (std::size_t i = 0; i < thresholds.size(); ++i) {
                out << meta::to_string(algo) << ',' << k << ',' << format_number(thresholds[i]) << ','
                    << format_number(fractions[i]) << '\n';
            }
        }
    finish(out, path);
}

void write_matrix_csv(const std::filesystem::path& path, const CrossScenarioMatrix& matrix) {
    auto out = open_for_write(path);
    out << "i,j,mean_error_cm\n";
    for (std::size_t i = 0; i < matrix.mean_error.size(); ++i)
        for (std::size_t j = 0; j < matrix.mean_error[i].size(); ++j)
            out << i << ',' << j << ',' << format_number(matrix.mean_error[i][j]) << '\n';
    finish(out, path);
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepPoint> sweep) {
    auto out = open_for_write(path);
    out << "algorithm,task_count,mean_error_cm\n";
    for (const auto& p : sweep) {
        out << meta::to_string(p.algorithm) << ',' << p.task_count << ',' << format_number(p.mean_error_cm) << '\n';
    }
    finish(out, path);
}

void write_trace_csv(const std::filesystem::path& path, std::span<const meta::TraceRow> trace) {
    auto out = open_for_write(path);
    out << "iteration,task_id,query_loss\n";
    for (const auto& row : trace) {
        out << row.iteration << ',' << csv_field(row.task_id) << ',' << format_number(row.query_loss) << '\n';
    }
    finish(out, path);
}

nlohmann::json summary_json(const EvalReport& report) {
    nlohmann::json cells = nlohmann::json::array();
    for (auto algo : report.algorithms)
        for (auto k : report.shot_counts) {
            const auto errs = report.errors_for(algo, k);
            if (errs.empty()) continue;
            const auto s = summarize(errs);
            const auto thresholds = cdf_thresholds(errs);
            const auto fractions = cdf(errs, thresholds);
            const double below50 = cdf(errs, std::vector<double>{50.0})[0];
            cells.push_back({{"algorithm", meta::to_string(algo)},
                             {"shots", k},
                             {"count", s.count},
                             {"mean_cm", s.mean},
                             {"median_cm", s.median},
                             {"q1_cm", s.q1},
                             {"q3_cm", s.q3},
                             {"min_cm", s.min},
                             {"max_cm", s.max},
                             {"fraction_below_50cm", below50},
                             {"cdf", {{"threshold_cm", thresholds}, {"fraction", fractions}}}});
        }
    nlohmann::json partitions = nlohmann::json::array();
    for (const auto& p : report.partitions) {
        partitions.push_back({{"seed", p.seed}, {"train", p.train}, {"test", p.test}});
    }
    nlohmann::json importance = nlohmann::json::array();
    for (const auto& iv : report.importance) importance.push_back(meta::to_json(iv));
    return {{"cells", std::move(cells)}, {"partitions", std::move(partitions)}, {"importance", std::move(importance)}};
}

nlohmann::json to_json(const CrossScenarioMatrix& m) {
    return {{"ids", m.ids},
            {"finetune_shots", m.finetune_shots},
            {"mean_error_cm", m.mean_error},
            {"diagonal_mean_cm", m.diagonal_mean()},
            {"off_diagonal_mean_cm", m.off_diagonal_mean()}};
}

nlohmann::json to_json(std::span<const SweepPoint> sweep) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : sweep) {
        out.push_back({{"algorithm", meta::to_string(p.algorithm)},
                       {"task_count", p.task_count},
                       {"mean_error_cm", p.mean_error_cm},
                       {"errors_per_repeat", p.error_count_per_repeat}});
    }
    return out;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    auto out = open_for_write(path);
    out << doc.dump(2) << '\n';
    finish(out, path);
}

} // namespace metaloc::eval

#include <metaloc/errors.hpp>
#include <metaloc/scenario_io.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace metaloc {

using nlohmann::json;

namespace {

const json& field(const json& obj, const char* name, const std::string& path) {
    if (!obj.is_object()) throw DataError("scenario: " + (path.empty() ? std::string("document") : path) + " is not an object");
    auto it = obj.find(name);
    if (it == obj.end()) {
        throw DataError("scenario: missing field \"" + (path.empty() ? std::string(name) : path + "." + name) + "\"");
    }
    return *it;
}

template <typename T>
T get_as(const json& value, const std::string& path) {
    try {
        return value.get<T>();
    } catch (const json::exception&) {
        throw DataError("scenario: field \"" + path + "\" has the wrong type");
    }
}

std::string line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::size_t file_rank(const std::filesystem::path& p) {
    const std::string stem = p.stem().string();
    const auto pos = stem.find_last_of('_');
    if (pos == std::string::npos || pos + 1 == stem.size()) return SIZE_MAX;
    const std::string digits = stem.substr(pos + 1);
    if (!std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); })) return SIZE_MAX;
    return std::stoull(digits);
}

} // namespace

json scenario_to_json(const Scenario& scenario) {
    json samples = json::array();
    for (const auto& s : scenario.samples) {
        samples.push_back({{"rp", s.rp}, {"pos_cm", {s.pos[0], s.pos[1]}}, {"amp", s.amp}});
    }
    return {{"id", scenario.id},
            {"grid", {{"rows", scenario.grid.rows}, {"cols", scenario.grid.cols}, {"spacing_cm", scenario.grid.spacing_cm}}},
            {"samples", std::move(samples)}};
}

Scenario scenario_from_json(const json& doc) {
    Scenario sc;
    sc.id = get_as<std::string>(field(doc, "id", ""), "id");
    const json& grid = field(doc, "grid", "");
    sc.grid.rows = get_as<std::size_t>(field(grid, "rows", "grid"), "grid.rows");
    sc.grid.cols = get_as<std::size_t>(field(grid, "cols", "grid"), "grid.cols");
    sc.grid.spacing_cm = get_as<double>(field(grid, "spacing_cm", "grid"), "grid.spacing_cm");
    const json& samples = field(doc, "samples", "");
    if (!samples.is_array()) throw DataError("scenario: field \"samples\" must be an array");
    sc.samples.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::string path = "samples[" + std::to_string(i) + "]";
        const json& js = samples[i];
        Sample s;
        s.rp = get_as<std::size_t>(field(js, "rp", path), path + ".rp");
        const auto pos = get_as<std::vector<double>>(field(js, "pos_cm", path), path + ".pos_cm");
        if (pos.size() != 2) throw DataError("scenario: field \"" + path + ".pos_cm\" must hold 2 numbers");
        s.pos = {pos[0], pos[1]};
        const auto amp = get_as<std::vector<double>>(field(js, "amp", path), path + ".amp");
        if (amp.size() != s.amp.size()) {
            throw DataError("scenario: field \"" + path + ".amp\" must hold " + std::to_string(s.amp.size()) +
                            " numbers, got " + std::to_string(amp.size()));
        }
        std::copy(amp.begin(), amp.end(), s.amp.begin());
        sc.samples.push_back(s);
    }
    validate(sc);
    return sc;
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write scenario file " + path.string());
    out << scenario_to_json(scenario).dump() << '\n';
    if (!out) throw DataError("failed writing scenario file " + path.string());
}

Scenario parse_scenario(std::string_view text, std::string_view origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string(origin) + ": malformed JSON at " + line_column(text, e.byte == 0 ? 0 : e.byte - 1) +
                        " (" + e.what() + ")");
    }
    try {
        return scenario_from_json(doc);
    } catch (const DataError& e) {
        throw DataError(std::string(origin) + ": " + e.what());
    }
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open scenario file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

std::vector<Scenario> load_scenario_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw DataError("scenario directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json" &&
            entry.path().filename().string().starts_with("scenario")) {
            files.push_back(entry.path());
        }
    }
    if (files.empty()) throw DataError("no scenario_*.json files in " + dir.string());
    std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) {
        const auto ra = file_rank(a), rb = file_rank(b);
        return ra != rb ? ra < rb : a.filename() < b.filename();
    });
    std::vector<Scenario> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back(load_scenario(f));
    return out;
}

} // namespace metaloc

#include <metaloc/errors.hpp>
#include <metaloc/param_set.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>

namespace metaloc {

ParamSet::ParamSet(std::vector<NamedTensor> entries) : entries_(std::move(entries)) {}

const ad::Tensor& ParamSet::at(std::string_view name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return e.value;
    }
    throw DataError("parameter set has no tensor named '" + std::string(name) + "'");
}

std::vector<ad::Tensor> ParamSet::tensors() const {
    std::vector<ad::Tensor> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.value);
    return out;
}

ParamSet ParamSet::with_tensors(std::vector<ad::Tensor> tensors) const {
    if (tensors.size() != entries_.size()) {
        throw ShapeError("with_tensors: expected " + std::to_string(entries_.size()) + " tensors, got " +
                         std::to_string(tensors.size()));
    }
    std::vector<NamedTensor> out;
    out.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (tensors[i].shape() != entries_[i].value.shape()) {
            throw ShapeError("with_tensors: " + entries_[i].name + " expects " +
                             ad::shape_string(entries_[i].value.shape()) + ", got " +
                             ad::shape_string(tensors[i].shape()));
        }
        out.push_back({entries_[i].name, std::move(tensors[i])});
    }
    return ParamSet(std::move(out));
}

ParamSet ParamSet::as_parameters() const {
    std::vector<NamedTensor> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back({e.name, e.value.detach_parameter()});
    return ParamSet(std::move(out));
}

ParamSet ParamSet::detached() const {
    std::vector<NamedTensor> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back({e.name, e.value.detach()});
    return ParamSet(std::move(out));
}

bool ParamSet::same_layout(const ParamSet& other) const noexcept {
    if (other.entries_.size() != entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name != other.entries_[i].name ||
            entries_[i].value.shape() != other.entries_[i].value.shape()) {
            return false;
        }
    }
    return true;
}

std::size_t param_count(const ParamSet& params) noexcept {
    std::size_t n = 0;
    for (const auto& e : params) n += ad::element_count(e.value.shape());
    return n;
}

bool bitwise_equal(const ParamSet& a, const ParamSet& b) noexcept {
    if (!a.same_layout(b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto av = a[i].values();
        const auto bv = b[i].values();
        if (std::memcmp(av.data(), bv.data(), av.size() * sizeof(double)) != 0) return false;
    }
    return true;
}

double max_abs_diff(const ParamSet& a, const ParamSet& b) {
    if (!a.same_layout(b)) throw ShapeError("max_abs_diff: parameter layouts differ");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto av = a[i].values();
        const auto bv = b[i].values();
        for (std::size_t j = 0; j < av.size(); ++j) worst = std::max(worst, std::abs(av[j] - bv[j]));
    }
    return worst;
}

void check_finite(const ParamSet& params, std::string_view where) {
    for (const auto& e : params) ad::check_finite(e.value, std::string(where) + " [" + e.name + "]");
}

nlohmann::json params_to_json(const ParamSet& params) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& e : params) {
        const auto v = e.value.values();
        layers.push_back({{"name", e.name},
                          {"shape", e.value.shape()},
                          {"values", std::vector<double>(v.begin(), v.end())}});
    }
    return {{"format", "metaloc.params"}, {"version", 1}, {"layers", std::move(layers)}};
}

ParamSet params_from_json(const nlohmann::json& doc) {
    try {
        if (doc.value("format", std::string{}) != "metaloc.params") {
            throw DataError("checkpoint: missing or unknown \"format\" (expected \"metaloc.params\")");
        }
        if (!doc.contains("layers")) throw DataError("checkpoint: missing field \"layers\"");
        std::vector<NamedTensor> entries;
        std::size_t idx = 0;
        for (const auto& layer : doc.at("layers")) {
            for (const char* field : {"name", "shape", "values"}) {
                if (!layer.contains(field)) {
                    throw DataError("checkpoint: layer " + std::to_string(idx) + " missing field \"" + field + "\"");
                }
            }
            auto shape = layer.at("shape").get<ad::Shape>();
            auto values = layer.at("values").get<std::vector<double>>();
            entries.push_back({layer.at("name").get<std::string>(), ad::Tensor::constant(std::move(shape), std::move(values))});
            ++idx;
        }
        return ParamSet(std::move(entries));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    } catch (const ShapeError& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    }
}

void save_params(const ParamSet& params, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out << params_to_json(params).dump() << '\n';
    if (!out) throw DataError("failed writing checkpoint " + path.string());
}

ParamSet load_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint " + path.string() + ": " + e.what());
    }
    return params_from_json(doc);
}

} // namespace metaloc

#pragma once

#include <metaloc/tensor.hpp>

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace metaloc {

struct NamedTensor {
    std::string name;
    ad::Tensor value;
};

/// Ordered collection of named model weights.
class ParamSet {
public:
    ParamSet() = default;
    explicit ParamSet(std::vector<NamedTensor> entries);

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const ad::Tensor& operator[](std::size_t i) const { return entries_[i].value; }
    const std::string& name(std::size_t i) const { return entries_[i].name; }
    /// Throws DataError for unknown names.
    const ad::Tensor& at(std::string_view name) const;

    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }

    std::vector<ad::Tensor> tensors() const;
    /// Same names, new tensors; shapes must match.
    ParamSet with_tensors(std::vector<ad::Tensor> tensors) const;
    /// Copy whose tensors are fresh leaves that require gradients.
    ParamSet as_parameters() const;
    /// Copy without any graph history or gradient tracking.
    ParamSet detached() const;

    bool same_layout(const ParamSet& other) const noexcept;

private:
    std::vector<NamedTensor> entries_;
};

/// Total number of scalars across all tensors.
std::size_t param_count(const ParamSet& params) noexcept;

bool bitwise_equal(const ParamSet& a, const ParamSet& b) noexcept;
double max_abs_diff(const ParamSet& a, const ParamSet& b);
void check_finite(const ParamSet& params, std::string_view where);

/// Checkpoint container: {"format", "version", "layers": [{"name", "shape", "values"}]}.
nlohmann::json params_to_json(const ParamSet& params);
ParamSet params_from_json(const nlohmann::json& doc);
void save_params(const ParamSet& params, const std::filesystem::path& path);
ParamSet load_params(const std::filesystem::path& path);

} // namespace metaloc

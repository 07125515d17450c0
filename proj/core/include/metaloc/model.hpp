#pragma once

#include <metaloc/batch.hpp>
#include <metaloc/param_set.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

/// The localization network: 3x30 CSI amplitudes in, (x, y) in cm out.
///
///   conv1d(3->10, k3, p1) relu  maxpool(2)   3x30 -> 10x30 -> 10x15
///   conv1d(10->15, k3, p1) relu maxpool(2)   10x15 -> 15x15 -> 15x7
///   flatten                                  105
///   dense 128, 64, 32, 8 with relu; dense 2 linear
namespace metaloc::model {

inline constexpr std::size_t kAntennas = 3;
inline constexpr std::size_t kSubcarriers = 30;
inline constexpr std::size_t kSampleSize = kAntennas * kSubcarriers;
inline constexpr std::size_t kOutputs = 2;
/// Normalized amplitudes are shifted by this before the first convolution.
inline constexpr double kInputCenter = 0.5;
/// The regression head works in meters; predictions and losses are in cm.
inline constexpr double kOutputUnitCm = 100.0;

struct LayerSpec {
    std::string_view name;
    ad::Shape shape;
    std::size_t fan_in; // 0 for biases
};

/// Fixed tensor order and shapes of the parameter set.
const std::vector<LayerSpec>& layout();

/// Weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)); biases zero.
ParamSet init(std::uint64_t seed);
ParamSet zeros();

/// Throws DataError naming the first mismatching tensor.
void check_layout(const ParamSet& params);

/// Batched forward pass on (N x 3 x 30) inputs, giving (N x 2).
/// When `trace` is given, the shape after each layer is appended to it.
ad::Tensor forward(const ParamSet& params, const ad::Tensor& inputs, std::vector<ad::Shape>* trace = nullptr);

using Position = std::array<double, 2>;

Position predict(const ParamSet& params, std::span<const double> sample);

/// Mean squared coordinate error over the batch, in cm^2. Throws DataError on an empty batch.
ad::Tensor loss(const ParamSet& params, const Batch& batch);

} // namespace metaloc::model

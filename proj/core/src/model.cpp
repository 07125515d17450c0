#include <metaloc/errors.hpp>
#include <metaloc/model.hpp>
#include <metaloc/ops.hpp>
#include <metaloc/rng.hpp>

#include <cmath>

namespace metaloc::model {

namespace {
constexpr std::size_t kConvPadding = 1;
constexpr std::size_t kPool = 2;
} // namespace

const std::vector<LayerSpec>& layout() {
    static const std::vector<LayerSpec> specs = {
        {"conv1.weight", {10, 3, 3}, 3 * 3},  {"conv1.bias", {10}, 0},
        {"conv2.weight", {15, 10, 3}, 10 * 3}, {"conv2.bias", {15}, 0},
        {"dense1.weight", {105, 128}, 105},    {"dense1.bias", {128}, 0},
        {"dense2.weight", {128, 64}, 128},     {"dense2.bias", {64}, 0},
        {"dense3.weight", {64, 32}, 64},       {"dense3.bias", {32}, 0},
        {"dense4.weight", {32, 8}, 32},        {"dense4.bias", {8}, 0},
        {"dense5.weight", {8, 2}, 8},          {"dense5.bias", {2}, 0},
    };
    return specs;
}

ParamSet init(std::uint64_t seed) {
    Rng rng = make_rng(seed, "init");
    std::vector<NamedTensor> entries;
    for (const auto& spec : layout()) {
        std::vector<double> values(ad::element_count(spec.shape), 0.0);
        if (spec.fan_in > 0) {
            const double bound = std::sqrt(6.0 / static_cast<double>(spec.fan_in));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (double& v : values) v = dist(rng);
        }
        entries.push_back({std::string(spec.name), ad::Tensor::constant(spec.shape, std::move(values))});
    }
    return ParamSet(std::move(entries));
}

ParamSet zeros() {
    std::vector<NamedTensor> entries;
    for (const auto& spec : layout()) entries.push_back({std::string(spec.name), ad::Tensor::zeros(spec.shape)});
    return ParamSet(std::move(entries));
}

void check_layout(const ParamSet& params) {
    const auto& specs = layout();
    if (params.size() != specs.size()) {
        throw DataError("architecture mismatch: expected " + std::to_string(specs.size()) + " tensors, got " +
                        std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (params.name(i) != specs[i].name || params[i].shape() != specs[i].shape) {
            throw DataError("architecture mismatch at tensor " + std::to_string(i) + ": expected " +
                            std::string(specs[i].name) + ad::shape_string(specs[i].shape) + ", got " +
                            params.name(i) + ad::shape_string(params[i].shape()));
        }
    }
}

ad::Tensor forward(const ParamSet& params, const ad::Tensor& inputs, std::vector<ad::Shape>* trace) {
    if (!inputs.defined() || inputs.dim() != 3 || inputs.shape()[1] != kAntennas ||
        inputs.shape()[2] != kSubcarriers) {
        throw ShapeError("forward: expected input (N x 3 x 30), got " +
                         (inputs.defined() ? ad::shape_string(inputs.shape()) : std::string("<undefined>")));
    }
    auto record = [trace](const ad::Tensor& t) {
        if (trace) trace->push_back(t.shape());
        return t;
    };
    check_layout(params);
    record(inputs);
    const ad::Tensor centered = ad::add(inputs, ad::Tensor::full(inputs.shape(), -kInputCenter));
    ad::Tensor h = record(ad::relu(ad::add_bias(ad::conv1d(centered, params[0], kConvPadding), params[1])));
    h = record(ad::maxpool1d(h, kPool));
    h = record(ad::relu(ad::add_bias(ad::conv1d(h, params[2], kConvPadding), params[3])));
    h = record(ad::maxpool1d(h, kPool));
    h = record(ad::flatten(h));
    for (std::size_t layer = 0; layer < 5; ++layer) {
        const std::size_t w = 4 + 2 * layer;
        h = ad::add_bias(ad::matmul(h, params[w]), params[w + 1]);
        if (layer < 4) h = ad::relu(h);
        else h = ad::scale(h, kOutputUnitCm);
        record(h);
    }
    return h;
}

Position predict(const ParamSet& params, std::span<const double> sample) {
    if (sample.size() != kSampleSize) {
        throw ShapeError("predict: expected " + std::to_string(kSampleSize) + " amplitudes, got " +
                         std::to_string(sample.size()));
    }
    ad::NoGradGuard no_grad;
    const auto x = ad::Tensor::constant({1, kAntennas, kSubcarriers}, {sample.begin(), sample.end()});
    const auto out = forward(params, x);
    const auto y = out.values();
    return {y[0], y[1]};
}

ad::Tensor loss(const ParamSet& params, const Batch& batch) {
    if (batch.empty()) throw DataError("loss: empty batch");
    return ad::mse_loss(forward(params, batch.inputs), batch.targets);
}

} // namespace metaloc::model

#include <metaloc/channel.hpp>
#include <metaloc/grad.hpp>
#include <metaloc/meta.hpp>
#include <metaloc/model.hpp>

#include <benchmark/benchmark.h>

using namespace metaloc;

namespace {

const Scenario& scenario() {
    static const Scenario sc = [] {
        ChannelConfig cc;
        cc.samples_per_rp = 20;
        return generate_scenario(3, cc);
    }();
    return sc;
}

Batch batch_of(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i % scenario().samples.size();
    return make_batch(scenario(), idx);
}

void BM_Forward(benchmark::State& state) {
    const auto p = model::init(1);
    const auto b = batch_of(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(model::loss(p, b).item());
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(60)->Arg(240);

void BM_ForwardBackward(benchmark::State& state) {
    const auto p = model::init(1).as_parameters();
    const auto b = batch_of(static_cast<std::size_t>(state.range(0)));
    const auto wrt = p.tensors();
    for (auto _ : state) {
        auto g = ad::grad(model::loss(p, b), wrt);
        benchmark::DoNotOptimize(g.grads.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(1)->Arg(60)->Arg(240);

template <bool SecondOrder>
void BM_MetaStep(benchmark::State& state) {
    meta::MetaConfig cfg;
    cfg.inner_steps = static_cast<std::size_t>(state.range(0));
    std::vector<meta::TaskObjective> tasks;
    for (std::uint64_t i = 0; i < cfg.meta_batch; ++i)
        tasks.push_back(meta::model_objective(meta::sample_episode(scenario(), cfg.shots, cfg.query_per_rp, i),
                                              "task" + std::to_string(i)));
    ParamSet theta = model::init(2).as_parameters();
    for (auto _ : state) {
        auto next = SecondOrder ? meta::maml_step(theta, tasks, cfg) : meta::fomaml_step(theta, tasks, cfg);
        benchmark::DoNotOptimize(next.size());
    }
}
BENCHMARK(BM_MetaStep<true>)->Name("BM_MamlStep")->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MetaStep<false>)->Name("BM_FomamlStep")->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();

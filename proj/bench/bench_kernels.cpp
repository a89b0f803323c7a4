// Serial reference vs OpenMP batch kernels on realistic shapes. Run with
// --benchmark_filter=... to narrow; the serial/parallel pairs share inputs.

#include <benchmark/benchmark.h>

#include "papi/pathway.hpp"
#include "papi/regularization.hpp"
#include "papi/rng.hpp"
#include "papi/tasks.hpp"

namespace {

using namespace papi;

struct Fixture {
    PathwayLayout layout;
    ParamStore store;
    Dataset data;
    std::vector<int> active;

    Fixture() {
        layout.encoder_widths = {16, 12};
        layout.act = Activation::tanh;
        NetArch head{{12, 16, 4}, Activation::tanh, Head::softmax_xent};
        layout.heads = {head, head, head, head};
        store = build(layout, 4, 1);

        TaskSpec spec;
        spec.task_id = 1;
        spec.input_dim = 16;
        spec.n_classes = 4;
        spec.class_radius = 1.2;
        spec.noise_sigma = 0.6;
        data = sample_batch(spec, 4096, 2);
        active = active_params(store, 2);
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

void bench_eval(benchmark::State& state, par::Exec exec) {
    Fixture& f = fixture();
    for (auto _ : state) {
        const EvalResult r = pathway_eval(f.store, f.layout, 2, f.data, exec);
        benchmark::DoNotOptimize(r.mean_loss);
    }
    state.SetItemsProcessed(state.iterations() * f.data.size());
}

void bench_grad(benchmark::State& state, par::Exec exec) {
    Fixture& f = fixture();
    Vec grad;
    for (auto _ : state) {
        const double loss =
            pathway_mean_grad(f.store, f.layout, 2, f.data, f.active, grad, exec);
        benchmark::DoNotOptimize(loss);
        benchmark::DoNotOptimize(grad.data());
    }
    state.SetItemsProcessed(state.iterations() * f.data.size());
}

void bench_fisher(benchmark::State& state, par::Exec exec) {
    Fixture& f = fixture();
    for (auto _ : state) {
        const FisherInfo fi =
            estimate_fisher_diag(f.store, f.layout, 2, f.data, 2048, 3, exec);
        benchmark::DoNotOptimize(fi.diag.data());
    }
    state.SetItemsProcessed(state.iterations() * 2048);
}

void bench_block_sum(benchmark::State& state, par::Exec exec) {
    Rng rng(7);
    Vec v(1 << 18);
    for (double& x : v) x = rng.normal();
    for (auto _ : state) {
        const std::int64_t n = static_cast<std::int64_t>(v.size());
        double s = 0.0;
        if (exec == par::Exec::parallel)
            s = par::block_sum(n, [&](std::int64_t i) { return v[static_cast<std::size_t>(i)]; });
        else
            s = par::serial_sum(n, [&](std::int64_t i) { return v[static_cast<std::size_t>(i)]; });
        benchmark::DoNotOptimize(s);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(v.size()));
}

}  // namespace

BENCHMARK_CAPTURE(bench_eval, serial, papi::par::Exec::serial);
BENCHMARK_CAPTURE(bench_eval, parallel, papi::par::Exec::parallel);
BENCHMARK_CAPTURE(bench_grad, serial, papi::par::Exec::serial);
BENCHMARK_CAPTURE(bench_grad, parallel, papi::par::Exec::parallel);
BENCHMARK_CAPTURE(bench_fisher, serial, papi::par::Exec::serial);
BENCHMARK_CAPTURE(bench_fisher, parallel, papi::par::Exec::parallel);
BENCHMARK_CAPTURE(bench_block_sum, serial, papi::par::Exec::serial);
BENCHMARK_CAPTURE(bench_block_sum, parallel, papi::par::Exec::parallel);

BENCHMARK_MAIN();

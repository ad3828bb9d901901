/*
 * Copyright 2026 The lcirt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// E-step kernel: serial reference versus the blocked OpenMP path on data
// simulated from the demo parameters.

#include "lcirt/io.hpp"
#include "lcirt/kernels.hpp"
#include "lcirt/simulate.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <map>

namespace {

struct Fixture {
    lcirt::io::DesignFile df;
    lcirt::ParameterSet params;
    lcirt::Dataset data;
};

const Fixture& fixture(int n) {
    static std::map<int, Fixture> cache;
    auto it = cache.find(n);
    if (it == cache.end()) {
        Fixture f;
        f.df = lcirt::io::read_design(LCIRT_DATA_DIR "/demo.design");
        f.params = lcirt::io::read_params(LCIRT_DATA_DIR "/demo_params.json", f.df.design, f.df.config,
                                           static_cast<int>(f.df.column_names().size()));
        f.data = lcirt::generate(f.params, f.df.design, n, lcirt::io::covariate_spec(f.df), 42);
        it = cache.emplace(n, std::move(f)).first;
    }
    return it->second;
}

void BM_EStepSerial(benchmark::State& state) {
    const Fixture& f = fixture(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto r = lcirt::kernels::e_step_serial(f.df.design, f.params, f.data, lcirt::kernels::EStepOutputs::posterior);
        benchmark::DoNotOptimize(r.loglik);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EStepParallel(benchmark::State& state) {
    const Fixture& f = fixture(static_cast<int>(state.range(0)));
    omp_set_num_threads(static_cast<int>(state.range(1)));
    for (auto _ : state) {
        auto r = lcirt::kernels::e_step_parallel(f.df.design, f.params, f.data, lcirt::kernels::EStepOutputs::posterior);
        benchmark::DoNotOptimize(r.loglik);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
    state.counters["threads"] = static_cast<double>(state.range(1));
}

void BM_EStepLoglikOnly(benchmark::State& state) {
    const Fixture& f = fixture(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto r = lcirt::kernels::e_step_parallel(f.df.design, f.params, f.data, lcirt::kernels::EStepOutputs::loglik);
        benchmark::DoNotOptimize(r.loglik);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

} // namespace

BENCHMARK(BM_EStepSerial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EStepParallel)
    ->ArgsProduct({{1000, 10000}, {1, 2, 4, 8}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(BM_EStepLoglikOnly)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

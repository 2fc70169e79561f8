#include <benchmark/benchmark.h>

#include "fleetsim/defaults.hpp"
#include "fleetsim/optimizer.hpp"
#include "fleetsim/routing.hpp"
#include "fleetsim/rng.hpp"

using namespace fleetsim;

static void bm_decode_iteration(benchmark::State& state) {
    Catalog cat = default_catalog();
    CapacityTable capacity = default_capacity(cat);
    ProfileTable profiles = default_profiles(cat, capacity);
    double b = 1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(profiles.decode_iteration_time_ms(0, 0, b, b * 900.0));
        b = b < 32.0 ? b + 0.5 : 1.0;
    }
}
BENCHMARK(bm_decode_iteration);

static void bm_order_queue(benchmark::State& state) {
    Rng rng(7);
    std::vector<Request> reqs(256);
    for (std::size_t i = 0; i < reqs.size(); ++i) {
        reqs[i].id = i;
        reqs[i].arrival_ts = static_cast<SimTime>(rng.uniform(0.0, 100000.0));
        reqs[i].ttft_deadline = reqs[i].arrival_ts + seconds(1);
        reqs[i].completion_deadline = reqs[i].arrival_ts + hours(24);
        reqs[i].input_tokens = static_cast<std::int32_t>(rng.uniform(1.0, 4000.0));
        reqs[i].output_tokens = static_cast<std::int32_t>(rng.uniform(1.0, 800.0));
    }
    SchedulerConfig cfg;
    cfg.policy = SchedulingPolicy::DPA;
    std::vector<RequestIdx> queue(reqs.size());
    for (auto _ : state) {
        for (std::size_t i = 0; i < queue.size(); ++i) queue[i] = static_cast<RequestIdx>(i);
        order_queue(queue, reqs, 50000, cfg);
        benchmark::DoNotOptimize(queue.data());
    }
}
BENCHMARK(bm_order_queue);

static void bm_solve_model(benchmark::State& state) {
    ModelProblem prob;
    prob.model = 0;
    prob.regions = {0, 1, 2};
    prob.gpus = {0};
    prob.n = {{10}, {8}, {12}};
    prob.theta = {180.0};
    prob.alpha = {55.0};
    prob.sigma = {1.0};
    prob.region_peak = {2500.0, 1800.0, 2100.0};
    prob.global_peak = 6000.0;
    default_delta_bounds(prob);
    OptimizerConfig cfg;
    cfg.solver_budget_sec = 5.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_model(prob, cfg));
    }
}
BENCHMARK(bm_solve_model);

BENCHMARK_MAIN();

#pragma once
#include "fleetsim/domain.hpp"
#include "fleetsim/perf_model.hpp"
#include "fleetsim/workload.hpp"

namespace fleetsim {

// Built-in topology: four models x two VM types x three regions. Weights are
// local everywhere, so redeployments take the 10-minute path by default.
Catalog default_catalog();

// theta_{i,k} per deployable pair, input+output tokens per second.
CapacityTable default_capacity(const Catalog& cat);

// Analytic prefill/decode curves calibrated against default_capacity: an
// endpoint at ~70% effective-memory utilization sustains roughly theta.
ProfileTable default_profiles(const Catalog& cat, const CapacityTable& capacity);

// 1-day diurnal workload over every (model, region, tier) with small bursty
// load spikes; most demand on the two large models.
SyntheticWorkloadSpec default_synthetic_spec(double duration_days, std::uint64_t seed);

}  // namespace fleetsim

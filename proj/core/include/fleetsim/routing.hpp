#pragma once
#include <optional>
#include <span>
#include <vector>

#include "fleetsim/domain.hpp"
#include "fleetsim/fleet.hpp"

namespace fleetsim {

enum class SchedulingPolicy : std::uint8_t { FCFS, EDF, PF, DPA };

const char* policy_name(SchedulingPolicy p);
std::optional<SchedulingPolicy> parse_policy(const std::string& s);

struct SchedulerConfig {
    SchedulingPolicy policy = SchedulingPolicy::FCFS;
    DurationMs tau_n = seconds(60);  // DPA: severely/recently expired split
    DurationMs tau_p = seconds(10);  // DPA: urgent/non-urgent split
};

struct RegionRoutingConfig {
    double utilization_threshold = 0.70;
    // preference_order[client_region] = regions to try, best first. Empty =
    // ascending latency from the client region.
    std::vector<std::vector<RegionIdx>> preference_order;
};

std::vector<RegionIdx> default_preference_order(const Catalog& cat, RegionIdx client);

// Ratio of effective memory used to effective memory available across the
// private instances of (model, region), optionally one silo pool.
// nullopt when the endpoint has no instances.
std::optional<double> effective_utilization(const FleetState& fleet, ModelIdx model,
                                            RegionIdx region, PoolTag pool = PoolTag::Shared);

// Region selection for IW requests: first preferred region under the
// utilization threshold, else the least-utilized region (ties broken by
// preference order). Regions without serving instances are never selected.
std::optional<RegionIdx> route_global_iw(const Request& r, const FleetState& fleet,
                                         const RegionRoutingConfig& cfg, const Catalog& cat,
                                         PoolTag pool = PoolTag::Shared);

// Instances of one deployment, grouped from an endpoint's serving instances.
struct Deployment {
    std::vector<InstanceId> instances;
};

// Chunk an endpoint's serving instances into deployments of at most
// `max_per_deployment`, ascending instance id.
std::vector<Deployment> endpoint_deployments(const FleetState& fleet, ModelIdx model,
                                             RegionIdx region, PoolTag pool,
                                             int max_per_deployment);

// Least-loaded deployment by effective memory utilization, then join the
// shortest queue by remaining tokens within it (ties by lowest id).
std::optional<InstanceId> route_to_instance(const FleetState& fleet,
                                            const std::vector<Deployment>& deployments);

// JSQ within one deployment; exposed separately for tests.
std::optional<InstanceId> pick_jsq(const FleetState& fleet, const Deployment& dep);

// Total order over a local queue per the active policy. Priority-1 requests
// sort after all priority-0 requests under every policy; ordering within a
// priority class follows the policy. Stable: ties keep queue order.
void order_queue(std::vector<RequestIdx>& queue, std::span<const Request> requests, SimTime now,
                 const SchedulerConfig& cfg);

// DPA bucket of a request given its remaining deadline time; 0..5 in the
// scheduling priority order (severely expired, urgent fast, urgent normal,
// non-urgent fast, non-urgent normal, recently expired).
int dpa_bucket(const Request& r, SimTime now, const SchedulerConfig& cfg);

}  // namespace fleetsim

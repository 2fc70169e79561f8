#include "fleetsim/routing.hpp"

#include <algorithm>
#include <limits>
#include <tuple>

namespace fleetsim {

const char* policy_name(SchedulingPolicy p) {
    switch (p) {
        case SchedulingPolicy::FCFS: return "fcfs";
        case SchedulingPolicy::EDF: return "edf";
        case SchedulingPolicy::PF: return "pf";
        case SchedulingPolicy::DPA: return "dpa";
    }
    return "?";
}

std::optional<SchedulingPolicy> parse_policy(const std::string& s) {
    if (s == "fcfs") return SchedulingPolicy::FCFS;
    if (s == "edf") return SchedulingPolicy::EDF;
    if (s == "pf") return SchedulingPolicy::PF;
    if (s == "dpa") return SchedulingPolicy::DPA;
    return std::nullopt;
}

std::vector<RegionIdx> default_preference_order(const Catalog& cat, RegionIdx client) {
    std::vector<RegionIdx> order(cat.regions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<RegionIdx>(i);
    std::stable_sort(order.begin(), order.end(), [&](RegionIdx a, RegionIdx b) {
        return cat.regions[client].latency_to[a] < cat.regions[client].latency_to[b];
    });
    return order;
}

std::optional<double> effective_utilization(const FleetState& fleet, ModelIdx model,
                                            RegionIdx region, PoolTag pool) {
    std::uint64_t used = 0, cap = 0;
    for (InstanceId id : fleet.private_ids(model, region)) {
        const auto& inst = fleet.at(id);
        if (pool != PoolTag::Shared && inst.pool != pool) continue;
        used += inst.effective_used_bytes;
        cap += inst.effective_capacity_bytes;
    }
    if (cap == 0) return std::nullopt;
    return static_cast<double>(used) / static_cast<double>(cap);
}

std::optional<RegionIdx> route_global_iw(const Request& r, const FleetState& fleet,
                                         const RegionRoutingConfig& cfg, const Catalog& cat,
                                         PoolTag pool) {
    std::vector<RegionIdx> order;
    if (static_cast<std::size_t>(r.client_region) < cfg.preference_order.size() &&
        !cfg.preference_order[r.client_region].empty())
        order = cfg.preference_order[r.client_region];
    else
        order = default_preference_order(cat, r.client_region);

    std::optional<RegionIdx> best;
    double best_util = std::numeric_limits<double>::infinity();
    for (RegionIdx region : order) {
        // Endpoints with only draining instances are not candidates.
        bool serving = false;
        for (InstanceId id : fleet.private_ids(r.model, region)) {
            const auto& inst = fleet.at(id);
            if (inst.draining) continue;
            if (pool != PoolTag::Shared && inst.pool != pool) continue;
            serving = true;
            break;
        }
        if (!serving) continue;
        double util = effective_utilization(fleet, r.model, region, pool).value_or(0.0);
        if (util < cfg.utilization_threshold) return region;
        if (util < best_util) {  // strict: ties resolve to earlier preference
            best_util = util;
            best = region;
        }
    }
    return best;
}

std::vector<Deployment> endpoint_deployments(const FleetState& fleet, ModelIdx model,
                                             RegionIdx region, PoolTag pool,
                                             int max_per_deployment) {
    std::vector<Deployment> deps;
    for (InstanceId id : fleet.private_ids(model, region)) {
        const auto& inst = fleet.at(id);
        if (!inst.accepts_requests()) continue;
        if (pool != PoolTag::Shared && inst.pool != pool) continue;
        if (deps.empty() ||
            static_cast<int>(deps.back().instances.size()) >= max_per_deployment)
            deps.emplace_back();
        deps.back().instances.push_back(id);
    }
    return deps;
}

std::optional<InstanceId> pick_jsq(const FleetState& fleet, const Deployment& dep) {
    std::optional<InstanceId> best;
    std::int64_t best_tokens = std::numeric_limits<std::int64_t>::max();
    for (InstanceId id : dep.instances) {
        std::int64_t tokens = fleet.at(id).remaining_tokens;
        if (tokens < best_tokens) {
            best_tokens = tokens;
            best = id;
        }
    }
    return best;
}

std::optional<InstanceId> route_to_instance(const FleetState& fleet,
                                            const std::vector<Deployment>& deployments) {
    const Deployment* best = nullptr;
    double best_util = std::numeric_limits<double>::infinity();
    for (const auto& dep : deployments) {
        std::uint64_t used = 0, cap = 0;
        for (InstanceId id : dep.instances) {
            used += fleet.at(id).effective_used_bytes;
            cap += fleet.at(id).effective_capacity_bytes;
        }
        double util = cap == 0 ? 0.0 : static_cast<double>(used) / static_cast<double>(cap);
        if (util < best_util) {
            best_util = util;
            best = &dep;
        }
    }
    if (best == nullptr) return std::nullopt;
    return pick_jsq(fleet, *best);
}

int dpa_bucket(const Request& r, SimTime now, const SchedulerConfig& cfg) {
    DurationMs d = r.remaining_ttft(now);
    bool fast = r.tier == WorkloadTier::IW_F;
    if (d < -cfg.tau_n) return 0;                    // severely expired
    if (d < 0) return 5;                             // recently expired
    if (d <= cfg.tau_p) return fast ? 1 : 2;         // urgent
    return fast ? 3 : 4;                             // non-urgent
}

void order_queue(std::vector<RequestIdx>& queue, std::span<const Request> requests, SimTime now,
                 const SchedulerConfig& cfg) {
    auto req = [&](RequestIdx i) -> const Request& { return requests[i]; };
    switch (cfg.policy) {
        case SchedulingPolicy::FCFS:
            std::stable_sort(queue.begin(), queue.end(), [&](RequestIdx a, RequestIdx b) {
                return std::tuple(req(a).priority, req(a).arrival_ts) <
                       std::tuple(req(b).priority, req(b).arrival_ts);
            });
            break;
        case SchedulingPolicy::EDF:
            std::stable_sort(queue.begin(), queue.end(), [&](RequestIdx a, RequestIdx b) {
                return std::tuple(req(a).priority, req(a).remaining_ttft(now)) <
                       std::tuple(req(b).priority, req(b).remaining_ttft(now));
            });
            break;
        case SchedulingPolicy::PF:
            std::stable_sort(queue.begin(), queue.end(), [&](RequestIdx a, RequestIdx b) {
                return std::tuple(req(a).priority, req(a).tier != WorkloadTier::IW_F,
                                  req(a).arrival_ts) <
                       std::tuple(req(b).priority, req(b).tier != WorkloadTier::IW_F,
                                  req(b).arrival_ts);
            });
            break;
        case SchedulingPolicy::DPA:
            std::stable_sort(queue.begin(), queue.end(), [&](RequestIdx a, RequestIdx b) {
                return std::tuple(req(a).priority, dpa_bucket(req(a), now, cfg),
                                  req(a).arrival_ts) <
                       std::tuple(req(b).priority, dpa_bucket(req(b), now, cfg),
                                  req(b).arrival_ts);
            });
            break;
    }
}

}  // namespace fleetsim

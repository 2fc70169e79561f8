#pragma once
#include <cstdint>
#include <vector>

#include "fleetsim/domain.hpp"

namespace fleetsim {

enum class InstanceRole : std::uint8_t { Private, Spot, Provisioning, Retired };
enum class PoolTag : std::uint8_t { Shared, IwOnly, NiwOnly };  // siloed partitions

using InstanceId = std::int32_t;
using RequestIdx = std::uint32_t;

// Decode-phase state of one admitted request.
struct BatchSlot {
    RequestIdx req = 0;
    double emitted = 0.0;  // fractional tokens emitted so far
    bool prefilled = false;
};

struct InstanceState {
    InstanceId id = 0;
    ModelIdx model = 0;
    GpuIdx gpu = 0;
    RegionIdx region = 0;
    InstanceRole role = InstanceRole::Private;
    PoolTag pool = PoolTag::Shared;
    bool draining = false;         // scale-down victim, accepts no new requests
    bool retire_on_drain = false;  // terminate the VM instead of donating it

    std::uint64_t effective_capacity_bytes = 0;  // vm memory minus weights
    std::uint64_t effective_used_bytes = 0;      // reserved by admitted requests

    std::vector<RequestIdx> local_queue;          // waiting, insertion order
    std::vector<BatchSlot> current_batch;         // non-preemptible once admitted
    std::vector<RequestIdx> prefill_pending;      // admitted, waiting for prefill slot
    std::vector<RequestIdx> prefill_active;       // batch in the running prefill round
    bool prefill_busy = false;

    // Flow-mode decode pool state: per-iteration latency frozen between
    // membership changes, and the time emissions were last advanced to.
    double decode_iter_ms = 0.0;
    SimTime decode_last_update = 0;
    double decode_exact_ts = 0.0;  // iter mode: unrounded next-iteration time

    // Queued input+output tokens plus unfinished output tokens of running
    // requests; the join-shortest-queue load signal.
    std::int64_t remaining_tokens = 0;

    SimTime provisioning_done_ts = kUnset;
    SimTime role_since = 0;
    std::uint64_t decode_epoch = 0;  // invalidates stale completion events

    bool accepts_requests() const { return role == InstanceRole::Private && !draining; }
    bool busy() const { return !current_batch.empty() || !local_queue.empty(); }
    double utilization() const {
        if (effective_capacity_bytes == 0) return 0.0;
        return static_cast<double>(effective_used_bytes) /
               static_cast<double>(effective_capacity_bytes);
    }
};

// Instance inventory with per-(model, region) and per-region spot indexes.
// Role, model or region changes must go through the mutators so the indexes
// stay consistent.
class FleetState {
public:
    FleetState(std::size_t num_models, std::size_t num_regions)
        : num_models_(num_models),
          num_regions_(num_regions),
          endpoint_private_(num_models * num_regions),
          spot_(num_regions),
          region_vms_(num_regions, 0),
          prov_count_(num_models * num_regions * 3, 0) {}

    InstanceState& at(InstanceId id) { return instances_[id]; }
    const InstanceState& at(InstanceId id) const { return instances_[id]; }
    const std::vector<InstanceState>& instances() const { return instances_; }
    std::vector<InstanceState>& instances() { return instances_; }

    InstanceId add_instance(ModelIdx m, GpuIdx g, RegionIdx r, InstanceRole role, PoolTag pool,
                            std::uint64_t capacity_bytes, SimTime now);

    void set_role(InstanceId id, InstanceRole role, SimTime now);
    void set_model(InstanceId id, ModelIdx m, std::uint64_t capacity_bytes);

    // Private instance ids of a (model, region) endpoint, ascending,
    // including draining ones.
    const std::vector<InstanceId>& private_ids(ModelIdx m, RegionIdx r) const {
        return endpoint_private_[static_cast<std::size_t>(m) * num_regions_ + r];
    }

    const std::vector<InstanceId>& spot_pool(RegionIdx r) const { return spot_[r]; }

    // Live non-draining serving instances, optionally restricted to a silo pool.
    int private_count(ModelIdx m, RegionIdx r, PoolTag pool = PoolTag::Shared) const;
    // In-flight provisionings; pool filter mirrors private_count (Shared = all).
    int provisioning_count(ModelIdx m, RegionIdx r, PoolTag pool = PoolTag::Shared) const {
        std::size_t base = (static_cast<std::size_t>(m) * num_regions_ + r) * 3;
        if (pool != PoolTag::Shared) return prov_count_[base + static_cast<std::size_t>(pool)];
        return prov_count_[base] + prov_count_[base + 1] + prov_count_[base + 2];
    }
    int region_vm_count(RegionIdx r) const { return region_vms_[r]; }

    std::size_t num_models() const { return num_models_; }
    std::size_t num_regions() const { return num_regions_; }

private:
    void index_add(const InstanceState& inst);
    void index_remove(const InstanceState& inst);

    std::size_t num_models_;
    std::size_t num_regions_;
    std::vector<InstanceState> instances_;
    std::vector<std::vector<InstanceId>> endpoint_private_;
    std::vector<std::vector<InstanceId>> spot_;
    std::vector<int> region_vms_;
    std::vector<int> prov_count_;  // per (model, region, pool)
};

}  // namespace fleetsim

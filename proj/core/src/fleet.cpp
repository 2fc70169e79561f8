#include "fleetsim/fleet.hpp"

#include <algorithm>

namespace fleetsim {

InstanceId FleetState::add_instance(ModelIdx m, GpuIdx g, RegionIdx r, InstanceRole role,
                                    PoolTag pool, std::uint64_t capacity_bytes, SimTime now) {
    InstanceState inst;
    inst.id = static_cast<InstanceId>(instances_.size());
    inst.model = m;
    inst.gpu = g;
    inst.region = r;
    inst.role = role;
    inst.pool = pool;
    inst.effective_capacity_bytes = capacity_bytes;
    inst.role_since = now;
    instances_.push_back(inst);
    index_add(instances_.back());
    ++region_vms_[r];
    return inst.id;
}

void FleetState::index_add(const InstanceState& inst) {
    if (inst.role == InstanceRole::Private) {
        auto& v = endpoint_private_[static_cast<std::size_t>(inst.model) * num_regions_ +
                                    inst.region];
        v.insert(std::lower_bound(v.begin(), v.end(), inst.id), inst.id);
    } else if (inst.role == InstanceRole::Spot) {
        auto& v = spot_[inst.region];
        v.insert(std::lower_bound(v.begin(), v.end(), inst.id), inst.id);
    } else if (inst.role == InstanceRole::Provisioning) {
        ++prov_count_[(static_cast<std::size_t>(inst.model) * num_regions_ + inst.region) * 3 +
                      static_cast<std::size_t>(inst.pool)];
    }  // Retired: indexed nowhere
}

void FleetState::index_remove(const InstanceState& inst) {
    auto erase_from = [&](std::vector<InstanceId>& v) {
        auto it = std::lower_bound(v.begin(), v.end(), inst.id);
        if (it != v.end() && *it == inst.id) v.erase(it);
    };
    if (inst.role == InstanceRole::Private)
        erase_from(endpoint_private_[static_cast<std::size_t>(inst.model) * num_regions_ +
                                     inst.region]);
    else if (inst.role == InstanceRole::Spot)
        erase_from(spot_[inst.region]);
    else if (inst.role == InstanceRole::Provisioning)
        --prov_count_[(static_cast<std::size_t>(inst.model) * num_regions_ + inst.region) * 3 +
                      static_cast<std::size_t>(inst.pool)];
}

void FleetState::set_role(InstanceId id, InstanceRole role, SimTime now) {
    InstanceState& inst = instances_[id];
    if (inst.role == role) return;
    index_remove(inst);
    if (role == InstanceRole::Retired) --region_vms_[inst.region];
    if (inst.role == InstanceRole::Retired) ++region_vms_[inst.region];
    inst.role = role;
    inst.role_since = now;
    index_add(inst);
}

void FleetState::set_model(InstanceId id, ModelIdx m, std::uint64_t capacity_bytes) {
    InstanceState& inst = instances_[id];
    index_remove(inst);
    inst.model = m;
    inst.effective_capacity_bytes = capacity_bytes;
    index_add(inst);
}

int FleetState::private_count(ModelIdx m, RegionIdx r, PoolTag pool) const {
    int n = 0;
    for (InstanceId id : private_ids(m, r)) {
        const auto& inst = instances_[id];
        if (inst.draining) continue;
        if (pool != PoolTag::Shared && inst.pool != pool) continue;
        ++n;
    }
    return n;
}

}  // namespace fleetsim

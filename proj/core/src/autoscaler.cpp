#include "fleetsim/autoscaler.hpp"

#include <algorithm>
#include <limits>

namespace fleetsim {

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Siloed: return "siloed";
        case Strategy::Reactive: return "reactive";
        case Strategy::LT_I: return "lt-i";
        case Strategy::LT_U: return "lt-u";
        case Strategy::LT_UA: return "lt-ua";
        case Strategy::Static: return "static";
    }
    return "?";
}

std::optional<Strategy> parse_strategy(const std::string& s) {
    if (s == "siloed") return Strategy::Siloed;
    if (s == "reactive") return Strategy::Reactive;
    if (s == "lt-i") return Strategy::LT_I;
    if (s == "lt-u") return Strategy::LT_U;
    if (s == "lt-ua") return Strategy::LT_UA;
    if (s == "static") return Strategy::Static;
    return std::nullopt;
}

Autoscaler::Autoscaler(const Catalog& cat, ScalerConfig cfg)
    : cat_(cat),
      cfg_(cfg),
      num_regions_(cat.regions.size()),
      endpoints_(cat.models.size() * cat.regions.size()) {}

int Autoscaler::live_count(const Simulator& sim, ModelIdx m, RegionIdx r, PoolTag pool) const {
    // Count in-flight provisionings too, or a slow provision triggers a storm.
    return sim.fleet().private_count(m, r, pool) + sim.fleet().provisioning_count(m, r, pool);
}

bool Autoscaler::scale_up(Simulator& sim, ModelIdx m, RegionIdx r, PoolTag pool,
                          const char* reason) {
    // The naive baselines predate the warm spot pool: every scale-up pays the
    // full fresh-VM acquisition and deployment delay.
    bool naive = cfg_.strategy == Strategy::Reactive || cfg_.strategy == Strategy::Siloed;
    auto source = naive ? std::optional<ProvisionSource>(ProvisionSource::FreshVM)
                        : sim.best_source(m, r);
    if (!source) return false;
    GpuIdx g = sim.default_gpu(m);
    if (!sim.provision_instance(m, r, g, *source, pool)) return false;
    sim.ledger().scale_events.push_back({sim.now(), m, r, +1, reason});
    return true;
}

bool Autoscaler::scale_down(Simulator& sim, ModelIdx m, RegionIdx r, PoolTag pool,
                            const char* reason) {
    // Victim: least in-flight work, ties to the lowest id; drained then donated.
    InstanceId victim = -1;
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (InstanceId id : sim.fleet().private_ids(m, r)) {
        const auto& inst = sim.fleet().at(id);
        if (inst.draining) continue;
        if (pool != PoolTag::Shared && inst.pool != pool) continue;
        if (inst.remaining_tokens < best) {
            best = inst.remaining_tokens;
            victim = id;
        }
    }
    if (victim < 0) return false;
    bool naive = cfg_.strategy == Strategy::Reactive || cfg_.strategy == Strategy::Siloed;
    if (naive)
        sim.request_drain_and_retire(victim);
    else
        sim.request_drain_and_donate(victim);
    sim.ledger().scale_events.push_back({sim.now(), m, r, -1, reason});
    return true;
}

void Autoscaler::reactive_endpoint(Simulator& sim, ModelIdx m, RegionIdx r, PoolTag pool,
                                   SimTime now, SimTime& last_action) {
    auto util = effective_utilization(sim.fleet(), m, r, pool);
    if (!util || !cooled(last_action, now)) return;
    // Naive baseline: decisions see only serving instances. Capacity already
    // being provisioned is invisible, so ramps trigger scaling storms.
    int n = sim.fleet().private_count(m, r, pool);
    if (*util > cfg_.up_threshold) {
        if (scale_up(sim, m, r, pool, "reactive-up")) last_action = now;
    } else if (*util < cfg_.down_threshold && n > cfg_.min_per_endpoint) {
        if (scale_down(sim, m, r, pool, "reactive-down")) last_action = now;
    }
}

double Autoscaler::demand_ratio(const Simulator& sim, ModelIdx m, RegionIdx r,
                                SimTime now) const {
    const EndpointState& st = endpoints_[static_cast<std::size_t>(m) * num_regions_ + r];
    if (st.predicted.empty()) return 1.0;
    std::size_t minute = static_cast<std::size_t>(
        std::clamp<std::int64_t>((now - st.plan_start) / kMsPerMinute, 0,
                                 static_cast<std::int64_t>(st.predicted.size()) - 1));
    double predicted = st.predicted[minute];
    double observed = sim.observed_tps(m, r, cfg_.observed_window_min);
    if (predicted <= 1e-9) return observed > 1e-9 ? std::numeric_limits<double>::infinity() : 1.0;
    return observed / predicted;
}

void Autoscaler::lt_endpoint(Simulator& sim, ModelIdx m, RegionIdx r, SimTime now) {
    EndpointState& st = ep(m, r);
    if (st.target < 0 || !cooled(st.last_action, now)) return;
    auto util_opt = effective_utilization(sim.fleet(), m, r, PoolTag::Shared);
    if (!util_opt) return;
    double util = *util_opt;
    int n = live_count(sim, m, r, PoolTag::Shared);

    if (n < st.target) {
        if (util > cfg_.up_threshold && scale_up(sim, m, r, PoolTag::Shared, "lt-up"))
            st.last_action = now;
        return;
    }
    if (n > st.target) {
        if (util < cfg_.down_threshold && n > cfg_.min_per_endpoint &&
            scale_down(sim, m, r, PoolTag::Shared, "lt-down"))
            st.last_action = now;
        return;
    }

    // n == target: LT-UA may continue past the plan in the hour's tail window.
    if (cfg_.strategy != Strategy::LT_UA) return;
    int minute_of_hour = static_cast<int>((now / kMsPerMinute) % 60);
    if (minute_of_hour < 60 - cfg_.lt_ua_tail_min) return;
    double ratio = demand_ratio(sim, m, r, now);
    if (util > cfg_.up_threshold && ratio >= cfg_.over_factor) {
        if (scale_up(sim, m, r, PoolTag::Shared, "lt-ua-over")) st.last_action = now;
    } else if (util < cfg_.down_threshold && ratio <= cfg_.under_factor) {
        if (n > cfg_.min_per_endpoint) {
            if (scale_down(sim, m, r, PoolTag::Shared, "lt-ua-under")) st.last_action = now;
        } else {
            ++floor_conflicts_;
            sim.ledger().lt_ua_floor_conflicts = floor_conflicts_;
        }
    }
}

void Autoscaler::on_utilization_sample(Simulator& sim, SimTime now) {
    if (cfg_.strategy == Strategy::Static) return;
    const std::size_t nm = cat_.models.size(), nr = cat_.regions.size();
    for (std::size_t mi = 0; mi < nm; ++mi) {
        for (std::size_t ri = 0; ri < nr; ++ri) {
            ModelIdx m = static_cast<ModelIdx>(mi);
            RegionIdx r = static_cast<RegionIdx>(ri);
            EndpointState& st = ep(m, r);
            switch (cfg_.strategy) {
                case Strategy::Siloed:
                    reactive_endpoint(sim, m, r, PoolTag::IwOnly, now, st.last_action);
                    reactive_endpoint(sim, m, r, PoolTag::NiwOnly, now, st.last_action_niw);
                    break;
                case Strategy::Reactive:
                    reactive_endpoint(sim, m, r, PoolTag::Shared, now, st.last_action);
                    break;
                case Strategy::LT_I:
                    break;  // acts only at plan arrival
                case Strategy::LT_U:
                case Strategy::LT_UA:
                    lt_endpoint(sim, m, r, now);
                    break;
                case Strategy::Static:
                    break;
            }
        }
    }
}

void Autoscaler::set_plan_target(Simulator& sim, ModelIdx m, RegionIdx r, int target) {
    EndpointState& st = ep(m, r);
    st.target = std::max(target, cfg_.min_per_endpoint);
    if (cfg_.strategy != Strategy::LT_I) return;
    // LT-I: jump to the target immediately.
    int guard = 0;
    while (live_count(sim, m, r, PoolTag::Shared) < st.target && guard++ < 1024) {
        if (!scale_up(sim, m, r, PoolTag::Shared, "lt-i-up")) break;
    }
    guard = 0;
    while (live_count(sim, m, r, PoolTag::Shared) > st.target && guard++ < 1024) {
        if (!scale_down(sim, m, r, PoolTag::Shared, "lt-i-down")) break;
    }
}

void Autoscaler::set_predicted_minutes(ModelIdx m, RegionIdx r, std::vector<double> minutes,
                                       SimTime plan_start) {
    EndpointState& st = ep(m, r);
    st.predicted = std::move(minutes);
    st.plan_start = plan_start;
}

}  // namespace fleetsim

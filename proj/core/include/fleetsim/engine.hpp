#pragma once
#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <vector>

#include "fleetsim/domain.hpp"
#include "fleetsim/fleet.hpp"
#include "fleetsim/forecast.hpp"
#include "fleetsim/metrics.hpp"
#include "fleetsim/niw_queue.hpp"
#include "fleetsim/perf_model.hpp"
#include "fleetsim/rng.hpp"
#include "fleetsim/routing.hpp"

namespace fleetsim {

enum class EventKind : std::uint8_t {
    RequestArrival,
    BatchComplete,
    TokenEmitted,
    ProvisioningDone,
    ScalerTick,
    ForecastTick,
    QueueManagerSignal,
    UtilizationSample,
};

struct Event {
    SimTime fire_ts = 0;
    std::uint64_t seq = 0;  // schedule-order tiebreaker
    EventKind kind = EventKind::RequestArrival;
    std::int64_t a = 0;  // payload: request idx / instance / model
    std::int64_t b = 0;  // payload: phase / epoch / region
    std::int64_t c = 0;  // payload: instance / sub-kind
};

struct EventAfter {
    bool operator()(const Event& x, const Event& y) const {
        if (x.fire_ts != y.fire_ts) return x.fire_ts > y.fire_ts;
        return x.seq > y.seq;
    }
};

enum class ProvisionSource : std::uint8_t { SpotSameModel, SpotOtherModel, FreshVM };
const char* provision_source_name(ProvisionSource s);

enum class DonateError { NotDrained };

struct SimConfig {
    bool iter_decode = false;  // per-iteration token events instead of flow mode
    DurationMs utilization_sample_period = seconds(1);
    DurationMs scaler_tick_period = seconds(1);
    DurationMs forecast_tick_period = hours(1);
    DurationMs spot_switch_delay = seconds(60);
    // Spot reclaim delay: triangular, minutes scaled to ms.
    DurationMs spot_reclaim_min = 30'000;
    DurationMs spot_reclaim_mode = 60'000;
    DurationMs spot_reclaim_max = 300'000;
    int max_per_deployment = 3;
    int min_per_endpoint = 2;
    SchedulerConfig scheduler;
    RegionRoutingConfig routing;
    NiwQueueConfig niw;
    bool silo_pools = false;  // IW/NIW served from disjoint pools
    bool niw_defer = true;    // NIW goes through the deferred queue
    DurationMs niw_sweep_period = seconds(60);  // escalation / force-release cadence
    int drain_release_batch = 64;  // per-model NIW flush rate after the last arrival
    DurationMs reroute_retry = seconds(1);  // when no endpoint can serve yet
    bool check_invariants = false;  // verify memory accounting after every event
    std::uint64_t seed = 1;
    SimTime horizon = 0;  // 0 = last arrival; periodic ticks stop after this
};

class Simulator;

// Control-plane callbacks, invoked synchronously inside the event loop.
class ControlHooks {
public:
    virtual ~ControlHooks() = default;
    virtual void on_utilization_sample(Simulator&, SimTime) {}
    virtual void on_scaler_tick(Simulator&, SimTime) {}
    virtual void on_forecast_tick(Simulator&, SimTime) {}
};

class Simulator {
public:
    Simulator(const Catalog& cat, const ProfileTable& profiles, const CapacityTable& capacity,
              SimConfig cfg);

    const Catalog& catalog() const { return cat_; }
    const SimConfig& config() const { return cfg_; }
    SimConfig& config() { return cfg_; }
    FleetState& fleet() { return fleet_; }
    const FleetState& fleet() const { return fleet_; }
    SimTime now() const { return now_; }
    Rng& rng() { return rng_; }
    MetricsLedger& ledger() { return ledger_; }
    NiwQueueManager& niw() { return *niw_; }
    const CapacityTable& capacity() const { return capacity_; }
    const ProfileTable& profiles() const { return profiles_; }
    std::vector<Request>& requests() { return requests_; }

    void add_hook(ControlHooks* hook) { hooks_.push_back(hook); }

    // Fleet construction before run().
    InstanceId add_initial_instance(ModelIdx m, RegionIdx r, GpuIdx g,
                                    PoolTag pool = PoolTag::Shared);
    InstanceId add_initial_spot(RegionIdx r, GpuIdx g, ModelIdx resident_model);

    std::uint64_t kv_bytes_per_token(ModelIdx m) const;
    std::uint64_t effective_capacity_bytes(ModelIdx m, GpuIdx g) const;
    // KV bytes of one request having generated `generated` tokens so far.
    std::uint64_t kv_footprint(const Request& r, double generated) const;
    // Admission reserves the full eventual footprint up front.
    std::uint64_t reserve_bytes(const Request& r) const;

    // Scale-out plumbing used by the autoscaler.
    std::optional<ProvisionSource> best_source(ModelIdx m, RegionIdx r) const;
    std::optional<InstanceId> provision_instance(ModelIdx m, RegionIdx r, GpuIdx g,
                                                 ProvisionSource source,
                                                 PoolTag pool = PoolTag::Shared);
    // Idle instance: schedules the role switch; busy instance: NotDrained.
    std::optional<DonateError> donate_to_spot(InstanceId id);
    // Mark as drain-then-donate victim; donation happens when it runs dry.
    void request_drain_and_donate(InstanceId id);
    // Naive-baseline scale-down: the VM is terminated once drained.
    void request_drain_and_retire(InstanceId id);

    double endpoint_utilization(ModelIdx m, RegionIdx r, PoolTag pool = PoolTag::Shared) const;

    // Per-minute demand series (input+output tokens per second), by request
    // origin region. Completed minutes only.
    const TpsSeries& demand_series(ModelIdx m, RegionIdx r) const;
    const TpsSeries& niw_demand_series(ModelIdx m, RegionIdx r) const;
    // Trailing mean over the last `minutes` completed minutes.
    double observed_tps(ModelIdx m, RegionIdx r, int minutes) const;

    DurationMs estimate_service_ms(const Request& r) const;

    int outstanding() const { return outstanding_; }

    // Throws when any instance's reserved bytes disagree with its admitted
    // batch, or exceed its capacity.
    void verify_memory_accounting() const;

    // Cheapest GPU type that can run the model, for default deployments.
    GpuIdx default_gpu(ModelIdx m) const;

    MetricsLedger run(std::vector<Request> requests);

private:
    void schedule(SimTime ts, EventKind kind, std::int64_t a = 0, std::int64_t b = 0,
                  std::int64_t c = 0);
    void dispatch(const Event& ev);
    void flush_minutes(SimTime ts);
    bool ticks_alive() const;

    void handle_arrival(RequestIdx idx);
    void route_request(RequestIdx idx, std::optional<RegionIdx> forced_region);
    void enqueue_at_instance(RequestIdx idx, InstanceId inst_id);
    void try_admit(InstanceId inst_id);
    void maybe_start_prefill(InstanceId inst_id);
    void on_prefill_done(InstanceId inst_id);
    void decode_advance(InstanceState& inst, SimTime now);
    void decode_recompute(InstanceState& inst);
    void on_decode_event(InstanceId inst_id, std::uint64_t epoch);
    void on_iter_event(InstanceId inst_id, std::uint64_t epoch);
    void complete_request(InstanceState& inst, RequestIdx idx);
    void on_provisioning_done(InstanceId inst_id, bool donation);
    void on_utilization_sample_event();
    void on_queue_signal(ModelIdx m, RegionIdx r);
    void sweep_niw(SimTime now);
    void change_role(InstanceId id, InstanceRole role);
    void maybe_finish_drain(InstanceId id);
    PoolTag pool_for(const Request& r) const;
    DurationMs deploy_delay(ModelIdx m, RegionIdx r) const;
    DurationMs max_service_ms(ModelIdx m) const;

    const Catalog& cat_;
    const ProfileTable& profiles_;
    const CapacityTable& capacity_;
    SimConfig cfg_;
    FleetState fleet_;
    Rng rng_;
    MetricsLedger ledger_;
    std::unique_ptr<NiwQueueManager> niw_;
    std::vector<ControlHooks*> hooks_;

    std::priority_queue<Event, std::vector<Event>, EventAfter> events_;
    std::uint64_t next_seq_ = 0;
    SimTime now_ = 0;
    SimTime horizon_ = 0;
    SimTime next_sweep_ts_ = 0;
    SimTime last_arrival_ts_ = 0;
    int outstanding_ = 0;

    std::vector<Request> requests_;
    std::vector<RegionIdx> served_region_;

    // Open ledger role interval per instance, by index into role_intervals.
    std::vector<std::size_t> open_interval_;
    struct PendingProvision {
        ModelIdx model;
        RegionIdx region;
        SimTime start_ts;
        std::string source;
    };
    std::vector<std::optional<PendingProvision>> pending_provision_;

    // Demand accounting.
    std::vector<TpsSeries> demand_;      // (model x region)
    std::vector<TpsSeries> niw_demand_;  // (model x region)
    std::vector<double> minute_tokens_;
    std::vector<double> minute_niw_tokens_;
    std::int64_t minute_cursor_ = 0;

    mutable std::vector<DurationMs> max_service_cache_;
    std::int64_t base_extrapolations_ = 0;
};

}  // namespace fleetsim

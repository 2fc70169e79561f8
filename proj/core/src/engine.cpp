#include "fleetsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fleetsim {

const char* provision_source_name(ProvisionSource s) {
    switch (s) {
        case ProvisionSource::SpotSameModel: return "spot-same";
        case ProvisionSource::SpotOtherModel: return "spot-other";
        case ProvisionSource::FreshVM: return "fresh-vm";
    }
    return "?";
}

Simulator::Simulator(const Catalog& cat, const ProfileTable& profiles,
                     const CapacityTable& capacity, SimConfig cfg)
    : cat_(cat),
      profiles_(profiles),
      capacity_(capacity),
      cfg_(std::move(cfg)),
      fleet_(cat.models.size(), cat.regions.size()),
      rng_(cfg_.seed),
      niw_(std::make_unique<NiwQueueManager>(cat.models.size(), cfg_.niw)),
      demand_(cat.models.size() * cat.regions.size()),
      niw_demand_(cat.models.size() * cat.regions.size()),
      minute_tokens_(cat.models.size() * cat.regions.size(), 0.0),
      minute_niw_tokens_(cat.models.size() * cat.regions.size(), 0.0),
      max_service_cache_(cat.models.size(), kUnset) {
    base_extrapolations_ = profiles_.extrapolation_count();
}

GpuIdx Simulator::default_gpu(ModelIdx m) const {
    for (std::size_t g = 0; g < cat_.gpus.size(); ++g) {
        GpuIdx gi = static_cast<GpuIdx>(g);
        if (capacity_.has_pair(m, gi) && profiles_.has_pair(m, gi)) return gi;
    }
    throw std::runtime_error("no deployable gpu for model " + cat_.models[m].id);
}

std::uint64_t Simulator::effective_capacity_bytes(ModelIdx m, GpuIdx g) const {
    std::uint64_t total = cat_.gpus[g].vm_total_memory_bytes;
    std::uint64_t weights = cat_.models[m].weights_bytes;
    if (weights >= total)
        throw std::runtime_error("model " + cat_.models[m].id + " does not fit on " +
                                 cat_.gpus[g].id);
    return total - weights;
}

std::uint64_t Simulator::kv_bytes_per_token(ModelIdx m) const {
    if (cat_.models[m].kv_bytes_per_token > 0) return cat_.models[m].kv_bytes_per_token;
    // Default: a 3-request x 8k-token batch occupies 25% of effective memory.
    return std::max<std::uint64_t>(1, effective_capacity_bytes(m, default_gpu(m)) / 96000);
}

std::uint64_t Simulator::kv_footprint(const Request& r, double generated) const {
    return static_cast<std::uint64_t>(
        (static_cast<double>(r.input_tokens) + generated) * kv_bytes_per_token(r.model));
}

std::uint64_t Simulator::reserve_bytes(const Request& r) const {
    return static_cast<std::uint64_t>(r.input_tokens + r.output_tokens) *
           kv_bytes_per_token(r.model);
}

InstanceId Simulator::add_initial_instance(ModelIdx m, RegionIdx r, GpuIdx g, PoolTag pool) {
    InstanceId id =
        fleet_.add_instance(m, g, r, InstanceRole::Private, pool, effective_capacity_bytes(m, g),
                            now_);
    open_interval_.push_back(ledger_.role_intervals.size());
    ledger_.role_intervals.push_back({id, m, r, InstanceRole::Private, now_, kUnset});
    pending_provision_.emplace_back();
    return id;
}

InstanceId Simulator::add_initial_spot(RegionIdx r, GpuIdx g, ModelIdx resident_model) {
    InstanceId id = fleet_.add_instance(resident_model, g, r, InstanceRole::Spot,
                                        PoolTag::Shared,
                                        effective_capacity_bytes(resident_model, g), now_);
    open_interval_.push_back(ledger_.role_intervals.size());
    ledger_.role_intervals.push_back({id, resident_model, r, InstanceRole::Spot, now_, kUnset});
    pending_provision_.emplace_back();
    return id;
}

void Simulator::change_role(InstanceId id, InstanceRole role) {
    InstanceState& inst = fleet_.at(id);
    if (inst.role == role) return;
    ledger_.role_intervals[open_interval_[id]].end_ts = now_;
    fleet_.set_role(id, role, now_);
    open_interval_[id] = ledger_.role_intervals.size();
    ledger_.role_intervals.push_back({id, inst.model, inst.region, role, now_, kUnset});
}

double Simulator::endpoint_utilization(ModelIdx m, RegionIdx r, PoolTag pool) const {
    return effective_utilization(fleet_, m, r, pool).value_or(0.0);
}

const TpsSeries& Simulator::demand_series(ModelIdx m, RegionIdx r) const {
    return demand_[static_cast<std::size_t>(m) * cat_.regions.size() + r];
}

const TpsSeries& Simulator::niw_demand_series(ModelIdx m, RegionIdx r) const {
    return niw_demand_[static_cast<std::size_t>(m) * cat_.regions.size() + r];
}

double Simulator::observed_tps(ModelIdx m, RegionIdx r, int minutes) const {
    return demand_series(m, r).tail_mean(static_cast<std::size_t>(minutes));
}

DurationMs Simulator::estimate_service_ms(const Request& r) const {
    GpuIdx g = default_gpu(r.model);
    double prefill = profiles_.prefill_time_ms(r.model, g, r.input_tokens);
    double iter = profiles_.decode_iteration_time_ms(
        r.model, g, 1.0, static_cast<double>(r.input_tokens) + r.output_tokens / 2.0);
    return static_cast<DurationMs>(std::llround(prefill + iter * r.output_tokens));
}

DurationMs Simulator::max_service_ms(ModelIdx m) const {
    if (max_service_cache_[m] != kUnset) return max_service_cache_[m];
    Request big;
    big.model = m;
    big.input_tokens = 128000;
    big.output_tokens = 128000;
    max_service_cache_[m] = estimate_service_ms(big);
    return max_service_cache_[m];
}

PoolTag Simulator::pool_for(const Request& r) const {
    if (!cfg_.silo_pools) return PoolTag::Shared;
    return r.tier == WorkloadTier::NIW ? PoolTag::NiwOnly : PoolTag::IwOnly;
}

DurationMs Simulator::deploy_delay(ModelIdx m, RegionIdx r) const {
    const ModelType& mt = cat_.models[m];
    return mt.weight_locality.count(r) ? mt.local_deploy_delay : mt.remote_deploy_delay;
}

void Simulator::schedule(SimTime ts, EventKind kind, std::int64_t a, std::int64_t b,
                         std::int64_t c) {
    events_.push(Event{ts, next_seq_++, kind, a, b, c});
}

bool Simulator::ticks_alive() const {
    return now_ < horizon_ || outstanding_ > 0;
}

void Simulator::flush_minutes(SimTime ts) {
    const std::size_t cells = minute_tokens_.size();
    while ((minute_cursor_ + 1) * kMsPerMinute <= ts) {
        for (std::size_t i = 0; i < cells; ++i) {
            demand_[i].push(minute_tokens_[i] / 60.0);
            niw_demand_[i].push(minute_niw_tokens_[i] / 60.0);
            minute_tokens_[i] = 0;
            minute_niw_tokens_[i] = 0;
        }
        ++minute_cursor_;
    }
}

// ---- request path -------------------------------------------------------

void Simulator::handle_arrival(RequestIdx idx) {
    const Request& r = requests_[idx];
    std::size_t cell = static_cast<std::size_t>(r.model) * cat_.regions.size() + r.client_region;
    double tokens = static_cast<double>(r.input_tokens) + r.output_tokens;
    minute_tokens_[cell] += tokens;
    if (r.tier == WorkloadTier::NIW) {
        minute_niw_tokens_[cell] += tokens;
        if (cfg_.niw_defer) {
            niw_->enqueue(idx, r.model);
            return;
        }
    }
    route_request(idx, std::nullopt);
}

void Simulator::route_request(RequestIdx idx, std::optional<RegionIdx> forced_region) {
    const Request& r = requests_[idx];
    PoolTag pool = pool_for(r);
    std::optional<RegionIdx> region = forced_region;
    if (!region) region = route_global_iw(r, fleet_, cfg_.routing, cat_, pool);
    if (region) {
        auto deps = endpoint_deployments(fleet_, r.model, *region, pool, cfg_.max_per_deployment);
        if (auto inst = route_to_instance(fleet_, deps)) {
            SimTime routed = now_ + cat_.regions[r.client_region].latency_to[*region];
            requests_[idx].routed_ts = routed;
            served_region_[idx] = *region;
            schedule(routed, EventKind::RequestArrival, idx, 1, *inst);
            return;
        }
    }
    schedule(now_ + cfg_.reroute_retry, EventKind::RequestArrival, idx, 2);
}

void Simulator::enqueue_at_instance(RequestIdx idx, InstanceId inst_id) {
    InstanceState& inst = fleet_.at(inst_id);
    if (!inst.accepts_requests() || inst.model != requests_[idx].model) {
        route_request(idx, std::nullopt);  // instance changed hands in flight
        return;
    }
    const Request& r = requests_[idx];
    inst.local_queue.push_back(idx);
    inst.remaining_tokens += r.input_tokens + r.output_tokens;
    try_admit(inst_id);
}

void Simulator::try_admit(InstanceId inst_id) {
    InstanceState& inst = fleet_.at(inst_id);
    if (inst.role != InstanceRole::Private || inst.local_queue.empty()) {
        maybe_start_prefill(inst_id);
        return;
    }
    order_queue(inst.local_queue, requests_, now_, cfg_.scheduler);
    std::vector<RequestIdx> still_waiting;
    for (RequestIdx idx : inst.local_queue) {
        const Request& r = requests_[idx];
        std::uint64_t f = reserve_bytes(r);
        if (inst.effective_used_bytes + f <= inst.effective_capacity_bytes) {
            inst.effective_used_bytes += f;
            if (requests_[idx].dequeued_ts == kUnset) requests_[idx].dequeued_ts = now_;
            inst.current_batch.push_back(BatchSlot{idx, 0.0, false});
            inst.prefill_pending.push_back(idx);
        } else {
            still_waiting.push_back(idx);
        }
    }
    inst.local_queue = std::move(still_waiting);
    maybe_start_prefill(inst_id);
}

void Simulator::maybe_start_prefill(InstanceId inst_id) {
    InstanceState& inst = fleet_.at(inst_id);
    if (inst.prefill_busy || inst.prefill_pending.empty()) return;
    inst.prefill_active = std::move(inst.prefill_pending);
    inst.prefill_pending.clear();
    inst.prefill_busy = true;
    std::int64_t prompt_tokens = 0;
    for (RequestIdx idx : inst.prefill_active) prompt_tokens += requests_[idx].input_tokens;
    double dur = profiles_.prefill_time_ms(inst.model, inst.gpu, prompt_tokens);
    schedule(now_ + std::max<SimTime>(0, std::llround(dur)), EventKind::BatchComplete, inst_id,
             0, 0);
}

void Simulator::on_prefill_done(InstanceId inst_id) {
    InstanceState& inst = fleet_.at(inst_id);
    decode_advance(inst, now_);
    for (RequestIdx idx : inst.prefill_active) {
        requests_[idx].first_token_ts = now_;
        for (auto& slot : inst.current_batch) {
            if (slot.req == idx) {
                slot.prefilled = true;
                slot.emitted = 1.0;
                break;
            }
        }
    }
    inst.prefill_active.clear();
    inst.prefill_busy = false;
    decode_recompute(inst);
    maybe_start_prefill(inst_id);
}

void Simulator::decode_advance(InstanceState& inst, SimTime now) {
    SimTime dt = now - inst.decode_last_update;
    if (dt > 0 && inst.decode_iter_ms > 0) {
        double tokens = static_cast<double>(dt) / inst.decode_iter_ms;
        for (auto& slot : inst.current_batch) {
            if (!slot.prefilled) continue;
            double out = requests_[slot.req].output_tokens;
            slot.emitted = std::min(out, slot.emitted + tokens);
        }
    }
    inst.decode_last_update = now;
}

void Simulator::complete_request(InstanceState& inst, RequestIdx idx) {
    Request& r = requests_[idx];
    r.completed_ts = now_;
    inst.effective_used_bytes -= reserve_bytes(r);
    inst.remaining_tokens -= r.input_tokens + r.output_tokens;
    --outstanding_;
}

void Simulator::decode_recompute(InstanceState& inst) {
    // Completions first: a slot is done when its full output has been emitted.
    bool completed = false;
    for (auto it = inst.current_batch.begin(); it != inst.current_batch.end();) {
        if (it->prefilled &&
            it->emitted >= static_cast<double>(requests_[it->req].output_tokens) - 1e-9) {
            complete_request(inst, it->req);
            it = inst.current_batch.erase(it);
            completed = true;
        } else {
            ++it;
        }
    }

    int batch = 0;
    double tokens_in_flight = 0, remaining = 0, min_remaining = 0;
    for (const auto& slot : inst.current_batch) {
        if (!slot.prefilled) continue;
        ++batch;
        tokens_in_flight += requests_[slot.req].input_tokens + slot.emitted;
        double rem = requests_[slot.req].output_tokens - slot.emitted;
        remaining += rem;
        if (batch == 1 || rem < min_remaining) min_remaining = rem;
    }

    ++inst.decode_epoch;
    if (batch == 0) {
        inst.decode_iter_ms = 0;
    } else if (cfg_.iter_decode) {
        inst.decode_iter_ms = 0;  // advance happens one iteration at a time
        double iter =
            profiles_.decode_iteration_time_ms(inst.model, inst.gpu, batch, tokens_in_flight);
        inst.decode_exact_ts = static_cast<double>(now_) + iter;
        schedule(std::max(now_, static_cast<SimTime>(std::llround(inst.decode_exact_ts))),
                 EventKind::TokenEmitted, inst.id, static_cast<std::int64_t>(inst.decode_epoch));
    } else {
        // Evaluate the shared iteration latency at the batch's midpoint
        // tokens-in-flight so linear decode grids integrate exactly.
        double mean_rem = remaining / batch;
        double iter = profiles_.decode_iteration_time_ms(
            inst.model, inst.gpu, batch, tokens_in_flight + batch * mean_rem / 2.0);
        inst.decode_iter_ms = iter;
        SimTime dt = std::max<SimTime>(1, static_cast<SimTime>(std::ceil(min_remaining * iter)));
        schedule(now_ + dt, EventKind::BatchComplete, inst.id,
                 static_cast<std::int64_t>(inst.decode_epoch), 1);
    }

    if (completed) {
        try_admit(inst.id);
        maybe_finish_drain(inst.id);
    }
}

void Simulator::on_decode_event(InstanceId inst_id, std::uint64_t epoch) {
    InstanceState& inst = fleet_.at(inst_id);
    if (epoch != inst.decode_epoch) return;  // superseded by a membership change
    decode_advance(inst, now_);
    decode_recompute(inst);
}

void Simulator::on_iter_event(InstanceId inst_id, std::uint64_t epoch) {
    InstanceState& inst = fleet_.at(inst_id);
    if (epoch != inst.decode_epoch) return;
    inst.decode_last_update = now_;
    bool any_done = false;
    int batch = 0;
    double tokens_in_flight = 0;
    for (auto& slot : inst.current_batch) {
        if (!slot.prefilled) continue;
        double out = requests_[slot.req].output_tokens;
        slot.emitted = std::min(out, slot.emitted + 1.0);
        if (slot.emitted >= out - 1e-9) any_done = true;
        ++batch;
        tokens_in_flight += requests_[slot.req].input_tokens + slot.emitted;
    }
    if (any_done || batch == 0) {
        decode_recompute(inst);  // restarts the iteration clock
        return;
    }
    double iter =
        profiles_.decode_iteration_time_ms(inst.model, inst.gpu, batch, tokens_in_flight);
    inst.decode_exact_ts += iter;
    ++inst.decode_epoch;
    schedule(std::max(now_, static_cast<SimTime>(std::llround(inst.decode_exact_ts))),
             EventKind::TokenEmitted, inst_id, static_cast<std::int64_t>(inst.decode_epoch));
}

// ---- provisioning and spot pool -----------------------------------------

std::optional<ProvisionSource> Simulator::best_source(ModelIdx m, RegionIdx r) const {
    const auto& pool = fleet_.spot_pool(r);
    for (InstanceId id : pool)
        if (fleet_.at(id).model == m) return ProvisionSource::SpotSameModel;
    if (!pool.empty()) return ProvisionSource::SpotOtherModel;
    if (fleet_.region_vm_count(r) < cat_.regions[r].capacity_limit)
        return ProvisionSource::FreshVM;
    return std::nullopt;
}

std::optional<InstanceId> Simulator::provision_instance(ModelIdx m, RegionIdx r, GpuIdx g,
                                                        ProvisionSource source, PoolTag pool) {
    DurationMs reclaim = static_cast<DurationMs>(
        std::llround(rng_.triangular(static_cast<double>(cfg_.spot_reclaim_min),
                                     static_cast<double>(cfg_.spot_reclaim_mode),
                                     static_cast<double>(cfg_.spot_reclaim_max))));
    InstanceId id = -1;
    DurationMs delay = 0;
    switch (source) {
        case ProvisionSource::SpotSameModel: {
            for (InstanceId sid : fleet_.spot_pool(r)) {
                if (fleet_.at(sid).model == m) {
                    id = sid;
                    break;
                }
            }
            if (id < 0) return std::nullopt;
            fleet_.at(id).pool = pool;  // tag before indexing as Provisioning
            change_role(id, InstanceRole::Provisioning);
            delay = reclaim;
            break;
        }
        case ProvisionSource::SpotOtherModel: {
            const auto& sp = fleet_.spot_pool(r);
            if (sp.empty()) return std::nullopt;
            id = sp.front();
            fleet_.at(id).pool = pool;
            change_role(id, InstanceRole::Provisioning);  // before the model swap
            fleet_.set_model(id, m, effective_capacity_bytes(m, fleet_.at(id).gpu));
            delay = reclaim + deploy_delay(m, r);
            break;
        }
        case ProvisionSource::FreshVM: {
            if (fleet_.region_vm_count(r) >= cat_.regions[r].capacity_limit)
                return std::nullopt;
            id = fleet_.add_instance(m, g, r, InstanceRole::Provisioning, pool,
                                     effective_capacity_bytes(m, g), now_);
            open_interval_.push_back(ledger_.role_intervals.size());
            ledger_.role_intervals.push_back({id, m, r, InstanceRole::Provisioning, now_, kUnset});
            pending_provision_.emplace_back();
            delay = cat_.gpus[g].vm_acquire_delay + deploy_delay(m, r);
            break;
        }
    }
    InstanceState& inst = fleet_.at(id);
    inst.draining = false;
    inst.provisioning_done_ts = now_ + delay;
    pending_provision_[id] = PendingProvision{m, r, now_, provision_source_name(source)};
    schedule(now_ + delay, EventKind::ProvisioningDone, id, 0, 0);
    return id;
}

std::optional<DonateError> Simulator::donate_to_spot(InstanceId id) {
    InstanceState& inst = fleet_.at(id);
    if (inst.role != InstanceRole::Private) return DonateError::NotDrained;
    if (!inst.current_batch.empty() || !inst.local_queue.empty() || inst.prefill_busy)
        return DonateError::NotDrained;
    if (inst.provisioning_done_ts != kUnset) return std::nullopt;  // switch already pending
    inst.draining = true;
    inst.provisioning_done_ts = now_ + cfg_.spot_switch_delay;
    schedule(inst.provisioning_done_ts, EventKind::ProvisioningDone, id, 0, 1);
    return std::nullopt;
}

void Simulator::request_drain_and_donate(InstanceId id) {
    fleet_.at(id).draining = true;
    maybe_finish_drain(id);
}

void Simulator::request_drain_and_retire(InstanceId id) {
    fleet_.at(id).retire_on_drain = true;
    fleet_.at(id).draining = true;
    maybe_finish_drain(id);
}

void Simulator::maybe_finish_drain(InstanceId id) {
    InstanceState& inst = fleet_.at(id);
    if (!inst.draining || inst.role != InstanceRole::Private) return;
    if (!inst.current_batch.empty() || !inst.local_queue.empty() || inst.prefill_busy) return;
    if (inst.provisioning_done_ts != kUnset) return;
    inst.provisioning_done_ts = now_ + cfg_.spot_switch_delay;
    schedule(inst.provisioning_done_ts, EventKind::ProvisioningDone, id, 0, 1);
}

void Simulator::on_provisioning_done(InstanceId inst_id, bool donation) {
    InstanceState& inst = fleet_.at(inst_id);
    inst.provisioning_done_ts = kUnset;
    if (donation) {
        inst.draining = false;
        bool retire = inst.retire_on_drain;
        inst.retire_on_drain = false;
        change_role(inst_id, retire ? InstanceRole::Retired : InstanceRole::Spot);
        return;
    }
    change_role(inst_id, InstanceRole::Private);
    if (pending_provision_[inst_id]) {
        const auto& p = *pending_provision_[inst_id];
        ledger_.provisionings.push_back({inst_id, p.model, p.region,
                                         cat_.models[p.model].gpus_per_instance, p.start_ts,
                                         now_, p.source});
        pending_provision_[inst_id].reset();
    }
}

// ---- periodic events ----------------------------------------------------

void Simulator::on_utilization_sample_event() {
    const std::size_t nm = cat_.models.size(), nr = cat_.regions.size();
    for (std::size_t m = 0; m < nm; ++m) {
        for (std::size_t r = 0; r < nr; ++r) {
            ModelIdx mi = static_cast<ModelIdx>(m);
            RegionIdx ri = static_cast<RegionIdx>(r);
            int count = fleet_.private_count(mi, ri);
            if (count == 0 && fleet_.private_ids(mi, ri).empty()) continue;
            double util = endpoint_utilization(mi, ri);
            ledger_.utilization_samples.push_back({now_, mi, ri, util, count});
            if (cfg_.niw_defer && niw_->queued(mi) > 0) {
                PoolTag pool = cfg_.silo_pools ? PoolTag::NiwOnly : PoolTag::Shared;
                auto pooled = effective_utilization(fleet_, mi, ri, pool);
                if (pooled && *pooled < cfg_.niw.sig_low)
                    schedule(now_, EventKind::QueueManagerSignal, mi, ri);
            }
        }
    }
    for (auto* h : hooks_) h->on_utilization_sample(*this, now_);
    if (ticks_alive())
        schedule(now_ + cfg_.utilization_sample_period, EventKind::UtilizationSample);
}

void Simulator::on_queue_signal(ModelIdx m, RegionIdx r) {
    PoolTag pool = cfg_.silo_pools ? PoolTag::NiwOnly : PoolTag::Shared;
    auto util = effective_utilization(fleet_, m, r, pool);
    if (!util) return;
    for (RequestIdx idx : niw_->on_capacity_signal(m, *util)) route_request(idx, r);
}

void Simulator::sweep_niw(SimTime now) {
    if (!cfg_.niw_defer || niw_->total_queued() == 0) return;
    niw_->escalate(requests_, now);
    DurationMs max_est = 0;
    for (std::size_t m = 0; m < cat_.models.size(); ++m)
        max_est = std::max(max_est, max_service_ms(static_cast<ModelIdx>(m)));
    auto est = [this](RequestIdx idx) { return estimate_service_ms(requests_[idx]); };
    std::vector<RequestIdx> released = niw_->force_release(requests_, now, est, max_est);
    if (now >= last_arrival_ts_) {
        // Workload over: flush the queue at a steady rate so the run drains.
        for (std::size_t m = 0; m < cat_.models.size(); ++m)
            for (RequestIdx idx : niw_->release(static_cast<ModelIdx>(m),
                                                static_cast<std::size_t>(cfg_.drain_release_batch)))
                released.push_back(idx);
    }
    for (RequestIdx idx : released) {
        // Send to the least-utilized region hosting the model.
        ModelIdx m = requests_[idx].model;
        PoolTag pool = pool_for(requests_[idx]);
        std::optional<RegionIdx> best;
        double best_util = 0;
        for (std::size_t r = 0; r < cat_.regions.size(); ++r) {
            RegionIdx ri = static_cast<RegionIdx>(r);
            if (fleet_.private_count(m, ri, pool) == 0) continue;
            double u = endpoint_utilization(m, ri, pool);
            if (!best || u < best_util) {
                best = ri;
                best_util = u;
            }
        }
        if (best)
            route_request(idx, best);
        else
            route_request(idx, std::nullopt);
    }
}

void Simulator::verify_memory_accounting() const {
    for (const auto& inst : fleet_.instances()) {
        std::uint64_t expect = 0;
        for (const auto& slot : inst.current_batch) expect += reserve_bytes(requests_[slot.req]);
        if (expect != inst.effective_used_bytes)
            throw std::runtime_error("memory accounting mismatch on instance " +
                                     std::to_string(inst.id) + " at t=" + std::to_string(now_));
        if (inst.effective_used_bytes > inst.effective_capacity_bytes)
            throw std::runtime_error("memory over capacity on instance " +
                                     std::to_string(inst.id) + " at t=" + std::to_string(now_));
    }
}

// ---- main loop ----------------------------------------------------------

void Simulator::dispatch(const Event& ev) {
    switch (ev.kind) {
        case EventKind::RequestArrival:
            if (ev.b == 0)
                handle_arrival(static_cast<RequestIdx>(ev.a));
            else if (ev.b == 1)
                enqueue_at_instance(static_cast<RequestIdx>(ev.a),
                                    static_cast<InstanceId>(ev.c));
            else
                route_request(static_cast<RequestIdx>(ev.a), std::nullopt);
            break;
        case EventKind::BatchComplete:
            if (ev.c == 0)
                on_prefill_done(static_cast<InstanceId>(ev.a));
            else
                on_decode_event(static_cast<InstanceId>(ev.a), static_cast<std::uint64_t>(ev.b));
            break;
        case EventKind::TokenEmitted:
            on_iter_event(static_cast<InstanceId>(ev.a), static_cast<std::uint64_t>(ev.b));
            break;
        case EventKind::ProvisioningDone:
            on_provisioning_done(static_cast<InstanceId>(ev.a), ev.c == 1);
            break;
        case EventKind::ScalerTick:
            for (auto* h : hooks_) h->on_scaler_tick(*this, now_);
            if (now_ >= next_sweep_ts_) {
                sweep_niw(now_);
                next_sweep_ts_ = now_ + cfg_.niw_sweep_period;
            }
            if (ticks_alive()) schedule(now_ + cfg_.scaler_tick_period, EventKind::ScalerTick);
            break;
        case EventKind::ForecastTick:
            for (auto* h : hooks_) h->on_forecast_tick(*this, now_);
            if (ticks_alive()) schedule(now_ + cfg_.forecast_tick_period, EventKind::ForecastTick);
            break;
        case EventKind::QueueManagerSignal:
            on_queue_signal(static_cast<ModelIdx>(ev.a), static_cast<RegionIdx>(ev.b));
            break;
        case EventKind::UtilizationSample:
            on_utilization_sample_event();
            break;
    }
}

MetricsLedger Simulator::run(std::vector<Request> requests) {
    requests_ = std::move(requests);
    served_region_.assign(requests_.size(), kUnset);
    outstanding_ = static_cast<int>(requests_.size());
    horizon_ = cfg_.horizon;
    if (horizon_ == 0 && !requests_.empty()) horizon_ = requests_.back().arrival_ts;
    last_arrival_ts_ = requests_.empty() ? 0 : requests_.back().arrival_ts;

    for (std::size_t i = 0; i < requests_.size(); ++i)
        schedule(requests_[i].arrival_ts, EventKind::RequestArrival,
                 static_cast<std::int64_t>(i), 0);
    schedule(cfg_.utilization_sample_period, EventKind::UtilizationSample);
    schedule(cfg_.scaler_tick_period, EventKind::ScalerTick);
    schedule(cfg_.forecast_tick_period, EventKind::ForecastTick);

    const SimTime drain_bound = horizon_ + 7 * kMsPerDay;
    while (!events_.empty()) {
        Event ev = events_.top();
        events_.pop();
        if (ev.fire_ts > drain_bound)
            throw std::runtime_error("simulation failed to drain: work outstanding past bound");
        now_ = ev.fire_ts;
        flush_minutes(now_);
        dispatch(ev);
        if (cfg_.check_invariants) verify_memory_accounting();
    }

    ledger_.end_ts = std::max(now_, horizon_);
    for (auto& iv : ledger_.role_intervals)
        if (iv.end_ts == kUnset) iv.end_ts = ledger_.end_ts;

    ledger_.requests.reserve(requests_.size());
    for (std::size_t i = 0; i < requests_.size(); ++i) {
        const Request& r = requests_[i];
        RequestRecord rec;
        rec.id = r.id;
        rec.model = r.model;
        rec.tier = r.tier;
        rec.client_region = r.client_region;
        rec.served_region = served_region_[i];
        rec.input_tokens = r.input_tokens;
        rec.output_tokens = r.output_tokens;
        rec.arrival_ts = r.arrival_ts;
        rec.routed_ts = r.routed_ts;
        rec.dequeued_ts = r.dequeued_ts;
        rec.first_token_ts = r.first_token_ts;
        rec.completed_ts = r.completed_ts;
        rec.ttft_deadline = r.ttft_deadline;
        rec.completion_deadline = r.completion_deadline;
        ledger_.requests.push_back(rec);
    }
    ledger_.extrapolation_count = profiles_.extrapolation_count() - base_extrapolations_;
    return std::move(ledger_);
}

}  // namespace fleetsim

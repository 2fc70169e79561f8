#pragma once
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "fleetsim/domain.hpp"
#include "fleetsim/fleet.hpp"

namespace fleetsim {

struct NiwQueueConfig {
    double sig_low = 0.60;    // release 1 when util in [sig_lower, sig_low)
    double sig_lower = 0.50;  // release 2 when util below
    DurationMs escalate_age = hours(10);
    double force_release_margin = 2.0;  // deadline slack < margin x est. service time
};

// Global per-model FIFO of deferred NIW requests. Engine callbacks drive
// releases via capacity signals and periodic escalation sweeps.
class NiwQueueManager {
public:
    NiwQueueManager(std::size_t num_models, NiwQueueConfig cfg = {})
        : cfg_(cfg), queues_(num_models) {}

    const NiwQueueConfig& config() const { return cfg_; }

    void enqueue(RequestIdx idx, ModelIdx model) {
        queues_[model].push_back(idx);
        ++enqueued_;
    }

    // Endpoint utilization signal: pops up to 1 request when
    // sig_lower <= util < sig_low, up to 2 when util < sig_lower, FIFO.
    std::vector<RequestIdx> on_capacity_signal(ModelIdx model, double utilization);

    // Sets priority 0 on every queued request older than escalate_age.
    // Returns the number newly escalated.
    int escalate(std::span<Request> requests, SimTime now);

    // Pops requests whose completion deadline leaves less than
    // force_release_margin x estimated service time. est_service_ms maps a
    // request index to its expected prefill+decode duration; max_service_ms
    // bounds it from above so the FIFO scan can stop early (deadlines are
    // monotone in arrival order).
    std::vector<RequestIdx> force_release(std::span<const Request> requests, SimTime now,
                                          const std::function<DurationMs(RequestIdx)>& est_service_ms,
                                          DurationMs max_service_ms);

    // Unconditional FIFO pop of up to n requests; used to flush the queue
    // once the workload has ended.
    std::vector<RequestIdx> release(ModelIdx model, std::size_t n);

    std::size_t queued(ModelIdx model) const { return queues_[model].size(); }
    std::size_t total_queued() const;
    std::int64_t total_enqueued() const { return enqueued_; }
    std::int64_t total_released() const { return released_; }

private:
    NiwQueueConfig cfg_;
    std::vector<std::deque<RequestIdx>> queues_;
    std::int64_t enqueued_ = 0;
    std::int64_t released_ = 0;
};

}  // namespace fleetsim

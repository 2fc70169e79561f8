#include "fleetsim/niw_queue.hpp"

namespace fleetsim {

std::vector<RequestIdx> NiwQueueManager::on_capacity_signal(ModelIdx model, double utilization) {
    std::vector<RequestIdx> out;
    if (utilization >= cfg_.sig_low) return out;
    std::size_t want = utilization < cfg_.sig_lower ? 2 : 1;
    auto& q = queues_[model];
    while (out.size() < want && !q.empty()) {
        out.push_back(q.front());
        q.pop_front();
    }
    released_ += static_cast<std::int64_t>(out.size());
    return out;
}

int NiwQueueManager::escalate(std::span<Request> requests, SimTime now) {
    int count = 0;
    for (auto& q : queues_) {
        // FIFO by arrival: ages decrease front to back, so stop at the first
        // request under the threshold.
        for (RequestIdx idx : q) {
            Request& r = requests[idx];
            if (now - r.arrival_ts <= cfg_.escalate_age) break;
            if (r.priority != 0) {
                r.priority = 0;
                ++count;
            }
        }
    }
    return count;
}

std::vector<RequestIdx> NiwQueueManager::force_release(
    std::span<const Request> requests, SimTime now,
    const std::function<DurationMs(RequestIdx)>& est_service_ms, DurationMs max_service_ms) {
    std::vector<RequestIdx> out;
    DurationMs stop_slack = static_cast<DurationMs>(cfg_.force_release_margin *
                                                    static_cast<double>(max_service_ms));
    for (auto& q : queues_) {
        for (auto it = q.begin(); it != q.end();) {
            const Request& r = requests[*it];
            DurationMs slack = r.completion_deadline - now;
            if (slack >= stop_slack) break;  // deadlines grow toward the back
            DurationMs needed = static_cast<DurationMs>(
                cfg_.force_release_margin * static_cast<double>(est_service_ms(*it)));
            if (slack < needed) {
                out.push_back(*it);
                it = q.erase(it);
            } else {
                ++it;
            }
        }
    }
    released_ += static_cast<std::int64_t>(out.size());
    return out;
}

std::vector<RequestIdx> NiwQueueManager::release(ModelIdx model, std::size_t n) {
    std::vector<RequestIdx> out;
    auto& q = queues_[model];
    while (out.size() < n && !q.empty()) {
        out.push_back(q.front());
        q.pop_front();
    }
    released_ += static_cast<std::int64_t>(out.size());
    return out;
}

std::size_t NiwQueueManager::total_queued() const {
    std::size_t n = 0;
    for (const auto& q : queues_) n += q.size();
    return n;
}

}  // namespace fleetsim

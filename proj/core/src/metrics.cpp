#include "fleetsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

namespace fleetsim {

namespace {

const char* role_name(InstanceRole r) {
    switch (r) {
        case InstanceRole::Private: return "private";
        case InstanceRole::Spot: return "spot";
        case InstanceRole::Provisioning: return "provisioning";
        case InstanceRole::Retired: return "retired";
    }
    return "?";
}

// Fixed-point text for doubles keeps serialization byte-stable.
void put_fixed(std::ostream& os, double v) {
    long long scaled = std::llround(v * 1e6);
    os << scaled;
}

}  // namespace

void MetricsLedger::serialize(std::ostream& os) const {
    os << "end_ts," << end_ts << "\n";
    os << "counters," << clamp_count << ',' << infeasible_ticks << ',' << extrapolation_count
       << ',' << lt_ua_floor_conflicts << "\n";
    for (const auto& r : requests) {
        os << "req," << r.id << ',' << r.model << ',' << tier_name(r.tier) << ','
           << r.client_region << ',' << r.served_region << ',' << r.input_tokens << ','
           << r.output_tokens << ',' << r.arrival_ts << ',' << r.routed_ts << ','
           << r.dequeued_ts << ',' << r.first_token_ts << ',' << r.completed_ts << ','
           << r.ttft_deadline << ',' << r.completion_deadline << "\n";
    }
    for (const auto& iv : role_intervals) {
        os << "role," << iv.instance << ',' << iv.model << ',' << iv.region << ','
           << role_name(iv.role) << ',' << iv.begin_ts << ',' << iv.end_ts << "\n";
    }
    for (const auto& p : provisionings) {
        os << "prov," << p.instance << ',' << p.model << ',' << p.region << ',' << p.gpus << ','
           << p.start_ts << ',' << p.done_ts << ',' << p.source << "\n";
    }
    for (const auto& s : scale_events) {
        os << "scale," << s.ts << ',' << s.model << ',' << s.region << ',' << s.delta << ','
           << s.reason << "\n";
    }
    for (const auto& u : utilization_samples) {
        os << "util," << u.ts << ',' << u.model << ',' << u.region << ',';
        put_fixed(os, u.utilization);
        os << ',' << u.instances << "\n";
    }
}

DurationMs percentile(std::vector<DurationMs> values, double p) {
    if (values.empty()) throw std::invalid_argument("percentile of empty set");
    if (p < 0 || p > 100) throw std::invalid_argument("percentile p out of range");
    std::sort(values.begin(), values.end());
    std::size_t rank =
        static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
    if (rank == 0) rank = 1;
    return values[rank - 1];
}

namespace {

double role_hours(const MetricsLedger& ledger, InstanceRole role, ModelIdx model,
                  RegionIdx region) {
    double total_ms = 0;
    for (const auto& iv : ledger.role_intervals) {
        if (iv.role != role) continue;
        if (model != kUnset && iv.model != model) continue;
        if (region != kUnset && iv.region != region) continue;
        total_ms += static_cast<double>(iv.end_ts - iv.begin_ts);
    }
    return total_ms / static_cast<double>(kMsPerHour);
}

}  // namespace

double instance_hours(const MetricsLedger& ledger, ModelIdx model, RegionIdx region) {
    // Billed VM time: a VM is paid for from acquisition, so deployment time
    // (Provisioning) counts alongside serving time (Private).
    return role_hours(ledger, InstanceRole::Private, model, region) +
           role_hours(ledger, InstanceRole::Provisioning, model, region);
}

double instance_hours_step(const MetricsLedger& ledger, ModelIdx model, RegionIdx region) {
    // Rebuild n(t) as a step function from interval endpoints.
    std::map<SimTime, int> steps;
    for (const auto& iv : ledger.role_intervals) {
        if (iv.role != InstanceRole::Private && iv.role != InstanceRole::Provisioning) continue;
        if (model != kUnset && iv.model != model) continue;
        if (region != kUnset && iv.region != region) continue;
        steps[iv.begin_ts] += 1;
        steps[iv.end_ts] -= 1;
    }
    double total_ms = 0;
    int level = 0;
    SimTime prev = 0;
    bool first = true;
    for (const auto& [ts, d] : steps) {
        if (!first) total_ms += static_cast<double>(level) * static_cast<double>(ts - prev);
        level += d;
        prev = ts;
        first = false;
    }
    return total_ms / static_cast<double>(kMsPerHour);
}

double spot_hours(const MetricsLedger& ledger, RegionIdx region) {
    return role_hours(ledger, InstanceRole::Spot, kUnset, region);
}

double scaling_waste_gpu_hours(const MetricsLedger& ledger) {
    double total_ms = 0;
    for (const auto& p : ledger.provisionings)
        total_ms += static_cast<double>(p.done_ts - p.start_ts) * p.gpus;
    return total_ms / static_cast<double>(kMsPerHour);
}

double sla_violation_rate(const MetricsLedger& ledger, WorkloadTier tier) {
    std::int64_t total = 0, late = 0;
    for (const auto& r : ledger.requests) {
        if (r.tier != tier) continue;
        ++total;
        if (tier == WorkloadTier::NIW) {
            if (r.completed_ts == kUnset || r.completed_ts > r.completion_deadline) ++late;
        } else {
            if (r.first_token_ts == kUnset || r.first_token_ts > r.ttft_deadline) ++late;
        }
    }
    if (total == 0) return 0.0;
    return static_cast<double>(late) / static_cast<double>(total);
}

std::vector<const RequestRecord*> completed_of_tier(const MetricsLedger& ledger,
                                                    WorkloadTier tier) {
    std::vector<const RequestRecord*> out;
    for (const auto& r : ledger.requests)
        if (r.tier == tier && r.completed_ts != kUnset) out.push_back(&r);
    return out;
}

}  // namespace fleetsim

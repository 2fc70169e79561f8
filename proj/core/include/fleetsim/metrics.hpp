#pragma once
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fleetsim/domain.hpp"
#include "fleetsim/fleet.hpp"

namespace fleetsim {

struct RequestRecord {
    std::uint64_t id = 0;
    ModelIdx model = 0;
    WorkloadTier tier = WorkloadTier::IW_F;
    RegionIdx client_region = 0;
    RegionIdx served_region = kUnset;
    std::int32_t input_tokens = 0;
    std::int32_t output_tokens = 0;
    SimTime arrival_ts = 0;
    SimTime routed_ts = kUnset;
    SimTime dequeued_ts = kUnset;
    SimTime first_token_ts = kUnset;
    SimTime completed_ts = kUnset;
    SimTime ttft_deadline = kUnset;
    SimTime completion_deadline = kUnset;

    DurationMs ttft() const { return first_token_ts - arrival_ts; }
    DurationMs e2e() const { return completed_ts - arrival_ts; }
};

struct RoleInterval {
    InstanceId instance = 0;
    ModelIdx model = 0;
    RegionIdx region = 0;
    InstanceRole role = InstanceRole::Private;
    SimTime begin_ts = 0;
    SimTime end_ts = 0;
};

struct ProvisioningRecord {
    InstanceId instance = 0;
    ModelIdx model = 0;
    RegionIdx region = 0;
    int gpus = 0;
    SimTime start_ts = 0;
    SimTime done_ts = 0;
    std::string source;  // spot-same | spot-other | fresh-vm | donate
};

struct ScaleEventRecord {
    SimTime ts = 0;
    ModelIdx model = 0;
    RegionIdx region = 0;
    int delta = 0;
    std::string reason;
};

struct UtilizationSampleRecord {
    SimTime ts = 0;
    ModelIdx model = 0;
    RegionIdx region = 0;
    double utilization = 0.0;
    int instances = 0;
};

// Append-only event-sourced record of one run; aggregations are pure
// post-hoc functions over it.
struct MetricsLedger {
    std::vector<RequestRecord> requests;
    std::vector<RoleInterval> role_intervals;  // closed at end of run
    std::vector<ProvisioningRecord> provisionings;
    std::vector<ScaleEventRecord> scale_events;
    std::vector<UtilizationSampleRecord> utilization_samples;
    SimTime end_ts = 0;
    std::int64_t clamp_count = 0;
    std::int64_t infeasible_ticks = 0;
    std::int64_t extrapolation_count = 0;
    std::int64_t lt_ua_floor_conflicts = 0;

    // Canonical text form; byte-identical across runs iff the runs are
    // behaviorally identical.
    void serialize(std::ostream& os) const;
};

// Nearest-rank percentile over a copy of the values; p in [0, 100].
// Throws std::invalid_argument on an empty set.
DurationMs percentile(std::vector<DurationMs> values, double p);

// Billed VM-hours for the endpoint: integral of the private + provisioning
// instance count over the run (VMs are paid for from acquisition, not from
// first token). model/region kUnset = all.
double instance_hours(const MetricsLedger& ledger, ModelIdx model = kUnset,
                      RegionIdx region = kUnset);

// Same quantity from the step function of scale events; cross-checks
// instance_hours (double-entry).
double instance_hours_step(const MetricsLedger& ledger, ModelIdx model = kUnset,
                           RegionIdx region = kUnset);

double spot_hours(const MetricsLedger& ledger, RegionIdx region = kUnset);

// GPU-hours consumed while instances were provisioning (wasted cycles).
double scaling_waste_gpu_hours(const MetricsLedger& ledger);

// IW tiers: fraction with TTFT past the deadline. NIW: completion past the
// completion deadline. Unserved requests count as violations.
double sla_violation_rate(const MetricsLedger& ledger, WorkloadTier tier);

std::vector<const RequestRecord*> completed_of_tier(const MetricsLedger& ledger,
                                                    WorkloadTier tier);

}  // namespace fleetsim

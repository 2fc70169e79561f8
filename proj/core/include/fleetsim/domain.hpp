#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fleetsim/time.hpp"

namespace fleetsim {

enum class WorkloadTier : std::uint8_t { IW_F, IW_N, NIW };

const char* tier_name(WorkloadTier t);
std::optional<WorkloadTier> parse_tier(const std::string& s);

// Default SLAs used when a trace does not carry them.
inline constexpr DurationMs kDefaultTtftIwF = seconds(1);
inline constexpr DurationMs kDefaultTtftIwN = seconds(60);
inline constexpr DurationMs kDefaultNiwDeadline = hours(24);

struct SlaDefaults {
    DurationMs iw_f_ttft = kDefaultTtftIwF;
    DurationMs iw_n_ttft = kDefaultTtftIwN;
    DurationMs niw_deadline = kDefaultNiwDeadline;
};

using ModelIdx = std::int16_t;
using RegionIdx = std::int16_t;
using GpuIdx = std::int16_t;

inline constexpr SimTime kUnset = -1;

struct Request {
    std::uint64_t id = 0;
    SimTime arrival_ts = 0;
    RegionIdx client_region = 0;
    ModelIdx model = 0;
    WorkloadTier tier = WorkloadTier::IW_F;
    std::int32_t input_tokens = 1;
    std::int32_t output_tokens = 1;
    SimTime ttft_deadline = kUnset;  // kUnset for NIW
    SimTime completion_deadline = 0;
    std::uint8_t priority = 0;  // IW always 0; NIW starts at 1

    // Lifecycle timestamps, kUnset until reached.
    SimTime routed_ts = kUnset;
    SimTime dequeued_ts = kUnset;
    SimTime first_token_ts = kUnset;
    SimTime completed_ts = kUnset;

    // Remaining time to the TTFT deadline; negative means expired.
    // For NIW (no TTFT SLA) the completion deadline is the surrogate.
    DurationMs remaining_ttft(SimTime now) const {
        SimTime d = (ttft_deadline == kUnset) ? completion_deadline : ttft_deadline;
        return d - now;
    }
};

struct ModelType {
    std::string id;
    std::uint64_t weights_bytes = 0;
    int gpus_per_instance = 8;
    DurationMs local_deploy_delay = minutes(10);
    DurationMs remote_deploy_delay = hours(2);
    std::set<RegionIdx> weight_locality;
    std::uint64_t kv_bytes_per_token = 0;  // 0 = derive from GPU memory at load
};

struct GpuType {
    std::string id;
    std::uint64_t vm_total_memory_bytes = 0;
    double hourly_cost = 0.0;  // alpha_k
    DurationMs vm_acquire_delay = minutes(2);
};

struct Region {
    std::string id;
    std::vector<DurationMs> latency_to;  // indexed by RegionIdx; self = 0
    int capacity_limit = 1 << 20;        // max concurrent GPU VMs
};

// Static topology shared by every module.
struct Catalog {
    std::vector<ModelType> models;
    std::vector<GpuType> gpus;
    std::vector<Region> regions;

    std::optional<ModelIdx> model_index(const std::string& id) const;
    std::optional<RegionIdx> region_index(const std::string& id) const;
    std::optional<GpuIdx> gpu_index(const std::string& id) const;
};

enum class ValidationError {
    InvalidTokenCount,
    InvalidDeadline,
    UnknownModel,
    UnknownRegion,
    InvalidPriority,
    InvalidLifecycle,
};

const char* validation_error_name(ValidationError e);

// Returns nullopt iff all Request invariants hold.
std::optional<ValidationError> validate_request(const Request& r, const Catalog& cat);

}  // namespace fleetsim

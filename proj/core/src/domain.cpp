#include "fleetsim/domain.hpp"

namespace fleetsim {

const char* tier_name(WorkloadTier t) {
    switch (t) {
        case WorkloadTier::IW_F: return "IW-F";
        case WorkloadTier::IW_N: return "IW-N";
        case WorkloadTier::NIW: return "NIW";
    }
    return "?";
}

std::optional<WorkloadTier> parse_tier(const std::string& s) {
    if (s == "IW-F") return WorkloadTier::IW_F;
    if (s == "IW-N") return WorkloadTier::IW_N;
    if (s == "NIW") return WorkloadTier::NIW;
    return std::nullopt;
}

const char* validation_error_name(ValidationError e) {
    switch (e) {
        case ValidationError::InvalidTokenCount: return "InvalidTokenCount";
        case ValidationError::InvalidDeadline: return "InvalidDeadline";
        case ValidationError::UnknownModel: return "UnknownModel";
        case ValidationError::UnknownRegion: return "UnknownRegion";
        case ValidationError::InvalidPriority: return "InvalidPriority";
        case ValidationError::InvalidLifecycle: return "InvalidLifecycle";
    }
    return "?";
}

std::optional<ModelIdx> Catalog::model_index(const std::string& id) const {
    for (std::size_t i = 0; i < models.size(); ++i)
        if (models[i].id == id) return static_cast<ModelIdx>(i);
    return std::nullopt;
}

std::optional<RegionIdx> Catalog::region_index(const std::string& id) const {
    for (std::size_t i = 0; i < regions.size(); ++i)
        if (regions[i].id == id) return static_cast<RegionIdx>(i);
    return std::nullopt;
}

std::optional<GpuIdx> Catalog::gpu_index(const std::string& id) const {
    for (std::size_t i = 0; i < gpus.size(); ++i)
        if (gpus[i].id == id) return static_cast<GpuIdx>(i);
    return std::nullopt;
}

std::optional<ValidationError> validate_request(const Request& r, const Catalog& cat) {
    if (r.model < 0 || r.model >= static_cast<ModelIdx>(cat.models.size()))
        return ValidationError::UnknownModel;
    if (r.client_region < 0 || r.client_region >= static_cast<RegionIdx>(cat.regions.size()))
        return ValidationError::UnknownRegion;
    if (r.input_tokens <= 0 || r.output_tokens <= 0)
        return ValidationError::InvalidTokenCount;
    if (r.tier == WorkloadTier::NIW) {
        if (r.priority != 0 && r.priority != 1) return ValidationError::InvalidPriority;
    } else {
        if (r.priority != 0) return ValidationError::InvalidPriority;
        if (r.ttft_deadline == kUnset || r.ttft_deadline < r.arrival_ts)
            return ValidationError::InvalidDeadline;
    }
    if (r.completion_deadline < r.arrival_ts) return ValidationError::InvalidDeadline;

    // Any lifecycle timestamps that are set must be ordered.
    SimTime prev = r.arrival_ts;
    for (SimTime ts : {r.routed_ts, r.dequeued_ts, r.first_token_ts, r.completed_ts}) {
        if (ts == kUnset) continue;
        if (ts < prev) return ValidationError::InvalidLifecycle;
        prev = ts;
    }
    return std::nullopt;
}

}  // namespace fleetsim

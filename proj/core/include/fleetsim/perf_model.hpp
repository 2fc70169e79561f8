#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fleetsim/domain.hpp"

namespace fleetsim {

class UnknownPairError : public std::runtime_error {
public:
    UnknownPairError(const std::string& model, const std::string& gpu)
        : std::runtime_error("no performance data for (" + model + ", " + gpu + ")") {}
};

// Interpolation-based batch timing model. Prefill is piecewise-linear in the
// batch prompt-token total; decode is bilinear over (active batch size,
// tokens in flight). Queries above the sampled range extrapolate with the
// last segment's slope and bump extrapolation_count() instead of erroring.
class ProfileTable {
public:
    struct PrefillCurve {
        std::vector<double> tokens;  // sorted, >= 2 samples
        std::vector<double> time_ms;
    };
    struct DecodeGrid {
        std::vector<double> batch_sizes;       // sorted axis 1
        std::vector<double> tokens_in_flight;  // sorted axis 2
        std::vector<double> time_ms;           // row-major [batch][tokens]
    };

    ProfileTable(std::size_t num_models, std::size_t num_gpus);

    void set_prefill(ModelIdx m, GpuIdx g, PrefillCurve curve);
    void set_decode(ModelIdx m, GpuIdx g, DecodeGrid grid);
    bool has_pair(ModelIdx m, GpuIdx g) const;

    double prefill_time_ms(ModelIdx m, GpuIdx g, std::int64_t batch_prompt_tokens) const;
    double decode_iteration_time_ms(ModelIdx m, GpuIdx g, double batch_size,
                                    double tokens_in_flight) const;

    std::int64_t extrapolation_count() const { return extrapolations_; }
    void reset_extrapolation_count() { extrapolations_ = 0; }

private:
    const PrefillCurve& prefill_at(ModelIdx m, GpuIdx g) const;
    const DecodeGrid& decode_at(ModelIdx m, GpuIdx g) const;

    std::size_t num_gpus_;
    std::vector<PrefillCurve> prefill_;
    std::vector<DecodeGrid> decode_;
    mutable std::int64_t extrapolations_ = 0;
};

// theta_{i,k}: input TPS an instance of model i sustains at target latency on GPU k.
class CapacityTable {
public:
    CapacityTable(std::size_t num_models, std::size_t num_gpus);

    void set(ModelIdx m, GpuIdx g, double tps);
    bool has_pair(ModelIdx m, GpuIdx g) const;
    double instance_tps(ModelIdx m, GpuIdx g) const;  // throws UnknownPairError

private:
    std::size_t num_gpus_;
    std::vector<double> tps_;  // <= 0 means absent
};

// File loaders. Profile rows: model,gpu,phase,x1,x2,time_ms with phase in
// {prefill, decode}; capacity rows: model,gpu,tps. Headers mandatory.
ProfileTable load_profile_table(const std::string& path, const Catalog& cat);
CapacityTable load_capacity_table(const std::string& path, const Catalog& cat);

// Analytic profile: constant token rates per phase.
ProfileTable::PrefillCurve analytic_prefill_curve(double prompt_tokens_per_sec);
ProfileTable::DecodeGrid analytic_decode_grid(double base_iter_ms, double per_batch_ms,
                                              double per_kilo_token_ms);

}  // namespace fleetsim

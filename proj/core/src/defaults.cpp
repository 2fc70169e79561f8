#include "fleetsim/defaults.hpp"

#include <cmath>
#include <map>

namespace fleetsim {

namespace {
constexpr std::uint64_t kGiB = 1ull << 30;
}

Catalog default_catalog() {
    Catalog cat;

    auto add_model = [&](const std::string& id, std::uint64_t weights_gib) {
        ModelType m;
        m.id = id;
        m.weights_bytes = weights_gib * kGiB;
        m.gpus_per_instance = 8;
        m.weight_locality = {0, 1, 2};  // local everywhere by default
        cat.models.push_back(std::move(m));
    };
    add_model("llama2-70b", 140);
    add_model("bloom-176b", 352);
    add_model("llama3.1-8b", 16);
    add_model("llama3.2-3b", 6);

    GpuType a100;
    a100.id = "a100x8";
    a100.vm_total_memory_bytes = 640 * kGiB;
    a100.hourly_cost = 55.0;
    cat.gpus.push_back(a100);
    GpuType h100;
    h100.id = "h100x8";
    h100.vm_total_memory_bytes = 640 * kGiB;
    h100.hourly_cost = 98.32;
    cat.gpus.push_back(h100);

    const char* names[3] = {"us-east", "us-central", "us-west"};
    for (int i = 0; i < 3; ++i) {
        Region r;
        r.id = names[i];
        r.latency_to = {50, 50, 50};
        r.latency_to[i] = 0;
        r.capacity_limit = 2000;
        cat.regions.push_back(std::move(r));
    }
    return cat;
}

CapacityTable default_capacity(const Catalog& cat) {
    CapacityTable table(cat.models.size(), cat.gpus.size());
    auto set = [&](const std::string& model, const std::string& gpu, double tps) {
        table.set(*cat.model_index(model), *cat.gpu_index(gpu), tps);
    };
    set("llama2-70b", "a100x8", 180.0);
    set("bloom-176b", "a100x8", 113.0);
    set("bloom-176b", "h100x8", 239.5);
    set("llama3.1-8b", "a100x8", 1500.0);
    set("llama3.2-3b", "a100x8", 2500.0);
    return table;
}

ProfileTable default_profiles(const Catalog& cat, const CapacityTable& capacity) {
    ProfileTable table(cat.models.size(), cat.gpus.size());

    std::map<std::string, double> prompt_rate = {
        {"llama2-70b", 21000.0},
        {"bloom-176b", 9000.0},
        {"llama3.1-8b", 120000.0},
        {"llama3.2-3b", 200000.0},
    };

    // Calibration targets: with the default lognormal token mix, an endpoint
    // whose effective memory sits at util_target serves ~theta tokens/s.
    TokenDistribution tok;
    const double in_mean =
        std::exp(tok.input_log_mean + tok.input_log_sigma * tok.input_log_sigma / 2.0);
    const double out_mean =
        std::exp(tok.output_log_mean + tok.output_log_sigma * tok.output_log_sigma / 2.0);
    const double util_target = 0.7;
    // Reserve-based concurrency: kv bytes/token default is C_eff/96000, so
    // the instance fits 96000 reserved tokens at full memory.
    const double concurrency = util_target * 96000.0 / (in_mean + out_mean);
    const double base_iter_ms = 25.0;
    const double per_kilo_ms = 0.5;

    for (std::size_t mi = 0; mi < cat.models.size(); ++mi) {
        for (std::size_t gi = 0; gi < cat.gpus.size(); ++gi) {
            ModelIdx m = static_cast<ModelIdx>(mi);
            GpuIdx g = static_cast<GpuIdx>(gi);
            if (!capacity.has_pair(m, g)) continue;
            double theta = capacity.instance_tps(m, g);
            double rate = prompt_rate.count(cat.models[mi].id)
                              ? prompt_rate[cat.models[mi].id]
                              : 50000.0;
            table.set_prefill(m, g, analytic_prefill_curve(rate));

            double service_s = concurrency * (in_mean + out_mean) / theta;
            double prefill_ms = in_mean / rate * 1000.0;
            double iter_target_ms = (service_s * 1000.0 - prefill_ms) / out_mean;
            double tokens_in_flight = concurrency * (in_mean + out_mean / 2.0);
            double per_batch_ms = (iter_target_ms - base_iter_ms -
                                   per_kilo_ms * tokens_in_flight / 1000.0) /
                                  concurrency;
            per_batch_ms = std::max(0.05, per_batch_ms);
            table.set_decode(m, g, analytic_decode_grid(base_iter_ms, per_batch_ms, per_kilo_ms));
        }
    }
    return table;
}

SyntheticWorkloadSpec default_synthetic_spec(double duration_days, std::uint64_t seed) {
    SyntheticWorkloadSpec spec;
    spec.duration_days = duration_days;
    spec.seed = seed;

    struct ModelRates {
        const char* model;
        double iw_f, iw_n, niw;
    };
    // Large models dominate demand; the small models idle near the floor.
    const ModelRates rates[] = {
        {"llama2-70b", 0.75, 0.40, 0.20},
        {"bloom-176b", 0.45, 0.25, 0.15},
        {"llama3.1-8b", 0.90, 0.45, 0.15},
        {"llama3.2-3b", 0.60, 0.30, 0.10},
    };
    const char* regions[] = {"us-east", "us-central", "us-west"};

    for (const auto& mr : rates) {
        for (const char* region : regions) {
            auto add = [&](WorkloadTier tier, double rps) {
                WorkloadStream s;
                s.model = mr.model;
                s.region = region;
                s.tier = tier;
                s.base_rps = rps;
                s.diurnal_amplitude = 0.5;
                s.weekend_damping = 0.8;
                s.burst_probability = 0.005;
                s.burst_multiplier = 3.0;
                s.burst_duration = minutes(2);
                spec.streams.push_back(std::move(s));
            };
            add(WorkloadTier::IW_F, mr.iw_f);
            add(WorkloadTier::IW_N, mr.iw_n);
            add(WorkloadTier::NIW, mr.niw);
        }
        spec.tokens[mr.model] = TokenDistribution{};
    }
    return spec;
}

}  // namespace fleetsim

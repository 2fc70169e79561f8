#pragma once
#include <optional>
#include <string>
#include <vector>

#include "fleetsim/engine.hpp"

namespace fleetsim {

enum class Strategy : std::uint8_t { Siloed, Reactive, LT_I, LT_U, LT_UA, Static };

const char* strategy_name(Strategy s);
std::optional<Strategy> parse_strategy(const std::string& s);

struct ScalerConfig {
    Strategy strategy = Strategy::Reactive;
    double up_threshold = 0.70;
    double down_threshold = 0.30;
    DurationMs cooldown = seconds(15);
    int lt_ua_tail_min = 20;     // final window of each hour
    double over_factor = 5.0;    // observed/predicted ratio to exceed the target
    double under_factor = 0.5;   // ratio to undershoot the target
    int observed_window_min = 5;
    int min_per_endpoint = 2;
};

// Executes scaling decisions inside the event loop. Reactive/Siloed act on
// utilization alone; the LT strategies follow hourly plan targets set by the
// forecast controller.
class Autoscaler : public ControlHooks {
public:
    Autoscaler(const Catalog& cat, ScalerConfig cfg);

    const ScalerConfig& config() const { return cfg_; }

    void on_utilization_sample(Simulator& sim, SimTime now) override;

    // New hourly plan target for (model, region): total desired instances.
    void set_plan_target(Simulator& sim, ModelIdx m, RegionIdx r, int target);
    // Forecast trace behind the target, for the LT-UA tail-window ratio.
    void set_predicted_minutes(ModelIdx m, RegionIdx r, std::vector<double> minutes,
                               SimTime plan_start);

    std::int64_t floor_conflicts() const { return floor_conflicts_; }

private:
    struct EndpointState {
        SimTime last_action = kUnset;
        SimTime last_action_niw = kUnset;  // siloed: independent pool cooldown
        int target = -1;                   // -1 = no plan yet
        std::vector<double> predicted;
        SimTime plan_start = 0;
    };

    EndpointState& ep(ModelIdx m, RegionIdx r) {
        return endpoints_[static_cast<std::size_t>(m) * num_regions_ + r];
    }
    bool cooled(SimTime last, SimTime now) const {
        return last == kUnset || now - last >= cfg_.cooldown;
    }
    int live_count(const Simulator& sim, ModelIdx m, RegionIdx r, PoolTag pool) const;
    bool scale_up(Simulator& sim, ModelIdx m, RegionIdx r, PoolTag pool, const char* reason);
    bool scale_down(Simulator& sim, ModelIdx m, RegionIdx r, PoolTag pool, const char* reason);
    void reactive_endpoint(Simulator& sim, ModelIdx m, RegionIdx r, PoolTag pool, SimTime now,
                           SimTime& last_action);
    void lt_endpoint(Simulator& sim, ModelIdx m, RegionIdx r, SimTime now);
    double demand_ratio(const Simulator& sim, ModelIdx m, RegionIdx r, SimTime now) const;

    const Catalog& cat_;
    ScalerConfig cfg_;
    std::size_t num_regions_;
    std::vector<EndpointState> endpoints_;
    std::int64_t floor_conflicts_ = 0;
};

}  // namespace fleetsim

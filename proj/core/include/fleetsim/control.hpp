#pragma once
#include <vector>

#include "fleetsim/autoscaler.hpp"
#include "fleetsim/engine.hpp"
#include "fleetsim/forecast.hpp"
#include "fleetsim/optimizer.hpp"

namespace fleetsim {

enum class ForecasterKind : std::uint8_t { Arima, MovingAverage };

struct ControlConfig {
    ForecasterKind forecaster = ForecasterKind::Arima;
    int arima_window = 24 * 60;  // minutes of demand history for fitting
    int ma_window = 60;
    OptimizerConfig opt;
    ClampConfig clamp;
};

struct PlanRecord {
    int tick = 0;
    ModelIdx model = 0;
    RegionIdx region = 0;
    GpuIdx gpu = 0;
    int delta = 0;
    double gamma = 0.0;
    double mu = 0.0;
};

// Hourly control loop: fit per-(model, region) demand forecasts, solve the
// scaling program, clamp, and hand targets to the autoscaler.
class ForecastController : public ControlHooks {
public:
    ForecastController(ControlConfig cfg, Autoscaler* scaler) : cfg_(cfg), scaler_(scaler) {}

    void on_forecast_tick(Simulator& sim, SimTime now) override;

    const std::vector<PlanRecord>& plan_records() const { return plan_records_; }

private:
    ControlConfig cfg_;
    Autoscaler* scaler_;
    std::vector<PlanRecord> plan_records_;
    int tick_ = 0;
};

}  // namespace fleetsim

#include "fleetsim/control.hpp"

#include <algorithm>
#include <cmath>

namespace fleetsim {

void ForecastController::on_forecast_tick(Simulator& sim, SimTime now) {
    ++tick_;
    const Catalog& cat = sim.catalog();
    const std::size_t nm = cat.models.size(), nr = cat.regions.size();

    std::vector<ModelProblem> problems;
    std::vector<std::vector<std::vector<double>>> minute_forecasts(nm);

    for (std::size_t mi = 0; mi < nm; ++mi) {
        ModelIdx m = static_cast<ModelIdx>(mi);
        GpuIdx g = sim.default_gpu(m);
        if (!sim.capacity().has_pair(m, g)) continue;
        double theta = sim.capacity().instance_tps(m, g);
        if (theta <= 0) continue;

        ModelProblem prob;
        prob.model = m;
        prob.gpus = {g};
        prob.theta = {theta};
        prob.alpha = {cat.gpus[g].hourly_cost};
        // Instance start cost: VM cost rate x mean start-up time. Mean start
        // is modeled as the average of a same-model spot reclaim and a
        // weights-local redeploy.
        double mean_start_hours =
            (static_cast<double>(sim.config().spot_reclaim_mode) +
             static_cast<double>(cat.models[m].local_deploy_delay)) /
            2.0 / static_cast<double>(kMsPerHour);
        prob.sigma = {std::max(1e-6, prob.alpha[0] * mean_start_hours)};

        minute_forecasts[mi].resize(nr);
        std::vector<double> buffers(nr, 0.0);
        for (std::size_t ri = 0; ri < nr; ++ri) {
            RegionIdx r = static_cast<RegionIdx>(ri);
            prob.regions.push_back(r);
            prob.n.push_back({sim.fleet().private_count(m, r) +
                              sim.fleet().provisioning_count(m, r)});

            const auto samples = sim.demand_series(m, r).tail(
                static_cast<std::size_t>(std::max(cfg_.arima_window, cfg_.ma_window)));
            Forecast fc;
            if (cfg_.forecaster == ForecasterKind::Arima && samples.size() >= 8) {
                fc = forecast_next_hour(fit_arima(samples), samples);
            } else if (!samples.empty()) {
                int window = std::min<int>(cfg_.ma_window, static_cast<int>(samples.size()));
                fc = moving_average_forecast(samples, window);
            } else {
                fc.values.assign(kForecastHorizon, 0.0);
            }
            fc.buffer = compute_buffer(sim.niw_demand_series(m, r));
            buffers[ri] = fc.buffer;
            prob.region_peak.push_back(fc.peak() + fc.buffer);
            minute_forecasts[mi][ri] = std::move(fc.values);
        }

        double global_peak = 0;
        for (int w = 0; w < kForecastHorizon; ++w) {
            double s = 0;
            for (std::size_t ri = 0; ri < nr; ++ri)
                s += minute_forecasts[mi][ri][w] + buffers[ri];
            global_peak = std::max(global_peak, s);
        }
        prob.global_peak = global_peak;
        problems.push_back(std::move(prob));
    }
    if (problems.empty()) return;

    ScalingPlan plan = solve(problems, cfg_.opt);
    auto clamps = apply_floor_and_caps(plan, problems, cfg_.clamp);
    sim.ledger().clamp_count += static_cast<std::int64_t>(clamps.size());
    if (plan.infeasible) ++sim.ledger().infeasible_ticks;

    for (std::size_t pi = 0; pi < problems.size(); ++pi) {
        const ModelProblem& prob = problems[pi];
        const ModelPlan& mp = plan.models[pi];
        for (std::size_t j = 0; j < prob.regions.size(); ++j) {
            int target = 0;
            for (std::size_t k = 0; k < prob.gpus.size(); ++k) {
                target += prob.n[j][k] + mp.delta[j][k];
                plan_records_.push_back({tick_, prob.model, prob.regions[j], prob.gpus[k],
                                         mp.delta[j][k], mp.gamma, mp.mu});
            }
            if (scaler_) {
                scaler_->set_predicted_minutes(
                    prob.model, prob.regions[j],
                    minute_forecasts[prob.model][prob.regions[j]], now);
                scaler_->set_plan_target(sim, prob.model, prob.regions[j], target);
            }
        }
    }
}

}  // namespace fleetsim

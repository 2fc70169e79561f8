#include "fleetsim/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "fleetsim/defaults.hpp"

namespace fleetsim {

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

DurationMs safe_percentile(const std::vector<DurationMs>& values, double p) {
    if (values.empty()) return 0;
    return percentile(values, p);
}

}  // namespace

void apply_kv_overrides(ExperimentConfig& cfg, const KvConfig& kv) {
    cfg.trace_path = kv_get_str(kv, "trace", cfg.trace_path);
    cfg.synthetic_spec_path = kv_get_str(kv, "synthetic", cfg.synthetic_spec_path);
    cfg.duration_days = kv_get_double(kv, "duration_days", cfg.duration_days);
    if (auto v = kv_get(kv, "strategy")) {
        auto s = parse_strategy(*v);
        if (!s) throw std::invalid_argument("unknown strategy: " + *v);
        cfg.strategy = *s;
    }
    if (auto v = kv_get(kv, "scheduler")) {
        auto s = parse_policy(*v);
        if (!s) throw std::invalid_argument("unknown scheduler: " + *v);
        cfg.scheduler = *s;
    }
    cfg.tau_n = static_cast<DurationMs>(
        kv_get_double(kv, "tau_n_sec", static_cast<double>(cfg.tau_n) / 1000.0) * 1000.0);
    cfg.tau_p = static_cast<DurationMs>(
        kv_get_double(kv, "tau_p_sec", static_cast<double>(cfg.tau_p) / 1000.0) * 1000.0);
    cfg.region_threshold = kv_get_double(kv, "region_threshold", cfg.region_threshold);
    if (auto v = kv_get(kv, "forecaster")) {
        if (*v == "arima")
            cfg.forecaster = ForecasterKind::Arima;
        else if (*v == "ma")
            cfg.forecaster = ForecasterKind::MovingAverage;
        else
            throw std::invalid_argument("unknown forecaster: " + *v);
    }
    cfg.arima_window = static_cast<int>(kv_get_int(kv, "arima_window", cfg.arima_window));
    cfg.ma_window = static_cast<int>(kv_get_int(kv, "ma_window", cfg.ma_window));
    cfg.epsilon = kv_get_double(kv, "epsilon", cfg.epsilon);
    cfg.solver_budget_sec = kv_get_double(kv, "solver_budget_sec", cfg.solver_budget_sec);
    cfg.niw.sig_low = kv_get_double(kv, "niw_sig_low", cfg.niw.sig_low);
    cfg.niw.sig_lower = kv_get_double(kv, "niw_sig_lower", cfg.niw.sig_lower);
    cfg.niw.escalate_age = static_cast<DurationMs>(
        kv_get_double(kv, "niw_escalate_hours",
                      static_cast<double>(cfg.niw.escalate_age) / kMsPerHour) *
        kMsPerHour);
    cfg.niw_defer = kv_get_bool(kv, "niw_defer", cfg.niw_defer);
    cfg.niw_deadline_hours = kv_get_double(kv, "niw_deadline_hours", cfg.niw_deadline_hours);
    cfg.up_threshold = kv_get_double(kv, "up_threshold", cfg.up_threshold);
    cfg.down_threshold = kv_get_double(kv, "down_threshold", cfg.down_threshold);
    cfg.cooldown = static_cast<DurationMs>(
        kv_get_double(kv, "cooldown_sec", static_cast<double>(cfg.cooldown) / 1000.0) * 1000.0);
    cfg.lt_ua_tail_min = static_cast<int>(kv_get_int(kv, "lt_ua_tail_min", cfg.lt_ua_tail_min));
    cfg.over_factor = kv_get_double(kv, "over_factor", cfg.over_factor);
    cfg.under_factor = kv_get_double(kv, "under_factor", cfg.under_factor);
    cfg.initial_instances =
        static_cast<int>(kv_get_int(kv, "initial_instances", cfg.initial_instances));
    cfg.initial_spot_per_region =
        static_cast<int>(kv_get_int(kv, "initial_spot_per_region", cfg.initial_spot_per_region));
    cfg.siloed_iw = static_cast<int>(kv_get_int(kv, "siloed_iw", cfg.siloed_iw));
    cfg.siloed_niw = static_cast<int>(kv_get_int(kv, "siloed_niw", cfg.siloed_niw));
    cfg.min_per_endpoint =
        static_cast<int>(kv_get_int(kv, "min_per_endpoint", cfg.min_per_endpoint));
    cfg.max_per_deployment =
        static_cast<int>(kv_get_int(kv, "max_per_deployment", cfg.max_per_deployment));
    cfg.profile_path = kv_get_str(kv, "profile", cfg.profile_path);
    cfg.capacity_path = kv_get_str(kv, "capacity", cfg.capacity_path);
    cfg.iter_decode = kv_get_bool(kv, "iter_decode", cfg.iter_decode);
    cfg.seed = static_cast<std::uint64_t>(kv_get_int(kv, "seed", static_cast<std::int64_t>(cfg.seed)));
    for (const auto& [key, value] : kv) {
        const std::string prefix = "kv_bytes_per_token.";
        if (key.rfind(prefix, 0) == 0)
            cfg.kv_bytes_per_token[key.substr(prefix.size())] = std::stoull(value);
    }
}

std::vector<Request> load_requests(const ExperimentConfig& cfg, const Catalog& cat) {
    SlaDefaults sla;
    sla.niw_deadline = static_cast<DurationMs>(cfg.niw_deadline_hours * kMsPerHour);
    if (!cfg.trace_path.empty()) {
        return ingest_trace(cfg.trace_path, cat, sla).requests;
    }
    SyntheticWorkloadSpec spec = cfg.synthetic_spec_path.empty()
                                     ? default_synthetic_spec(cfg.duration_days, cfg.seed)
                                     : parse_synthetic_spec(cfg.synthetic_spec_path);
    if (cfg.synthetic_spec_path.empty()) spec.seed = cfg.seed;
    return generate_synthetic(spec, cat, sla);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Catalog& cat,
                                const ProfileTable& profiles, const CapacityTable& capacity,
                                std::vector<Request> requests) {
    SimConfig sim_cfg;
    sim_cfg.iter_decode = cfg.iter_decode;
    sim_cfg.scheduler.policy = cfg.scheduler;
    sim_cfg.scheduler.tau_n = cfg.tau_n;
    sim_cfg.scheduler.tau_p = cfg.tau_p;
    sim_cfg.routing.utilization_threshold = cfg.region_threshold;
    sim_cfg.niw = cfg.niw;
    sim_cfg.silo_pools = cfg.strategy == Strategy::Siloed;
    sim_cfg.niw_defer = cfg.niw_defer;
    sim_cfg.min_per_endpoint = cfg.min_per_endpoint;
    sim_cfg.max_per_deployment = cfg.max_per_deployment;
    sim_cfg.seed = cfg.seed;
    if (cfg.trace_path.empty() && cfg.synthetic_spec_path.empty())
        sim_cfg.horizon = static_cast<SimTime>(cfg.duration_days * kMsPerDay);

    Simulator sim(cat, profiles, capacity, sim_cfg);

    ScalerConfig scaler_cfg;
    scaler_cfg.strategy = cfg.strategy;
    scaler_cfg.up_threshold = cfg.up_threshold;
    scaler_cfg.down_threshold = cfg.down_threshold;
    scaler_cfg.cooldown = cfg.cooldown;
    scaler_cfg.lt_ua_tail_min = cfg.lt_ua_tail_min;
    scaler_cfg.over_factor = cfg.over_factor;
    scaler_cfg.under_factor = cfg.under_factor;
    scaler_cfg.min_per_endpoint = cfg.min_per_endpoint;
    Autoscaler scaler(cat, scaler_cfg);
    sim.add_hook(&scaler);

    ControlConfig ctl_cfg;
    ctl_cfg.forecaster = cfg.forecaster;
    ctl_cfg.arima_window = cfg.arima_window;
    ctl_cfg.ma_window = cfg.ma_window;
    ctl_cfg.opt.epsilon = cfg.epsilon;
    ctl_cfg.opt.solver_budget_sec = cfg.solver_budget_sec;
    ctl_cfg.clamp.min_per_endpoint = cfg.min_per_endpoint;
    ctl_cfg.clamp.max_per_deployment = cfg.max_per_deployment;
    for (const auto& region : cat.regions)
        ctl_cfg.clamp.region_capacity_instances.push_back(region.capacity_limit);
    ForecastController controller(ctl_cfg, &scaler);
    bool plan_driven = cfg.strategy == Strategy::LT_I || cfg.strategy == Strategy::LT_U ||
                       cfg.strategy == Strategy::LT_UA;
    if (plan_driven) sim.add_hook(&controller);

    for (std::size_t mi = 0; mi < cat.models.size(); ++mi) {
        ModelIdx m = static_cast<ModelIdx>(mi);
        GpuIdx g = sim.default_gpu(m);
        for (std::size_t ri = 0; ri < cat.regions.size(); ++ri) {
            RegionIdx r = static_cast<RegionIdx>(ri);
            if (sim_cfg.silo_pools) {
                for (int i = 0; i < cfg.siloed_iw; ++i)
                    sim.add_initial_instance(m, r, g, PoolTag::IwOnly);
                for (int i = 0; i < cfg.siloed_niw; ++i)
                    sim.add_initial_instance(m, r, g, PoolTag::NiwOnly);
            } else {
                for (int i = 0; i < cfg.initial_instances; ++i)
                    sim.add_initial_instance(m, r, g, PoolTag::Shared);
            }
        }
    }
    for (std::size_t ri = 0; ri < cat.regions.size(); ++ri) {
        for (int i = 0; i < cfg.initial_spot_per_region; ++i) {
            ModelIdx resident = static_cast<ModelIdx>(i % cat.models.size());
            sim.add_initial_spot(static_cast<RegionIdx>(ri), sim.default_gpu(resident),
                                 resident);
        }
    }

    ExperimentResult result;
    result.strategy = cfg.strategy;
    result.ledger = sim.run(std::move(requests));
    result.plans = controller.plan_records();
    return result;
}

void write_summary_csv(std::ostream& os, const std::vector<ExperimentResult>& results) {
    os << "strategy,requests,completed,instance_hours,waste_gpu_hours,spot_hours,"
          "instance_cost_usd,clamps,infeasible_ticks";
    const WorkloadTier tiers[] = {WorkloadTier::IW_F, WorkloadTier::IW_N, WorkloadTier::NIW};
    const char* prefixes[] = {"iw_f", "iw_n", "niw"};
    for (const char* p : prefixes)
        os << ',' << p << "_count," << p << "_p75_ttft_ms," << p << "_p95_ttft_ms," << p
           << "_p75_e2e_ms," << p << "_p95_e2e_ms," << p << "_violation_rate";
    os << "\n";

    // Savings column convention: instance-hours costed at the H100 cluster
    // rate of $98.32/hour.
    constexpr double kHourlyUsd = 98.32;
    for (const auto& res : results) {
        const MetricsLedger& led = res.ledger;
        std::int64_t completed = 0;
        for (const auto& r : led.requests)
            if (r.completed_ts != kUnset) ++completed;
        double hours = instance_hours(led);
        os << strategy_name(res.strategy) << ',' << led.requests.size() << ',' << completed
           << ',' << fixed6(hours) << ',' << fixed6(scaling_waste_gpu_hours(led)) << ','
           << fixed6(spot_hours(led)) << ',' << fixed6(hours * kHourlyUsd) << ','
           << led.clamp_count << ',' << led.infeasible_ticks;
        for (int ti = 0; ti < 3; ++ti) {
            std::vector<DurationMs> ttft, e2e;
            std::int64_t count = 0;
            for (const auto& r : led.requests) {
                if (r.tier != tiers[ti]) continue;
                ++count;
                if (r.first_token_ts != kUnset) ttft.push_back(r.ttft());
                if (r.completed_ts != kUnset) e2e.push_back(r.e2e());
            }
            os << ',' << count << ',' << safe_percentile(ttft, 75) << ','
               << safe_percentile(ttft, 95) << ',' << safe_percentile(e2e, 75) << ','
               << safe_percentile(e2e, 95) << ','
               << fixed6(sla_violation_rate(led, tiers[ti]));
        }
        os << "\n";
    }
}

void write_instances_csv(std::ostream& os, const MetricsLedger& ledger, const Catalog& cat) {
    constexpr DurationMs kBin = 15 * kMsPerMinute;
    const std::size_t nr = cat.regions.size();
    std::size_t bins = static_cast<std::size_t>(ledger.end_ts / kBin) + 1;
    // Time-weighted average private count per bin per (model, region).
    std::vector<std::vector<double>> acc(cat.models.size() * nr,
                                         std::vector<double>(bins, 0.0));
    for (const auto& iv : ledger.role_intervals) {
        if (iv.role != InstanceRole::Private) continue;
        std::size_t cell = static_cast<std::size_t>(iv.model) * nr + iv.region;
        for (SimTime t = iv.begin_ts; t < iv.end_ts;) {
            SimTime bin_end = (t / kBin + 1) * kBin;
            SimTime upto = std::min(bin_end, iv.end_ts);
            acc[cell][static_cast<std::size_t>(t / kBin)] += static_cast<double>(upto - t);
            t = upto;
        }
    }
    os << "bin_start_ms,model,region,avg_instances\n";
    for (std::size_t b = 0; b < bins; ++b) {
        for (std::size_t mi = 0; mi < cat.models.size(); ++mi) {
            for (std::size_t ri = 0; ri < nr; ++ri) {
                double avg = acc[mi * nr + ri][b] / static_cast<double>(kBin);
                os << b * kBin << ',' << cat.models[mi].id << ',' << cat.regions[ri].id << ','
                   << fixed6(avg) << "\n";
            }
        }
    }
}

void write_latency_bins_csv(std::ostream& os, const MetricsLedger& ledger) {
    constexpr DurationMs kBin = 3 * kMsPerHour;
    const WorkloadTier tiers[] = {WorkloadTier::IW_F, WorkloadTier::IW_N, WorkloadTier::NIW};
    std::size_t bins = static_cast<std::size_t>(ledger.end_ts / kBin) + 1;
    os << "bin_start_ms,tier,count,p75_ttft_ms,p95_ttft_ms,p75_e2e_ms,p95_e2e_ms\n";
    for (std::size_t b = 0; b < bins; ++b) {
        SimTime lo = static_cast<SimTime>(b) * kBin, hi = lo + kBin;
        for (WorkloadTier tier : tiers) {
            std::vector<DurationMs> ttft, e2e;
            std::int64_t count = 0;
            for (const auto& r : ledger.requests) {
                if (r.tier != tier || r.arrival_ts < lo || r.arrival_ts >= hi) continue;
                ++count;
                if (r.first_token_ts != kUnset) ttft.push_back(r.ttft());
                if (r.completed_ts != kUnset) e2e.push_back(r.e2e());
            }
            os << lo << ',' << tier_name(tier) << ',' << count << ','
               << safe_percentile(ttft, 75) << ',' << safe_percentile(ttft, 95) << ','
               << safe_percentile(e2e, 75) << ',' << safe_percentile(e2e, 95) << "\n";
        }
    }
}

void write_plans_csv(std::ostream& os, const std::vector<PlanRecord>& plans,
                     const Catalog& cat) {
    os << "tick,model,region,gpu,delta,gamma,mu\n";
    for (const auto& p : plans) {
        os << p.tick << ',' << cat.models[p.model].id << ',' << cat.regions[p.region].id << ','
           << cat.gpus[p.gpu].id << ',' << p.delta << ',' << fixed6(p.gamma) << ','
           << fixed6(p.mu) << "\n";
    }
}

void write_output_bundle(const std::string& out_dir, const Catalog& cat,
                         const std::vector<ExperimentResult>& results) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto open = [&](const char* name) {
        std::ofstream os(fs::path(out_dir) / name);
        if (!os) throw std::runtime_error(std::string("cannot write ") + name);
        return os;
    };
    {
        auto os = open("summary.csv");
        write_summary_csv(os, results);
    }
    if (!results.empty()) {
        {
            auto os = open("instances.csv");
            write_instances_csv(os, results.front().ledger, cat);
        }
        {
            auto os = open("latency_bins.csv");
            write_latency_bins_csv(os, results.front().ledger);
        }
        {
            auto os = open("plans.csv");
            write_plans_csv(os, results.front().plans, cat);
        }
    }
}

}  // namespace fleetsim

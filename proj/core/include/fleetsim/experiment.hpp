#pragma once
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fleetsim/autoscaler.hpp"
#include "fleetsim/config.hpp"
#include "fleetsim/control.hpp"
#include "fleetsim/engine.hpp"
#include "fleetsim/metrics.hpp"
#include "fleetsim/workload.hpp"

namespace fleetsim {

struct ExperimentConfig {
    // Workload source: a trace file, a synthetic spec file, or the built-in
    // synthetic default.
    std::string trace_path;
    std::string synthetic_spec_path;
    double duration_days = 1.0;

    Strategy strategy = Strategy::Reactive;
    SchedulingPolicy scheduler = SchedulingPolicy::FCFS;
    DurationMs tau_n = seconds(60);
    DurationMs tau_p = seconds(10);
    double region_threshold = 0.70;

    ForecasterKind forecaster = ForecasterKind::Arima;
    int arima_window = 24 * 60;
    int ma_window = 60;
    double epsilon = 0.6;
    double solver_budget_sec = 30.0;

    NiwQueueConfig niw;
    bool niw_defer = true;
    double niw_deadline_hours = 24.0;  // completion SLA for generated NIW

    double up_threshold = 0.70;
    double down_threshold = 0.30;
    DurationMs cooldown = seconds(15);
    int lt_ua_tail_min = 20;
    double over_factor = 5.0;
    double under_factor = 0.5;

    int initial_instances = 20;
    int initial_spot_per_region = 4;
    int siloed_iw = 16;
    int siloed_niw = 4;
    int min_per_endpoint = 2;
    int max_per_deployment = 3;

    std::string profile_path;   // empty = calibrated analytic default
    std::string capacity_path;  // empty = built-in default
    bool iter_decode = false;
    std::uint64_t seed = 1;

    std::map<std::string, std::uint64_t> kv_bytes_per_token;  // per model id
};

// Apply `key=value` overrides (same keys as the CLI flags, dots for the
// per-model kv map: kv_bytes_per_token.<model>).
void apply_kv_overrides(ExperimentConfig& cfg, const KvConfig& kv);

struct ExperimentResult {
    Strategy strategy = Strategy::Reactive;
    MetricsLedger ledger;
    std::vector<PlanRecord> plans;
};

std::vector<Request> load_requests(const ExperimentConfig& cfg, const Catalog& cat);

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Catalog& cat,
                                const ProfileTable& profiles, const CapacityTable& capacity,
                                std::vector<Request> requests);

void write_summary_csv(std::ostream& os, const std::vector<ExperimentResult>& results);
void write_instances_csv(std::ostream& os, const MetricsLedger& ledger, const Catalog& cat);
void write_latency_bins_csv(std::ostream& os, const MetricsLedger& ledger);
void write_plans_csv(std::ostream& os, const std::vector<PlanRecord>& plans, const Catalog& cat);

// summary.csv, instances.csv, latency_bins.csv, plans.csv under out_dir
// (instances/latency/plans from the first result).
void write_output_bundle(const std::string& out_dir, const Catalog& cat,
                         const std::vector<ExperimentResult>& results);

}  // namespace fleetsim

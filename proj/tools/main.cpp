#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fleetsim/defaults.hpp"
#include "fleetsim/experiment.hpp"
#include "fleetsim/workload.hpp"

using namespace fleetsim;

namespace {

// CLI flags funnel through the same key=value override path as --config, so
// precedence is simply: defaults < config file < explicit flags.
struct KvFlags {
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> opts;

    void add(CLI::App* cmd, const std::string& flag, const std::string& key,
             const std::string& desc) {
        opts[key] = cmd->add_option(flag, values[key], desc);
    }
    void add_flag(CLI::App* cmd, const std::string& flag, const std::string& key,
                  const std::string& desc) {
        opts[key] = cmd->add_flag(flag, desc);
    }
    void merge_into(KvConfig& kv) const {
        for (const auto& [key, opt] : opts) {
            if (!opt->count()) continue;
            auto it = values.find(key);
            kv[key] = (it != values.end() && !it->second.empty()) ? it->second : "true";
        }
    }
};

void add_experiment_flags(CLI::App* cmd, KvFlags& f) {
    f.add(cmd, "--trace", "trace", "request trace csv");
    f.add(cmd, "--synthetic", "synthetic", "synthetic workload spec (key=value file)");
    f.add(cmd, "--duration-days", "duration_days", "built-in synthetic duration");
    f.add(cmd, "--scheduler", "scheduler", "fcfs|edf|pf|dpa");
    f.add(cmd, "--tau-n", "tau_n_sec", "DPA severely-expired split, seconds");
    f.add(cmd, "--tau-p", "tau_p_sec", "DPA urgency split, seconds");
    f.add(cmd, "--region-threshold", "region_threshold", "cross-region spill utilization");
    f.add(cmd, "--forecaster", "forecaster", "arima|ma");
    f.add(cmd, "--arima-window", "arima_window", "fit window, minutes");
    f.add(cmd, "--ma-window", "ma_window", "moving-average window, minutes");
    f.add(cmd, "--epsilon", "epsilon", "regional supply fraction in the planner");
    f.add(cmd, "--solver-budget-sec", "solver_budget_sec", "plan solve wall budget");
    f.add(cmd, "--niw-sig-low", "niw_sig_low", "release-1 utilization bound");
    f.add(cmd, "--niw-sig-lower", "niw_sig_lower", "release-2 utilization bound");
    f.add(cmd, "--niw-escalate-hours", "niw_escalate_hours", "queue age before escalation");
    f.add(cmd, "--niw-deadline-hours", "niw_deadline_hours", "NIW completion SLA");
    f.add(cmd, "--profile", "profile", "performance profile csv");
    f.add(cmd, "--capacity", "capacity", "capacity table csv");
    f.add(cmd, "--initial-instances", "initial_instances", "starting instances per endpoint");
    f.add_flag(cmd, "--iter-decode", "iter_decode", "per-iteration decode events");
}

struct Bundle {
    ExperimentConfig cfg;
    Catalog cat;
    CapacityTable capacity{0, 0};
    ProfileTable profiles{0, 0};
};

Bundle make_bundle(const std::string& config_path, const KvFlags& flags, std::uint64_t seed,
                   bool seed_set) {
    KvConfig kv;
    if (!config_path.empty()) kv = parse_kv_file(config_path);
    flags.merge_into(kv);
    if (seed_set) kv["seed"] = std::to_string(seed);

    Bundle b;
    apply_kv_overrides(b.cfg, kv);
    b.cat = default_catalog();
    for (const auto& [model, bytes] : b.cfg.kv_bytes_per_token) {
        auto mi = b.cat.model_index(model);
        if (!mi) throw std::invalid_argument("kv_bytes_per_token: unknown model " + model);
        b.cat.models[*mi].kv_bytes_per_token = bytes;
    }
    b.capacity = b.cfg.capacity_path.empty() ? default_capacity(b.cat)
                                             : load_capacity_table(b.cfg.capacity_path, b.cat);
    b.profiles = b.cfg.profile_path.empty()
                     ? default_profiles(b.cat, b.capacity)
                     : load_profile_table(b.cfg.profile_path, b.cat);
    return b;
}

bool readable(const std::string& path) {
    std::ifstream in(path);
    return static_cast<bool>(in);
}

int check_trace(const std::string& path) {
    if (!path.empty() && !readable(path)) {
        std::cerr << "error: cannot open trace file: " << path << "\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fleetsim: deterministic simulator for multi-region LLM serving fleets"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value config file");
        cmd->add_option("--out", out_dir, "output directory");
        return cmd->add_option("--seed", seed, "rng seed");
    };

    CLI::App* run = app.add_subcommand("run", "simulate one strategy and write the csv bundle");
    KvFlags run_flags;
    std::string run_strategy;
    auto* run_seed_opt = add_common(run);
    run->add_option("--strategy", run_strategy, "siloed|reactive|lt-i|lt-u|lt-ua|static");
    add_experiment_flags(run, run_flags);

    CLI::App* cmp = app.add_subcommand("compare", "simulate several strategies on one workload");
    KvFlags cmp_flags;
    std::string strategies = "reactive,lt-i,lt-u,lt-ua";
    auto* cmp_seed_opt = add_common(cmp);
    cmp->add_option("--strategies", strategies, "comma-separated strategy list");
    add_experiment_flags(cmp, cmp_flags);

    CLI::App* gen = app.add_subcommand("gen-trace", "emit a synthetic trace csv");
    std::string gen_spec;
    std::string gen_out = "trace.csv";
    double gen_days = 1.0;
    gen->add_option("--config", config_path, "key=value config file");
    auto* gen_seed_opt = gen->add_option("--seed", seed, "rng seed");
    gen->add_option("--out", gen_out, "output trace path");
    gen->add_option("--synthetic", gen_spec, "synthetic workload spec file");
    gen->add_option("--duration-days", gen_days, "built-in synthetic duration");

    CLI::App* val = app.add_subcommand("validate-trace", "parse and check a trace csv");
    std::string val_trace;
    val->add_option("--trace", val_trace, "request trace csv")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            Bundle b = make_bundle(config_path, run_flags, seed, run_seed_opt->count() > 0);
            if (!run_strategy.empty()) {
                auto s = parse_strategy(run_strategy);
                if (!s) throw std::invalid_argument("unknown strategy: " + run_strategy);
                b.cfg.strategy = *s;
            }
            if (int rc = check_trace(b.cfg.trace_path)) return rc;
            std::vector<Request> reqs = load_requests(b.cfg, b.cat);
            std::vector<ExperimentResult> results;
            results.push_back(run_experiment(b.cfg, b.cat, b.profiles, b.capacity, reqs));
            write_output_bundle(out_dir, b.cat, results);
            std::cout << "strategy=" << strategy_name(b.cfg.strategy) << " requests=" << reqs.size()
                      << " out=" << out_dir << "\n";
            return 0;
        }
        if (cmp->parsed()) {
            Bundle b = make_bundle(config_path, cmp_flags, seed, cmp_seed_opt->count() > 0);
            if (int rc = check_trace(b.cfg.trace_path)) return rc;
            std::vector<Request> reqs = load_requests(b.cfg, b.cat);
            std::vector<ExperimentResult> results;
            std::stringstream names(strategies);
            std::string tok;
            while (std::getline(names, tok, ',')) {
                if (tok.empty()) continue;
                auto s = parse_strategy(tok);
                if (!s) throw std::invalid_argument("unknown strategy: " + tok);
                b.cfg.strategy = *s;
                b.profiles.reset_extrapolation_count();
                results.push_back(run_experiment(b.cfg, b.cat, b.profiles, b.capacity, reqs));
                std::cout << "done " << strategy_name(*s) << "\n";
            }
            if (results.empty()) throw std::invalid_argument("empty --strategies list");
            write_output_bundle(out_dir, b.cat, results);
            std::cout << "strategies=" << results.size() << " requests=" << reqs.size()
                      << " out=" << out_dir << "\n";
            return 0;
        }
        if (gen->parsed()) {
            Catalog cat = default_catalog();
            SyntheticWorkloadSpec spec =
                gen_spec.empty() ? default_synthetic_spec(gen_days, seed)
                                 : parse_synthetic_spec(gen_spec);
            if (gen_spec.empty() && gen_seed_opt->count()) spec.seed = seed;
            std::vector<Request> reqs = generate_synthetic(spec, cat, SlaDefaults{});
            export_trace(gen_out, reqs, cat);
            std::cout << "wrote " << reqs.size() << " requests to " << gen_out << "\n";
            return 0;
        }
        if (val->parsed()) {
            if (int rc = check_trace(val_trace)) return rc;
            Catalog cat = default_catalog();
            IngestResult res = ingest_trace(val_trace, cat, SlaDefaults{}, /*strict=*/true);
            std::size_t per_tier[3] = {0, 0, 0};
            for (const auto& r : res.requests) ++per_tier[static_cast<int>(r.tier)];
            std::cout << "ok: " << res.requests.size() << " records (IW-F " << per_tier[0]
                      << ", IW-N " << per_tier[1] << ", NIW " << per_tier[2] << ")";
            if (res.unsorted_warnings) std::cout << " [input was not sorted; re-sorted]";
            std::cout << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

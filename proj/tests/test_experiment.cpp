#include <doctest.h>

#include <stdexcept>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fleetsim/defaults.hpp"
#include "fleetsim/experiment.hpp"
#include "test_util.hpp"

using namespace fleetsim;

namespace {

struct World {
    Catalog cat = test::tiny_catalog();
    ProfileTable profiles = test::tiny_profiles(cat);
    CapacityTable capacity = test::tiny_capacity(cat);
};

ExperimentConfig tiny_experiment(Strategy strategy) {
    ExperimentConfig cfg;
    cfg.strategy = strategy;
    cfg.duration_days = 0.01;
    cfg.initial_instances = 2;
    cfg.siloed_iw = 2;
    cfg.siloed_niw = 2;
    cfg.initial_spot_per_region = 1;
    return cfg;
}

std::vector<Request> tiny_requests(const Catalog& cat, const ExperimentConfig& cfg) {
    SyntheticWorkloadSpec spec;
    spec.duration_days = cfg.duration_days;
    spec.seed = cfg.seed;
    for (const char* region : {"r0", "r1"}) {
        for (WorkloadTier tier : {WorkloadTier::IW_F, WorkloadTier::NIW}) {
            WorkloadStream s;
            s.model = "m0";
            s.region = region;
            s.tier = tier;
            s.base_rps = 0.5;
            spec.streams.push_back(s);
        }
    }
    SlaDefaults sla;
    sla.niw_deadline = static_cast<DurationMs>(cfg.niw_deadline_hours * kMsPerHour);
    return generate_synthetic(spec, cat, sla);
}

}  // namespace

TEST_CASE("kv config parsing") {
    std::stringstream in;
    in << "# a comment\n"
       << "\n"
       << "  strategy = lt-ua  \n"
       << "epsilon=0.5\n"
       << "niw_defer = false\n"
       << "seed = 42\n";
    KvConfig kv = parse_kv_stream(in);
    CHECK(kv.size() == 4);
    CHECK(kv_get(kv, "strategy") == std::string("lt-ua"));
    CHECK(!kv_get(kv, "missing"));
    CHECK(kv_get_str(kv, "missing", "x") == "x");
    CHECK(kv_get_double(kv, "epsilon", 1.0) == doctest::Approx(0.5));
    CHECK(kv_get_int(kv, "seed", 0) == 42);
    CHECK(kv_get_bool(kv, "niw_defer", true) == false);
    CHECK(kv_get_bool(kv, "missing", true) == true);

    KvConfig bad{{"epsilon", "abc"}};
    CHECK_THROWS_AS(kv_get_double(bad, "epsilon", 1.0), std::invalid_argument);
    KvConfig badint{{"seed", "4x"}};
    CHECK_THROWS_AS(kv_get_int(badint, "seed", 1), std::invalid_argument);
}

TEST_CASE("apply_kv_overrides maps keys onto the experiment config") {
    ExperimentConfig cfg;
    KvConfig kv{
        {"strategy", "lt-i"},          {"scheduler", "dpa"},
        {"tau_n_sec", "30"},           {"duration_days", "0.5"},
        {"epsilon", "0.7"},            {"forecaster", "ma"},
        {"cooldown_sec", "45"},        {"initial_instances", "7"},
        {"niw_escalate_hours", "2"},   {"kv_bytes_per_token.m0", "123456"},
        {"iter_decode", "true"},
    };
    apply_kv_overrides(cfg, kv);
    CHECK(cfg.strategy == Strategy::LT_I);
    CHECK(cfg.scheduler == SchedulingPolicy::DPA);
    CHECK(cfg.tau_n == seconds(30));
    CHECK(cfg.duration_days == doctest::Approx(0.5));
    CHECK(cfg.epsilon == doctest::Approx(0.7));
    CHECK(cfg.forecaster == ForecasterKind::MovingAverage);
    CHECK(cfg.cooldown == seconds(45));
    CHECK(cfg.initial_instances == 7);
    CHECK(cfg.niw.escalate_age == hours(2));
    CHECK(cfg.kv_bytes_per_token.at("m0") == 123456);
    CHECK(cfg.iter_decode);

    CHECK_THROWS_AS(apply_kv_overrides(cfg, KvConfig{{"strategy", "bogus"}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(apply_kv_overrides(cfg, KvConfig{{"scheduler", "bogus"}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(apply_kv_overrides(cfg, KvConfig{{"forecaster", "bogus"}}),
                    std::invalid_argument);
}

TEST_CASE("load_requests is deterministic for a fixed seed") {
    World w;
    Catalog cat = default_catalog();
    ExperimentConfig cfg;
    cfg.duration_days = 0.005;
    cfg.seed = 3;
    auto a = load_requests(cfg, cat);
    auto b = load_requests(cfg, cat);
    REQUIRE(!a.empty());
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].arrival_ts == b[i].arrival_ts);
        CHECK(a[i].model == b[i].model);
        CHECK(a[i].input_tokens == b[i].input_tokens);
    }
    cfg.seed = 4;
    CHECK(load_requests(cfg, cat).size() != a.size());
}

TEST_CASE("run_experiment completes a tiny workload under each strategy") {
    World w;
    for (Strategy strategy : {Strategy::Reactive, Strategy::Siloed, Strategy::LT_UA}) {
        CAPTURE(strategy_name(strategy));
        ExperimentConfig cfg = tiny_experiment(strategy);
        auto requests = tiny_requests(w.cat, cfg);
        REQUIRE(!requests.empty());
        ExperimentResult res =
            run_experiment(cfg, w.cat, w.profiles, w.capacity, requests);
        CHECK(res.strategy == strategy);
        CHECK(res.ledger.requests.size() == requests.size());
        std::size_t served = 0;
        for (const auto& r : res.ledger.requests)
            if (r.completed_ts != kUnset) ++served;
        CHECK(served == requests.size());
        CHECK(instance_hours(res.ledger) > 0.0);
    }
}

TEST_CASE("summary csv has one row per result and a stable header") {
    World w;
    ExperimentConfig cfg = tiny_experiment(Strategy::Reactive);
    auto requests = tiny_requests(w.cat, cfg);
    std::vector<ExperimentResult> results;
    results.push_back(run_experiment(cfg, w.cat, w.profiles, w.capacity, requests));

    std::ostringstream os;
    write_summary_csv(os, results);
    std::istringstream lines(os.str());
    std::string header, row, extra;
    REQUIRE(std::getline(lines, header));
    REQUIRE(std::getline(lines, row));
    CHECK(!std::getline(lines, extra));
    CHECK(header.rfind("strategy,requests,completed,instance_hours,waste_gpu_hours,spot_hours,",
                       0) == 0);
    CHECK(row.rfind("reactive,", 0) == 0);
}

TEST_CASE("write_output_bundle emits the four csv files") {
    World w;
    ExperimentConfig cfg = tiny_experiment(Strategy::LT_U);
    auto requests = tiny_requests(w.cat, cfg);
    std::vector<ExperimentResult> results;
    results.push_back(run_experiment(cfg, w.cat, w.profiles, w.capacity, requests));

    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "fleetsim_bundle_test";
    fs::remove_all(dir);
    write_output_bundle(dir.string(), w.cat, results);
    for (const char* name : {"summary.csv", "instances.csv", "latency_bins.csv", "plans.csv"}) {
        CAPTURE(name);
        CHECK(fs::exists(dir / name));
        CHECK(fs::file_size(dir / name) > 0);
    }
    fs::remove_all(dir);
}

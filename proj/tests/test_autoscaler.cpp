#include <doctest.h>

#include <functional>

#include "fleetsim/autoscaler.hpp"
#include "fleetsim/workload.hpp"
#include "test_util.hpp"

using namespace fleetsim;

namespace {

struct World {
    Catalog cat = test::tiny_catalog();
    ProfileTable profiles = test::tiny_profiles(cat);
    CapacityTable capacity = test::tiny_capacity(cat);

    Simulator make(SimConfig cfg = {}) { return Simulator(cat, profiles, capacity, cfg); }
};

// Pin an instance's apparent utilization by faking reserved bytes.
void fake_util(Simulator& sim, InstanceId id, double util) {
    auto& inst = sim.fleet().at(id);
    inst.effective_used_bytes =
        static_cast<std::uint64_t>(util * static_cast<double>(inst.effective_capacity_bytes));
}

struct AtTime : ControlHooks {
    SimTime at = 0;
    std::function<void(Simulator&, SimTime)> fn;
    bool fired = false;
    void on_scaler_tick(Simulator& sim, SimTime now) override {
        if (fired || now < at) return;
        fired = true;
        fn(sim, now);
    }
};

int count_reason(const MetricsLedger& l, const std::string& reason) {
    int n = 0;
    for (const auto& e : l.scale_events)
        if (e.reason == reason) ++n;
    return n;
}

}  // namespace

TEST_CASE("strategy names round-trip") {
    for (Strategy s : {Strategy::Siloed, Strategy::Reactive, Strategy::LT_I, Strategy::LT_U,
                       Strategy::LT_UA, Strategy::Static})
        CHECK(parse_strategy(strategy_name(s)) == s);
    CHECK(!parse_strategy("nope"));
}

TEST_CASE("reactive scales up on high utilization, throttled by the cooldown") {
    World w;
    Simulator sim = w.make();
    InstanceId a = sim.add_initial_instance(0, 0, 0);
    InstanceId b = sim.add_initial_instance(0, 0, 0);
    fake_util(sim, a, 0.95);  // endpoint utilization 0.95 > 0.70
    fake_util(sim, b, 0.95);
    Autoscaler scaler(w.cat, ScalerConfig{});
    sim.add_hook(&scaler);
    // ~30 s of decode keeps ticks alive for two cooldown periods.
    MetricsLedger l = sim.run({test::iw_request(0, 0, 100, 3000)});

    int ups = count_reason(l, "reactive-up");
    CHECK(ups >= 2);
    CHECK(ups <= 3);
    // Consecutive actions are at least one cooldown apart.
    SimTime prev = kUnset;
    for (const auto& e : l.scale_events) {
        if (prev != kUnset) CHECK(e.ts - prev >= scaler.config().cooldown);
        prev = e.ts;
    }
    // Naive baseline always pays for a fresh VM.
    REQUIRE(!l.provisionings.empty());
    for (const auto& p : l.provisionings) CHECK(p.source == "fresh-vm");
}

TEST_CASE("reactive scale-down retires the idlest instance, floor of two holds") {
    World w;
    Simulator sim = w.make();
    for (int i = 0; i < 3; ++i) sim.add_initial_instance(0, 0, 0);
    Autoscaler scaler(w.cat, ScalerConfig{});
    sim.add_hook(&scaler);
    MetricsLedger l = sim.run({test::iw_request(0, 0, 100, 3000)});

    CHECK(count_reason(l, "reactive-down") == 1);  // floor stops the second
    CHECK(sim.fleet().region_vm_count(0) == 2);    // the VM is gone, not donated
    int retired = 0;
    for (const auto& inst : sim.fleet().instances())
        if (inst.role == InstanceRole::Retired) ++retired;
    CHECK(retired == 1);
    CHECK(l.requests[0].completed_ts != kUnset);
}

TEST_CASE("siloed pools scale independently") {
    World w;
    SimConfig cfg;
    cfg.silo_pools = true;
    Simulator sim = w.make(cfg);
    InstanceId iw0 = sim.add_initial_instance(0, 0, 0, PoolTag::IwOnly);
    InstanceId iw1 = sim.add_initial_instance(0, 0, 0, PoolTag::IwOnly);
    for (int i = 0; i < 3; ++i) sim.add_initial_instance(0, 0, 0, PoolTag::NiwOnly);
    fake_util(sim, iw0, 0.95);
    fake_util(sim, iw1, 0.95);
    ScalerConfig scfg;
    scfg.strategy = Strategy::Siloed;
    Autoscaler scaler(w.cat, scfg);
    sim.add_hook(&scaler);
    MetricsLedger l = sim.run({test::iw_request(0, 0, 100, 3000)});

    CHECK(count_reason(l, "reactive-up") >= 1);    // hot IW pool grows
    CHECK(count_reason(l, "reactive-down") == 1);  // idle NIW pool shrinks to 2
    REQUIRE(!l.provisionings.empty());
    for (const auto& p : l.provisionings)
        CHECK(sim.fleet().at(p.instance).pool == PoolTag::IwOnly);
    int retired_niw = 0;
    for (const auto& inst : sim.fleet().instances())
        if (inst.role == InstanceRole::Retired && inst.pool == PoolTag::NiwOnly) ++retired_niw;
    CHECK(retired_niw == 1);
}

TEST_CASE("lt-u steps toward the plan target and draws from the spot pool first") {
    World w;
    Simulator sim = w.make();
    InstanceId a = sim.add_initial_instance(0, 0, 0);
    InstanceId b = sim.add_initial_instance(0, 0, 0);
    sim.add_initial_spot(0, 0, 0);
    fake_util(sim, a, 0.95);
    fake_util(sim, b, 0.95);
    ScalerConfig scfg;
    scfg.strategy = Strategy::LT_U;
    Autoscaler scaler(w.cat, scfg);
    scaler.set_plan_target(sim, 0, 0, 4);
    sim.add_hook(&scaler);
    MetricsLedger l = sim.run({test::iw_request(0, 0, 100, 3000)});

    CHECK(count_reason(l, "lt-up") == 2);  // one per cooldown window
    CHECK(sim.fleet().private_count(0, 0) == 4);
    REQUIRE(l.provisionings.size() == 2);
    CHECK(l.provisionings[0].source == "spot-same");  // warm pool drained first
    CHECK(l.provisionings[1].source == "fresh-vm");
}

TEST_CASE("lt-i jumps to the plan target and donates on the way down") {
    World w;
    Simulator sim = w.make();
    sim.add_initial_instance(0, 0, 0);
    sim.add_initial_instance(0, 0, 0);
    ScalerConfig scfg;
    scfg.strategy = Strategy::LT_I;
    Autoscaler scaler(w.cat, scfg);
    sim.add_hook(&scaler);
    AtTime up;
    up.at = seconds(1);
    up.fn = [&](Simulator& s, SimTime) { scaler.set_plan_target(s, 0, 0, 5); };
    AtTime down;
    down.at = seconds(20);
    down.fn = [&](Simulator& s, SimTime) { scaler.set_plan_target(s, 0, 0, 0); };
    sim.add_hook(&up);
    sim.add_hook(&down);
    MetricsLedger l = sim.run({test::iw_request(0, 0, 100, 3000)});

    CHECK(count_reason(l, "lt-i-up") == 3);  // 2 -> 5 in one tick
    // Down-jump clamps to the floor of 2 and drains the original instances;
    // provisioning instances cannot be victims.
    CHECK(count_reason(l, "lt-i-down") == 2);
    int spots = 0;
    for (const auto& inst : sim.fleet().instances())
        if (inst.role == InstanceRole::Spot) ++spots;
    CHECK(spots == 2);                           // donated, not retired
    CHECK(sim.fleet().region_vm_count(0) == 5);  // every VM still owned
    CHECK(l.requests[0].completed_ts != kUnset);
}

TEST_CASE("lt-ua over-scales only inside the hour's tail window") {
    World w;
    Simulator sim = w.make();
    InstanceId a = sim.add_initial_instance(0, 0, 0);
    InstanceId b = sim.add_initial_instance(0, 0, 0);
    fake_util(sim, a, 0.90);
    fake_util(sim, b, 0.90);
    ScalerConfig scfg;
    scfg.strategy = Strategy::LT_UA;
    Autoscaler scaler(w.cat, scfg);
    scaler.set_plan_target(sim, 0, 0, 2);  // matches the fleet: no lt-up path
    scaler.set_predicted_minutes(0, 0, std::vector<double>(60, 1.0), 0);
    sim.add_hook(&scaler);

    // Steady demand from minute 35 to 45: observed tps ~300 vs predicted 1.
    std::vector<Request> reqs;
    std::uint64_t id = 0;
    for (SimTime t = minutes(35); t < minutes(45); t += 200)
        reqs.push_back(test::iw_request(t, 0, 50, 10, id++));
    MetricsLedger l = sim.run(std::move(reqs));

    int over = count_reason(l, "lt-ua-over");
    CHECK(over >= 1);
    for (const auto& e : l.scale_events) {
        CHECK(e.reason == "lt-ua-over");
        CHECK((e.ts / kMsPerMinute) % 60 >= 40);  // tail window only
    }
    CHECK(scaler.floor_conflicts() == 0);
}

TEST_CASE("lt-ua at the endpoint floor records conflicts instead of shrinking") {
    World w;
    Simulator sim = w.make();
    sim.add_initial_instance(0, 0, 0);
    sim.add_initial_instance(0, 0, 0);
    ScalerConfig scfg;
    scfg.strategy = Strategy::LT_UA;
    Autoscaler scaler(w.cat, scfg);
    scaler.set_plan_target(sim, 0, 0, 2);
    scaler.set_predicted_minutes(0, 0, std::vector<double>(60, 100.0), 0);
    sim.add_hook(&scaler);
    // One tiny anchor request after the tail window keeps ticks alive
    // through it; observed demand stays ~0 against a predicted 100.
    MetricsLedger l = sim.run({test::iw_request(minutes(41), 0, 10, 1)});

    CHECK(scaler.floor_conflicts() >= 1);
    CHECK(l.lt_ua_floor_conflicts == scaler.floor_conflicts());
    CHECK(count_reason(l, "lt-ua-under") == 0);
    CHECK(sim.fleet().private_count(0, 0) == 2);
}

#include <doctest.h>

#include <stdexcept>

#include <sstream>

#include "fleetsim/metrics.hpp"

using namespace fleetsim;

namespace {

RoleInterval interval(InstanceRole role, SimTime begin, SimTime end, ModelIdx model = 0,
                      RegionIdx region = 0, InstanceId id = 0) {
    RoleInterval iv;
    iv.instance = id;
    iv.model = model;
    iv.region = region;
    iv.role = role;
    iv.begin_ts = begin;
    iv.end_ts = end;
    return iv;
}

RequestRecord request(WorkloadTier tier, SimTime arrival, SimTime first_token,
                      SimTime completed, SimTime ttft_dl, SimTime completion_dl) {
    RequestRecord r;
    r.tier = tier;
    r.arrival_ts = arrival;
    r.first_token_ts = first_token;
    r.completed_ts = completed;
    r.ttft_deadline = ttft_dl;
    r.completion_deadline = completion_dl;
    return r;
}

}  // namespace

TEST_CASE("percentile: nearest rank") {
    std::vector<DurationMs> v{15, 20, 35, 40, 50};
    CHECK(percentile(v, 0) == 15);
    CHECK(percentile(v, 5) == 15);
    CHECK(percentile(v, 30) == 20);   // rank ceil(1.5) = 2
    CHECK(percentile(v, 40) == 20);   // rank 2 exactly
    CHECK(percentile(v, 50) == 35);
    CHECK(percentile(v, 95) == 50);
    CHECK(percentile(v, 100) == 50);
    CHECK(percentile({7}, 95) == 7);
    CHECK_THROWS_AS(percentile({}, 50), std::invalid_argument);
    CHECK_THROWS_AS(percentile(v, 101), std::invalid_argument);
    CHECK_THROWS_AS(percentile(v, -1), std::invalid_argument);
}

TEST_CASE("instance_hours bills private and provisioning time") {
    MetricsLedger l;
    l.role_intervals.push_back(interval(InstanceRole::Provisioning, 0, kMsPerHour));
    l.role_intervals.push_back(interval(InstanceRole::Private, kMsPerHour, 3 * kMsPerHour));
    l.role_intervals.push_back(interval(InstanceRole::Spot, 0, 10 * kMsPerHour, 0, 1, 1));
    l.role_intervals.push_back(
        interval(InstanceRole::Private, 0, kMsPerHour / 2, 1, 1, 2));
    CHECK(instance_hours(l) == doctest::Approx(3.5));
    CHECK(instance_hours(l, 0) == doctest::Approx(3.0));
    CHECK(instance_hours(l, kUnset, 1) == doctest::Approx(0.5));
    CHECK(instance_hours(l, 1, 0) == doctest::Approx(0.0));
    CHECK(spot_hours(l) == doctest::Approx(10.0));
    CHECK(spot_hours(l, 0) == doctest::Approx(0.0));
}

TEST_CASE("instance_hours_step agrees with the interval integral") {
    MetricsLedger l;
    // Overlapping intervals: n(t) ramps 1, 2, 1, 0.
    l.role_intervals.push_back(interval(InstanceRole::Private, 0, 2 * kMsPerHour));
    l.role_intervals.push_back(
        interval(InstanceRole::Provisioning, kMsPerHour, 4 * kMsPerHour, 0, 0, 1));
    l.role_intervals.push_back(interval(InstanceRole::Spot, 0, 8 * kMsPerHour, 0, 0, 2));
    CHECK(instance_hours_step(l) == doctest::Approx(5.0));
    CHECK(instance_hours_step(l) == doctest::Approx(instance_hours(l)));
}

TEST_CASE("scaling waste is provisioning window times gpus") {
    MetricsLedger l;
    ProvisioningRecord p;
    p.gpus = 8;
    p.start_ts = 0;
    p.done_ts = 30 * kMsPerMinute;
    l.provisionings.push_back(p);
    p.gpus = 1;
    p.start_ts = kMsPerHour;
    p.done_ts = kMsPerHour + 6 * kMsPerMinute;
    l.provisionings.push_back(p);
    CHECK(scaling_waste_gpu_hours(l) == doctest::Approx(4.1));
}

TEST_CASE("sla_violation_rate per tier, unserved counts as violated") {
    MetricsLedger l;
    l.requests.push_back(request(WorkloadTier::IW_F, 0, 500, 900, 1000, 5000));   // ok
    l.requests.push_back(request(WorkloadTier::IW_F, 0, 1500, 2000, 1000, 5000)); // late ttft
    l.requests.push_back(
        request(WorkloadTier::IW_F, 0, kUnset, kUnset, 1000, 5000));              // unserved
    l.requests.push_back(request(WorkloadTier::IW_N, 0, 100, 200, 60000, 90000)); // ok
    l.requests.push_back(request(WorkloadTier::NIW, 0, 500, 60000, kUnset, 70000));   // ok
    l.requests.push_back(request(WorkloadTier::NIW, 0, 500, 80000, kUnset, 60000));   // late e2e
    CHECK(sla_violation_rate(l, WorkloadTier::IW_F) == doctest::Approx(2.0 / 3.0));
    CHECK(sla_violation_rate(l, WorkloadTier::IW_N) == doctest::Approx(0.0));
    CHECK(sla_violation_rate(l, WorkloadTier::NIW) == doctest::Approx(0.5));
    CHECK(completed_of_tier(l, WorkloadTier::IW_F).size() == 2);
    CHECK(completed_of_tier(l, WorkloadTier::NIW).size() == 2);

    MetricsLedger empty;
    CHECK(sla_violation_rate(empty, WorkloadTier::IW_F) == doctest::Approx(0.0));
}

TEST_CASE("serialize is byte-stable and covers every record kind") {
    MetricsLedger l;
    l.end_ts = 1234;
    l.clamp_count = 1;
    l.infeasible_ticks = 2;
    l.extrapolation_count = 3;
    l.lt_ua_floor_conflicts = 4;
    l.requests.push_back(request(WorkloadTier::IW_F, 10, 60, 100, 1010, 5010));
    l.role_intervals.push_back(interval(InstanceRole::Private, 0, 1000));
    ProvisioningRecord p;
    p.instance = 5;
    p.gpus = 8;
    p.start_ts = 1;
    p.done_ts = 2;
    p.source = "fresh-vm";
    l.provisionings.push_back(p);
    ScaleEventRecord s;
    s.ts = 7;
    s.delta = -1;
    s.reason = "reactive-down";
    l.scale_events.push_back(s);
    UtilizationSampleRecord u;
    u.ts = 9;
    u.utilization = 0.6543219;
    u.instances = 3;
    l.utilization_samples.push_back(u);

    std::ostringstream a, b;
    l.serialize(a);
    l.serialize(b);
    CHECK(a.str() == b.str());
    // Floats go out as fixed-point integers so formatting can never drift.
    CHECK(a.str().find("util,9,0,0,654322,3") != std::string::npos);
    CHECK(a.str().find("counters,1,2,3,4") != std::string::npos);
    CHECK(a.str().find("prov,5,0,0,8,1,2,fresh-vm") != std::string::npos);
    CHECK(a.str().find("scale,7,0,0,-1,reactive-down") != std::string::npos);
    CHECK(a.str().find("end_ts,1234") == 0);
}

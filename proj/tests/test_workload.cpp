#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <sstream>

#include "fleetsim/defaults.hpp"
#include "fleetsim/workload.hpp"
#include "test_util.hpp"

using namespace fleetsim;

namespace {

const char* kHeader = "arrival_ts_ms,model,region,tier,input_tokens,output_tokens";

}  // namespace

TEST_CASE("trace ingest: valid file") {
    Catalog cat = test::tiny_catalog();
    std::stringstream in;
    in << kHeader << "\n"
       << "0,m0,r0,IW-F,100,10\n"
       << "500,m0,r1,IW-N,200,20\n"
       << "900,m0,r0,NIW,300,30\n";
    IngestResult res = ingest_trace(in, cat, SlaDefaults{});
    REQUIRE(res.requests.size() == 3);
    CHECK(res.unsorted_warnings == 0);
    CHECK(res.requests[0].tier == WorkloadTier::IW_F);
    CHECK(res.requests[0].ttft_deadline == kDefaultTtftIwF);
    CHECK(res.requests[1].tier == WorkloadTier::IW_N);
    CHECK(res.requests[1].ttft_deadline == 500 + kDefaultTtftIwN);
    CHECK(res.requests[2].tier == WorkloadTier::NIW);
    CHECK(res.requests[2].ttft_deadline == kUnset);
    CHECK(res.requests[2].priority == 1);
    CHECK(res.requests[2].completion_deadline == 900 + kDefaultNiwDeadline);
    for (std::size_t i = 0; i < res.requests.size(); ++i) CHECK(res.requests[i].id == i);
}

TEST_CASE("trace ingest: strict raises ParseError with the line number") {
    Catalog cat = test::tiny_catalog();
    std::stringstream in;
    in << kHeader << "\n0,m0,r0,IW-F,100,10\nbogus line\n";
    CHECK_THROWS_AS(ingest_trace(in, cat, SlaDefaults{}), ParseError);
    std::stringstream in2;
    in2 << kHeader << "\n0,m0,r0,IW-F,100,10\n1,m0,r0,IW-F,0,10\n";
    try {
        ingest_trace(in2, cat, SlaDefaults{});
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("trace ingest: lenient skips bad rows, missing header always throws") {
    Catalog cat = test::tiny_catalog();
    std::stringstream in;
    in << kHeader << "\n0,m0,r0,IW-F,100,10\nnot,a,row\n5,m0,r0,IW-F,50,5\n";
    IngestResult res = ingest_trace(in, cat, SlaDefaults{}, false);
    CHECK(res.requests.size() == 2);

    std::stringstream no_header("0,m0,r0,IW-F,100,10\n");
    CHECK_THROWS_AS(ingest_trace(no_header, cat, SlaDefaults{}, false), ParseError);
    std::stringstream empty("");
    CHECK_THROWS_AS(ingest_trace(empty, cat, SlaDefaults{}, false), ParseError);
}

TEST_CASE("trace ingest: unsorted input is re-sorted with a warning") {
    Catalog cat = test::tiny_catalog();
    std::stringstream in;
    in << kHeader << "\n900,m0,r0,IW-F,100,10\n100,m0,r1,IW-F,100,10\n";
    IngestResult res = ingest_trace(in, cat, SlaDefaults{});
    CHECK(res.unsorted_warnings == 1);
    REQUIRE(res.requests.size() == 2);
    CHECK(res.requests[0].arrival_ts == 100);
    CHECK(res.requests[1].arrival_ts == 900);
}

TEST_CASE("export/ingest round-trip preserves every field") {
    Catalog cat = test::tiny_catalog();
    std::vector<Request> reqs;
    reqs.push_back(test::iw_request(0, 0, 123, 45, 0));
    reqs.push_back(test::iw_request(777, 1, 9000, 1, 1));
    std::stringstream buf;
    export_trace(buf, reqs, cat);
    IngestResult back = ingest_trace(buf, cat, SlaDefaults{});
    REQUIRE(back.requests.size() == reqs.size());
    for (std::size_t i = 0; i < reqs.size(); ++i) {
        CHECK(back.requests[i].arrival_ts == reqs[i].arrival_ts);
        CHECK(back.requests[i].model == reqs[i].model);
        CHECK(back.requests[i].client_region == reqs[i].client_region);
        CHECK(back.requests[i].tier == reqs[i].tier);
        CHECK(back.requests[i].input_tokens == reqs[i].input_tokens);
        CHECK(back.requests[i].output_tokens == reqs[i].output_tokens);
    }
}

TEST_CASE("stream_rate: diurnal peak at 14:00, trough at 02:00, weekend damping") {
    WorkloadStream s;
    s.base_rps = 2.0;
    s.diurnal_amplitude = 0.5;
    s.weekend_damping = 0.8;
    SimTime peak = 14 * kMsPerHour;
    SimTime trough = 2 * kMsPerHour;
    CHECK(stream_rate(s, peak) == doctest::Approx(3.0));
    CHECK(stream_rate(s, trough) == doctest::Approx(1.0));
    CHECK(stream_rate(s, 8 * kMsPerHour) > stream_rate(s, trough));
    CHECK(stream_rate(s, 8 * kMsPerHour) < stream_rate(s, peak));
    // Saturday (epoch day 0 is Monday).
    CHECK(stream_rate(s, 5 * kMsPerDay + peak) == doctest::Approx(3.0 * 0.8));
}

TEST_CASE("generate_synthetic: deterministic per seed, sorted, valid") {
    Catalog cat = test::tiny_catalog();
    SyntheticWorkloadSpec spec;
    spec.duration_days = 0.05;
    spec.seed = 42;
    WorkloadStream s;
    s.model = "m0";
    s.region = "r0";
    s.tier = WorkloadTier::IW_F;
    s.base_rps = 1.0;
    s.diurnal_amplitude = 0.5;
    spec.streams.push_back(s);
    s.region = "r1";
    s.tier = WorkloadTier::NIW;
    spec.streams.push_back(s);

    auto a = generate_synthetic(spec, cat, SlaDefaults{});
    auto b = generate_synthetic(spec, cat, SlaDefaults{});
    REQUIRE(a.size() == b.size());
    CHECK(a.size() > 1000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].arrival_ts == b[i].arrival_ts);
        CHECK(a[i].input_tokens == b[i].input_tokens);
        if (i) CHECK(a[i].arrival_ts >= a[i - 1].arrival_ts);
        CHECK(!validate_request(a[i], cat));
    }
    spec.seed = 43;
    auto c = generate_synthetic(spec, cat, SlaDefaults{});
    CHECK(a.size() != c.size());  // astronomically unlikely to collide
}

TEST_CASE("generate_synthetic: token caps and validation errors") {
    Catalog cat = test::tiny_catalog();
    SyntheticWorkloadSpec spec;
    spec.duration_days = 0.02;
    WorkloadStream s;
    s.model = "m0";
    s.region = "r0";
    s.base_rps = 2.0;
    spec.streams.push_back(s);
    TokenDistribution tok;
    tok.max_tokens = 64;
    spec.tokens["m0"] = tok;
    for (const auto& r : generate_synthetic(spec, cat, SlaDefaults{})) {
        CHECK(r.input_tokens >= 1);
        CHECK(r.input_tokens <= 64);
        CHECK(r.output_tokens <= 64);
    }

    spec.streams[0].diurnal_amplitude = 1.5;
    CHECK_THROWS_AS(generate_synthetic(spec, cat, SlaDefaults{}), std::invalid_argument);
    spec.streams[0].diurnal_amplitude = 0.0;
    spec.streams[0].model = "missing";
    CHECK_THROWS_AS(generate_synthetic(spec, cat, SlaDefaults{}), std::invalid_argument);
    spec.streams.clear();
    CHECK_THROWS_AS(generate_synthetic(spec, cat, SlaDefaults{}), std::invalid_argument);
}

TEST_CASE("burst windows raise arrival counts") {
    Catalog cat = test::tiny_catalog();
    SyntheticWorkloadSpec spec;
    spec.duration_days = 0.2;
    spec.seed = 7;
    WorkloadStream s;
    s.model = "m0";
    s.region = "r0";
    s.base_rps = 1.0;
    spec.streams.push_back(s);
    auto base = generate_synthetic(spec, cat, SlaDefaults{});
    spec.streams[0].burst_probability = 0.05;
    spec.streams[0].burst_multiplier = 8.0;
    auto bursty = generate_synthetic(spec, cat, SlaDefaults{});
    CHECK(bursty.size() > base.size() + base.size() / 10);
}

TEST_CASE("periodicity_score finds the daily cycle") {
    std::vector<double> series;
    for (int i = 0; i < 4 * 1440; ++i)
        series.push_back(10.0 + 5.0 * std::cos(2 * M_PI * i / 1440.0));
    auto daily = periodicity_score(series, 1440);
    REQUIRE(daily.ok);
    CHECK(daily.score > 0.99);
    auto anti = periodicity_score(series, 720);  // half period: anti-correlated
    REQUIRE(anti.ok);
    CHECK(anti.score < -0.99);

    CHECK(!periodicity_score({1, 2, 3}, 10).ok);
    CHECK(periodicity_score({1, 2, 3}, 10).error == SeriesError::SeriesTooShort);
    std::vector<double> flat(100, 3.0);
    CHECK(periodicity_score(flat, 10).error == SeriesError::ZeroVariance);
}

TEST_CASE("parse_synthetic_spec reads streams and token overrides") {
    std::stringstream in;
    in << "duration_days = 2.5\n"
       << "seed = 99\n"
       << "# comment line\n"
       << "stream.0.model = m0\n"
       << "stream.0.region = r1\n"
       << "stream.0.tier = NIW\n"
       << "stream.0.base_rps = 0.25\n"
       << "stream.0.diurnal_amplitude = 0.4\n"
       << "stream.0.burst_probability = 0.01\n"
       << "stream.0.burst_multiplier = 3\n"
       << "stream.0.burst_duration_min = 5\n"
       << "stream.1.model = m0\n"
       << "tokens.m0.input_log_mean = 6.0\n"
       << "tokens.m0.max_tokens = 4096\n";
    SyntheticWorkloadSpec spec = parse_synthetic_spec(in);
    CHECK(spec.duration_days == doctest::Approx(2.5));
    CHECK(spec.seed == 99);
    REQUIRE(spec.streams.size() == 2);
    CHECK(spec.streams[0].region == "r1");
    CHECK(spec.streams[0].tier == WorkloadTier::NIW);
    CHECK(spec.streams[0].base_rps == doctest::Approx(0.25));
    CHECK(spec.streams[0].burst_duration == minutes(5));
    CHECK(spec.tokens.at("m0").input_log_mean == doctest::Approx(6.0));
    CHECK(spec.tokens.at("m0").max_tokens == 4096);

    std::stringstream bad("stream.0.model = m0\nstream.0.tier = fast\n");
    CHECK_THROWS_AS(parse_synthetic_spec(bad), std::invalid_argument);
}

TEST_CASE("default synthetic spec covers every (model, region, tier)") {
    Catalog cat = default_catalog();
    SyntheticWorkloadSpec spec = default_synthetic_spec(1.0, 1);
    CHECK(spec.streams.size() == cat.models.size() * cat.regions.size() * 3);
    spec.validate();
    for (const auto& s : spec.streams) {
        CHECK(cat.model_index(s.model));
        CHECK(cat.region_index(s.region));
    }
}

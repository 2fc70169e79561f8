#include <doctest.h>

#include "fleetsim/domain.hpp"
#include "test_util.hpp"

using namespace fleetsim;

TEST_CASE("tier names round-trip") {
    for (WorkloadTier t : {WorkloadTier::IW_F, WorkloadTier::IW_N, WorkloadTier::NIW})
        CHECK(parse_tier(tier_name(t)) == t);
    CHECK(!parse_tier("iw-f"));
    CHECK(!parse_tier(""));
}

TEST_CASE("catalog index lookups") {
    Catalog cat = test::tiny_catalog();
    CHECK(cat.model_index("m0") == 0);
    CHECK(!cat.model_index("nope"));
    CHECK(cat.region_index("r1") == 1);
    CHECK(!cat.region_index(""));
    CHECK(cat.gpu_index("g0") == 0);
    CHECK(!cat.gpu_index("g1"));
}

TEST_CASE("time helpers") {
    CHECK(day_of_week(0) == 0);  // epoch is a Monday
    CHECK(day_of_week(5 * kMsPerDay) == 5);
    CHECK(is_weekend(6 * kMsPerDay));
    CHECK(!is_weekend(4 * kMsPerDay));
    CHECK(hour_of_day(14 * kMsPerHour) == doctest::Approx(14.0));
    CHECK(hour_of_day(kMsPerDay + kMsPerMinute * 30) == doctest::Approx(0.5));
}

TEST_CASE("remaining_ttft uses the completion deadline for NIW") {
    Request r = test::iw_request(1000, 0, 10, 10);
    CHECK(r.remaining_ttft(1500) == r.ttft_deadline - 1500);
    r.tier = WorkloadTier::NIW;
    r.ttft_deadline = kUnset;
    CHECK(r.remaining_ttft(1500) == r.completion_deadline - 1500);
}

TEST_CASE("validate_request catches each error class") {
    Catalog cat = test::tiny_catalog();
    Request ok = test::iw_request(1000, 0, 10, 10);
    CHECK(!validate_request(ok, cat));

    Request r = ok;
    r.model = 7;
    CHECK(validate_request(r, cat) == ValidationError::UnknownModel);

    r = ok;
    r.client_region = -1;
    CHECK(validate_request(r, cat) == ValidationError::UnknownRegion);

    r = ok;
    r.input_tokens = 0;
    CHECK(validate_request(r, cat) == ValidationError::InvalidTokenCount);
    r = ok;
    r.output_tokens = -3;
    CHECK(validate_request(r, cat) == ValidationError::InvalidTokenCount);

    r = ok;
    r.ttft_deadline = r.arrival_ts - 1;
    CHECK(validate_request(r, cat) == ValidationError::InvalidDeadline);
    r = ok;
    r.ttft_deadline = kUnset;  // IW must carry a TTFT deadline
    CHECK(validate_request(r, cat) == ValidationError::InvalidDeadline);
    r = ok;
    r.completion_deadline = r.arrival_ts - 1;
    CHECK(validate_request(r, cat) == ValidationError::InvalidDeadline);

    r = ok;
    r.priority = 1;  // IW is always priority 0
    CHECK(validate_request(r, cat) == ValidationError::InvalidPriority);
    r = ok;
    r.tier = WorkloadTier::NIW;
    r.ttft_deadline = kUnset;
    r.priority = 2;
    CHECK(validate_request(r, cat) == ValidationError::InvalidPriority);

    r = ok;
    r.routed_ts = r.arrival_ts + 10;
    r.first_token_ts = r.arrival_ts + 5;  // out of order
    CHECK(validate_request(r, cat) == ValidationError::InvalidLifecycle);
    r.first_token_ts = r.arrival_ts + 20;
    CHECK(!validate_request(r, cat));
}

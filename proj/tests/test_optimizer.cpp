#include <doctest.h>

#include <cmath>
#include <limits>

#include "fleetsim/optimizer.hpp"
#include "fleetsim/rng.hpp"

using namespace fleetsim;

namespace {

ModelProblem worked_example() {
    // 1 model, 2 regions, 1 gpu type: n = (2, 2), theta = 100,
    // peaks = (350, 50), global peak 400, alpha = 1, sigma = 0.1.
    ModelProblem p;
    p.model = 0;
    p.regions = {0, 1};
    p.gpus = {0};
    p.n = {{2}, {2}};
    p.theta = {100.0};
    p.alpha = {1.0};
    p.sigma = {0.1};
    p.region_peak = {350.0, 50.0};
    p.global_peak = 400.0;
    p.delta_max = {{4}, {4}};
    return p;
}

struct BruteResult {
    double objective = std::numeric_limits<double>::infinity();
    std::vector<std::vector<int>> delta;
};

void brute_recurse(const ModelProblem& p, double eps, std::vector<std::vector<int>>& delta,
                   std::size_t j, std::size_t k, BruteResult& best) {
    if (j == p.regions.size()) {
        if (!satisfies_constraints(p, delta, eps)) return;
        double obj = objective(p, delta).total;
        if (obj < best.objective) {
            best.objective = obj;
            best.delta = delta;
        }
        return;
    }
    std::size_t nj = k + 1 == p.gpus.size() ? j + 1 : j;
    std::size_t nk = k + 1 == p.gpus.size() ? 0 : k + 1;
    for (int d = -p.n[j][k]; d <= p.delta_max[j][k]; ++d) {
        delta[j][k] = d;
        brute_recurse(p, eps, delta, nj, nk, best);
    }
    delta[j][k] = 0;
}

BruteResult brute_force(const ModelProblem& p, double eps) {
    BruteResult best;
    std::vector<std::vector<int>> delta(p.regions.size(),
                                        std::vector<int>(p.gpus.size(), 0));
    brute_recurse(p, eps, delta, 0, 0, best);
    return best;
}

// Feasible-by-construction random instance: demand never exceeds what the
// delta bounds can supply.
ModelProblem random_instance(Rng& rng) {
    ModelProblem p;
    p.model = 0;
    int nj = 1 + static_cast<int>(rng.uniform(0, 3));
    int nk = 1 + static_cast<int>(rng.uniform(0, 2));
    for (int j = 0; j < nj; ++j) p.regions.push_back(j);
    for (int k = 0; k < nk; ++k) p.gpus.push_back(k);
    for (int k = 0; k < nk; ++k) {
        p.theta.push_back(rng.uniform(50, 250));
        p.alpha.push_back(rng.uniform(0.5, 3.0));
        p.sigma.push_back(rng.uniform(0.05, 1.0));
    }
    double total_max = 0;
    for (int j = 0; j < nj; ++j) {
        p.n.emplace_back();
        p.delta_max.emplace_back();
        double max_supply = 0;
        for (int k = 0; k < nk; ++k) {
            int n = static_cast<int>(rng.uniform(0, 4));
            int cap = 1 + static_cast<int>(rng.uniform(0, 4));
            p.n.back().push_back(n);
            p.delta_max.back().push_back(cap);
            max_supply += (n + cap) * p.theta[k];
        }
        p.region_peak.push_back(rng.uniform(0, max_supply / 0.6));
        total_max += max_supply;
    }
    p.global_peak = rng.uniform(0, total_max);
    return p;
}

}  // namespace

TEST_CASE("worked example: delta (+1, -1) at objective 0.1") {
    ModelProblem p = worked_example();
    OptimizerConfig cfg;  // epsilon 0.6
    ModelPlan plan = solve_model(p, cfg);
    CHECK(plan.optimal);
    CHECK(!plan.infeasible);
    REQUIRE(plan.delta.size() == 2);
    CHECK(plan.delta[0][0] == 1);
    CHECK(plan.delta[1][0] == -1);
    CHECK(plan.gamma == doctest::Approx(0.0));
    CHECK(plan.mu == doctest::Approx(0.1));
    CHECK(plan.objective == doctest::Approx(0.1));

    BruteResult brute = brute_force(p, cfg.epsilon);
    CHECK(brute.objective == doctest::Approx(0.1));
    CHECK(brute.delta == plan.delta);
}

TEST_CASE("solver matches exhaustive enumeration on random instances") {
    Rng rng(77);
    OptimizerConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
        ModelProblem p = random_instance(rng);
        REQUIRE(p.valid());
        ModelPlan plan = solve_model(p, cfg);
        BruteResult brute = brute_force(p, cfg.epsilon);
        REQUIRE(brute.objective < std::numeric_limits<double>::infinity());
        CHECK(!plan.infeasible);
        CHECK(satisfies_constraints(p, plan.delta, cfg.epsilon));
        CHECK(plan.objective == doctest::Approx(brute.objective).epsilon(1e-9));
    }
}

TEST_CASE("objective breakdown") {
    ModelProblem p = worked_example();
    auto zero = objective(p, {{0}, {0}});
    CHECK(zero.total == doctest::Approx(0.0));
    p.sigma = {0.5};
    auto up = objective(p, {{2}, {0}});
    CHECK(up.gamma == doctest::Approx(2.0));
    CHECK(up.mu == doctest::Approx(1.0));
    CHECK(up.total == doctest::Approx(3.0));
    auto down = objective(p, {{-1}, {-2}});  // removals carry no start cost
    CHECK(down.gamma == doctest::Approx(-3.0));
    CHECK(down.mu == doctest::Approx(0.0));
    CHECK(down.total == doctest::Approx(-3.0));
}

TEST_CASE("satisfies_constraints") {
    ModelProblem p = worked_example();
    CHECK(satisfies_constraints(p, {{1}, {-1}}, 0.6));
    CHECK(satisfies_constraints(p, {{2}, {0}}, 0.6));
    CHECK(!satisfies_constraints(p, {{0}, {0}}, 0.6));    // region 0 under epsilon
    CHECK(!satisfies_constraints(p, {{2}, {-3}}, 0.6));   // removes below zero
    CHECK(!satisfies_constraints(p, {{1}, {-2}}, 0.6));   // global peak unmet
}

TEST_CASE("problem validation and default delta bounds") {
    ModelProblem p = worked_example();
    std::string why;
    CHECK(p.valid(&why));
    p.theta = {0.0};
    CHECK(!p.valid(&why));
    CHECK(why == "theta must be positive for deployable pairs");
    p = worked_example();
    p.n.pop_back();
    CHECK(!p.valid());
    p = worked_example();
    p.regions.clear();
    CHECK(!p.valid());

    p = worked_example();
    p.delta_max.clear();
    default_delta_bounds(p);
    REQUIRE(p.delta_max.size() == 2);
    CHECK(p.delta_max[0][0] == 5);  // ceil(400/100) + 1
    CHECK(p.delta_max[1][0] == 5);
}

TEST_CASE("infeasible demand saturates the caps") {
    ModelProblem p = worked_example();
    p.region_peak = {10000.0, 50.0};  // far beyond (n + delta_max) * theta
    p.global_peak = 10050.0;
    ModelPlan plan = solve_model(p, OptimizerConfig{});
    CHECK(plan.infeasible);
    CHECK(!plan.optimal);
    CHECK(plan.delta[0][0] == 4);  // region 0 pinned at its cap

    ScalingPlan merged = solve({p}, OptimizerConfig{});
    CHECK(merged.infeasible);
    REQUIRE(merged.infeasibility_report.size() == 1);
}

TEST_CASE("apply_floor_and_caps: endpoint floor") {
    ModelProblem p = worked_example();
    OptimizerConfig cfg;
    ScalingPlan plan = solve({p}, cfg);
    // Worked example leaves region 1 at 2 - 1 = 1 instance; floor of 2 pulls
    // one back.
    ClampConfig clamp;
    auto records = apply_floor_and_caps(plan, {p}, clamp);
    REQUIRE(records.size() == 1);
    CHECK(records[0].region == 1);
    CHECK(records[0].reason == "endpoint-floor");
    CHECK(records[0].delta_before == -1);
    CHECK(records[0].delta_after == 0);
    CHECK(plan.models[0].delta[1][0] == 0);
    // Objective fields were recomputed for the clamped plan.
    CHECK(plan.objective == doctest::Approx(objective(p, plan.models[0].delta).total));
}

TEST_CASE("apply_floor_and_caps: region cap with largest-remainder cuts") {
    ModelProblem p = worked_example();
    ScalingPlan plan;
    ModelPlan mp;
    mp.model = 0;
    mp.delta = {{3}, {2}};  // region 0: 2+3 = 5 instances
    plan.models.push_back(mp);
    ClampConfig clamp;
    clamp.min_per_endpoint = 0;
    clamp.region_capacity_instances = {3, 0};  // cut 2 from region 0, region 1 free
    auto records = apply_floor_and_caps(plan, {p}, clamp);
    REQUIRE(records.size() == 1);
    CHECK(records[0].reason == "region-cap");
    CHECK(plan.models[0].delta[0][0] == 1);
    CHECK(plan.models[0].delta[1][0] == 2);
    CHECK(plan.gamma == doctest::Approx(3.0));
}

TEST_CASE("lp::solve_lp on small known programs") {
    using namespace fleetsim::lp;
    // min x + y s.t. x + y >= 2, 0 <= x,y <= 5.
    LpResult r = solve_lp({1, 1}, {{1, 1}}, {Relation::Ge}, {2}, {0, 0}, {5, 5});
    REQUIRE(r.feasible);
    CHECK(r.objective == doctest::Approx(2.0));
    CHECK(r.x[0] + r.x[1] == doctest::Approx(2.0));

    // min 2x + y s.t. x + y = 3 -> put everything on y.
    r = solve_lp({2, 1}, {{1, 1}}, {Relation::Eq}, {3}, {0, 0}, {10, 10});
    REQUIRE(r.feasible);
    CHECK(r.objective == doctest::Approx(3.0));
    CHECK(r.x[0] == doctest::Approx(0.0));
    CHECK(r.x[1] == doctest::Approx(3.0));

    // Lower bounds shift: min x + y with lo = (1, 1) and no rows.
    r = solve_lp({1, 1}, {}, {}, {}, {1, 1}, {4, 4});
    REQUIRE(r.feasible);
    CHECK(r.objective == doctest::Approx(2.0));

    // Infeasible: x >= 10 but x <= 5.
    r = solve_lp({1}, {{1}}, {Relation::Ge}, {10}, {0}, {5});
    CHECK(!r.feasible);

    // Negative variables via bounds: min x, -3 <= x <= 3, x >= -2.
    r = solve_lp({1}, {{1}}, {Relation::Ge}, {-2}, {-3}, {3});
    REQUIRE(r.feasible);
    CHECK(r.objective == doctest::Approx(-2.0));
}

#pragma once
#include <string>
#include <vector>

#include "fleetsim/domain.hpp"

namespace fleetsim {

struct OptimizerConfig {
    double epsilon = 0.6;          // regional real-time serving fraction, in (0,1]
    double solver_budget_sec = 30.0;  // per optimizer tick
};

// One model's subproblem: no constraint couples distinct models, so the
// program decomposes exactly. Index j runs over `regions`, k over `gpus`.
struct ModelProblem {
    ModelIdx model = kUnset;
    std::vector<RegionIdx> regions;
    std::vector<GpuIdx> gpus;
    std::vector<std::vector<int>> n;       // current instances, n[j][k]
    std::vector<double> theta;             // instance input TPS, theta[k]
    std::vector<double> alpha;             // VM hourly cost, alpha[k]
    std::vector<double> sigma;             // instance start cost, sigma[k]
    std::vector<double> region_peak;       // peak forecast demand + buffer, rho[j]
    double global_peak = 0.0;              // max over the horizon of sum_j rho_j
    std::vector<std::vector<int>> delta_max;  // upper bounds on delta[j][k]

    bool valid(std::string* why = nullptr) const;
};

// Fill delta_max from demand: enough headroom to cover the binding
// constraint on any single (region, gpu) alone.
void default_delta_bounds(ModelProblem& prob);

struct ModelPlan {
    ModelIdx model = kUnset;
    std::vector<std::vector<int>> delta;  // delta[j][k]
    double gamma = 0.0;
    double mu = 0.0;
    double objective = 0.0;
    bool optimal = false;
    bool infeasible = false;  // caps cannot cover demand; plan saturates them
};

struct ScalingPlan {
    std::vector<ModelPlan> models;
    double gamma = 0.0;
    double mu = 0.0;
    double objective = 0.0;
    bool optimal = true;
    bool infeasible = false;
    std::vector<std::string> infeasibility_report;
};

struct ObjectiveBreakdown {
    double gamma = 0.0;
    double mu = 0.0;
    double total = 0.0;
};

// Recompute gamma = sum_k alpha_k * sum_j delta, mu = sum sigma_k * max(0, delta)
// from a plan, independent of the solver path.
ObjectiveBreakdown objective(const ModelProblem& prob, const std::vector<std::vector<int>>& delta);

// True when delta meets every regional constraint and the global constraint.
bool satisfies_constraints(const ModelProblem& prob, const std::vector<std::vector<int>>& delta,
                           double epsilon);

// Branch-and-bound over the per-model subproblem; LP relaxation bound from an
// in-repo bounded-variable simplex.
ModelPlan solve_model(const ModelProblem& prob, const OptimizerConfig& cfg);

// Solve every model subproblem and merge. Budget is shared across models.
ScalingPlan solve(const std::vector<ModelProblem>& problems, const OptimizerConfig& cfg);

struct ClampConfig {
    int min_per_endpoint = 2;        // applies to endpoints with instances or demand
    int max_per_deployment = 3;      // deployment chunk size
    std::vector<int> region_capacity_instances;  // per region, <=0 = unlimited
};

struct ClampRecord {
    ModelIdx model = kUnset;
    RegionIdx region = kUnset;
    GpuIdx gpu = kUnset;
    int delta_before = 0;
    int delta_after = 0;
    std::string reason;
};

// Post-solve clamp: raise endpoints to the minimum floor, then truncate
// positive deltas proportionally (largest-remainder) where a region's
// instance capacity is exceeded. Objective fields are recomputed.
std::vector<ClampRecord> apply_floor_and_caps(ScalingPlan& plan,
                                              const std::vector<ModelProblem>& problems,
                                              const ClampConfig& cfg);

namespace lp {

// min c.x  s.t.  A x (>=|<=|=) b,  lo <= x <= hi.  Dense two-phase simplex
// with Bland's rule; bounds handled by shifting to x' >= 0 plus explicit
// upper-bound rows. Sized for the tiny per-model relaxations.
enum class Relation { Ge, Le, Eq };

struct LpResult {
    bool feasible = false;
    double objective = 0.0;
    std::vector<double> x;
};

LpResult solve_lp(const std::vector<double>& c, const std::vector<std::vector<double>>& a,
                  const std::vector<Relation>& rel, const std::vector<double>& b,
                  const std::vector<double>& lo, const std::vector<double>& hi);

}  // namespace lp

}  // namespace fleetsim

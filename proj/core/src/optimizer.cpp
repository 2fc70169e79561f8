#include "fleetsim/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace fleetsim {

namespace lp {

namespace {
constexpr double kTol = 1e-9;

struct Tableau {
    int m = 0;                   // rows
    int n = 0;                   // columns (excluding RHS)
    std::vector<std::vector<double>> t;  // m x (n+1), last col = RHS
    std::vector<int> basis;      // basic column per row

    void pivot(int row, int col) {
        double pv = t[row][col];
        for (double& v : t[row]) v /= pv;
        for (int i = 0; i < m; ++i) {
            if (i == row) continue;
            double f = t[i][col];
            if (f == 0.0) continue;
            for (int j = 0; j <= n; ++j) t[i][j] -= f * t[row][j];
        }
        basis[row] = col;
    }

    // Bland's rule simplex on the current tableau for cost vector `cost`
    // (length n). Columns with allow[j]==false never enter.
    // Returns false on unboundedness.
    bool optimize(const std::vector<double>& cost, const std::vector<char>& allow) {
        for (;;) {
            // Reduced costs d_j = cost_j - sum_i cost_basis[i] * t[i][j].
            int enter = -1;
            for (int j = 0; j < n; ++j) {
                if (!allow[j]) continue;
                double d = cost[j];
                for (int i = 0; i < m; ++i) {
                    double cb = cost[basis[i]];
                    if (cb != 0.0) d -= cb * t[i][j];
                }
                if (d < -kTol) {
                    enter = j;
                    break;  // Bland: smallest improving index
                }
            }
            if (enter < 0) return true;
            int leave = -1;
            double best_ratio = 0;
            for (int i = 0; i < m; ++i) {
                if (t[i][enter] <= kTol) continue;
                double ratio = t[i][n] / t[i][enter];
                if (leave < 0 || ratio < best_ratio - kTol ||
                    (ratio < best_ratio + kTol && basis[i] < basis[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
    }

    double objective(const std::vector<double>& cost) const {
        double obj = 0;
        for (int i = 0; i < m; ++i) obj += cost[basis[i]] * t[i][n];
        return obj;
    }
};

}  // namespace

LpResult solve_lp(const std::vector<double>& c, const std::vector<std::vector<double>>& a,
                  const std::vector<Relation>& rel, const std::vector<double>& b,
                  const std::vector<double>& lo, const std::vector<double>& hi) {
    LpResult res;
    const int nv = static_cast<int>(c.size());

    // Shift to y = x - lo >= 0 and append explicit upper-bound rows.
    struct Row {
        std::vector<double> coef;
        Relation rel;
        double rhs;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double rhs = b[i];
        for (int j = 0; j < nv; ++j) rhs -= a[i][j] * lo[j];
        rows.push_back({a[i], rel[i], rhs});
    }
    for (int j = 0; j < nv; ++j) {
        double span = hi[j] - lo[j];
        if (span < 0) return res;  // empty box
        std::vector<double> coef(nv, 0.0);
        coef[j] = 1.0;
        rows.push_back({std::move(coef), Relation::Le, span});
    }

    const int m = static_cast<int>(rows.size());
    // Normalize RHS >= 0.
    for (auto& r : rows) {
        if (r.rhs < 0) {
            for (double& v : r.coef) v = -v;
            r.rhs = -r.rhs;
            r.rel = r.rel == Relation::Ge ? Relation::Le
                   : r.rel == Relation::Le ? Relation::Ge
                                           : Relation::Eq;
        }
    }

    // Column layout: [y | one slack/surplus per non-Eq row | artificials].
    int n_slack = 0;
    for (const auto& r : rows)
        if (r.rel != Relation::Eq) ++n_slack;
    int n_art = 0;
    for (const auto& r : rows)
        if (r.rel != Relation::Le) ++n_art;
    const int n = nv + n_slack + n_art;

    Tableau tab;
    tab.m = m;
    tab.n = n;
    tab.t.assign(m, std::vector<double>(n + 1, 0.0));
    tab.basis.assign(m, -1);

    int slack_at = nv;
    int art_at = nv + n_slack;
    std::vector<char> is_art(n, 0);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < nv; ++j) tab.t[i][j] = rows[i].coef[j];
        tab.t[i][n] = rows[i].rhs;
        if (rows[i].rel == Relation::Le) {
            tab.t[i][slack_at] = 1.0;
            tab.basis[i] = slack_at++;
        } else if (rows[i].rel == Relation::Ge) {
            tab.t[i][slack_at++] = -1.0;
            tab.t[i][art_at] = 1.0;
            is_art[art_at] = 1;
            tab.basis[i] = art_at++;
        } else {
            tab.t[i][art_at] = 1.0;
            is_art[art_at] = 1;
            tab.basis[i] = art_at++;
        }
    }

    // Phase 1: drive artificials to zero.
    if (n_art > 0) {
        std::vector<double> c1(n, 0.0);
        for (int j = 0; j < n; ++j)
            if (is_art[j]) c1[j] = 1.0;
        std::vector<char> allow(n, 1);
        if (!tab.optimize(c1, allow)) return res;
        if (tab.objective(c1) > 1e-7) return res;  // infeasible
        // Pivot out any artificial still basic (at zero level).
        for (int i = 0; i < m; ++i) {
            if (!is_art[tab.basis[i]]) continue;
            for (int j = 0; j < n; ++j) {
                if (is_art[j]) continue;
                if (std::fabs(tab.t[i][j]) > kTol) {
                    tab.pivot(i, j);
                    break;
                }
            }
        }
    }

    // Phase 2: original costs; artificials may not re-enter.
    std::vector<double> c2(n, 0.0);
    for (int j = 0; j < nv; ++j) c2[j] = c[j];
    std::vector<char> allow(n, 1);
    for (int j = 0; j < n; ++j)
        if (is_art[j]) allow[j] = 0;
    if (!tab.optimize(c2, allow)) return res;  // unbounded

    res.feasible = true;
    res.x.assign(nv, 0.0);
    for (int i = 0; i < m; ++i)
        if (tab.basis[i] < nv) res.x[tab.basis[i]] = tab.t[i][n];
    double shift_cost = 0;
    for (int j = 0; j < nv; ++j) {
        res.x[j] += lo[j];
        shift_cost += c[j] * lo[j];
    }
    res.objective = tab.objective(c2) + shift_cost;
    return res;
}

}  // namespace lp

bool ModelProblem::valid(std::string* why) const {
    auto fail = [&](const char* msg) {
        if (why) *why = msg;
        return false;
    };
    const std::size_t j = regions.size(), k = gpus.size();
    if (j == 0 || k == 0) return fail("empty region or gpu set");
    if (n.size() != j || region_peak.size() != j) return fail("region-indexed field size mismatch");
    if (theta.size() != k || alpha.size() != k || sigma.size() != k)
        return fail("gpu-indexed field size mismatch");
    for (const auto& row : n)
        if (row.size() != k) return fail("n row size mismatch");
    if (!delta_max.empty()) {
        if (delta_max.size() != j) return fail("delta_max size mismatch");
        for (const auto& row : delta_max)
            if (row.size() != k) return fail("delta_max row size mismatch");
    }
    for (double t : theta)
        if (t <= 0) return fail("theta must be positive for deployable pairs");
    for (double v : alpha)
        if (v <= 0) return fail("alpha must be positive");
    for (double v : sigma)
        if (v <= 0) return fail("sigma must be positive");
    return true;
}

void default_delta_bounds(ModelProblem& prob) {
    double need = prob.global_peak;
    for (double rho : prob.region_peak) need = std::max(need, rho);
    prob.delta_max.assign(prob.regions.size(),
                          std::vector<int>(prob.gpus.size(), 0));
    for (std::size_t j = 0; j < prob.regions.size(); ++j)
        for (std::size_t k = 0; k < prob.gpus.size(); ++k)
            prob.delta_max[j][k] =
                static_cast<int>(std::ceil(std::max(0.0, need) / prob.theta[k])) + 1;
}

ObjectiveBreakdown objective(const ModelProblem& prob,
                             const std::vector<std::vector<int>>& delta) {
    ObjectiveBreakdown out;
    for (std::size_t k = 0; k < prob.gpus.size(); ++k) {
        int sum_k = 0;
        for (std::size_t j = 0; j < prob.regions.size(); ++j) sum_k += delta[j][k];
        out.gamma += prob.alpha[k] * sum_k;
        for (std::size_t j = 0; j < prob.regions.size(); ++j)
            if (delta[j][k] > 0) out.mu += prob.sigma[k] * delta[j][k];
    }
    out.total = out.gamma + out.mu;
    return out;
}

bool satisfies_constraints(const ModelProblem& prob, const std::vector<std::vector<int>>& delta,
                           double epsilon) {
    double total_supply = 0;
    for (std::size_t j = 0; j < prob.regions.size(); ++j) {
        double supply = 0;
        for (std::size_t k = 0; k < prob.gpus.size(); ++k) {
            if (delta[j][k] < -prob.n[j][k]) return false;
            supply += (prob.n[j][k] + delta[j][k]) * prob.theta[k];
        }
        if (supply < epsilon * prob.region_peak[j] - 1e-6) return false;
        total_supply += supply;
    }
    return total_supply >= prob.global_peak - 1e-6;
}

namespace {

struct FlatProblem {
    const ModelProblem* prob;
    double epsilon;
    int nj, nk, nv;  // nv = nj*nk
    std::vector<double> need;  // per region, after feasibility adjustment
    double global_need;

    int var(int j, int k) const { return j * nk + k; }
    double theta(int v) const { return prob->theta[v % nk]; }
    double alpha(int v) const { return prob->alpha[v % nk]; }
    double sigma(int v) const { return prob->sigma[v % nk]; }
    int n_cur(int v) const { return prob->n[v / nk][v % nk]; }
    int cap(int v) const { return prob->delta_max[v / nk][v % nk]; }
};

lp::LpResult relax(const FlatProblem& fp, const std::vector<int>& lo,
                   const std::vector<int>& hi) {
    const int nv = fp.nv;
    // Variables: [delta (nv) | p (nv)] with p >= delta, p >= 0 linearizing mu.
    std::vector<double> c(2 * nv), vlo(2 * nv), vhi(2 * nv);
    for (int v = 0; v < nv; ++v) {
        c[v] = fp.alpha(v);
        c[nv + v] = fp.sigma(v);
        vlo[v] = lo[v];
        vhi[v] = hi[v];
        vlo[nv + v] = 0;
        vhi[nv + v] = std::max(0, hi[v]);
    }
    std::vector<std::vector<double>> a;
    std::vector<lp::Relation> rel;
    std::vector<double> b;
    for (int j = 0; j < fp.nj; ++j) {
        std::vector<double> row(2 * nv, 0.0);
        double supply = 0;
        for (int k = 0; k < fp.nk; ++k) {
            row[fp.var(j, k)] = fp.prob->theta[k];
            supply += fp.prob->n[j][k] * fp.prob->theta[k];
        }
        a.push_back(std::move(row));
        rel.push_back(lp::Relation::Ge);
        b.push_back(fp.need[j] - supply);
    }
    {
        std::vector<double> row(2 * nv, 0.0);
        double supply = 0;
        for (int v = 0; v < nv; ++v) {
            row[v] = fp.theta(v);
            supply += fp.n_cur(v) * fp.theta(v);
        }
        a.push_back(std::move(row));
        rel.push_back(lp::Relation::Ge);
        b.push_back(fp.global_need - supply);
    }
    for (int v = 0; v < nv; ++v) {
        std::vector<double> row(2 * nv, 0.0);
        row[nv + v] = 1.0;
        row[v] = -1.0;
        a.push_back(std::move(row));
        rel.push_back(lp::Relation::Ge);
        b.push_back(0.0);
    }
    return lp::solve_lp(c, a, rel, b, vlo, vhi);
}

double integer_objective(const FlatProblem& fp, const std::vector<int>& delta) {
    double obj = 0;
    for (int v = 0; v < fp.nv; ++v)
        obj += fp.alpha(v) * delta[v] + (delta[v] > 0 ? fp.sigma(v) * delta[v] : 0.0);
    return obj;
}

bool integer_feasible(const FlatProblem& fp, const std::vector<int>& delta) {
    double total = 0;
    for (int j = 0; j < fp.nj; ++j) {
        double supply = 0;
        for (int k = 0; k < fp.nk; ++k)
            supply += (fp.prob->n[j][k] + delta[fp.var(j, k)]) * fp.prob->theta[k];
        if (supply < fp.need[j] - 1e-6) return false;
        total += supply;
    }
    return total >= fp.global_need - 1e-6;
}

// Deterministic feasible start: cover each region's deficit on its highest-
// throughput gpu, then the global deficit wherever cap headroom remains.
bool greedy_incumbent(const FlatProblem& fp, std::vector<int>& delta) {
    delta.assign(fp.nv, 0);
    for (int j = 0; j < fp.nj; ++j) {
        double supply = 0;
        for (int k = 0; k < fp.nk; ++k) supply += fp.prob->n[j][k] * fp.prob->theta[k];
        int kbest = 0;
        for (int k = 1; k < fp.nk; ++k)
            if (fp.prob->theta[k] > fp.prob->theta[kbest]) kbest = k;
        while (supply < fp.need[j] - 1e-6) {
            bool added = false;
            for (int off = 0; off < fp.nk; ++off) {
                int k = (kbest + off) % fp.nk;
                int v = fp.var(j, k);
                if (delta[v] < fp.cap(v)) {
                    ++delta[v];
                    supply += fp.prob->theta[k];
                    added = true;
                    break;
                }
            }
            if (!added) return false;
        }
    }
    for (;;) {
        double total = 0;
        for (int v = 0; v < fp.nv; ++v)
            total += (fp.n_cur(v) + delta[v]) * fp.theta(v);
        if (total >= fp.global_need - 1e-6) return true;
        int best = -1;
        for (int v = 0; v < fp.nv; ++v)
            if (delta[v] < fp.cap(v) && (best < 0 || fp.theta(v) > fp.theta(best))) best = v;
        if (best < 0) return false;
        ++delta[best];
    }
}

}  // namespace

ModelPlan solve_model(const ModelProblem& prob_in, const OptimizerConfig& cfg) {
    ModelProblem prob = prob_in;
    if (prob.delta_max.empty()) default_delta_bounds(prob);

    ModelPlan plan;
    plan.model = prob.model;
    plan.delta.assign(prob.regions.size(), std::vector<int>(prob.gpus.size(), 0));

    FlatProblem fp;
    fp.prob = &prob;
    fp.epsilon = cfg.epsilon;
    fp.nj = static_cast<int>(prob.regions.size());
    fp.nk = static_cast<int>(prob.gpus.size());
    fp.nv = fp.nj * fp.nk;

    // Feasibility adjustment: demand beyond what caps can supply is clipped;
    // the solver then saturates the binding caps and the caller reroutes the
    // remainder at runtime.
    fp.need.resize(fp.nj);
    double total_max_supply = 0;
    for (int j = 0; j < fp.nj; ++j) {
        double max_supply = 0;
        for (int k = 0; k < fp.nk; ++k)
            max_supply += (prob.n[j][k] + prob.delta_max[j][k]) * prob.theta[k];
        double need = cfg.epsilon * prob.region_peak[j];
        if (need > max_supply + 1e-9) {
            plan.infeasible = true;
            fp.need[j] = max_supply;
        } else {
            fp.need[j] = need;
        }
        total_max_supply += max_supply;
    }
    fp.global_need = prob.global_peak;
    if (fp.global_need > total_max_supply + 1e-9) {
        plan.infeasible = true;
        fp.global_need = total_max_supply;
    }

    std::vector<int> root_lo(fp.nv), root_hi(fp.nv);
    for (int v = 0; v < fp.nv; ++v) {
        root_lo[v] = -fp.n_cur(v);
        root_hi[v] = fp.cap(v);
    }

    std::vector<int> incumbent;
    double incumbent_obj = std::numeric_limits<double>::infinity();
    if (std::vector<int> g; greedy_incumbent(fp, g)) {
        incumbent = g;
        incumbent_obj = integer_objective(fp, g);
    }

    struct Node {
        std::vector<int> lo, hi;
    };
    std::vector<Node> stack;
    stack.push_back({root_lo, root_hi});
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(cfg.solver_budget_sec);
    bool timed_out = false;

    while (!stack.empty()) {
        if (std::chrono::steady_clock::now() > deadline) {
            timed_out = true;
            break;
        }
        Node node = std::move(stack.back());
        stack.pop_back();
        lp::LpResult lpres = relax(fp, node.lo, node.hi);
        if (!lpres.feasible) continue;
        if (lpres.objective >= incumbent_obj - 1e-9) continue;

        int frac_var = -1;
        double frac_dist = 0;
        for (int v = 0; v < fp.nv; ++v) {
            double d = std::fabs(lpres.x[v] - std::round(lpres.x[v]));
            if (d > 1e-6 && d > frac_dist) {
                frac_dist = d;
                frac_var = v;
            }
        }
        if (frac_var < 0) {
            std::vector<int> sol(fp.nv);
            for (int v = 0; v < fp.nv; ++v) sol[v] = static_cast<int>(std::llround(lpres.x[v]));
            if (integer_feasible(fp, sol)) {
                double obj = integer_objective(fp, sol);
                if (obj < incumbent_obj) {
                    incumbent_obj = obj;
                    incumbent = std::move(sol);
                }
            }
            continue;
        }
        double xv = lpres.x[frac_var];
        Node up = node, down = std::move(node);
        up.lo[frac_var] = static_cast<int>(std::ceil(xv));
        down.hi[frac_var] = static_cast<int>(std::floor(xv));
        stack.push_back(std::move(up));
        stack.push_back(std::move(down));  // explore the cheaper branch first
    }

    if (incumbent.empty() && incumbent_obj == std::numeric_limits<double>::infinity()) {
        // No feasible point even after the cap adjustment; saturate caps.
        plan.infeasible = true;
        incumbent.assign(fp.nv, 0);
        for (int v = 0; v < fp.nv; ++v) incumbent[v] = fp.cap(v);
    }
    for (int v = 0; v < fp.nv; ++v) plan.delta[v / fp.nk][v % fp.nk] = incumbent[v];
    auto br = objective(prob, plan.delta);
    plan.gamma = br.gamma;
    plan.mu = br.mu;
    plan.objective = br.total;
    plan.optimal = !timed_out && !plan.infeasible;
    return plan;
}

ScalingPlan solve(const std::vector<ModelProblem>& problems, const OptimizerConfig& cfg) {
    ScalingPlan plan;
    OptimizerConfig per = cfg;
    if (!problems.empty()) per.solver_budget_sec = cfg.solver_budget_sec / problems.size();
    for (const auto& prob : problems) {
        ModelPlan mp = solve_model(prob, per);
        if (mp.infeasible) {
            plan.infeasible = true;
            plan.infeasibility_report.push_back(
                "model " + std::to_string(mp.model) + ": demand exceeds instance caps");
        }
        if (!mp.optimal && !mp.infeasible) plan.optimal = false;
        plan.gamma += mp.gamma;
        plan.mu += mp.mu;
        plan.objective += mp.objective;
        plan.models.push_back(std::move(mp));
    }
    if (plan.infeasible) plan.optimal = false;
    return plan;
}

std::vector<ClampRecord> apply_floor_and_caps(ScalingPlan& plan,
                                              const std::vector<ModelProblem>& problems,
                                              const ClampConfig& cfg) {
    std::vector<ClampRecord> records;

    // Floors: endpoints that exist (current instances or forecast demand)
    // keep at least min_per_endpoint instances.
    for (std::size_t mi = 0; mi < plan.models.size(); ++mi) {
        ModelPlan& mp = plan.models[mi];
        const ModelProblem& prob = problems[mi];
        for (std::size_t j = 0; j < prob.regions.size(); ++j) {
            int cur = 0, after = 0;
            for (std::size_t k = 0; k < prob.gpus.size(); ++k) {
                cur += prob.n[j][k];
                after += prob.n[j][k] + mp.delta[j][k];
            }
            if (cur == 0 && prob.region_peak[j] <= 0) continue;
            if (after >= cfg.min_per_endpoint) continue;
            std::size_t kbest = 0;
            for (std::size_t k = 1; k < prob.gpus.size(); ++k)
                if (prob.theta[k] > prob.theta[kbest]) kbest = k;
            int add = cfg.min_per_endpoint - after;
            records.push_back({prob.model, prob.regions[j], prob.gpus[kbest],
                               mp.delta[j][kbest], mp.delta[j][kbest] + add, "endpoint-floor"});
            mp.delta[j][kbest] += add;
        }
    }

    // Region caps: truncate positive deltas proportionally with
    // largest-remainder rounding when a region exceeds its instance budget.
    if (!cfg.region_capacity_instances.empty()) {
        for (std::size_t r = 0; r < cfg.region_capacity_instances.size(); ++r) {
            int cap = cfg.region_capacity_instances[r];
            if (cap <= 0) continue;
            struct PosDelta {
                std::size_t mi, j, k;
                int value;
            };
            std::vector<PosDelta> pos;
            long total = 0;
            for (std::size_t mi = 0; mi < plan.models.size(); ++mi) {
                const ModelProblem& prob = problems[mi];
                for (std::size_t j = 0; j < prob.regions.size(); ++j) {
                    if (static_cast<std::size_t>(prob.regions[j]) != r) continue;
                    for (std::size_t k = 0; k < prob.gpus.size(); ++k) {
                        int d = plan.models[mi].delta[j][k];
                        total += prob.n[j][k] + d;
                        if (d > 0) pos.push_back({mi, j, k, d});
                    }
                }
            }
            long excess = total - cap;
            if (excess <= 0 || pos.empty()) continue;
            long pos_sum = 0;
            for (const auto& p : pos) pos_sum += p.value;
            long cut_total = std::min(excess, pos_sum);
            // Largest-remainder apportionment of the cut.
            std::vector<long> cut(pos.size());
            std::vector<double> rem(pos.size());
            long assigned = 0;
            for (std::size_t i = 0; i < pos.size(); ++i) {
                double exact = static_cast<double>(cut_total) * pos[i].value / pos_sum;
                cut[i] = static_cast<long>(std::floor(exact));
                rem[i] = exact - cut[i];
                assigned += cut[i];
            }
            std::vector<std::size_t> order(pos.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
            for (std::size_t oi = 0; assigned < cut_total; ++oi) {
                std::size_t i = order[oi % order.size()];
                if (cut[i] < pos[i].value) {
                    ++cut[i];
                    ++assigned;
                }
            }
            for (std::size_t i = 0; i < pos.size(); ++i) {
                if (cut[i] == 0) continue;
                const auto& p = pos[i];
                int& d = plan.models[p.mi].delta[p.j][p.k];
                records.push_back({problems[p.mi].model, problems[p.mi].regions[p.j],
                                   problems[p.mi].gpus[p.k], d, d - static_cast<int>(cut[i]),
                                   "region-cap"});
                d -= static_cast<int>(cut[i]);
            }
        }
    }

    plan.gamma = plan.mu = plan.objective = 0;
    for (std::size_t mi = 0; mi < plan.models.size(); ++mi) {
        auto br = objective(problems[mi], plan.models[mi].delta);
        plan.models[mi].gamma = br.gamma;
        plan.models[mi].mu = br.mu;
        plan.models[mi].objective = br.total;
        plan.gamma += br.gamma;
        plan.mu += br.mu;
        plan.objective += br.total;
    }
    return records;
}

}  // namespace fleetsim

#include "fleetsim/perf_model.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace fleetsim {

namespace {

// Piecewise-linear with last-segment extrapolation on both ends.
// Sets *extrapolated when x lies outside [xs.front(), xs.back()].
double interp1(const std::vector<double>& xs, const std::vector<double>& ys, double x,
               bool* extrapolated) {
    if (x < xs.front() || x > xs.back()) *extrapolated = true;
    if (x <= xs.front()) {
        double slope = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        return ys[0] + slope * (x - xs[0]);
    }
    std::size_t n = xs.size();
    if (x >= xs[n - 1]) {
        double slope = (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]);
        return ys[n - 1] + slope * (x - xs[n - 1]);
    }
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    std::size_t lo = hi - 1;
    double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + w * (ys[hi] - ys[lo]);
}

}  // namespace

ProfileTable::ProfileTable(std::size_t num_models, std::size_t num_gpus)
    : num_gpus_(num_gpus),
      prefill_(num_models * num_gpus),
      decode_(num_models * num_gpus) {}

void ProfileTable::set_prefill(ModelIdx m, GpuIdx g, PrefillCurve curve) {
    if (curve.tokens.size() < 2 || curve.tokens.size() != curve.time_ms.size())
        throw std::invalid_argument("prefill curve needs >= 2 samples");
    if (!std::is_sorted(curve.tokens.begin(), curve.tokens.end()))
        throw std::invalid_argument("prefill samples must be sorted by token count");
    prefill_[m * num_gpus_ + g] = std::move(curve);
}

void ProfileTable::set_decode(ModelIdx m, GpuIdx g, DecodeGrid grid) {
    if (grid.batch_sizes.size() < 2 || grid.tokens_in_flight.size() < 2)
        throw std::invalid_argument("decode grid needs >= 2 samples per axis");
    if (grid.time_ms.size() != grid.batch_sizes.size() * grid.tokens_in_flight.size())
        throw std::invalid_argument("decode grid size mismatch");
    decode_[m * num_gpus_ + g] = std::move(grid);
}

bool ProfileTable::has_pair(ModelIdx m, GpuIdx g) const {
    if (m < 0 || g < 0 || static_cast<std::size_t>(m * num_gpus_ + g) >= prefill_.size())
        return false;
    return !prefill_[m * num_gpus_ + g].tokens.empty() &&
           !decode_[m * num_gpus_ + g].batch_sizes.empty();
}

const ProfileTable::PrefillCurve& ProfileTable::prefill_at(ModelIdx m, GpuIdx g) const {
    if (!has_pair(m, g))
        throw UnknownPairError("model#" + std::to_string(m), "gpu#" + std::to_string(g));
    return prefill_[m * num_gpus_ + g];
}

const ProfileTable::DecodeGrid& ProfileTable::decode_at(ModelIdx m, GpuIdx g) const {
    if (!has_pair(m, g))
        throw UnknownPairError("model#" + std::to_string(m), "gpu#" + std::to_string(g));
    return decode_[m * num_gpus_ + g];
}

double ProfileTable::prefill_time_ms(ModelIdx m, GpuIdx g, std::int64_t batch_prompt_tokens) const {
    const auto& c = prefill_at(m, g);
    bool extra = false;
    double t = interp1(c.tokens, c.time_ms, static_cast<double>(batch_prompt_tokens), &extra);
    if (extra) ++extrapolations_;
    return std::max(0.0, t);
}

double ProfileTable::decode_iteration_time_ms(ModelIdx m, GpuIdx g, double batch_size,
                                              double tokens_in_flight) const {
    const auto& grid = decode_at(m, g);
    const auto& bs = grid.batch_sizes;
    const auto& ts = grid.tokens_in_flight;
    bool extra = false;

    // Bracketing segment index on an axis, clamped so extrapolation reuses
    // the outermost segment's slope.
    auto segment = [&extra](const std::vector<double>& axis, double v) {
        if (v < axis.front() || v > axis.back()) extra = true;
        std::size_t hi = static_cast<std::size_t>(
            std::upper_bound(axis.begin(), axis.end(), v) - axis.begin());
        hi = std::clamp<std::size_t>(hi, 1, axis.size() - 1);
        return hi;
    };
    std::size_t bhi = segment(bs, batch_size);
    std::size_t thi = segment(ts, tokens_in_flight);
    std::size_t blo = bhi - 1, tlo = thi - 1;
    double wb = (batch_size - bs[blo]) / (bs[bhi] - bs[blo]);
    double wt = (tokens_in_flight - ts[tlo]) / (ts[thi] - ts[tlo]);

    auto at = [&](std::size_t bi, std::size_t ti) { return grid.time_ms[bi * ts.size() + ti]; };
    double lo_row = at(blo, tlo) + wt * (at(blo, thi) - at(blo, tlo));
    double hi_row = at(bhi, tlo) + wt * (at(bhi, thi) - at(bhi, tlo));
    double t = lo_row + wb * (hi_row - lo_row);
    if (extra) ++extrapolations_;
    return std::max(0.0, t);
}

CapacityTable::CapacityTable(std::size_t num_models, std::size_t num_gpus)
    : num_gpus_(num_gpus), tps_(num_models * num_gpus, 0.0) {}

void CapacityTable::set(ModelIdx m, GpuIdx g, double tps) {
    if (tps <= 0) throw std::invalid_argument("instance TPS must be > 0");
    tps_[m * num_gpus_ + g] = tps;
}

bool CapacityTable::has_pair(ModelIdx m, GpuIdx g) const {
    if (m < 0 || g < 0 || static_cast<std::size_t>(m * num_gpus_ + g) >= tps_.size()) return false;
    return tps_[m * num_gpus_ + g] > 0;
}

double CapacityTable::instance_tps(ModelIdx m, GpuIdx g) const {
    if (!has_pair(m, g))
        throw UnknownPairError("model#" + std::to_string(m), "gpu#" + std::to_string(g));
    return tps_[m * num_gpus_ + g];
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    return out;
}

}  // namespace

ProfileTable load_profile_table(const std::string& path, const Catalog& cat) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open profile file: " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("model,gpu,phase,x1,x2,time_ms", 0) != 0)
        throw std::runtime_error("profile file missing header: " + path);

    struct Key {
        ModelIdx m;
        GpuIdx g;
        bool operator<(const Key& o) const { return std::tie(m, g) < std::tie(o.m, o.g); }
    };
    std::map<Key, std::vector<std::array<double, 3>>> prefill_rows;
    std::map<Key, std::vector<std::array<double, 3>>> decode_rows;

    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split(line);
        if (fields.size() != 6)
            throw std::runtime_error("bad profile row at line " + std::to_string(lineno));
        auto m = cat.model_index(fields[0]);
        auto g = cat.gpu_index(fields[1]);
        if (!m || !g)
            throw std::runtime_error("unknown model/gpu in profile at line " +
                                     std::to_string(lineno));
        std::array<double, 3> row{std::stod(fields[3]), std::stod(fields[4]),
                                  std::stod(fields[5])};
        if (fields[2] == "prefill")
            prefill_rows[{*m, *g}].push_back(row);
        else if (fields[2] == "decode")
            decode_rows[{*m, *g}].push_back(row);
        else
            throw std::runtime_error("bad phase at line " + std::to_string(lineno));
    }

    ProfileTable table(cat.models.size(), cat.gpus.size());
    for (auto& [key, rows] : prefill_rows) {
        std::sort(rows.begin(), rows.end());
        ProfileTable::PrefillCurve c;
        for (auto& r : rows) {
            c.tokens.push_back(r[0]);
            c.time_ms.push_back(r[2]);
        }
        table.set_prefill(key.m, key.g, std::move(c));
    }
    for (auto& [key, rows] : decode_rows) {
        ProfileTable::DecodeGrid grid;
        for (auto& r : rows) {
            grid.batch_sizes.push_back(r[0]);
            grid.tokens_in_flight.push_back(r[1]);
        }
        std::sort(grid.batch_sizes.begin(), grid.batch_sizes.end());
        grid.batch_sizes.erase(std::unique(grid.batch_sizes.begin(), grid.batch_sizes.end()),
                               grid.batch_sizes.end());
        std::sort(grid.tokens_in_flight.begin(), grid.tokens_in_flight.end());
        grid.tokens_in_flight.erase(
            std::unique(grid.tokens_in_flight.begin(), grid.tokens_in_flight.end()),
            grid.tokens_in_flight.end());
        grid.time_ms.assign(grid.batch_sizes.size() * grid.tokens_in_flight.size(), -1.0);
        auto axis_index = [](const std::vector<double>& axis, double v) {
            auto it = std::lower_bound(axis.begin(), axis.end(), v);
            return static_cast<std::size_t>(it - axis.begin());
        };
        for (auto& r : rows) {
            std::size_t bi = axis_index(grid.batch_sizes, r[0]);
            std::size_t ti = axis_index(grid.tokens_in_flight, r[1]);
            grid.time_ms[bi * grid.tokens_in_flight.size() + ti] = r[2];
        }
        for (double v : grid.time_ms)
            if (v < 0) throw std::runtime_error("decode samples do not form a full grid");
        table.set_decode(key.m, key.g, std::move(grid));
    }
    return table;
}

CapacityTable load_capacity_table(const std::string& path, const Catalog& cat) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open capacity file: " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("model,gpu,tps", 0) != 0)
        throw std::runtime_error("capacity file missing header: " + path);
    CapacityTable table(cat.models.size(), cat.gpus.size());
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split(line);
        if (fields.size() != 3)
            throw std::runtime_error("bad capacity row at line " + std::to_string(lineno));
        auto m = cat.model_index(fields[0]);
        auto g = cat.gpu_index(fields[1]);
        if (!m || !g)
            throw std::runtime_error("unknown model/gpu in capacity file at line " +
                                     std::to_string(lineno));
        table.set(*m, *g, std::stod(fields[2]));
    }
    return table;
}

ProfileTable::PrefillCurve analytic_prefill_curve(double prompt_tokens_per_sec) {
    ProfileTable::PrefillCurve c;
    for (double tokens : {1.0, 1000.0, 8000.0, 21000.0, 64000.0, 200000.0}) {
        c.tokens.push_back(tokens);
        c.time_ms.push_back(tokens / prompt_tokens_per_sec * 1000.0);
    }
    return c;
}

ProfileTable::DecodeGrid analytic_decode_grid(double base_iter_ms, double per_batch_ms,
                                              double per_kilo_token_ms) {
    ProfileTable::DecodeGrid g;
    g.batch_sizes = {1, 4, 16, 64, 256};
    g.tokens_in_flight = {0, 8000, 64000, 512000};
    for (double b : g.batch_sizes)
        for (double t : g.tokens_in_flight)
            g.time_ms.push_back(base_iter_ms + per_batch_ms * (b - 1) +
                                per_kilo_token_ms * t / 1000.0);
    return g;
}

}  // namespace fleetsim

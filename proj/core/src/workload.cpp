#include "fleetsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fleetsim {

namespace {

const char* kTraceHeader = "arrival_ts_ms,model,region,tier,input_tokens,output_tokens";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_i64(const std::string& s, std::int64_t& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == nullptr || *end != '\0') return false;
    out = v;
    return true;
}

Request make_request(const TraceRecord& rec, ModelIdx model, RegionIdx region,
                     WorkloadTier tier, const SlaDefaults& sla) {
    Request r;
    r.arrival_ts = rec.arrival_ts;
    r.model = model;
    r.client_region = region;
    r.tier = tier;
    r.input_tokens = rec.input_tokens;
    r.output_tokens = rec.output_tokens;
    r.completion_deadline = rec.arrival_ts + sla.niw_deadline;
    switch (tier) {
        case WorkloadTier::IW_F:
            r.ttft_deadline = rec.arrival_ts + sla.iw_f_ttft;
            break;
        case WorkloadTier::IW_N:
            r.ttft_deadline = rec.arrival_ts + sla.iw_n_ttft;
            break;
        case WorkloadTier::NIW:
            r.ttft_deadline = kUnset;
            r.priority = 1;
            break;
    }
    return r;
}

}  // namespace

IngestResult ingest_trace(std::istream& in, const Catalog& cat, const SlaDefaults& sla,
                          bool strict) {
    IngestResult res;
    std::string line;
    int lineno = 0;

    if (!std::getline(in, line)) throw ParseError("empty trace file", 0);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTraceHeader)
        throw ParseError("missing or malformed header, expected '" + std::string(kTraceHeader) + "'",
                         lineno);

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv(line);
        std::int64_t ts = 0, in_tok = 0, out_tok = 0;
        std::optional<ModelIdx> model;
        std::optional<RegionIdx> region;
        std::optional<WorkloadTier> tier;
        bool ok = fields.size() == 6 && parse_i64(fields[0], ts) &&
                  parse_i64(fields[4], in_tok) && parse_i64(fields[5], out_tok) &&
                  in_tok > 0 && out_tok > 0;
        if (ok) {
            model = cat.model_index(fields[1]);
            region = cat.region_index(fields[2]);
            tier = parse_tier(fields[3]);
            ok = model && region && tier;
        }
        if (!ok) {
            if (strict) throw ParseError("malformed trace record", lineno);
            continue;
        }
        TraceRecord rec{ts, fields[1], fields[2], fields[3],
                        static_cast<std::int32_t>(in_tok), static_cast<std::int32_t>(out_tok)};
        res.requests.push_back(make_request(rec, *model, *region, *tier, sla));
    }

    bool sorted = std::is_sorted(res.requests.begin(), res.requests.end(),
                                 [](const Request& a, const Request& b) {
                                     return a.arrival_ts < b.arrival_ts;
                                 });
    if (!sorted) {
        std::stable_sort(res.requests.begin(), res.requests.end(),
                         [](const Request& a, const Request& b) {
                             return a.arrival_ts < b.arrival_ts;
                         });
        res.unsorted_warnings = 1;
    }
    for (std::size_t i = 0; i < res.requests.size(); ++i) res.requests[i].id = i;
    return res;
}

IngestResult ingest_trace(const std::string& path, const Catalog& cat, const SlaDefaults& sla,
                          bool strict) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open trace file: " + path);
    return ingest_trace(f, cat, sla, strict);
}

void export_trace(std::ostream& out, const std::vector<Request>& reqs, const Catalog& cat) {
    out << kTraceHeader << '\n';
    for (const auto& r : reqs) {
        out << r.arrival_ts << ',' << cat.models[r.model].id << ','
            << cat.regions[r.client_region].id << ',' << tier_name(r.tier) << ','
            << r.input_tokens << ',' << r.output_tokens << '\n';
    }
}

void export_trace(const std::string& path, const std::vector<Request>& reqs, const Catalog& cat) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    export_trace(f, reqs, cat);
}

void SyntheticWorkloadSpec::validate() const {
    if (duration_days <= 0) throw std::invalid_argument("duration_days must be > 0");
    if (streams.empty()) throw std::invalid_argument("no workload streams defined");
    for (const auto& s : streams) {
        if (s.base_rps < 0) throw std::invalid_argument("base_rps must be >= 0");
        if (s.diurnal_amplitude < 0 || s.diurnal_amplitude > 1)
            throw std::invalid_argument("diurnal_amplitude must be in [0,1]");
        if (s.weekend_damping < 0 || s.weekend_damping > 1)
            throw std::invalid_argument("weekend_damping must be in [0,1]");
        if (s.burst_probability < 0 || s.burst_probability > 1)
            throw std::invalid_argument("burst_probability must be in [0,1]");
        if (s.burst_multiplier < 1) throw std::invalid_argument("burst_multiplier must be >= 1");
    }
}

double stream_rate(const WorkloadStream& s, SimTime t) {
    double phase = 2.0 * M_PI * (hour_of_day(t) - 14.0) / 24.0;
    double rate = s.base_rps * (1.0 + s.diurnal_amplitude * std::cos(phase));
    if (is_weekend(t)) rate *= s.weekend_damping;
    return rate;
}

std::vector<Request> generate_synthetic(const SyntheticWorkloadSpec& spec, const Catalog& cat,
                                        const SlaDefaults& sla) {
    spec.validate();
    SimTime horizon = static_cast<SimTime>(spec.duration_days * kMsPerDay);
    Rng master(spec.seed);
    std::vector<Request> out;

    for (std::size_t si = 0; si < spec.streams.size(); ++si) {
        const auto& s = spec.streams[si];
        auto model = cat.model_index(s.model);
        auto region = cat.region_index(s.region);
        if (!model) throw std::invalid_argument("synthetic spec: unknown model " + s.model);
        if (!region) throw std::invalid_argument("synthetic spec: unknown region " + s.region);
        if (s.base_rps <= 0) continue;

        TokenDistribution tok;
        if (auto it = spec.tokens.find(s.model); it != spec.tokens.end()) tok = it->second;

        Rng rng = master.fork(si + 1);

        // Burst windows: Bernoulli per minute, each extending the active
        // window by burst_duration.
        std::vector<std::pair<SimTime, SimTime>> bursts;
        if (s.burst_probability > 0 && s.burst_multiplier > 1) {
            for (SimTime m = 0; m < horizon; m += kMsPerMinute) {
                if (rng.bernoulli(s.burst_probability)) {
                    if (!bursts.empty() && bursts.back().second >= m)
                        bursts.back().second = m + s.burst_duration;
                    else
                        bursts.emplace_back(m, m + s.burst_duration);
                }
            }
        }
        std::size_t burst_cursor = 0;
        auto burst_mult = [&](SimTime t) {
            while (burst_cursor < bursts.size() && bursts[burst_cursor].second <= t) ++burst_cursor;
            if (burst_cursor < bursts.size() && t >= bursts[burst_cursor].first)
                return s.burst_multiplier;
            return 1.0;
        };

        double lambda_max =
            s.base_rps * (1.0 + s.diurnal_amplitude) * std::max(1.0, s.burst_multiplier);

        // Thinning over the max rate.
        double t = 0.0;
        while (true) {
            t += rng.exponential(lambda_max) * 1000.0;  // rate is per second, t in ms
            SimTime ts = static_cast<SimTime>(t);
            if (ts >= horizon) break;
            double lambda = stream_rate(s, ts) * burst_mult(ts);
            if (rng.uniform() * lambda_max > lambda) continue;

            TraceRecord rec;
            rec.arrival_ts = ts;
            rec.input_tokens = static_cast<std::int32_t>(std::clamp(
                std::llround(rng.lognormal(tok.input_log_mean, tok.input_log_sigma)), 1LL,
                static_cast<long long>(tok.max_tokens)));
            rec.output_tokens = static_cast<std::int32_t>(std::clamp(
                std::llround(rng.lognormal(tok.output_log_mean, tok.output_log_sigma)), 1LL,
                static_cast<long long>(tok.max_tokens)));
            Request r = make_request(rec, *model, *region, s.tier, sla);
            r.id = (static_cast<std::uint64_t>(si) << 40) | (out.size() & 0xffffffffffULL);
            out.push_back(r);
        }
    }

    std::stable_sort(out.begin(), out.end(), [](const Request& a, const Request& b) {
        if (a.arrival_ts != b.arrival_ts) return a.arrival_ts < b.arrival_ts;
        return a.id < b.id;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = i;
    return out;
}

PeriodicityResult periodicity_score(const std::vector<double>& series, int lag) {
    PeriodicityResult res;
    if (lag <= 0 || static_cast<int>(series.size()) <= lag) {
        res.error = SeriesError::SeriesTooShort;
        return res;
    }
    std::size_t n = series.size() - lag;
    double mean_a = 0, mean_b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_a += series[i];
        mean_b += series[i + lag];
    }
    mean_a /= n;
    mean_b /= n;
    double cov = 0, var_a = 0, var_b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double da = series[i] - mean_a;
        double db = series[i + lag] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a <= 0 || var_b <= 0) {
        res.error = SeriesError::ZeroVariance;
        return res;
    }
    res.score = cov / std::sqrt(var_a * var_b);
    res.ok = true;
    return res;
}

namespace {

std::map<std::string, std::string> parse_kv_lines(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t");
            auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }
    return kv;
}

}  // namespace

SyntheticWorkloadSpec parse_synthetic_spec(std::istream& in) {
    auto kv = parse_kv_lines(in);
    SyntheticWorkloadSpec spec;
    auto get = [&](const std::string& k) -> std::optional<std::string> {
        auto it = kv.find(k);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };
    if (auto v = get("duration_days")) spec.duration_days = std::stod(*v);
    if (auto v = get("seed")) spec.seed = std::stoull(*v);

    for (int i = 0;; ++i) {
        std::string p = "stream." + std::to_string(i) + ".";
        auto model = get(p + "model");
        if (!model) break;
        WorkloadStream s;
        s.model = *model;
        if (auto v = get(p + "region")) s.region = *v;
        if (auto v = get(p + "tier")) {
            auto t = parse_tier(*v);
            if (!t) throw std::invalid_argument("synthetic spec: bad tier " + *v);
            s.tier = *t;
        }
        if (auto v = get(p + "base_rps")) s.base_rps = std::stod(*v);
        if (auto v = get(p + "diurnal_amplitude")) s.diurnal_amplitude = std::stod(*v);
        if (auto v = get(p + "weekend_damping")) s.weekend_damping = std::stod(*v);
        if (auto v = get(p + "burst_probability")) s.burst_probability = std::stod(*v);
        if (auto v = get(p + "burst_multiplier")) s.burst_multiplier = std::stod(*v);
        if (auto v = get(p + "burst_duration_min"))
            s.burst_duration = minutes(std::stoll(*v));
        spec.streams.push_back(s);
    }

    // tokens.<model>.<param>=value
    for (const auto& [k, v] : kv) {
        if (k.rfind("tokens.", 0) != 0) continue;
        auto rest = k.substr(7);
        auto dot = rest.rfind('.');
        if (dot == std::string::npos) continue;
        std::string model = rest.substr(0, dot);
        std::string param = rest.substr(dot + 1);
        TokenDistribution& t = spec.tokens[model];
        if (param == "input_log_mean") t.input_log_mean = std::stod(v);
        else if (param == "input_log_sigma") t.input_log_sigma = std::stod(v);
        else if (param == "output_log_mean") t.output_log_mean = std::stod(v);
        else if (param == "output_log_sigma") t.output_log_sigma = std::stod(v);
        else if (param == "max_tokens") t.max_tokens = std::stoi(v);
    }
    return spec;
}

SyntheticWorkloadSpec parse_synthetic_spec(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open synthetic spec: " + path);
    return parse_synthetic_spec(f);
}

}  // namespace fleetsim

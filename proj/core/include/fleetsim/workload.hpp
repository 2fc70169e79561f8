#pragma once
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fleetsim/domain.hpp"
#include "fleetsim/rng.hpp"

namespace fleetsim {

// One line of the trace file: arrival_ts_ms,model,region,tier,input_tokens,output_tokens
struct TraceRecord {
    SimTime arrival_ts = 0;
    std::string model;
    std::string region;
    std::string tier;
    std::int32_t input_tokens = 1;
    std::int32_t output_tokens = 1;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct IngestResult {
    std::vector<Request> requests;  // sorted by arrival_ts
    int unsorted_warnings = 0;      // 1 if the input needed re-sorting
};

// strict=true raises ParseError on the first malformed line; otherwise the
// line is skipped and counted.
IngestResult ingest_trace(const std::string& path, const Catalog& cat,
                          const SlaDefaults& sla, bool strict = true);
IngestResult ingest_trace(std::istream& in, const Catalog& cat,
                          const SlaDefaults& sla, bool strict = true);

void export_trace(std::ostream& out, const std::vector<Request>& reqs, const Catalog& cat);
void export_trace(const std::string& path, const std::vector<Request>& reqs, const Catalog& cat);

struct TokenDistribution {
    double input_log_mean = 7.3;   // lognormal parameters
    double input_log_sigma = 0.8;
    double output_log_mean = 5.9;
    double output_log_sigma = 0.7;
    std::int32_t max_tokens = 128000;
};

struct WorkloadStream {
    std::string model;
    std::string region;
    WorkloadTier tier = WorkloadTier::IW_F;
    double base_rps = 0.1;
    double diurnal_amplitude = 0.0;   // [0,1]
    double weekend_damping = 1.0;     // multiplier applied on Sat/Sun, [0,1]
    double burst_probability = 0.0;   // per minute
    double burst_multiplier = 1.0;
    DurationMs burst_duration = minutes(2);
};

struct SyntheticWorkloadSpec {
    double duration_days = 1.0;
    std::vector<WorkloadStream> streams;
    std::map<std::string, TokenDistribution> tokens;  // per model id
    std::uint64_t seed = 1;

    void validate() const;  // throws std::invalid_argument on bad fields
};

// Inhomogeneous-Poisson arrivals with a raised-cosine daily profile peaking
// at 14:00, optional weekend damping and Bernoulli burst windows.
// Deterministic given the seed. Output is sorted by arrival_ts.
std::vector<Request> generate_synthetic(const SyntheticWorkloadSpec& spec, const Catalog& cat,
                                        const SlaDefaults& sla);

// Instantaneous rate for one stream; exposed for tests.
double stream_rate(const WorkloadStream& s, SimTime t);

enum class SeriesError { SeriesTooShort, ZeroVariance };

// Pearson autocorrelation of `series` with itself shifted by `lag` samples.
// Returns the error instead of a value for degenerate input.
struct PeriodicityResult {
    double score = 0.0;
    bool ok = false;
    SeriesError error = SeriesError::SeriesTooShort;
};
PeriodicityResult periodicity_score(const std::vector<double>& series, int lag);

// Key=value file for the synthetic generator (see README for the schema).
SyntheticWorkloadSpec parse_synthetic_spec(const std::string& path);
SyntheticWorkloadSpec parse_synthetic_spec(std::istream& in);

}  // namespace fleetsim

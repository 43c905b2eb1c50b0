#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "v2i/matching.hpp"

namespace v2i {

struct AvRecord {
    int av = 0;
    int sbs = kUnmatched;
    int task = 0;            // catalog index
    int subchannels = 0;
    std::int64_t ul_ttis = -1;  // -1: unmatched or unservable
    std::int64_t dl_ttis = -1;
    double dl_rate_bps = 0.0;
    double dl_ms = kNoLatency;
    double transmission_ms = kNoLatency;
    double compute_ms = kNoLatency;           // realized completion time
    double expected_compute_ms = kNoLatency;  // mean completion time
    double e2e_ms = kNoLatency;
    double budget_ms = 0.0;
    bool dropped = false;
    int kappa = 0;

    static constexpr double kNoLatency = std::numeric_limits<double>::infinity();
};

struct RunResult {
    std::vector<AvRecord> avs;
    std::vector<int> sbs_load;
    int rounds_used = 0;
    double reliability = 0.0;

    /// mean of kappa over all AVs
    double reliability_from_kappa() const;
    /// (1/M) sum_n sum_m x_mn kappa_m over the association
    double reliability_from_assignment() const;
};

/// Realized latencies for a matching: transmission under activity-conditioned
/// interference and sampled execution times on every SBS queue. AVs matched
/// with no bandwidth never reach the machine.
RunResult realize_run(const Matching& matching, const Market& market, std::uint64_t seed);

struct CdfSeries {
    std::string label;
    std::vector<double> values;  // distinct sample values, ascending
    std::vector<double> probs;   // P(X <= values[i])
};

/// Empirical CDF of the finite samples.
CdfSeries cdf(std::vector<double> samples, std::string label = {});

struct MetricSummary {
    std::string name;
    std::size_t count = 0;
    double mean = 0.0;
    double std_dev = 0.0;
    std::optional<double> ci_low;   // 95% normal approximation; absent below 2 samples
    std::optional<double> ci_high;
    CdfSeries distribution;
};

MetricSummary summarize(const std::vector<double>& samples, std::string name);

struct Summary {
    std::string scheme;
    int n_av = 0;
    std::size_t runs = 0;
    std::vector<MetricSummary> metrics;  // reliability, e2e_ms, dl_ms, compute_ms, dl_rate_bps, rounds
    double pooled_success = 0.0;         // sum of kappa over all AVs and runs / (runs * M)
    double p_reliability_below_0_8 = 0.0;
    double p_e2e_within_50ms = 0.0;      // failed or unmatched AVs count as misses

    const MetricSummary& metric(const std::string& name) const;
};

Summary aggregate(const std::vector<RunResult>& runs, std::string scheme = {}, int n_av = 0);

/// Fraction of AV samples (over all runs) with e2e_ms <= threshold.
double fraction_within(const std::vector<RunResult>& runs, double threshold_ms);

/// Header of the per-AV CSV.
std::string csv_header();
/// One row per AV; doubles in shortest round-trip form, "inf" for missing latencies.
void write_csv_rows(std::ostream& out, const RunResult& run, const std::string& scheme, int n_av, std::size_t run_index,
                    std::uint64_t seed);

std::string format_double(double x);

/// Means, CIs and CDF points; non-finite numbers become null.
nlohmann::json summary_to_json(const Summary& summary);

}  // namespace v2i

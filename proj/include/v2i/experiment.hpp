#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "v2i/config.hpp"
#include "v2i/matching.hpp"
#include "v2i/metrics.hpp"

namespace v2i {

enum class Scheme { proposed, max_sinr, max_rssi };

std::string_view scheme_name(Scheme s);
/// "proposed", "max_sinr", "max_rssi" or "all"; nullopt otherwise.
std::optional<std::vector<Scheme>> parse_schemes(std::string_view name);

Matching solve(Scheme scheme, const Market& market, const MatchingOptions& options = {});

/// Seed of run `run` at AV count `n_av`. Independent of the scheme, so every
/// scheme sees the same instances.
std::uint64_t run_seed(std::uint64_t base, int n_av, std::size_t run);

/// Runs body(i) for i in [0, count) on `threads` workers (0 = hardware
/// concurrency). The first exception by index is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

struct ExperimentSpec {
    ScenarioConfig base = ScenarioConfig::defaults();
    std::vector<Scheme> schemes{Scheme::proposed, Scheme::max_sinr, Scheme::max_rssi};
    std::vector<int> av_counts{10, 20, 30, 40};
    int runs_per_point = 1;
    std::filesystem::path output_dir = "results";
    MatchingOptions matching;
    unsigned threads = 0;

    /// Throws ConfigError.
    void validate() const;
};

struct PointResult {
    Scheme scheme = Scheme::proposed;
    int n_av = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<RunResult> runs;
};

/// One entry per (scheme, AV count) in spec order.
std::vector<PointResult> run_sweep(const ExperimentSpec& spec);

/// results_<scheme>.csv and summary_<scheme>.json for every scheme; returns the files written.
std::vector<std::filesystem::path> write_sweep(const std::vector<PointResult>& points,
                                               const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Small-instance property suite
// ---------------------------------------------------------------------------

struct VerifySpec {
    ScenarioConfig base = ScenarioConfig::defaults();
    int instances = 100;
    int n_sbs = 3;
    int n_av = 5;
    int n_subchannels = 8;
    int max_subset = 5;
    std::uint64_t seed = 1;
    MatchingOptions matching;
    unsigned threads = 0;
};

struct PropertyResult {
    std::string name;
    int checked = 0;
    int failures = 0;
    int skipped = 0;
    std::string first_failure;

    bool passed() const { return failures == 0; }
};

struct VerifyReport {
    int instances = 0;
    int max_rounds = 0;
    std::vector<PropertyResult> properties;

    bool passed() const;
};

VerifyReport run_verify(const VerifySpec& spec);

}  // namespace v2i

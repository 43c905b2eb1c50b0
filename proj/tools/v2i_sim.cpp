#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "v2i/experiment.hpp"
#include "v2i/metrics.hpp"
#include "v2i/scenario.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kUsage = 2;

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string scheme = "all";
    std::vector<int> avs;
    int runs = 0;
    std::string out = "results";
    std::string scan;
    std::string offer_count;
    unsigned threads = 0;
    // verify
    int instances = 100;
    int sbs = 3;
    int subchannels = 8;
    int max_subset = 5;
    std::string inject_bug;
};

v2i::ScenarioConfig load_base(const Options& o) {
    v2i::ScenarioConfig c = o.config_path.empty() ? v2i::ScenarioConfig::defaults() : v2i::load_config(o.config_path);
    if (o.seed) c.seed = *o.seed;
    c.validate();
    return c;
}

v2i::MatchingOptions matching_options(const Options& o) {
    v2i::MatchingOptions m;
    if (o.scan == "prefix") m.scan = v2i::SelectionScan::prefix;
    else if (o.scan == "full") m.scan = v2i::SelectionScan::full;
    else if (!o.scan.empty()) throw v2i::ConfigError("--scan must be prefix or full");
    if (o.offer_count == "floor") m.offer_count = v2i::OfferCount::floor;
    else if (o.offer_count == "best") m.offer_count = v2i::OfferCount::best;
    else if (!o.offer_count.empty()) throw v2i::ConfigError("--offer-count must be floor or best");
    if (o.inject_bug == "skip-repeat") m.repeat_held_offers = false;
    else if (!o.inject_bug.empty()) throw v2i::ConfigError("--inject-bug accepts only skip-repeat");
    return m;
}

std::string ci_text(const v2i::MetricSummary& m) {
    if (!m.ci_low) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof buf, "[%.4f, %.4f]", *m.ci_low, *m.ci_high);
    return buf;
}

int cmd_run(const Options& o) {
    v2i::ExperimentSpec spec;
    spec.base = load_base(o);
    const auto schemes = v2i::parse_schemes(o.scheme);
    if (!schemes) throw v2i::ConfigError("unknown scheme '" + o.scheme + "'");
    spec.schemes = *schemes;
    spec.av_counts = o.avs.empty() ? std::vector<int>{spec.base.n_av} : o.avs;
    spec.runs_per_point = o.runs > 0 ? o.runs : 1;
    spec.output_dir = o.out;
    spec.matching = matching_options(o);
    spec.threads = o.threads;

    const auto points = v2i::run_sweep(spec);
    const auto files = v2i::write_sweep(points, spec.output_dir);

    std::printf("%-9s %4s %5s %9s %22s %9s %9s %8s\n", "scheme", "M", "runs", "mean_eta", "eta_ci95", "P(eta<.8)",
                "P(t<=50)", "rounds");
    for (const auto& p : points) {
        const auto s = v2i::aggregate(p.runs, std::string(v2i::scheme_name(p.scheme)), p.n_av);
        const auto& eta = s.metric("reliability");
        std::printf("%-9s %4d %5zu %9.4f %22s %9.4f %9.4f %8.2f\n", s.scheme.c_str(), p.n_av, s.runs, eta.mean,
                    ci_text(eta).c_str(), s.p_reliability_below_0_8, s.p_e2e_within_50ms, s.metric("rounds").mean);
    }
    for (const auto& f : files) std::printf("wrote %s\n", f.string().c_str());
    return kOk;
}

int cmd_verify(const Options& o) {
    v2i::VerifySpec spec;
    spec.base = load_base(o);
    spec.instances = o.instances;
    spec.n_sbs = o.sbs;
    spec.n_av = o.avs.empty() ? 5 : o.avs.front();
    spec.n_subchannels = o.subchannels;
    spec.max_subset = o.max_subset;
    spec.seed = spec.base.seed;
    spec.matching = matching_options(o);
    spec.threads = o.threads;
    if (spec.instances <= 0) {
        std::fprintf(stderr, "warning: no instances requested; every property passes vacuously\n");
        return kOk;
    }

    const auto report = v2i::run_verify(spec);
    std::printf("instances %d (N=%d, M=%d, K=%d), max rounds %d\n", report.instances, spec.n_sbs, spec.n_av,
                spec.n_subchannels, report.max_rounds);
    for (const auto& p : report.properties) {
        std::printf("%-4s %-24s checked %d, failed %d, skipped %d\n", p.passed() ? "PASS" : "FAIL", p.name.c_str(),
                    p.checked, p.failures, p.skipped);
        if (!p.passed()) std::printf("     first failure: %s\n", p.first_failure.c_str());
    }
    return report.passed() ? kOk : kVerifyFailed;
}

int cmd_trace(const Options& o) {
    v2i::ScenarioConfig config = load_base(o);
    if (!o.avs.empty()) config.n_av = o.avs.front();
    config.validate();
    const auto topo = v2i::generate_topology(config);
    const v2i::Market market(config, topo);
    const auto matching = v2i::run_matching(market, matching_options(o));

    std::filesystem::create_directories(o.out);
    const auto path = std::filesystem::path(o.out) / ("trace_" + std::to_string(config.seed) + ".jsonl");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    v2i::write_offer_log_jsonl(matching, out);

    int matched = 0;
    for (int f : matching.assignment) matched += f != v2i::kUnmatched;
    std::printf("seed %llu: %d rounds, %zu offers, %d/%d AVs matched\n",
                static_cast<unsigned long long>(config.seed), matching.rounds_used, matching.offer_log.size(), matched,
                config.n_av);
    bool ok = true;
    for (const auto& c : v2i::check_trace(matching, matching_options(o).offer_count == v2i::OfferCount::floor)) {
        std::printf("%-4s %s%s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.passed ? "" : ": ",
                    c.detail.c_str());
        ok = ok && c.passed;
    }
    std::printf("wrote %s\n", path.string().c_str());
    return ok ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo simulator for matching-based AV/SBS association with edge computing"};
    app.require_subcommand(0, 1);
    app.fallthrough();
    Options o;
    bool verify_flag = false;
    bool trace_flag = false;

    app.add_option("--config", o.config_path, "JSON scenario config")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "Base seed (overrides the config)");
    app.add_option("--scheme", o.scheme, "proposed, max_sinr, max_rssi or all");
    app.add_option("--avs", o.avs, "AV counts to sweep (run) or the AV count (verify, trace)")->delimiter(',');
    app.add_option("--runs", o.runs, "Monte Carlo runs per point")->check(CLI::PositiveNumber);
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--scan", o.scan, "Candidate scan: full or prefix");
    app.add_option("--offer-count", o.offer_count, "Offer size: best (default) or floor");
    app.add_option("--threads", o.threads, "Worker threads (0 = all cores)");
    app.add_option("--instances", o.instances, "Instances for verify");
    app.add_option("--sbs", o.sbs, "SBS count for verify")->check(CLI::PositiveNumber);
    app.add_option("--subchannels", o.subchannels, "Subchannels per SBS for verify")->check(CLI::PositiveNumber);
    app.add_option("--max-subset", o.max_subset, "Largest coalition checked by verify")->check(CLI::PositiveNumber);
    app.add_option("--inject-bug", o.inject_bug, "skip-repeat: drop the Step 3 offer repetition");
    app.add_flag("--verify", verify_flag, "Same as the verify subcommand");
    app.add_flag("--trace", trace_flag, "Same as the trace subcommand");

    auto* run = app.add_subcommand("run", "Run a Monte Carlo sweep and write CSV/JSON results");
    auto* verify = app.add_subcommand("verify", "Check core, rationality and trace properties on small instances");
    auto* trace = app.add_subcommand("trace", "Run one instance and write its offer log as JSON lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    const int modes = (run->parsed() ? 1 : 0) + (verify->parsed() || verify_flag ? 1 : 0) +
                      (trace->parsed() || trace_flag ? 1 : 0);
    if (modes > 1) {
        std::fprintf(stderr, "error: choose one of run, verify, trace\n");
        return kUsage;
    }
    try {
        if (verify->parsed() || verify_flag) return cmd_verify(o);
        if (trace->parsed() || trace_flag) return cmd_trace(o);
        return cmd_run(o);
    } catch (const v2i::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    }
}

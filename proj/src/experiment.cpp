#include "v2i/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "v2i/baselines.hpp"
#include "v2i/rng.hpp"
#include "v2i/scenario.hpp"

namespace v2i {

std::string_view scheme_name(Scheme s) {
    switch (s) {
        case Scheme::proposed: return "proposed";
        case Scheme::max_sinr: return "max_sinr";
        case Scheme::max_rssi: return "max_rssi";
    }
    return "unknown";
}

std::optional<std::vector<Scheme>> parse_schemes(std::string_view name) {
    if (name == "all") return std::vector<Scheme>{Scheme::proposed, Scheme::max_sinr, Scheme::max_rssi};
    for (Scheme s : {Scheme::proposed, Scheme::max_sinr, Scheme::max_rssi}) {
        if (name == scheme_name(s)) return std::vector<Scheme>{s};
    }
    return std::nullopt;
}

Matching solve(Scheme scheme, const Market& market, const MatchingOptions& options) {
    switch (scheme) {
        case Scheme::max_sinr: return max_sinr_association(market);
        case Scheme::max_rssi: return max_rssi_association(market);
        case Scheme::proposed: break;
    }
    return run_matching(market, options);
}

std::uint64_t run_seed(std::uint64_t base, int n_av, std::size_t run) {
    return mix64(mix64(base ^ label_hash("run")) ^ mix64(static_cast<std::uint64_t>(n_av)) ^ (run * 0x9e3779b97f4a7c15ULL));
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_at = count;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_at) {
                    failed_at = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

void ExperimentSpec::validate() const {
    if (schemes.empty()) throw ConfigError("scheme list is empty");
    if (av_counts.empty()) throw ConfigError("av_counts must not be empty");
    for (int m : av_counts) {
        if (m < 0) throw ConfigError("av_counts entries must be >= 0");
    }
    if (runs_per_point < 1) throw ConfigError("runs_per_point must be >= 1");
    base.validate();
}

std::vector<PointResult> run_sweep(const ExperimentSpec& spec) {
    spec.validate();
    const std::size_t n_points = spec.av_counts.size();
    const std::size_t runs = static_cast<std::size_t>(spec.runs_per_point);

    std::vector<PointResult> points;
    for (Scheme s : spec.schemes) {
        for (int m : spec.av_counts) {
            PointResult p;
            p.scheme = s;
            p.n_av = m;
            p.seeds.resize(runs);
            p.runs.resize(runs);
            points.push_back(std::move(p));
        }
    }

    parallel_for(n_points * runs, spec.threads, [&](std::size_t job) {
        const std::size_t point = job / runs;
        const std::size_t run = job % runs;
        ScenarioConfig config = spec.base;
        config.n_av = spec.av_counts[point];
        config.seed = run_seed(spec.base.seed, config.n_av, run);
        const Topology topo = generate_topology(config);
        const Market market(config, topo);
        for (std::size_t s = 0; s < spec.schemes.size(); ++s) {
            PointResult& out = points[s * n_points + point];
            out.seeds[run] = config.seed;
            out.runs[run] = realize_run(solve(spec.schemes[s], market, spec.matching), market, config.seed);
        }
    });
    return points;
}

std::vector<std::filesystem::path> write_sweep(const std::vector<PointResult>& points,
                                               const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    std::vector<Scheme> order;
    for (const auto& p : points) {
        if (std::find(order.begin(), order.end(), p.scheme) == order.end()) order.push_back(p.scheme);
    }
    for (Scheme s : order) {
        const std::string name(scheme_name(s));
        const auto csv_path = dir / ("results_" + name + ".csv");
        const auto json_path = dir / ("summary_" + name + ".json");
        std::ofstream csv(csv_path, std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
        csv << csv_header() << '\n';
        nlohmann::json summary{{"scheme", name}, {"points", nlohmann::json::array()}};
        for (const auto& p : points) {
            if (p.scheme != s) continue;
            for (std::size_t r = 0; r < p.runs.size(); ++r) write_csv_rows(csv, p.runs[r], name, p.n_av, r, p.seeds[r]);
            summary["points"].push_back(summary_to_json(aggregate(p.runs, name, p.n_av)));
        }
        std::ofstream js(json_path, std::ios::binary);
        if (!js) throw std::runtime_error("cannot write " + json_path.string());
        js << summary.dump(2) << '\n';
        written.push_back(csv_path);
        written.push_back(json_path);
    }
    return written;
}

bool VerifyReport::passed() const {
    return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.passed(); });
}

VerifyReport run_verify(const VerifySpec& spec) {
    VerifyReport report;
    report.instances = std::max(spec.instances, 0);
    const std::vector<std::string> names{"convergence",         "individual_rationality", "core",
                                         "offer_persistence",   "monotone_escalation",    "at_least_one_offer",
                                         "argmax_acceptance",   "termination"};
    for (const auto& n : names) {
        PropertyResult p;
        p.name = n;
        report.properties.push_back(p);
    }

    struct Outcome {
        int rounds = 0;
        std::vector<int> status;  // per property: 0 pass, 1 fail, 2 skipped
        std::vector<std::string> detail;
    };
    std::vector<Outcome> outcomes(static_cast<std::size_t>(report.instances));

    parallel_for(outcomes.size(), spec.threads, [&](std::size_t i) {
        Outcome& o = outcomes[i];
        o.status.assign(names.size(), 2);
        o.detail.assign(names.size(), {});
        ScenarioConfig config = spec.base;
        config.n_sbs = spec.n_sbs;
        config.n_av = spec.n_av;
        config.n_subchannels = spec.n_subchannels;
        config.seed = run_seed(spec.seed, spec.n_av, i);
        config.validate();
        const Topology topo = generate_topology(config);
        const Market market(config, topo);
        const std::string where = "instance " + std::to_string(i) + " (seed " + std::to_string(config.seed) + "): ";

        Matching matching;
        try {
            matching = run_matching(market, spec.matching);
            o.status[0] = 0;
        } catch (const ConvergenceError& e) {
            o.status[0] = 1;
            o.detail[0] = where + e.what();
            return;
        }
        o.rounds = matching.rounds_used;

        const auto ir = check_individual_rationality(matching, market);
        o.status[1] = ir.rational ? 0 : 1;
        if (!ir.rational) o.detail[1] = where + "irrational allocation";

        try {
            const auto block = find_blocking_pair(matching, market, spec.max_subset);
            o.status[2] = block ? 1 : 0;
            if (block) {
                std::string d = where + "SBS " + std::to_string(block->sbs) + " blocks with";
                for (const auto& s : block->coalition) d += " AV " + std::to_string(s.av) + "x" + std::to_string(s.count);
                o.detail[2] = d;
            }
        } catch (const EnumerationTooLarge&) {
            o.status[2] = 2;
        }

        const auto checks = check_trace(matching, spec.matching.offer_count == OfferCount::floor);
        for (std::size_t c = 0; c < checks.size(); ++c) {
            o.status[3 + c] = checks[c].passed ? 0 : 1;
            if (!checks[c].passed) o.detail[3 + c] = where + checks[c].detail;
        }
    });

    for (const auto& o : outcomes) {
        report.max_rounds = std::max(report.max_rounds, o.rounds);
        for (std::size_t p = 0; p < names.size(); ++p) {
            auto& prop = report.properties[p];
            if (o.status[p] == 2) {
                ++prop.skipped;
                continue;
            }
            ++prop.checked;
            if (o.status[p] == 1) {
                if (prop.failures++ == 0) prop.first_failure = o.detail[p];
            }
        }
    }
    return report;
}

}  // namespace v2i

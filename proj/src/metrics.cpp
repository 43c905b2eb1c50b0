#include "v2i/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "v2i/rng.hpp"

namespace v2i {

double RunResult::reliability_from_kappa() const {
    if (avs.empty()) return 0.0;
    int ok = 0;
    for (const auto& a : avs) ok += a.kappa;
    return static_cast<double>(ok) / static_cast<double>(avs.size());
}

double RunResult::reliability_from_assignment() const {
    if (avs.empty()) return 0.0;
    int ok = 0;
    for (int n = 0; n < static_cast<int>(sbs_load.size()); ++n) {
        for (const auto& a : avs) ok += (a.sbs == n ? 1 : 0) * a.kappa;
    }
    return static_cast<double>(ok) / static_cast<double>(avs.size());
}

RunResult realize_run(const Matching& matching, const Market& market, std::uint64_t seed) {
    const auto& config = market.config();
    const auto& topo = market.topology();
    const auto& radio = market.radio();
    const auto& exec = market.exec();

    RunResult r;
    r.rounds_used = matching.rounds_used;
    r.sbs_load.assign(static_cast<std::size_t>(topo.n_sbs), 0);
    r.avs.resize(static_cast<std::size_t>(topo.n_av));
    for (int m = 0; m < topo.n_av; ++m) {
        AvRecord& a = r.avs[m];
        a.av = m;
        a.sbs = matching.assignment[m];
        a.task = static_cast<int>(topo.av_task[m]);
        a.budget_ms = config.task_catalog[topo.av_task[m]].latency_budget_ms;
        if (a.sbs == kUnmatched) continue;
        ++r.sbs_load[a.sbs];
        a.subchannels = matching.count(m);
        if (a.subchannels == 0) continue;
        a.dl_rate_bps = radio.downlink_rate(m, a.sbs, matching.bandwidth, Interference::activity);
        try {
            a.dl_ttis = radio.downlink_ttis(m, a.sbs, matching.bandwidth, Interference::activity);
            a.ul_ttis = radio.uplink_ttis(m, a.sbs, matching.assignment, Interference::activity);
            a.dl_ms = static_cast<double>(a.dl_ttis) * config.tti_ms;
            a.transmission_ms = static_cast<double>(a.dl_ttis + a.ul_ttis) * config.tti_ms;
        } catch (const UnservableLink&) {
            a.dl_ttis = a.ul_ttis = -1;
        }
    }

    for (int n = 0; n < topo.n_sbs; ++n) {
        std::vector<Slot> batch;
        for (const auto& s : matching.batch(n)) {
            if (s.count > 0) batch.push_back(s);
        }
        if (batch.empty()) continue;
        const MachineQueue queue = market.machine_queue(n, batch);
        RngStream rng(seed, "compute", static_cast<std::uint64_t>(n));
        double expected = 0.0;
        for (const auto& s : sample_completion_steps(queue, exec, rng)) {
            AvRecord& a = r.avs[s.av];
            expected += exec.mean_ms(topo.av_task[s.av], queue.machine);
            a.expected_compute_ms = expected;
            a.compute_ms = static_cast<double>(s.completion_steps) * exec.step_ms();
            a.dropped = s.dropped;
        }
    }

    for (auto& a : r.avs) {
        a.e2e_ms = a.transmission_ms + a.compute_ms;
        a.kappa = (a.sbs != kUnmatched && !a.dropped && std::isfinite(a.e2e_ms) && a.e2e_ms <= a.budget_ms) ? 1 : 0;
    }
    r.reliability = r.reliability_from_kappa();
    return r;
}

CdfSeries cdf(std::vector<double> samples, std::string label) {
    CdfSeries out;
    out.label = std::move(label);
    std::erase_if(samples, [](double x) { return !std::isfinite(x); });
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (i + 1 < samples.size() && samples[i + 1] == samples[i]) continue;
        out.values.push_back(samples[i]);
        out.probs.push_back(static_cast<double>(i + 1) / n);
    }
    return out;
}

MetricSummary summarize(const std::vector<double>& samples, std::string name) {
    MetricSummary s;
    s.name = name;
    std::vector<double> finite;
    for (double x : samples) {
        if (std::isfinite(x)) finite.push_back(x);
    }
    s.count = finite.size();
    if (!finite.empty()) {
        s.mean = std::accumulate(finite.begin(), finite.end(), 0.0) / static_cast<double>(finite.size());
    }
    if (finite.size() >= 2) {
        double ss = 0.0;
        for (double x : finite) ss += (x - s.mean) * (x - s.mean);
        s.std_dev = std::sqrt(ss / static_cast<double>(finite.size() - 1));
        const double half = 1.959963984540054 * s.std_dev / std::sqrt(static_cast<double>(finite.size()));
        s.ci_low = s.mean - half;
        s.ci_high = s.mean + half;
    }
    s.distribution = cdf(std::move(finite), std::move(name));
    return s;
}

const MetricSummary& Summary::metric(const std::string& name) const {
    for (const auto& m : metrics) {
        if (m.name == name) return m;
    }
    throw std::out_of_range("no metric named " + name);
}

double fraction_within(const std::vector<RunResult>& runs, double threshold_ms) {
    std::size_t hit = 0, total = 0;
    for (const auto& r : runs) {
        for (const auto& a : r.avs) {
            ++total;
            if (a.sbs != kUnmatched && !a.dropped && a.e2e_ms <= threshold_ms) ++hit;
        }
    }
    return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

Summary aggregate(const std::vector<RunResult>& runs, std::string scheme, int n_av) {
    Summary out;
    out.scheme = std::move(scheme);
    out.n_av = n_av;
    out.runs = runs.size();

    std::vector<double> reliability, e2e, dl, compute, rate, rounds;
    std::size_t ok = 0, total = 0, below = 0;
    for (const auto& r : runs) {
        reliability.push_back(r.reliability);
        rounds.push_back(r.rounds_used);
        if (r.reliability < 0.8) ++below;
        double rate_sum = 0.0;
        for (const auto& a : r.avs) {
            e2e.push_back(a.e2e_ms);
            dl.push_back(a.dl_ms);
            compute.push_back(a.compute_ms);
            rate_sum += a.dl_rate_bps;
            ok += a.kappa;
            ++total;
        }
        rate.push_back(r.avs.empty() ? 0.0 : rate_sum / static_cast<double>(r.avs.size()));
    }
    out.metrics.push_back(summarize(reliability, "reliability"));
    out.metrics.push_back(summarize(e2e, "e2e_ms"));
    out.metrics.push_back(summarize(dl, "dl_ms"));
    out.metrics.push_back(summarize(compute, "compute_ms"));
    out.metrics.push_back(summarize(rate, "dl_rate_bps"));
    out.metrics.push_back(summarize(rounds, "rounds"));
    if (total) out.pooled_success = static_cast<double>(ok) / static_cast<double>(total);
    if (!runs.empty()) out.p_reliability_below_0_8 = static_cast<double>(below) / static_cast<double>(runs.size());
    out.p_e2e_within_50ms = fraction_within(runs, 50.0);
    return out;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string csv_header() {
    return "scheme,n_av,run,seed,av,sbs,task,subchannels,ul_ttis,dl_ttis,dl_rate_bps,dl_ms,transmission_ms,"
           "compute_ms,expected_compute_ms,e2e_ms,budget_ms,dropped,kappa";
}

void write_csv_rows(std::ostream& out, const RunResult& run, const std::string& scheme, int n_av, std::size_t run_index,
                    std::uint64_t seed) {
    for (const auto& a : run.avs) {
        out << scheme << ',' << n_av << ',' << run_index << ',' << seed << ',' << a.av << ',' << a.sbs << ','
            << a.task << ',' << a.subchannels << ',' << a.ul_ttis << ',' << a.dl_ttis << ','
            << format_double(a.dl_rate_bps) << ',' << format_double(a.dl_ms) << ','
            << format_double(a.transmission_ms) << ',' << format_double(a.compute_ms) << ','
            << format_double(a.expected_compute_ms) << ',' << format_double(a.e2e_ms) << ','
            << format_double(a.budget_ms) << ',' << (a.dropped ? 1 : 0) << ',' << a.kappa << '\n';
    }
}

namespace {

nlohmann::json number(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json summary_to_json(const Summary& summary) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& m : summary.metrics) {
        nlohmann::json j{{"count", m.count}, {"mean", number(m.mean)}, {"std", number(m.std_dev)}};
        j["ci95"] = m.ci_low ? nlohmann::json::array({number(*m.ci_low), number(*m.ci_high)}) : nlohmann::json(nullptr);
        nlohmann::json points = nlohmann::json::array();
        for (std::size_t i = 0; i < m.distribution.values.size(); ++i) {
            points.push_back({number(m.distribution.values[i]), number(m.distribution.probs[i])});
        }
        j["cdf"] = std::move(points);
        metrics[m.name] = std::move(j);
    }
    return {{"scheme", summary.scheme},
            {"n_av", summary.n_av},
            {"runs", summary.runs},
            {"pooled_success", number(summary.pooled_success)},
            {"p_reliability_below_0_8", number(summary.p_reliability_below_0_8)},
            {"p_e2e_within_50ms", number(summary.p_e2e_within_50ms)},
            {"metrics", std::move(metrics)}};
}

}  // namespace v2i

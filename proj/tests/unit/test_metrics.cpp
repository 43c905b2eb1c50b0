#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "helpers.hpp"
#include "v2i/baselines.hpp"
#include "v2i/metrics.hpp"

using namespace v2i;

namespace {

struct Instance {
    ScenarioConfig config;
    Topology topo;
    std::unique_ptr<Market> market;

    Instance(ScenarioConfig c, Topology t) : config(std::move(c)), topo(std::move(t)) {
        config.n_sbs = topo.n_sbs;
        config.n_av = topo.n_av;
        config.n_subchannels = topo.n_subchannels;
        market = std::make_unique<Market>(config, topo);
    }
};

}  // namespace

TEST_CASE("nobody matched means zero reliability") {
    auto c = test::small_config(2, 3, 4);
    c.seed = 2;
    Instance inst(c, generate_topology(c));
    const auto r = realize_run(make_matching(2, 3, 4, {}), *inst.market, 1);
    CHECK(r.reliability == 0.0);
    for (const auto& a : r.avs) {
        CHECK(a.kappa == 0);
        CHECK(a.sbs == kUnmatched);
        CHECK(std::isinf(a.e2e_ms));
        CHECK(a.budget_ms > 0.0);
    }
    CHECK(r.sbs_load == std::vector<int>{0, 0});
}

TEST_CASE("a deterministic task inside its budget always succeeds") {
    auto c = test::small_config(1, 1, 4);
    test::use_delta_catalog(c, {3.0}, 20.0);
    Instance inst(c, test::place(c, {{50, 50}}, {{52, 51}}));
    const auto m = make_matching(1, 1, 4, {{{0, 2}}});
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto r = realize_run(m, *inst.market, seed);
        CHECK(r.reliability == 1.0);
        const auto& a = r.avs[0];
        CHECK(a.compute_ms == 3.0);
        CHECK(a.expected_compute_ms == doctest::Approx(3.0));
        CHECK(a.e2e_ms == a.transmission_ms + a.compute_ms);
        CHECK(a.transmission_ms == (a.dl_ttis + a.ul_ttis) * c.tti_ms);
        CHECK(a.dl_ms == a.dl_ttis * c.tti_ms);
        CHECK(a.subchannels == 2);
        CHECK(a.dl_rate_bps > 0.0);
        CHECK_FALSE(a.dropped);
    }
}

TEST_CASE("zero-bandwidth AVs fail and do not queue") {
    auto c = test::small_config(1, 2, 1);
    test::use_delta_catalog(c, {3.0}, 20.0);
    Instance inst(c, test::place(c, {{50, 50}}, {{52, 51}, {49, 49}}));
    const auto m = equal_share_matching({0, 0}, 1, 1);
    const auto r = realize_run(m, *inst.market, 1);
    CHECK(r.avs[0].kappa == 1);
    CHECK(r.avs[0].compute_ms == 3.0);
    CHECK(r.avs[1].kappa == 0);
    CHECK(r.avs[1].subchannels == 0);
    CHECK(std::isinf(r.avs[1].compute_ms));
    CHECK(r.sbs_load[0] == 2);
    CHECK(r.reliability == 0.5);
}

TEST_CASE("mean reliability of a fixed two-AV matching matches enumeration") {
    auto c = test::small_config(1, 2, 4);
    c.task_catalog = {{1, 22.0, c.dl_packet_bits, 22}};
    c.machine_catalog = {{0, {{1, 10.5, 0.6}}}};
    Instance inst(c, test::place(c, {{50, 50}}, {{52, 50}, {50, 47}}));
    const auto m = make_matching(1, 2, 4, {{{0, 2}, {1, 2}}});
    const auto probe = realize_run(m, *inst.market, 0);
    const double t0 = probe.avs[0].transmission_ms, t1 = probe.avs[1].transmission_ms;
    const auto& pmf = inst.market->exec().pmf(0, 0);

    double p0 = 0.0, p1 = 0.0;
    for (std::size_t a = 1; a <= pmf.size(); ++a) {
        if (t0 + a <= 22.0) p0 += pmf.at(a);
        for (std::size_t b = 1; b <= pmf.size(); ++b) {
            if (a + b <= 22 && t1 + static_cast<double>(a + b) <= 22.0) p1 += pmf.at(a) * pmf.at(b);
        }
    }
    const double expected = 0.5 * (p0 + p1);
    REQUIRE(expected > 0.55);
    REQUIRE(expected < 0.95);

    const int n = 10000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double eta = realize_run(m, *inst.market, 1000 + static_cast<std::uint64_t>(i)).reliability;
        s += eta;
        s2 += eta * eta;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / (n - 1));
    CHECK(std::abs(mean - expected) <= 3.0 * se);
}

TEST_CASE("reliability two ways, E2E identity, and budget scaling") {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        auto c = test::small_config(4, 16, 40);
        c.seed = seed;
        for (auto& t : c.task_catalog) t.max_steps = 100;
        const auto topo = generate_topology(c);
        Instance full(c, topo);
        auto tight_cfg = c;
        for (auto& t : tight_cfg.task_catalog) t.latency_budget_ms *= 0.6;
        Instance tight(tight_cfg, topo);

        for (const auto& m : {run_matching(*full.market), max_rssi_association(*full.market)}) {
            const auto r = realize_run(m, *full.market, seed * 7);
            const auto rt = realize_run(m, *tight.market, seed * 7);
            CHECK(r.reliability == r.reliability_from_assignment());
            CHECK(r.reliability >= 0.0);
            CHECK(r.reliability <= 1.0);
            CHECK(rt.reliability <= r.reliability);
            for (std::size_t i = 0; i < r.avs.size(); ++i) {
                const auto& a = r.avs[i];
                CHECK(rt.avs[i].kappa <= a.kappa);
                if (a.sbs != kUnmatched && a.subchannels > 0 && a.dl_ttis > 0) {
                    CHECK(a.e2e_ms == (a.dl_ttis + a.ul_ttis) * c.tti_ms + a.compute_ms);
                }
                const bool ok = a.sbs != kUnmatched && !a.dropped && a.e2e_ms <= a.budget_ms;
                CHECK(a.kappa == (ok ? 1 : 0));
            }
        }
    }
}

TEST_CASE("empirical CDF examples") {
    const auto a = cdf({3, 1, 2});
    CHECK(a.values == std::vector<double>{1, 2, 3});
    REQUIRE(a.probs.size() == 3);
    CHECK(a.probs[0] == doctest::Approx(1.0 / 3));
    CHECK(a.probs[1] == doctest::Approx(2.0 / 3));
    CHECK(a.probs[2] == 1.0);
    const auto flat = cdf({4, 4, 4});
    CHECK(flat.values == std::vector<double>{4});
    CHECK(flat.probs == std::vector<double>{1.0});
    const auto once = cdf({5, 1, 1, 9});
    const auto twice = cdf({5, 1, 1, 9, 5, 1, 1, 9});
    CHECK(once.values == twice.values);
    CHECK(once.probs == twice.probs);
    const auto inf = cdf({1, std::numeric_limits<double>::infinity(), 2});
    CHECK(inf.values == std::vector<double>{1, 2});
    CHECK(inf.probs.back() == 1.0);
    CHECK(cdf({}).values.empty());
}

TEST_CASE("summary statistics and confidence intervals") {
    const auto same = summarize({0.7, 0.7, 0.7}, "x");
    REQUIRE(same.ci_low.has_value());
    CHECK(*same.ci_low == doctest::Approx(0.7));
    CHECK(*same.ci_high == doctest::Approx(0.7));
    CHECK_FALSE(summarize({1.0}, "x").ci_low.has_value());

    std::vector<double> base{1, 4, 2, 8, 5, 7};
    std::vector<double> big;
    for (int i = 0; i < 100; ++i) big.insert(big.end(), base.begin(), base.end());
    const auto s = summarize(base, "x");
    const auto b = summarize(big, "x");
    CHECK(*s.ci_high - *s.ci_low == doctest::Approx(2 * 1.959963984540054 * s.std_dev / std::sqrt(6.0)));
    CHECK(b.mean == doctest::Approx(s.mean));
    const double ratio = (*b.ci_high - *b.ci_low) / (*s.ci_high - *s.ci_low);
    CHECK(ratio == doctest::Approx(std::sqrt(6.0 / 600.0) * b.std_dev / s.std_dev));
}

TEST_CASE("aggregate over hand-built runs") {
    RunResult r1, r2;
    r1.avs.resize(2);
    r2.avs.resize(2);
    r1.avs[0].dl_rate_bps = 100;
    r1.avs[1].dl_rate_bps = 300;
    r2.avs[0].dl_rate_bps = 500;
    r2.avs[1].dl_rate_bps = 700;
    r1.avs[0].kappa = 1;
    r1.avs[0].sbs = 0;
    r1.avs[0].e2e_ms = 30;
    r1.avs[1].sbs = 0;
    r1.avs[1].e2e_ms = 60;
    r1.reliability = 0.5;
    r2.reliability = 1.0;
    r2.avs[0].kappa = r2.avs[1].kappa = 1;
    r2.avs[0].sbs = r2.avs[1].sbs = 1;
    r2.avs[0].e2e_ms = 10;
    r2.avs[1].e2e_ms = 50;
    r1.rounds_used = 3;
    r2.rounds_used = 5;
    const auto s = aggregate({r1, r2}, "proposed", 2);
    CHECK(s.metric("dl_rate_bps").mean == doctest::Approx(400.0));
    CHECK(s.metric("reliability").mean == doctest::Approx(0.75));
    CHECK(s.metric("rounds").mean == doctest::Approx(4.0));
    CHECK(s.pooled_success == doctest::Approx(0.75));
    CHECK(s.p_reliability_below_0_8 == doctest::Approx(0.5));
    CHECK(s.p_e2e_within_50ms == doctest::Approx(0.75));
    CHECK_THROWS_AS(s.metric("nope"), std::out_of_range);

    const auto j = summary_to_json(s);
    CHECK(j.at("scheme") == "proposed");
    CHECK(j.at("metrics").at("reliability").at("ci95").size() == 2);
    CHECK(j.at("metrics").at("dl_ms").at("mean").is_number());
}

TEST_CASE("csv rows and number formatting") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(28.5) == "28.5");
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
    const std::string header = csv_header();
    CHECK(std::count(header.begin(), header.end(), ',') == 18);

    RunResult r;
    r.avs.resize(3);
    for (int i = 0; i < 3; ++i) r.avs[i].av = i;
    std::ostringstream os;
    write_csv_rows(os, r, "max_sinr", 3, 7, 42);
    const std::string text = os.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    CHECK(text.rfind("max_sinr,3,7,42,0,-1,", 0) == 0);
    const auto first = text.substr(0, text.find('\n'));
    CHECK(std::count(first.begin(), first.end(), ',') == 18);
    CHECK(first.find(",inf,") != std::string::npos);
}

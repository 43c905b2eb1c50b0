#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "helpers.hpp"
#include "json.hpp"
#include "v2i/matching.hpp"
#include "v2i/rng.hpp"

using namespace v2i;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Keeps the config and topology alive for the Market that references them.
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
    explicit Instance(ScenarioConfig c) : Instance(c, generate_topology(c)) {}
};

/// Two co-located AVs between two SBSs. SBS 0 runs tasks in 50 ms and can
/// afford one of them; SBS 1 needs 70 ms.
Instance two_by_two() {
    auto c = test::small_config(2, 2, 4);
    test::use_delta_catalog(c, {50.0}, 1000.0);
    c.machine_catalog.push_back(MachineType{1, {{1, 70.0, test::kDeltaStd}}});
    auto t = test::place(c, {{0, 0}, {20, 0}}, {{10, 0}, {10, 0}});
    t.sbs_machine[1] = 1;
    return Instance(c, t);
}

ScenarioConfig random_config(int n_sbs, int n_av, int k, std::uint64_t seed) {
    auto c = test::small_config(n_sbs, n_av, k);
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("sbs utility examples") {
    CHECK(sbs_utility({}, 20000.0, 1.0) == 0.0);
    const CandidateTerms one{180000.0, 10.0, 2.0};
    CHECK(sbs_utility(std::span(&one, 1), 20000.0, 1.0) == doctest::Approx(20000.0 / 180000.0 - 12.0));
    CHECK(sbs_utility(std::span(&one, 1), 20000.0, 1.0) == doctest::Approx(-11.889).epsilon(1e-4));
    const CandidateTerms none{0.0, 1.0, 1.0};
    CHECK_THROWS_AS(sbs_utility(std::span(&none, 1), 20000.0, 1.0), PreconditionError);
    // Second in line waits for the first.
    const std::vector<CandidateTerms> two{{180000.0, 1.0, 3.0}, {180000.0, 1.0, 5.0}};
    CHECK(sbs_utility(two, 0.0, 1.0) == doctest::Approx(-(1 + 3) - (1 + 8)));
}

TEST_CASE("av utility examples") {
    CHECK(av_utility(100 * 0.125, 5.0) == doctest::Approx(-17.5));
    CHECK(av_utility(10.0, 2.0) > av_utility(10.0, 3.0));
    CHECK(av_utility(kInf, 1.0) == -kInf);
    CHECK(av_utility(1e6, 1e6) > av_utility(kInf, 0.0));
}

TEST_CASE("market utilities follow the queue order") {
    auto inst = two_by_two();
    const Market& mk = *inst.market;
    const double tt = mk.transmission_ms(0, 0, 1);
    CHECK(tt == doctest::Approx((223 + 5) * 0.125));
    CHECK(mk.salary(1) == doctest::Approx(20000.0 / 180.0));
    CHECK(mk.salary(2) == doctest::Approx(mk.salary(1) / 2));
    const std::vector<Slot> batch{{0, 1}, {1, 1}};
    CHECK(mk.av_utility(0, batch, 0) == doctest::Approx(-(tt + 50.0)));
    CHECK(mk.av_utility(0, batch, 1) == doctest::Approx(-(tt + 100.0)));
    CHECK(mk.sbs_utility(0, batch) == doctest::Approx(2 * (mk.salary(1) - tt) - 150.0));
    CHECK(mk.sbs_utility(0, {}) == 0.0);
    const std::vector<Slot> bad{{0, 0}};
    CHECK_THROWS_AS(mk.sbs_utility(0, bad), PreconditionError);
    const auto q = mk.machine_queue(1, batch);
    CHECK(q.machine == 1);
    CHECK(q.entries.size() == 2);
    CHECK(expected_completion_ms(q, mk.exec()) == doctest::Approx(70.0 + 140.0));
}

TEST_CASE("unservable links sit below every servable option") {
    auto c = test::small_config(1, 1, 2);
    test::use_delta_catalog(c, {1.0});
    auto t = test::place(c, {{0, 0}}, {{50, 50}});
    t.fading_dl.assign(t.fading_dl.size(), 1e-300);
    Instance inst(c, t);
    const Market& mk = *inst.market;
    CHECK_FALSE(mk.servable(0, 0));
    const std::vector<Slot> b{{0, 1}};
    CHECK(mk.sbs_utility(0, b) == -kInf);
    CHECK(mk.av_utility(0, b, 0) == -kInf);
    OfferState state(1, 1);
    CHECK(select_candidates(mk, 0, state, false, SelectionScan::full).empty());
    const auto m = run_matching(mk);
    CHECK(m.assignment[0] == kUnmatched);
    CHECK(m.offer_log.empty());
    CHECK(m.rounds_used == 1);
}

TEST_CASE("listing order and best count") {
    Instance inst(random_config(3, 6, 12, 4));
    const Market& mk = *inst.market;
    std::vector<Slot> slots;
    for (int m = 0; m < 6; ++m) slots.push_back({m, 1 + m % 3});
    mk.listing_order(1, slots);
    for (std::size_t i = 1; i < slots.size(); ++i) {
        const double a = mk.listing_key(1, slots[i - 1].av, slots[i - 1].count);
        const double b = mk.listing_key(1, slots[i].av, slots[i].count);
        CHECK(a >= b);
        if (a == b) CHECK(slots[i - 1].av < slots[i].av);
    }
    for (int m = 0; m < 6; ++m) {
        for (int n = 0; n < 3; ++n) {
            for (int floor = 1; floor <= 12; ++floor) {
                for (int cap : {floor - 1, floor, floor + 2, 12}) {
                    int arg = 0;
                    double best = -kInf;
                    for (int c = floor; c <= std::min(cap, 12); ++c) {
                        if (arg == 0 || mk.listing_key(n, m, c) > best) {
                            best = mk.listing_key(n, m, c);
                            arg = c;
                        }
                    }
                    CHECK(mk.best_count(m, n, floor, cap) == arg);
                }
            }
        }
    }
}

TEST_CASE("superadditivity fails by the queueing delay") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Instance inst(random_config(2, 4, 8, seed));
        const Market& mk = *inst.market;
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) {
                if (a == b || !mk.servable(a, 0) || !mk.servable(b, 0)) continue;
                const std::vector<Slot> sa{{a, 1}}, sb{{b, 1}}, both{{a, 1}, {b, 1}};
                const double joint = mk.sbs_utility(0, both);
                CHECK(joint <= mk.sbs_utility(0, sa) + mk.sbs_utility(0, sb));
                CHECK(joint == doctest::Approx(mk.sbs_utility(0, sa) + mk.sbs_utility(0, sb) - mk.exec_mean_ms(a, 0)));
            }
        }
    }
}

TEST_CASE("select_candidates stops where the third AV turns the utility negative") {
    auto c = test::small_config(1, 3, 8);
    test::use_delta_catalog(c, {40.0});
    const auto t = test::place(c, {{50, 50}}, {{52, 50}, {50, 53}, {47, 50}});
    Instance inst(c, t);
    const Market& mk = *inst.market;
    OfferState state(1, 3);
    const auto chosen = select_candidates(mk, 0, state, false, SelectionScan::full);
    REQUIRE(chosen.size() == 2);

    std::vector<Slot> all{{0, 1}, {1, 1}, {2, 1}};
    mk.listing_order(0, all);
    double best = 0.0;
    std::vector<Slot> best_set;
    for (int mask = 1; mask < 8; ++mask) {
        std::vector<Slot> s;
        for (const auto& slot : all)
            if (mask & (1 << slot.av)) s.push_back(slot);
        const double u = mk.sbs_utility(0, s);
        if (u > best) {
            best = u;
            best_set = s;
        }
    }
    CHECK(mk.sbs_utility(0, chosen) == doctest::Approx(best));
    REQUIRE(best_set.size() == 2);
    CHECK(chosen[0].av == all[0].av);
    CHECK(chosen[1].av == all[1].av);
    CHECK(mk.sbs_utility(0, all) < mk.sbs_utility(0, chosen));
}

TEST_CASE("greedy selection against brute force on random instances") {
    int compared = 0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        Instance inst(random_config(2, 5, 30, seed));
        const Market& mk = *inst.market;
        OfferState state(2, 5);
        for (int n = 0; n < 2; ++n) {
            const auto full = select_candidates(mk, n, state, false, SelectionScan::full);
            const auto prefix = select_candidates(mk, n, state, false, SelectionScan::prefix);
            std::vector<Slot> listed;
            for (int m = 0; m < 5; ++m) listed.push_back({m, 1});
            mk.listing_order(n, listed);
            // Best prefix of the listing and best subset, both served in listing order.
            double best_prefix = 0.0, best_subset = 0.0;
            for (std::size_t len = 1; len <= listed.size(); ++len) {
                const std::vector<Slot> p(listed.begin(), listed.begin() + static_cast<long>(len));
                best_prefix = std::max(best_prefix, mk.sbs_utility(n, p));
            }
            for (int mask = 1; mask < 32; ++mask) {
                std::vector<Slot> s;
                for (const auto& slot : listed)
                    if (mask & (1 << slot.av)) s.push_back(slot);
                best_subset = std::max(best_subset, mk.sbs_utility(n, s));
            }
            const double u_prefix = mk.sbs_utility(n, prefix);
            const double u_full = mk.sbs_utility(n, full);
            CHECK(u_prefix == doctest::Approx(best_prefix));
            CHECK(u_full >= u_prefix - 1e-9);
            CHECK(u_full <= best_subset + 1e-9);
            if (!full.empty()) CHECK(u_full > 0.0);
            ++compared;
        }
    }
    CHECK(compared == 80);
}

TEST_CASE("selection respects the subchannel budget") {
    Instance inst(random_config(2, 8, 3, 9));
    const Market& mk = *inst.market;
    OfferState state(2, 8);
    for (int m = 0; m < 8; ++m) state.count(0, m) = 2;
    for (auto rule : {OfferCount::floor, OfferCount::best}) {
        int used = 0;
        for (const auto& s : select_candidates(mk, 0, state, false, SelectionScan::full, rule)) {
            CHECK(s.count >= 2);
            used += s.count;
        }
        CHECK(used <= 3);
    }
}

TEST_CASE("single AV, single SBS: matched in round one with one subchannel") {
    auto c = test::small_config(1, 1, 8);
    test::use_delta_catalog(c, {2.0});
    Instance inst(c, test::place(c, {{50, 50}}, {{53, 54}}));
    const auto m = run_matching(*inst.market);
    CHECK(m.assignment[0] == 0);
    CHECK(m.count(0) == 1);
    CHECK(m.rounds_used == 1);
    REQUIRE(m.offer_log.size() == 1);
    CHECK(m.offer_log[0].status == OfferStatus::accepted);
    CHECK_NOTHROW(m.validate());
    CHECK_FALSE(find_blocking_pair(m, *inst.market, 1).has_value());
}

TEST_CASE("two by two instance traced by hand") {
    auto inst = two_by_two();
    const Market& mk = *inst.market;
    // Preconditions of the hand trace.
    const double key1 = mk.listing_key(0, 0, 1);
    REQUIRE(key1 == mk.listing_key(1, 1, 1));
    REQUIRE(key1 - 50.0 > 0.0);
    REQUIRE(key1 - 100.0 < 0.0);
    REQUIRE(key1 - 70.0 > 0.0);
    REQUIRE(mk.best_count(0, 0, 1, 4) == 1);

    MatchingOptions opt;
    opt.offer_count = OfferCount::floor;
    for (auto rule : {OfferCount::floor, OfferCount::best}) {
        opt.offer_count = rule;
        const auto m = run_matching(mk, opt);
        // Round 1: both SBSs can afford one AV and list AV 0 first (tie, lower index).
        // AV 0 takes the faster SBS 0; SBS 1 escalates its offer to AV 0 to 2 subchannels.
        // Round 2: SBS 0 repeats; SBS 1 now ranks AV 1 (1 subchannel) above AV 0 (2).
        REQUIRE(m.offer_log.size() == 4);
        const auto& l = m.offer_log;
        CHECK((l[0].round == 1 && l[0].sbs == 0 && l[0].av == 0 && l[0].count == 1));
        CHECK(l[0].status == OfferStatus::accepted);
        CHECK((l[1].round == 1 && l[1].sbs == 1 && l[1].av == 0 && l[1].count == 1));
        CHECK(l[1].status == OfferStatus::rejected);
        CHECK((l[2].round == 2 && l[2].sbs == 0 && l[2].av == 0 && l[2].repeated));
        CHECK((l[3].round == 2 && l[3].sbs == 1 && l[3].av == 1 && l[3].count == 1));
        CHECK(m.rounds_used == 2);
        CHECK(m.assignment == Association{0, 1});
        CHECK(m.count(0) == 1);
        CHECK(m.count(1) == 1);
        CHECK(is_individually_rational(m, mk));
        CHECK_FALSE(find_blocking_pair(m, mk, 2).has_value());
        for (const auto& chk : check_trace(m, rule == OfferCount::floor)) CHECK_MESSAGE(chk.passed, chk.detail);
    }

    MatchingOptions capped;
    capped.max_rounds = 1;
    CHECK_THROWS_AS(run_matching(mk, capped), ConvergenceError);
}

TEST_CASE("individual rationality reports") {
    auto inst = two_by_two();
    const Market& mk = *inst.market;
    const auto empty = make_matching(2, 2, 4, {});
    CHECK(is_individually_rational(empty, mk));

    const auto zero = make_matching(2, 2, 4, {{{0, 0}}, {}});
    const auto r = check_individual_rationality(zero, mk);
    CHECK_FALSE(r.rational);
    CHECK(r.zero_bandwidth_avs == std::vector<int>{0});
    CHECK(r.bad_utility_sbs == std::vector<int>{0});

    // Four subchannels each pay too little for the queueing both AVs cause.
    const auto crowded = make_matching(2, 2, 8, {{{0, 4}, {1, 4}}, {}});
    const auto rc = check_individual_rationality(crowded, mk);
    CHECK_FALSE(rc.rational);
    CHECK(rc.zero_bandwidth_avs.empty());
    CHECK(rc.sbs_utilities[0] < 0.0);

    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        Instance in(random_config(4, 12, 20, seed));
        const auto m = run_matching(*in.market);
        CHECK_NOTHROW(m.validate());
        CHECK(is_individually_rational(m, *in.market));
    }
}

TEST_CASE("matching container invariants") {
    const auto m = make_matching(2, 3, 4, {{{2, 3}}, {{0, 1}}});
    CHECK(m.assignment == Association{1, kUnmatched, 0});
    CHECK(m.count(2) == 3);
    CHECK(m.count(1) == 0);
    CHECK(m.batch(0).size() == 1);
    CHECK_NOTHROW(m.validate());
    CHECK_THROWS_AS(make_matching(2, 3, 4, {{{0, 1}}, {{0, 1}}}), std::logic_error);
    CHECK_THROWS_AS(make_matching(1, 3, 4, {{{0, 3}, {1, 2}}}), std::length_error);
    auto broken = m;
    broken.assignment[1] = 0;
    CHECK_THROWS_AS(broken.validate(), std::logic_error);
}

TEST_CASE("blocking pairs are found in corrupted matchings") {
    auto c = test::small_config(2, 2, 4);
    test::use_delta_catalog(c, {5.0});
    Instance inst(c, test::place(c, {{0, 0}, {100, 0}}, {{5, 0}, {95, 0}}));
    const Market& mk = *inst.market;
    const auto good = run_matching(mk);
    CHECK(good.assignment == Association{0, 1});
    CHECK_FALSE(find_blocking_pair(good, mk, 2).has_value());

    const auto swapped = make_matching(2, 2, 4, {{{1, 1}}, {{0, 1}}});
    const auto block = find_blocking_pair(swapped, mk, 2);
    REQUIRE(block.has_value());
    CHECK(block->sbs_gain > 0.0);
    for (const auto& s : block->coalition) {
        const std::vector<Slot>& co = block->coalition;
        std::size_t pos = 0;
        while (co[pos].av != s.av) ++pos;
        CHECK(mk.av_utility(block->sbs, co, pos) > current_av_utility(swapped, mk, s.av));
    }

    const auto nobody = make_matching(2, 2, 4, {});
    CHECK(find_blocking_pair(nobody, mk, 2).has_value());
}

TEST_CASE("blocking search refuses oversized instances") {
    CHECK(blocking_search_size(1, 2, 3, 2) == 9);
    CHECK(blocking_search_size(3, 5, 8, 5) == 3 * (5 * 8 + 10 * 28 + 10 * 56 + 5 * 70 + 1 * 56));
    Instance inst(random_config(10, 40, 555, 1));
    const auto m = make_matching(10, 40, 555, {});
    CHECK_THROWS_AS(find_blocking_pair(m, *inst.market, 5), EnumerationTooLarge);
}

TEST_CASE("trace checks pass on random runs and catch injected faults") {
    int persistence_failures = 0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        Instance inst(random_config(3, 8, 10, seed));
        for (auto rule : {OfferCount::floor, OfferCount::best}) {
            MatchingOptions opt;
            opt.offer_count = rule;
            const auto m = run_matching(*inst.market, opt);
            for (const auto& chk : check_trace(m, rule == OfferCount::floor)) CHECK_MESSAGE(chk.passed, chk.detail);
        }
        MatchingOptions bug;
        bug.repeat_held_offers = false;
        const auto faulty = run_matching(*inst.market, bug);
        persistence_failures += !check_offer_persistence(faulty).passed;
    }
    CHECK(persistence_failures > 0);
}

TEST_CASE("trace checks on hand-written logs") {
    Matching m = make_matching(2, 2, 4, {{{0, 1}}, {}});
    m.rounds_used = 2;
    using S = OfferStatus;
    m.offer_log = {{1, 0, 0, 1, S::accepted, false, -5.0},
                   {1, 1, 0, 1, S::rejected, false, -6.0},
                   {1, 1, 1, 1, S::accepted, false, -6.0},
                   {2, 0, 0, 1, S::accepted, true, -5.0},
                   {2, 1, 1, 1, S::accepted, true, -6.0}};
    for (const auto& chk : check_trace(m, true)) CHECK_MESSAGE(chk.passed, chk.detail);

    auto dropped = m;
    dropped.offer_log.pop_back();
    CHECK_FALSE(check_offer_persistence(dropped).passed);
    CHECK_FALSE(check_at_least_one_offer(dropped).passed);

    auto shrunk = m;
    shrunk.offer_log[3].count = 2;
    CHECK_FALSE(check_monotone_escalation(shrunk).passed);
    auto jump = m;
    jump.offer_log.push_back({2, 1, 0, 3, S::rejected, false, -7.0});
    jump.offer_log[4] = {2, 1, 1, 1, S::accepted, true, -6.0};
    CHECK(check_monotone_escalation(jump, false).passed);
    CHECK_FALSE(check_monotone_escalation(jump, true).passed);
    CHECK_FALSE(check_termination(jump).passed);

    auto wrong = m;
    wrong.offer_log[0].status = S::rejected;
    wrong.offer_log[1].status = S::accepted;
    CHECK_FALSE(check_argmax_acceptance(wrong).passed);

    auto idle = m;
    idle.rounds_used = 3;
    CHECK_FALSE(check_termination(idle).passed);
}

TEST_CASE("offer log serializes as JSON lines") {
    auto inst = two_by_two();
    const auto m = run_matching(*inst.market);
    std::ostringstream os;
    write_offer_log_jsonl(m, os);
    std::istringstream in(os.str());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.at("round").get<int>() == m.offer_log[n].round);
        CHECK(j.at("count").get<int>() == m.offer_log[n].count);
        CHECK((j.at("status") == "accepted" || j.at("status") == "rejected"));
        CHECK(j.contains("av_utility"));
        ++n;
    }
    CHECK(n == m.offer_log.size());
}

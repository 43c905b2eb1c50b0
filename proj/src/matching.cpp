#include "v2i/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace v2i {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Utilities are O(1..1000) ms; anything closer than this is a tie.
constexpr double kStrictEps = 1e-9;

}  // namespace

double sbs_utility(std::span<const CandidateTerms> queue, double alpha, double salary_unit_hz) {
    double total = 0.0;
    double clock = 0.0;
    for (const auto& c : queue) {
        if (!(c.bandwidth_hz > 0.0)) throw PreconditionError("sbs_utility: candidate without bandwidth");
        clock += c.exec_mean_ms;
        total += alpha / (c.bandwidth_hz / salary_unit_hz) - c.transmission_ms - clock;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Market
// ---------------------------------------------------------------------------

Market::Market(const ScenarioConfig& config, const Topology& topo)
    : config_(&config), topo_(&topo), radio_(config, topo), links_(radio_), exec_(config) {
    const int k = topo.n_subchannels;
    best_from_.assign(static_cast<std::size_t>(topo.n_av) * topo.n_sbs * (k + 1), 0);
    for (int m = 0; m < topo.n_av; ++m) {
        for (int n = 0; n < topo.n_sbs; ++n) {
            int* best = best_from_.data() + (static_cast<std::size_t>(m) * topo.n_sbs + n) * (k + 1);
            best[k] = k;
            double best_key = listing_key(n, m, k);
            for (int c = k - 1; c >= 1; --c) {
                const double key = listing_key(n, m, c);
                if (key >= best_key) {
                    best_key = key;
                    best[c] = c;
                } else {
                    best[c] = best[c + 1];
                }
            }
        }
    }
}

int Market::best_count(int m, int n, int floor, int cap) const {
    cap = std::min(cap, budget());
    if (floor < 1 || floor > cap) return 0;
    const int k = budget();
    const int best = best_from_[(static_cast<std::size_t>(m) * n_sbs() + n) * (k + 1) + floor];
    if (best <= cap) return best;
    int arg = floor;
    double best_key = listing_key(n, m, floor);
    for (int c = floor + 1; c <= cap; ++c) {
        const double key = listing_key(n, m, c);
        if (key > best_key) {
            best_key = key;
            arg = c;
        }
    }
    return arg;
}

double Market::salary(int count) const {
    return config_->alpha / (static_cast<double>(count) * config_->subchannel_bw / config_->salary_unit_hz);
}

double Market::listing_key(int n, int m, int count) const { return salary(count) - transmission_ms(m, n, count); }

void Market::listing_order(int n, std::vector<Slot>& slots) const {
    std::vector<std::pair<double, Slot>> keyed;
    keyed.reserve(slots.size());
    for (const auto& s : slots) keyed.emplace_back(listing_key(n, s.av, s.count), s);
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second.av < b.second.av;
    });
    for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = keyed[i].second;
}

double Market::sbs_utility(int n, std::span<const Slot> batch) const {
    double total = 0.0;
    double clock = 0.0;
    for (const auto& s : batch) {
        if (s.count <= 0) throw PreconditionError("sbs_utility: AV " + std::to_string(s.av) + " has no bandwidth");
        const double tt = transmission_ms(s.av, n, s.count);
        if (!std::isfinite(tt)) return -kInf;
        clock += exec_mean_ms(s.av, n);
        total += salary(s.count) - tt - clock;
    }
    return total;
}

double Market::av_utility(int n, std::span<const Slot> batch, std::size_t pos) const {
    const Slot& me = batch[pos];
    if (me.count <= 0) throw PreconditionError("av_utility: AV " + std::to_string(me.av) + " has no bandwidth");
    double clock = 0.0;
    for (std::size_t i = 0; i <= pos; ++i) clock += exec_mean_ms(batch[i].av, n);
    const double tt = transmission_ms(me.av, n, me.count);
    if (!std::isfinite(tt)) return -kInf;
    return v2i::av_utility(tt, clock);
}

MachineQueue Market::machine_queue(int n, std::span<const Slot> batch) const {
    MachineQueue q;
    q.machine = topo_->sbs_machine[n];
    for (const auto& s : batch) q.entries.push_back({s.av, topo_->av_task[s.av]});
    return q;
}

// ---------------------------------------------------------------------------
// Matching container
// ---------------------------------------------------------------------------

std::vector<Slot> Matching::batch(int n) const {
    std::vector<Slot> out;
    for (int m : members[n]) out.push_back({m, bandwidth.count(n, m)});
    return out;
}

int Matching::count(int m) const {
    const int n = assignment[m];
    return n == kUnmatched ? 0 : bandwidth.count(n, m);
}

void Matching::validate() const {
    const int n_sbs = static_cast<int>(members.size());
    const int n_av = static_cast<int>(assignment.size());
    std::vector<int> seen(static_cast<std::size_t>(n_av), kUnmatched);
    for (int n = 0; n < n_sbs; ++n) {
        for (int m : members[n]) {
            if (m < 0 || m >= n_av) throw std::logic_error("matching: member index out of range");
            if (seen[m] != kUnmatched) throw std::logic_error("matching: AV " + std::to_string(m) + " served twice");
            seen[m] = n;
        }
    }
    for (int m = 0; m < n_av; ++m) {
        if (seen[m] != assignment[m]) {
            throw std::logic_error("matching: f(m) = n <=> m in f(n) violated for AV " + std::to_string(m));
        }
    }
    bandwidth.validate();
    for (int n = 0; n < n_sbs; ++n) {
        for (int m = 0; m < n_av; ++m) {
            if (assignment[m] != n && bandwidth.count(n, m) != 0) {
                throw std::logic_error("matching: SBS " + std::to_string(n) + " allocates to unassigned AV " +
                                       std::to_string(m));
            }
        }
    }
}

Matching make_matching(int n_sbs, int n_av, int n_subchannels, const std::vector<std::vector<Slot>>& batches) {
    Matching out;
    out.assignment.assign(static_cast<std::size_t>(n_av), kUnmatched);
    out.members.assign(static_cast<std::size_t>(n_sbs), {});
    out.bandwidth = BandwidthAllocation(n_sbs, n_av, n_subchannels);
    for (int n = 0; n < n_sbs && n < static_cast<int>(batches.size()); ++n) {
        for (const auto& s : batches[n]) {
            if (out.assignment[s.av] != kUnmatched) {
                throw std::logic_error("make_matching: AV " + std::to_string(s.av) + " in two batches");
            }
            out.assignment[s.av] = n;
            out.members[n].push_back(s.av);
            out.bandwidth.set_count(n, s.av, s.count);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// The offer loop
// ---------------------------------------------------------------------------

OfferState::OfferState(int n_sbs, int n_av)
    : counts(static_cast<std::size_t>(n_sbs) * n_av, 1),
      withdrawn(static_cast<std::size_t>(n_sbs) * n_av, 0),
      holder(static_cast<std::size_t>(n_av), kUnmatched),
      held(static_cast<std::size_t>(n_sbs)),
      n_av_(n_av) {}

std::vector<Slot> select_candidates(const Market& market, int n, const OfferState& state, bool keep_held,
                                    SelectionScan scan, OfferCount count_rule) {
    const int budget = market.budget();
    std::vector<Slot> chosen;
    int used = 0;
    double clock = 0.0;  // completion time of the current queue tail
    std::vector<char> taken(static_cast<std::size_t>(market.n_av()), 0);
    if (keep_held) {
        for (int m : state.held[n]) {
            chosen.push_back({m, state.count(n, m)});
            used += state.count(n, m);
            clock += market.exec_mean_ms(m, n);
            taken[m] = 1;
        }
    }

    std::vector<Slot> listed;
    for (int m = 0; m < market.n_av(); ++m) {
        if (taken[m] || state.is_withdrawn(n, m)) continue;
        listed.push_back({m, state.count(n, m)});
    }
    market.listing_order(n, listed);

    for (auto s : listed) {
        if (count_rule == OfferCount::best) {
            const int c = market.best_count(s.av, n, s.count, budget - used);
            if (c > 0) s.count = c;
        }
        if (used + s.count > budget) {
            if (scan == SelectionScan::prefix) break;
            continue;
        }
        // Appending at the tail leaves everyone ahead untouched, so this is the
        // change in the SBS utility.
        const double exec = market.exec_mean_ms(s.av, n);
        const double gain = market.salary(s.count) - market.transmission_ms(s.av, n, s.count) - (clock + exec);
        if (gain > 0.0) {
            chosen.push_back(s);
            used += s.count;
            clock += exec;
        } else if (scan == SelectionScan::prefix) {
            break;
        }
    }
    return chosen;
}

Matching run_matching(const Market& market, const MatchingOptions& options) {
    const int n_sbs = market.n_sbs();
    const int n_av = market.n_av();
    const int budget = market.budget();
    OfferState state(n_sbs, n_av);

    long long cap = options.max_rounds;
    if (cap <= 0) {
        const long long mk = static_cast<long long>(n_av) * budget;
        cap = std::max({10 * mk, static_cast<long long>(n_sbs) * mk + 1, 1LL});
    }

    Matching result;
    struct Pending {
        int sbs;
        int av;
        int count;
        bool repeated;
        double utility;
        std::size_t log_index;
    };

    for (int round = 1;; ++round) {
        if (round > cap) {
            throw ConvergenceError("run_matching: no convergence within " + std::to_string(cap) + " rounds");
        }
        // Steps 2-3. Round 1 has nothing to repeat; every SBS lists every AV at one subchannel.
        const bool keep_held = options.repeat_held_offers && round > 1;
        std::vector<std::vector<Slot>> offers(static_cast<std::size_t>(n_sbs));
        for (int n = 0; n < n_sbs; ++n) {
            offers[n] = select_candidates(market, n, state, keep_held, options.scan, options.offer_count);
        }

        // Step 4.
        std::vector<std::vector<Pending>> received(static_cast<std::size_t>(n_av));
        for (int n = 0; n < n_sbs; ++n) {
            for (std::size_t pos = 0; pos < offers[n].size(); ++pos) {
                const Slot& s = offers[n][pos];
                const double u = market.av_utility(n, offers[n], pos);
                result.offer_log.push_back(
                    {round, n, s.av, s.count, OfferStatus::rejected, state.holder[s.av] == n, u});
                received[s.av].push_back({n, s.av, s.count, state.holder[s.av] == n, u, result.offer_log.size() - 1});
            }
        }
        int rejections = 0;
        std::vector<int> new_holder(static_cast<std::size_t>(n_av), kUnmatched);
        for (int m = 0; m < n_av; ++m) {
            const auto& mine = received[m];
            if (mine.empty()) continue;
            std::size_t best = 0;
            for (std::size_t i = 1; i < mine.size(); ++i) {
                // Offers arrive in increasing SBS order, so strict > keeps the lowest index on ties.
                if (mine[i].utility > mine[best].utility) best = i;
            }
            for (std::size_t i = 0; i < mine.size(); ++i) {
                int& c = state.count(mine[i].sbs, m);
                if (i == best) {
                    result.offer_log[mine[i].log_index].status = OfferStatus::accepted;
                    new_holder[m] = mine[i].sbs;
                    c = mine[i].count;
                    continue;
                }
                ++rejections;
                // Step 5.
                if (mine[i].count + 1 > budget) {
                    state.withdrawn[static_cast<std::size_t>(mine[i].sbs) * n_av + m] = 1;
                } else {
                    c = mine[i].count + 1;
                }
            }
        }

        state.holder = new_holder;
        for (int n = 0; n < n_sbs; ++n) {
            state.held[n].clear();
            for (const auto& s : offers[n]) {
                if (new_holder[s.av] == n) state.held[n].push_back(s.av);
            }
        }
        result.rounds_used = round;
        if (rejections == 0) break;
    }

    std::vector<std::vector<Slot>> batches(static_cast<std::size_t>(n_sbs));
    for (int n = 0; n < n_sbs; ++n) {
        for (int m : state.held[n]) batches[n].push_back({m, state.count(n, m)});
    }
    Matching built = make_matching(n_sbs, n_av, budget, batches);
    built.rounds_used = result.rounds_used;
    built.offer_log = std::move(result.offer_log);
    return built;
}

// ---------------------------------------------------------------------------
// Verifiers
// ---------------------------------------------------------------------------

RationalityReport check_individual_rationality(const Matching& matching, const Market& market) {
    RationalityReport r;
    for (int m = 0; m < static_cast<int>(matching.assignment.size()); ++m) {
        if (matching.assignment[m] != kUnmatched && matching.count(m) <= 0) {
            r.rational = false;
            r.zero_bandwidth_avs.push_back(m);
        }
    }
    r.sbs_utilities.assign(matching.members.size(), 0.0);
    for (int n = 0; n < static_cast<int>(matching.members.size()); ++n) {
        if (matching.members[n].empty()) continue;
        const auto batch = matching.batch(n);
        double u = -kInf;
        const bool any_zero = std::any_of(batch.begin(), batch.end(), [](const Slot& s) { return s.count <= 0; });
        if (!any_zero) u = market.sbs_utility(n, batch);
        r.sbs_utilities[n] = u;
        if (!(u > 0.0 && std::isfinite(u))) {
            r.rational = false;
            r.bad_utility_sbs.push_back(n);
        }
    }
    return r;
}

double current_av_utility(const Matching& matching, const Market& market, int m) {
    const int n = matching.assignment[m];
    if (n == kUnmatched) return -kInf;
    const auto batch = matching.batch(n);
    for (std::size_t pos = 0; pos < batch.size(); ++pos) {
        if (batch[pos].av == m) return batch[pos].count > 0 ? market.av_utility(n, batch, pos) : -kInf;
    }
    return -kInf;
}

namespace {

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

std::uint64_t blocking_search_size(int n_sbs, int n_av, int budget, int max_subset) {
    double total = 0.0;
    for (int s = 1; s <= std::min(max_subset, n_av); ++s) {
        // s-tuples of positive counts with sum <= budget: C(budget, s).
        total += binomial(n_av, s) * binomial(budget, s);
    }
    total *= n_sbs;
    if (total > 1.8e19) return std::numeric_limits<std::uint64_t>::max();
    return static_cast<std::uint64_t>(total);
}

std::optional<BlockingCoalition> find_blocking_pair(const Matching& matching, const Market& market, int max_subset,
                                                    std::uint64_t max_evaluations) {
    const int n_sbs = market.n_sbs();
    const int n_av = market.n_av();
    const int budget = market.budget();
    const std::uint64_t size = blocking_search_size(n_sbs, n_av, budget, max_subset);
    if (size > max_evaluations) {
        throw EnumerationTooLarge("find_blocking_pair: " + std::to_string(size) + " candidates exceed the limit of " +
                                  std::to_string(max_evaluations));
    }

    std::vector<double> av_now(static_cast<std::size_t>(n_av));
    for (int m = 0; m < n_av; ++m) av_now[m] = current_av_utility(matching, market, m);

    for (int n = 0; n < n_sbs; ++n) {
        const double sbs_now = matching.members[n].empty() ? 0.0 : market.sbs_utility(n, matching.batch(n));
        for (int size_k = 1; size_k <= std::min(max_subset, n_av); ++size_k) {
            std::vector<int> subset(static_cast<std::size_t>(size_k));
            for (int i = 0; i < size_k; ++i) subset[i] = i;
            while (true) {
                // Enumerate count vectors with entries >= 1 and total <= budget.
                std::vector<int> counts(static_cast<std::size_t>(size_k), 1);
                int total = size_k;
                if (total <= budget) {
                    while (true) {
                        std::vector<Slot> slots;
                        for (int i = 0; i < size_k; ++i) slots.push_back({subset[i], counts[i]});
                        market.listing_order(n, slots);
                        bool all_gain = true;
                        double clock = 0.0;
                        for (const auto& s : slots) {
                            clock += market.exec_mean_ms(s.av, n);
                            const double tt = market.transmission_ms(s.av, n, s.count);
                            const double u = std::isfinite(tt) ? v2i::av_utility(tt, clock) : -kInf;
                            if (!(u > av_now[s.av] + kStrictEps)) {
                                all_gain = false;
                                break;
                            }
                        }
                        if (all_gain) {
                            const double u_n = market.sbs_utility(n, slots);
                            if (u_n > sbs_now + kStrictEps) return BlockingCoalition{n, slots, u_n - sbs_now};
                        }
                        // Next count vector (odometer with a total cap).
                        int i = size_k - 1;
                        while (i >= 0) {
                            if (total < budget) {
                                ++counts[i];
                                ++total;
                                break;
                            }
                            total -= counts[i] - 1;
                            counts[i] = 1;
                            --i;
                        }
                        if (i < 0) break;
                    }
                }
                // Next subset in lexicographic order.
                int i = size_k - 1;
                while (i >= 0 && subset[i] == n_av - size_k + i) --i;
                if (i < 0) break;
                ++subset[i];
                for (int j = i + 1; j < size_k; ++j) subset[j] = subset[j - 1] + 1;
            }
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Offer-log checks
// ---------------------------------------------------------------------------

namespace {

using RoundIndex = std::map<int, std::vector<const OfferEvent*>>;

RoundIndex by_round(const Matching& matching) {
    RoundIndex idx;
    for (const auto& e : matching.offer_log) idx[e.round].push_back(&e);
    return idx;
}

std::string describe(const OfferEvent& e) {
    std::ostringstream os;
    os << "round " << e.round << " SBS " << e.sbs << " -> AV " << e.av << " (" << e.count << " subchannels, "
       << (e.status == OfferStatus::accepted ? "accepted" : "rejected") << ")";
    return os.str();
}

TraceCheck fail(TraceCheck c, std::string detail) {
    c.passed = false;
    c.detail = std::move(detail);
    return c;
}

}  // namespace

TraceCheck check_offer_persistence(const Matching& matching) {
    TraceCheck c{"offer_persistence", true, {}};
    const auto rounds = by_round(matching);
    for (const auto& [round, events] : rounds) {
        if (round >= matching.rounds_used) continue;
        std::set<std::tuple<int, int, int>> next;
        if (auto it = rounds.find(round + 1); it != rounds.end()) {
            for (const auto* e : it->second) next.insert({e->sbs, e->av, e->count});
        }
        for (const auto* e : events) {
            if (e->status == OfferStatus::accepted && !next.count({e->sbs, e->av, e->count})) {
                return fail(c, describe(*e) + " was not repeated in round " + std::to_string(round + 1));
            }
        }
    }
    return c;
}

TraceCheck check_monotone_escalation(const Matching& matching, bool exact_step) {
    TraceCheck c{"monotone_escalation", true, {}};
    std::map<std::pair<int, int>, const OfferEvent*> last;
    for (const auto& e : matching.offer_log) {
        if (e.count < 1) return fail(c, describe(e) + " offers no bandwidth");
        auto key = std::make_pair(e.sbs, e.av);
        if (auto it = last.find(key); it != last.end()) {
            const OfferEvent& prev = *it->second;
            const bool rejected = prev.status == OfferStatus::rejected;
            const int least = prev.count + (rejected ? 1 : 0);
            const bool ok = rejected && !exact_step ? e.count >= least : e.count == least;
            if (!ok) {
                return fail(c, describe(e) + " after " + describe(prev) + ", expected " +
                                   (rejected && !exact_step ? "at least " : "") + std::to_string(least));
            }
        } else if (exact_step && e.count != 1) {
            return fail(c, describe(e) + " is the first offer but not at one subchannel");
        }
        last[key] = &e;
    }
    return c;
}

TraceCheck check_at_least_one_offer(const Matching& matching) {
    TraceCheck c{"at_least_one_offer", true, {}};
    const auto rounds = by_round(matching);
    auto first = rounds.find(1);
    if (first == rounds.end()) return c;
    std::set<int> reached;
    for (const auto* e : first->second) reached.insert(e->av);
    for (int round = 1; round <= matching.rounds_used; ++round) {
        std::set<int> offered;
        if (auto it = rounds.find(round); it != rounds.end()) {
            for (const auto* e : it->second) offered.insert(e->av);
        }
        for (int m : reached) {
            if (!offered.count(m)) {
                return fail(c, "AV " + std::to_string(m) + " has no offer in round " + std::to_string(round));
            }
        }
    }
    return c;
}

TraceCheck check_argmax_acceptance(const Matching& matching) {
    TraceCheck c{"argmax_acceptance", true, {}};
    std::map<std::pair<int, int>, std::vector<const OfferEvent*>> per_av;
    for (const auto& e : matching.offer_log) per_av[{e.round, e.av}].push_back(&e);
    for (const auto& [key, events] : per_av) {
        const OfferEvent* acc = nullptr;
        for (const auto* e : events) {
            if (e->status == OfferStatus::accepted) {
                if (acc) return fail(c, "AV " + std::to_string(key.second) + " accepted twice in round " +
                                            std::to_string(key.first));
                acc = e;
            }
        }
        if (!acc) return fail(c, "AV " + std::to_string(key.second) + " rejected every offer in round " +
                                     std::to_string(key.first));
        for (const auto* e : events) {
            if (e == acc) continue;
            const bool worse = e->av_utility < acc->av_utility ||
                               (e->av_utility == acc->av_utility && e->sbs > acc->sbs);
            if (!worse) return fail(c, describe(*e) + " beats the accepted " + describe(*acc));
        }
    }
    return c;
}

TraceCheck check_termination(const Matching& matching) {
    TraceCheck c{"termination", true, {}};
    std::map<int, int> rejections;
    for (int r = 1; r <= matching.rounds_used; ++r) rejections[r] = 0;
    for (const auto& e : matching.offer_log) {
        if (e.round < 1 || e.round > matching.rounds_used) return fail(c, describe(e) + " outside the round range");
        if (e.status == OfferStatus::rejected) ++rejections[e.round];
    }
    for (const auto& [round, count] : rejections) {
        if (round == matching.rounds_used && count != 0) return fail(c, "final round still has rejections");
        if (round < matching.rounds_used && count == 0) {
            return fail(c, "round " + std::to_string(round) + " had no rejections but the loop continued");
        }
    }
    return c;
}

std::vector<TraceCheck> check_trace(const Matching& matching, bool exact_step) {
    return {check_offer_persistence(matching), check_monotone_escalation(matching, exact_step),
            check_at_least_one_offer(matching), check_argmax_acceptance(matching), check_termination(matching)};
}

void write_offer_log_jsonl(const Matching& matching, std::ostream& out) {
    for (const auto& e : matching.offer_log) {
        nlohmann::json j{{"round", e.round},
                         {"sbs", e.sbs},
                         {"av", e.av},
                         {"count", e.count},
                         {"status", e.status == OfferStatus::accepted ? "accepted" : "rejected"},
                         {"repeated", e.repeated},
                         {"av_utility", e.av_utility}};
        out << j.dump() << '\n';
    }
}

}  // namespace v2i

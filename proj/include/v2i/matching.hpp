#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "v2i/compute.hpp"
#include "v2i/config.hpp"
#include "v2i/radio.hpp"
#include "v2i/scenario.hpp"

namespace v2i {

// ---------------------------------------------------------------------------
// Utilities
// ---------------------------------------------------------------------------

/// Per-AV inputs to the SBS utility, for one AV in a batch.
struct CandidateTerms {
    double bandwidth_hz = 0.0;         // w_mn
    double transmission_ms = 0.0;      // (tau_d + tau_u) * T
    double exec_mean_ms = 0.0;         // mean execution time on this SBS's machine
};

class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// sum_m [alpha / (w_mn / unit) - tau_t] - tau_c, where tau_c is the sum of
/// mean completion times of the batch served in the given order. Throws
/// PreconditionError if a candidate has no bandwidth.
double sbs_utility(std::span<const CandidateTerms> queue, double alpha, double salary_unit_hz);

/// Negative expected end-to-end latency of an offer. -infinity when the link
/// cannot carry the packet.
inline double av_utility(double transmission_ms, double expected_completion_ms) {
    return -(transmission_ms + expected_completion_ms);
}

/// One AV in a (real or hypothetical) batch at an SBS.
struct Slot {
    int av = 0;
    int count = 0;  // subchannels
};

/// Everything the association game needs about one instance: link costs under
/// worst-case interference and mean execution times. Holds references to the
/// config and topology, which must outlive it.
class Market {
public:
    Market(const ScenarioConfig& config, const Topology& topo);

    const ScenarioConfig& config() const { return *config_; }
    const Topology& topology() const { return *topo_; }
    const RadioModel& radio() const { return radio_; }
    const LinkTable& links() const { return links_; }
    const ExecutionModel& exec() const { return exec_; }

    int n_sbs() const { return topo_->n_sbs; }
    int n_av() const { return topo_->n_av; }
    int budget() const { return topo_->n_subchannels; }

    /// alpha / (count * w / unit)
    double salary(int count) const;
    double transmission_ms(int m, int n, int count) const { return links_.transmission_ms(m, n, count); }
    double exec_mean_ms(int m, int n) const { return exec_.mean_ms(topo_->av_task[m], topo_->sbs_machine[n]); }
    bool servable(int m, int n) const { return links_.transmission_ttis(m, n, 1) != LinkTable::kUnservable; }

    /// Ranking key U_n(m) = salary - tau_t used to list AVs at SBS n.
    double listing_key(int n, int m, int count) const;
    /// Sorts slots by listing key (descending), lowest AV index first on ties.
    void listing_order(int n, std::vector<Slot>& slots) const;

    /// SBS utility of serving `batch` in the given order.
    double sbs_utility(int n, std::span<const Slot> batch) const;
    /// Utility AV batch[pos].av gets from SBS n when served in this batch.
    double av_utility(int n, std::span<const Slot> batch, std::size_t pos) const;

    /// Service-order queue for the compute model.
    MachineQueue machine_queue(int n, std::span<const Slot> batch) const;

    /// Count in [floor, cap] with the largest listing key (smallest on ties); 0 if floor > cap.
    int best_count(int m, int n, int floor, int cap) const;

private:
    const ScenarioConfig* config_;
    const Topology* topo_;
    RadioModel radio_;
    LinkTable links_;
    ExecutionModel exec_;
    std::vector<int> best_from_;  // [m][n][floor], argmax over floor..K
};

// ---------------------------------------------------------------------------
// Matching
// ---------------------------------------------------------------------------

enum class OfferStatus { accepted, rejected };

struct OfferEvent {
    int round = 0;
    int sbs = 0;
    int av = 0;
    int count = 0;
    OfferStatus status = OfferStatus::rejected;
    /// Step-3 repetition of an offer the AV held after the previous round.
    bool repeated = false;
    double av_utility = 0.0;
};

/// Many-to-one AV-SBS association with its bandwidth. members[n] lists f(n) in
/// service order; assignment[m] is f(m) or kUnmatched.
struct Matching {
    Association assignment;
    std::vector<std::vector<int>> members;
    BandwidthAllocation bandwidth;
    int rounds_used = 0;
    std::vector<OfferEvent> offer_log;

    std::vector<Slot> batch(int n) const;
    int count(int m) const;
    /// Checks f(m) = n <=> m in f(n) and the allocation budgets; throws std::logic_error.
    void validate() const;
};

/// Builds a Matching from per-SBS service-order batches.
Matching make_matching(int n_sbs, int n_av, int n_subchannels, const std::vector<std::vector<Slot>>& batches);

/// Subchannels an SBS puts into an offer.
enum class OfferCount {
    /// Exactly the current count w_mn(j).
    floor,
    /// The count >= w_mn(j) that maximizes the SBS's per-AV term alpha/w - tau_t.
    best,
};

/// How Step 2 walks the sorted AV list once an AV fails to improve the SBS utility.
enum class SelectionScan {
    /// Stop at the first AV that does not fit.
    prefix,
    /// Skip it and keep going down the list.
    full,
};

struct MatchingOptions {
    SelectionScan scan = SelectionScan::full;
    OfferCount offer_count = OfferCount::best;
    /// Step 3: repeat every offer that was not rejected. Disabling it is a
    /// deliberate fault used to exercise the trace checks.
    bool repeat_held_offers = true;
    /// 0 selects the default cap (10 * M * K rounds, at least N * M * K + 1).
    int max_rounds = 0;
};

/// Raised when the round cap is hit; convergence is guaranteed, so this signals a bug.
class ConvergenceError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Per-SBS negotiation state between rounds.
struct OfferState {
    std::vector<int> counts;       // [n][m] w_mn(j): the least SBS n may offer AV m
    std::vector<char> withdrawn;   // [n][m]
    std::vector<int> holder;       // [m] SBS whose offer AV m holds, or kUnmatched
    std::vector<std::vector<int>> held;  // [n] AVs holding n's offer, in service order

    OfferState(int n_sbs, int n_av);
    int count(int n, int m) const { return counts[static_cast<std::size_t>(n) * n_av_ + m]; }
    int& count(int n, int m) { return counts[static_cast<std::size_t>(n) * n_av_ + m]; }
    bool is_withdrawn(int n, int m) const { return withdrawn[static_cast<std::size_t>(n) * n_av_ + m] != 0; }

private:
    int n_av_ = 0;
};

/// Step 2 for SBS n: keep the held AVs in front (when `keep_held`), then walk
/// the remaining AVs in listing order and append each one that raises the SBS
/// utility while its offer count fits in the remaining subchannel budget.
std::vector<Slot> select_candidates(const Market& market, int n, const OfferState& state, bool keep_held,
                                    SelectionScan scan, OfferCount count_rule = OfferCount::floor);

/// Runs the offer / accept-or-reject / escalate loop to convergence.
Matching run_matching(const Market& market, const MatchingOptions& options = {});

// ---------------------------------------------------------------------------
// Verifiers
// ---------------------------------------------------------------------------

struct RationalityReport {
    bool rational = true;
    std::vector<int> zero_bandwidth_avs;
    std::vector<int> bad_utility_sbs;
    std::vector<double> sbs_utilities;
};

RationalityReport check_individual_rationality(const Matching& matching, const Market& market);
inline bool is_individually_rational(const Matching& matching, const Market& market) {
    return check_individual_rationality(matching, market).rational;
}

struct BlockingCoalition {
    int sbs = 0;
    std::vector<Slot> coalition;  // listing order, with the proposed counts
    double sbs_gain = 0.0;
};

class EnumerationTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Current utility of AV m under the matching (-infinity if unmatched).
double current_av_utility(const Matching& matching, const Market& market, int m);

/// Exhaustive search for an SBS n, AV subset (size <= max_subset) and count
/// vector (each 1..K, total <= K) such that every AV in the subset strictly
/// prefers it and so does n. The subset is served in listing order. Throws
/// EnumerationTooLarge if more than `max_evaluations` candidates would be checked.
std::optional<BlockingCoalition> find_blocking_pair(const Matching& matching, const Market& market, int max_subset,
                                                    std::uint64_t max_evaluations = 50'000'000);

/// Number of (SBS, subset, count vector) candidates find_blocking_pair would examine.
std::uint64_t blocking_search_size(int n_sbs, int n_av, int budget, int max_subset);

// ---------------------------------------------------------------------------
// Offer-log checks
// ---------------------------------------------------------------------------

struct TraceCheck {
    std::string name;
    bool passed = true;
    std::string detail;  // first violation, if any
};

/// Every offer not rejected in round j is made again, at the same count, in round j+1.
TraceCheck check_offer_persistence(const Matching& matching);
/// Counts per (SBS, AV) never drop, a repeated offer keeps its count and a
/// rejection raises the next offer by at least one (exactly one when `exact_step`).
TraceCheck check_monotone_escalation(const Matching& matching, bool exact_step = false);
/// Every AV that received an offer in round 1 has at least one offer in every round.
TraceCheck check_at_least_one_offer(const Matching& matching);
/// Each AV accepts its best offer of the round (lowest SBS on ties) and rejects the rest.
TraceCheck check_argmax_acceptance(const Matching& matching);
/// The last round has no rejections and all earlier rounds have some.
TraceCheck check_termination(const Matching& matching);

std::vector<TraceCheck> check_trace(const Matching& matching, bool exact_step = false);

/// One JSON object per offer event.
void write_offer_log_jsonl(const Matching& matching, std::ostream& out);

}  // namespace v2i

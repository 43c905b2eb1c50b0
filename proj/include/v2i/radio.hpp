#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "v2i/config.hpp"
#include "v2i/scenario.hpp"

namespace v2i {

/// AV -> serving SBS, or kUnmatched.
using Association = std::vector<int>;
inline constexpr int kUnmatched = -1;

/// Per-SBS subchannel ownership. Within one SBS a subchannel has at most one
/// owner and at most K subchannels are in use, by construction.
class BandwidthAllocation {
public:
    BandwidthAllocation() = default;
    BandwidthAllocation(int n_sbs, int n_av, int n_subchannels);

    int n_sbs() const { return n_sbs_; }
    int n_av() const { return n_av_; }
    int n_subchannels() const { return n_subchannels_; }

    /// Number of subchannels SBS n gives AV m (w_mn / w).
    int count(int n, int m) const { return counts_[idx(n, m)]; }
    /// AV owning subchannel k at SBS n, or -1.
    int owner(int n, int k) const { return owner_[static_cast<std::size_t>(n) * n_subchannels_ + k]; }
    bool active(int n, int k) const { return owner(n, k) >= 0; }
    int used(int n) const { return used_[n]; }
    std::vector<int> subchannels_of(int n, int m) const;

    /// Grows by taking the lowest-indexed free subchannels, shrinks by releasing
    /// the highest-indexed owned ones. Throws std::length_error past the budget.
    void set_count(int n, int m, int count);

    /// Recomputes counts from ownership and checks every budget; throws std::logic_error.
    void validate() const;

private:
    std::size_t idx(int n, int m) const { return static_cast<std::size_t>(n) * n_av_ + m; }

    int n_sbs_ = 0;
    int n_av_ = 0;
    int n_subchannels_ = 0;
    std::vector<int> owner_;   // [n][k]
    std::vector<int> counts_;  // [n][m]
    std::vector<int> used_;    // [n]
};

/// Which transmitters count as interference.
enum class Interference {
    /// Downlink: SBSs that use the subchannel. Uplink: AVs served by another SBS.
    activity,
    /// Downlink: every other SBS on every subchannel. Uplink: every other AV.
    worst_case,
};

/// A link whose rate is zero (or too small to represent a finite TTI count).
class UnservableLink : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bits carried in one TTI at `rate_bps`.
inline double bits_per_tti(double rate_bps, double tti_ms) { return rate_bps * (tti_ms * 1e-3); }

/// ceil(bits / (rate * T)), with the result satisfying
/// ttis * b >= bits > (ttis - 1) * b for b = bits_per_tti(rate, tti) in floating point.
std::int64_t ttis_for(double bits, double rate_bps, double tti_ms);

struct LinkBudget {
    std::vector<int> subchannels;
    std::vector<double> dl_sinr;             // per allocated subchannel
    std::vector<double> interference_dl_mw;  // per allocated subchannel
    double ul_sinr = 0.0;
    double interference_ul_mw = 0.0;
    double dl_rate_bps = 0.0;
    double ul_rate_bps = 0.0;
};

/// Link-level quantities for one instance. Holds references: the config and
/// topology must outlive it.
class RadioModel {
public:
    RadioModel(const ScenarioConfig& config, const Topology& topo);

    const ScenarioConfig& config() const { return *config_; }
    const Topology& topology() const { return *topo_; }

    /// L_mn as a linear gain.
    double path_gain(int m, int n) const { return path_gain_[static_cast<std::size_t>(m) * topo_->n_sbs + n]; }
    /// Power SBS n delivers to AV m on subchannel k (G_m G_n P_n h_mnk L_mn).
    double dl_rx_power_mw(int m, int n, int k) const;
    /// Power AV m delivers to SBS n on the uplink subchannel.
    double ul_rx_power_mw(int m, int n) const;
    /// Wideband received power: path loss times the mean fading over all subchannels.
    double rssi_mw(int m, int n) const;

    /// SINR of SBS n -> AV m on subchannel k. `interferers[n']` marks the SBSs that
    /// transmit on k; entry n itself is ignored.
    double downlink_sinr(int m, int n, int k, std::span<const char> interferers) const;
    double downlink_sinr(int m, int n, int k, const BandwidthAllocation& alloc, Interference mode) const;

    /// SINR of AV m -> SBS n on the shared uplink subchannel. `interferers[m']`
    /// marks transmitting AVs; entry m itself is ignored.
    double uplink_sinr(int m, int n, std::span<const char> interferers) const;
    double uplink_sinr(int m, int n, const Association& assoc, Interference mode) const;

    /// w * sum over subchannels SBS n gives AV m of log2(1 + SINR).
    double downlink_rate(int m, int n, const BandwidthAllocation& alloc, Interference mode) const;
    double uplink_rate(int m, int n, const Association& assoc, Interference mode) const;

    /// Throw UnservableLink on a zero rate.
    std::int64_t downlink_ttis(int m, int n, const BandwidthAllocation& alloc, Interference mode) const;
    std::int64_t uplink_ttis(int m, int n, const Association& assoc, Interference mode) const;
    /// (downlink + uplink TTIs) * T.
    double transmission_latency_ms(int m, int n, const BandwidthAllocation& alloc, const Association& assoc,
                                   Interference mode) const;

    LinkBudget link_budget(int m, int n, const BandwidthAllocation& alloc, const Association& assoc,
                           Interference mode) const;

    double dl_packet_bits(int m) const;

private:
    double dl_interference_mw(int m, int n, int k, std::span<const char> interferers) const;

    const ScenarioConfig* config_;
    const Topology* topo_;
    double noise_mw_;
    std::vector<double> path_gain_;  // [m][n]
};

/// Transmission cost of every (AV, SBS, subchannel count) under worst-case
/// interference, as seen during association. A count c stands for the nominal
/// subchannels 0..c-1.
class LinkTable {
public:
    static constexpr std::int64_t kUnservable = std::numeric_limits<std::int64_t>::max();

    explicit LinkTable(const RadioModel& radio);

    int n_sbs() const { return n_sbs_; }
    int n_av() const { return n_av_; }
    int n_subchannels() const { return n_subchannels_; }
    double tti_ms() const { return tti_ms_; }

    /// Downlink TTIs with `count` subchannels (1..K), or kUnservable.
    std::int64_t dl_ttis(int m, int n, int count) const;
    std::int64_t ul_ttis(int m, int n) const { return ul_ttis_[static_cast<std::size_t>(m) * n_sbs_ + n]; }
    /// (dl + ul) TTIs, or kUnservable.
    std::int64_t transmission_ttis(int m, int n, int count) const;
    /// Transmission latency in ms; +infinity when unservable.
    double transmission_ms(int m, int n, int count) const;
    double dl_rate_bps(int m, int n, int count) const;
    /// Worst-case SINR on subchannel k.
    double dl_sinr(int m, int n, int k) const { return sinr_[cell(m, n) * n_subchannels_ + k]; }

private:
    std::size_t cell(int m, int n) const { return static_cast<std::size_t>(m) * n_sbs_ + n; }

    int n_sbs_ = 0;
    int n_av_ = 0;
    int n_subchannels_ = 0;
    double tti_ms_ = 0.0;
    double subchannel_bw_ = 0.0;
    std::vector<double> dl_bits_;           // [m]
    std::vector<double> sinr_;              // [m][n][k]
    std::vector<double> prefix_se_;         // [m][n][k+1], prefix sums of log2(1 + sinr)
    std::vector<std::int64_t> ul_ttis_;     // [m][n]
};

}  // namespace v2i

#include "v2i/radio.hpp"

#include <cmath>
#include <string>

namespace v2i {

BandwidthAllocation::BandwidthAllocation(int n_sbs, int n_av, int n_subchannels)
    : n_sbs_(n_sbs),
      n_av_(n_av),
      n_subchannels_(n_subchannels),
      owner_(static_cast<std::size_t>(n_sbs) * n_subchannels, -1),
      counts_(static_cast<std::size_t>(n_sbs) * n_av, 0),
      used_(n_sbs, 0) {}

std::vector<int> BandwidthAllocation::subchannels_of(int n, int m) const {
    std::vector<int> out;
    for (int k = 0; k < n_subchannels_; ++k) {
        if (owner(n, k) == m) out.push_back(k);
    }
    return out;
}

void BandwidthAllocation::set_count(int n, int m, int count) {
    if (count < 0) throw std::invalid_argument("set_count: negative subchannel count");
    const int current = counts_[idx(n, m)];
    if (count == current) return;
    int* row = owner_.data() + static_cast<std::size_t>(n) * n_subchannels_;
    if (count > current) {
        const int extra = count - current;
        if (used_[n] + extra > n_subchannels_) {
            throw std::length_error("set_count: SBS " + std::to_string(n) + " would use " +
                                    std::to_string(used_[n] + extra) + " of " + std::to_string(n_subchannels_) +
                                    " subchannels");
        }
        int need = extra;
        for (int k = 0; k < n_subchannels_ && need > 0; ++k) {
            if (row[k] < 0) {
                row[k] = m;
                --need;
            }
        }
        used_[n] += extra;
    } else {
        int drop = current - count;
        for (int k = n_subchannels_ - 1; k >= 0 && drop > 0; --k) {
            if (row[k] == m) {
                row[k] = -1;
                --drop;
            }
        }
        used_[n] -= current - count;
    }
    counts_[idx(n, m)] = count;
}

void BandwidthAllocation::validate() const {
    for (int n = 0; n < n_sbs_; ++n) {
        std::vector<int> seen(static_cast<std::size_t>(n_av_), 0);
        int used = 0;
        for (int k = 0; k < n_subchannels_; ++k) {
            const int m = owner(n, k);
            if (m < -1 || m >= n_av_) throw std::logic_error("allocation: invalid owner index");
            if (m >= 0) {
                ++seen[static_cast<std::size_t>(m)];
                ++used;
            }
        }
        if (used > n_subchannels_ || used != used_[n]) throw std::logic_error("allocation: subchannel budget mismatch");
        for (int m = 0; m < n_av_; ++m) {
            if (seen[static_cast<std::size_t>(m)] != count(n, m)) throw std::logic_error("allocation: count mismatch");
        }
    }
}

std::int64_t ttis_for(double bits, double rate_bps, double tti_ms) {
    const double per_tti = bits_per_tti(rate_bps, tti_ms);
    if (!(per_tti > 0.0) || !std::isfinite(per_tti)) throw UnservableLink("zero downlink/uplink rate");
    const double ratio = bits / per_tti;
    if (!(ratio < 9.0e15)) throw UnservableLink("rate too small for a finite TTI count");
    auto ttis = static_cast<std::int64_t>(std::ceil(ratio));
    if (ttis < 1) ttis = 1;
    while (static_cast<double>(ttis) * per_tti < bits) ++ttis;
    while (ttis > 1 && static_cast<double>(ttis - 1) * per_tti >= bits) --ttis;
    return ttis;
}

RadioModel::RadioModel(const ScenarioConfig& config, const Topology& topo)
    : config_(&config), topo_(&topo), noise_mw_(config.noise_power_mw()) {
    path_gain_.resize(static_cast<std::size_t>(topo.n_av) * topo.n_sbs);
    for (int m = 0; m < topo.n_av; ++m) {
        for (int n = 0; n < topo.n_sbs; ++n) {
            path_gain_[static_cast<std::size_t>(m) * topo.n_sbs + n] =
                path_loss(distance(topo.av_positions[m], topo.sbs_positions[n]), config);
        }
    }
}

double RadioModel::dl_rx_power_mw(int m, int n, int k) const {
    const auto& c = *config_;
    return c.antenna_gain_av * c.antenna_gain_sbs * c.sbs_tx_power_mw * topo_->dl_gain(m, n, k) * path_gain(m, n);
}

double RadioModel::ul_rx_power_mw(int m, int n) const {
    const auto& c = *config_;
    return c.antenna_gain_av * c.antenna_gain_sbs * c.av_tx_power_mw * topo_->ul_gain(m, n) * path_gain(m, n);
}

double RadioModel::rssi_mw(int m, int n) const {
    const auto& c = *config_;
    double h = 0.0;
    for (int k = 0; k < topo_->n_subchannels; ++k) h += topo_->dl_gain(m, n, k);
    h /= topo_->n_subchannels;
    return c.antenna_gain_av * c.antenna_gain_sbs * c.sbs_tx_power_mw * h * path_gain(m, n);
}

double RadioModel::dl_interference_mw(int m, int n, int k, std::span<const char> interferers) const {
    double acc = 0.0;
    for (int other = 0; other < topo_->n_sbs; ++other) {
        if (other != n && interferers[other]) acc += dl_rx_power_mw(m, other, k);
    }
    return acc;
}

double RadioModel::downlink_sinr(int m, int n, int k, std::span<const char> interferers) const {
    return dl_rx_power_mw(m, n, k) / (dl_interference_mw(m, n, k, interferers) + noise_mw_);
}

double RadioModel::downlink_sinr(int m, int n, int k, const BandwidthAllocation& alloc, Interference mode) const {
    std::vector<char> mask(static_cast<std::size_t>(topo_->n_sbs), 1);
    if (mode == Interference::activity) {
        for (int other = 0; other < topo_->n_sbs; ++other) mask[other] = alloc.active(other, k) ? 1 : 0;
    }
    return downlink_sinr(m, n, k, mask);
}

double RadioModel::uplink_sinr(int m, int n, std::span<const char> interferers) const {
    double acc = 0.0;
    for (int other = 0; other < topo_->n_av; ++other) {
        if (other != m && interferers[other]) acc += ul_rx_power_mw(other, n);
    }
    return ul_rx_power_mw(m, n) / (acc + noise_mw_);
}

namespace {

std::vector<char> uplink_mask(const Association& assoc, int n, int n_av, Interference mode) {
    std::vector<char> mask(static_cast<std::size_t>(n_av), 1);
    if (mode == Interference::activity) {
        for (int other = 0; other < n_av; ++other) {
            const int s = assoc[other];
            mask[other] = (s != kUnmatched && s != n) ? 1 : 0;
        }
    }
    return mask;
}

}  // namespace

double RadioModel::uplink_sinr(int m, int n, const Association& assoc, Interference mode) const {
    return uplink_sinr(m, n, uplink_mask(assoc, n, topo_->n_av, mode));
}

double RadioModel::downlink_rate(int m, int n, const BandwidthAllocation& alloc, Interference mode) const {
    double se = 0.0;
    for (int k : alloc.subchannels_of(n, m)) se += std::log2(1.0 + downlink_sinr(m, n, k, alloc, mode));
    return config_->subchannel_bw * se;
}

double RadioModel::uplink_rate(int m, int n, const Association& assoc, Interference mode) const {
    return config_->subchannel_bw * std::log2(1.0 + uplink_sinr(m, n, assoc, mode));
}

double RadioModel::dl_packet_bits(int m) const { return config_->task_catalog[topo_->av_task[m]].dl_packet_bits; }

std::int64_t RadioModel::downlink_ttis(int m, int n, const BandwidthAllocation& alloc, Interference mode) const {
    return ttis_for(dl_packet_bits(m), downlink_rate(m, n, alloc, mode), config_->tti_ms);
}

std::int64_t RadioModel::uplink_ttis(int m, int n, const Association& assoc, Interference mode) const {
    return ttis_for(config_->ul_packet_bits, uplink_rate(m, n, assoc, mode), config_->tti_ms);
}

double RadioModel::transmission_latency_ms(int m, int n, const BandwidthAllocation& alloc, const Association& assoc,
                                           Interference mode) const {
    const std::int64_t total = downlink_ttis(m, n, alloc, mode) + uplink_ttis(m, n, assoc, mode);
    return static_cast<double>(total) * config_->tti_ms;
}

LinkBudget RadioModel::link_budget(int m, int n, const BandwidthAllocation& alloc, const Association& assoc,
                                   Interference mode) const {
    LinkBudget b;
    b.subchannels = alloc.subchannels_of(n, m);
    std::vector<char> mask(static_cast<std::size_t>(topo_->n_sbs), 1);
    for (int k : b.subchannels) {
        if (mode == Interference::activity) {
            for (int other = 0; other < topo_->n_sbs; ++other) mask[other] = alloc.active(other, k) ? 1 : 0;
        }
        const double interference = dl_interference_mw(m, n, k, mask);
        const double sinr = dl_rx_power_mw(m, n, k) / (interference + noise_mw_);
        b.interference_dl_mw.push_back(interference);
        b.dl_sinr.push_back(sinr);
        b.dl_rate_bps += config_->subchannel_bw * std::log2(1.0 + sinr);
    }
    const auto ul_mask = uplink_mask(assoc, n, topo_->n_av, mode);
    for (int other = 0; other < topo_->n_av; ++other) {
        if (other != m && ul_mask[other]) b.interference_ul_mw += ul_rx_power_mw(other, n);
    }
    b.ul_sinr = ul_rx_power_mw(m, n) / (b.interference_ul_mw + noise_mw_);
    b.ul_rate_bps = config_->subchannel_bw * std::log2(1.0 + b.ul_sinr);
    return b;
}

LinkTable::LinkTable(const RadioModel& radio)
    : n_sbs_(radio.topology().n_sbs),
      n_av_(radio.topology().n_av),
      n_subchannels_(radio.topology().n_subchannels),
      tti_ms_(radio.config().tti_ms),
      subchannel_bw_(radio.config().subchannel_bw) {
    const auto& cfg = radio.config();
    const std::size_t cells = static_cast<std::size_t>(n_av_) * n_sbs_;
    sinr_.resize(cells * n_subchannels_);
    prefix_se_.resize(cells * (n_subchannels_ + 1));
    ul_ttis_.resize(cells);
    dl_bits_.resize(static_cast<std::size_t>(n_av_));
    const double noise = cfg.noise_power_mw();

    std::vector<double> rx(static_cast<std::size_t>(n_sbs_));
    for (int m = 0; m < n_av_; ++m) {
        dl_bits_[m] = radio.dl_packet_bits(m);
        for (int k = 0; k < n_subchannels_; ++k) {
            for (int n = 0; n < n_sbs_; ++n) rx[n] = radio.dl_rx_power_mw(m, n, k);
            for (int n = 0; n < n_sbs_; ++n) {
                double interference = 0.0;
                for (int other = 0; other < n_sbs_; ++other) {
                    if (other != n) interference += rx[other];
                }
                sinr_[cell(m, n) * n_subchannels_ + k] = rx[n] / (interference + noise);
            }
        }
        for (int n = 0; n < n_sbs_; ++n) {
            double* prefix = prefix_se_.data() + cell(m, n) * (n_subchannels_ + 1);
            const double* sinr = sinr_.data() + cell(m, n) * n_subchannels_;
            prefix[0] = 0.0;
            for (int k = 0; k < n_subchannels_; ++k) prefix[k + 1] = prefix[k] + std::log2(1.0 + sinr[k]);
        }
    }

    std::vector<char> all_avs(static_cast<std::size_t>(n_av_), 1);
    for (int m = 0; m < n_av_; ++m) {
        for (int n = 0; n < n_sbs_; ++n) {
            const double rate = cfg.subchannel_bw * std::log2(1.0 + radio.uplink_sinr(m, n, all_avs));
            try {
                ul_ttis_[cell(m, n)] = ttis_for(cfg.ul_packet_bits, rate, tti_ms_);
            } catch (const UnservableLink&) {
                ul_ttis_[cell(m, n)] = kUnservable;
            }
        }
    }
}

double LinkTable::dl_rate_bps(int m, int n, int count) const {
    if (count <= 0) return 0.0;
    if (count > n_subchannels_) count = n_subchannels_;
    return subchannel_bw_ * prefix_se_[cell(m, n) * (n_subchannels_ + 1) + count];
}

std::int64_t LinkTable::dl_ttis(int m, int n, int count) const {
    try {
        return ttis_for(dl_bits_[m], dl_rate_bps(m, n, count), tti_ms_);
    } catch (const UnservableLink&) {
        return kUnservable;
    }
}

std::int64_t LinkTable::transmission_ttis(int m, int n, int count) const {
    const std::int64_t dl = dl_ttis(m, n, count);
    const std::int64_t ul = ul_ttis(m, n);
    if (dl == kUnservable || ul == kUnservable) return kUnservable;
    return dl + ul;
}

double LinkTable::transmission_ms(int m, int n, int count) const {
    const std::int64_t t = transmission_ttis(m, n, count);
    if (t == kUnservable) return std::numeric_limits<double>::infinity();
    return static_cast<double>(t) * tti_ms_;
}

}  // namespace v2i

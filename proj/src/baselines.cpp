#include "v2i/baselines.hpp"

#include <algorithm>

namespace v2i {

BandwidthAllocation equal_share_bandwidth(const Association& assignment, int n_sbs, int n_subchannels) {
    const int n_av = static_cast<int>(assignment.size());
    BandwidthAllocation alloc(n_sbs, n_av, n_subchannels);
    std::vector<std::vector<int>> members(static_cast<std::size_t>(n_sbs));
    for (int m = 0; m < n_av; ++m) {
        if (assignment[m] != kUnmatched) members.at(assignment[m]).push_back(m);
    }
    for (int n = 0; n < n_sbs; ++n) {
        const int size = static_cast<int>(members[n].size());
        if (size == 0) continue;
        const int base = n_subchannels / size;
        const int extra = n_subchannels % size;
        for (int i = 0; i < size; ++i) {
            const int c = size > n_subchannels ? (i < n_subchannels ? 1 : 0) : base + (i < extra ? 1 : 0);
            alloc.set_count(n, members[n][i], c);
        }
    }
    return alloc;
}

Matching equal_share_matching(const Association& assignment, int n_sbs, int n_subchannels) {
    Matching out;
    out.assignment = assignment;
    out.members.assign(static_cast<std::size_t>(n_sbs), {});
    for (int m = 0; m < static_cast<int>(assignment.size()); ++m) {
        if (assignment[m] != kUnmatched) out.members[assignment[m]].push_back(m);
    }
    out.bandwidth = equal_share_bandwidth(assignment, n_sbs, n_subchannels);
    return out;
}

namespace {

template <class Score>
Association argmax_assignment(const Market& market, Score score) {
    Association a(static_cast<std::size_t>(market.n_av()), kUnmatched);
    for (int m = 0; m < market.n_av(); ++m) {
        double best = 0.0;
        for (int n = 0; n < market.n_sbs(); ++n) {
            const double s = score(m, n);
            if (a[m] == kUnmatched || s > best) {
                a[m] = n;
                best = s;
            }
        }
    }
    return a;
}

}  // namespace

Association max_sinr_assignment(const Market& market) {
    return argmax_assignment(market, [&](int m, int n) { return market.links().dl_sinr(m, n, 0); });
}

Association max_rssi_assignment(const Market& market) {
    return argmax_assignment(market, [&](int m, int n) { return market.radio().rssi_mw(m, n); });
}

Matching max_sinr_association(const Market& market) {
    return equal_share_matching(max_sinr_assignment(market), market.n_sbs(), market.budget());
}

Matching max_rssi_association(const Market& market) {
    return equal_share_matching(max_rssi_assignment(market), market.n_sbs(), market.budget());
}

}  // namespace v2i

#pragma once

#include "v2i/matching.hpp"
#include "v2i/radio.hpp"

namespace v2i {

/// Splits each SBS's K subchannels evenly over its AVs: floor(K/|f(n)|) each,
/// the remainder to the lowest AV indices. With more AVs than subchannels the
/// K lowest-indexed AVs get one each and the rest none.
BandwidthAllocation equal_share_bandwidth(const Association& assignment, int n_sbs, int n_subchannels);

/// Wraps an association into a Matching served in ascending AV order, with
/// equal-share bandwidth.
Matching equal_share_matching(const Association& assignment, int n_sbs, int n_subchannels);

/// Each AV picks the SBS with the best worst-case downlink SINR on subchannel 0
/// (lowest SBS index on ties).
Association max_sinr_assignment(const Market& market);
/// Each AV picks the SBS with the strongest wideband received power.
Association max_rssi_assignment(const Market& market);

Matching max_sinr_association(const Market& market);
Matching max_rssi_association(const Market& market);

}  // namespace v2i

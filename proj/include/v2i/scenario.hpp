#pragma once

#include <cstddef>
#include <vector>

#include "v2i/config.hpp"

namespace v2i {

struct Position {
    double x = 0.0;
    double y = 0.0;
};

double distance(Position a, Position b);

/// One frozen network instance. Catalog references are indices into the
/// config's task_catalog / machine_catalog.
struct Topology {
    int n_sbs = 0;
    int n_av = 0;
    int n_subchannels = 0;
    std::vector<Position> sbs_positions;
    std::vector<Position> av_positions;
    std::vector<std::size_t> av_task;
    std::vector<std::size_t> sbs_machine;
    /// Downlink power gain h_mnk, laid out [m][n][k].
    std::vector<double> fading_dl;
    /// Uplink power gain on the shared uplink subchannel, laid out [m][n].
    std::vector<double> fading_ul;

    double dl_gain(int m, int n, int k) const {
        return fading_dl[(static_cast<std::size_t>(m) * n_sbs + n) * n_subchannels + k];
    }
    double ul_gain(int m, int n) const { return fading_ul[static_cast<std::size_t>(m) * n_sbs + n]; }

    /// Allocates storage for the given sizes with unit fading everywhere.
    static Topology empty(int n_sbs, int n_av, int n_subchannels);
};

/// Draws a reproducible instance from `config` (including config.seed).
/// Each quantity comes from its own stream, so adding AVs leaves the
/// positions and fading of existing AVs untouched.
Topology generate_topology(const ScenarioConfig& config);

/// Log-distance path loss as a linear gain <= 1; distances below 1 m are clamped.
double path_loss(double distance_m, const ScenarioConfig& config);
double path_loss_db(double distance_m, const ScenarioConfig& config);

/// Checks sizes, positions and gains against the config; throws ConfigError.
void validate_topology(const Topology& topo, const ScenarioConfig& config);

}  // namespace v2i

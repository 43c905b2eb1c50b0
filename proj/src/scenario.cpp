#include "v2i/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "v2i/rng.hpp"

namespace v2i {

double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

Topology Topology::empty(int n_sbs, int n_av, int n_subchannels) {
    Topology t;
    t.n_sbs = n_sbs;
    t.n_av = n_av;
    t.n_subchannels = n_subchannels;
    t.sbs_positions.assign(n_sbs, {});
    t.av_positions.assign(n_av, {});
    t.av_task.assign(n_av, 0);
    t.sbs_machine.assign(n_sbs, 0);
    t.fading_dl.assign(static_cast<std::size_t>(n_av) * n_sbs * n_subchannels, 1.0);
    t.fading_ul.assign(static_cast<std::size_t>(n_av) * n_sbs, 1.0);
    return t;
}

double path_loss_db(double distance_m, const ScenarioConfig& config) {
    return config.pathloss_ref_db + 10.0 * config.pathloss_exponent * std::log10(std::max(distance_m, 1.0));
}

double path_loss(double distance_m, const ScenarioConfig& config) {
    return std::pow(10.0, -path_loss_db(distance_m, config) / 10.0);
}

Topology generate_topology(const ScenarioConfig& config) {
    config.validate();
    Topology t = Topology::empty(config.n_sbs, config.n_av, config.n_subchannels);
    const std::uint64_t seed = config.seed;

    RngStream sbs_pos(seed, "sbs_positions");
    for (auto& p : t.sbs_positions) {
        p.x = sbs_pos.uniform() * config.area_side;
        p.y = sbs_pos.uniform() * config.area_side;
    }
    RngStream av_pos(seed, "av_positions");
    for (auto& p : t.av_positions) {
        p.x = av_pos.uniform() * config.area_side;
        p.y = av_pos.uniform() * config.area_side;
    }
    RngStream tasks(seed, "tasks");
    for (auto& s : t.av_task) s = tasks.below(config.task_catalog.size());
    RngStream machines(seed, "machines");
    for (auto& j : t.sbs_machine) j = machines.below(config.machine_catalog.size());

    // AV-major order: the draws of AV m never depend on how many AVs follow it.
    RngStream dl(seed, "fading_dl");
    for (auto& h : t.fading_dl) h = dl.exponential();
    RngStream ul(seed, "fading_ul");
    for (auto& h : t.fading_ul) h = ul.exponential();
    return t;
}

void validate_topology(const Topology& topo, const ScenarioConfig& config) {
    auto fail = [](const std::string& what) { throw ConfigError("topology: " + what); };
    if (topo.n_sbs != config.n_sbs || topo.n_av != config.n_av || topo.n_subchannels != config.n_subchannels) {
        fail("sizes do not match the config");
    }
    const auto n_av = static_cast<std::size_t>(topo.n_av);
    const auto n_sbs = static_cast<std::size_t>(topo.n_sbs);
    if (topo.sbs_positions.size() != n_sbs || topo.av_positions.size() != n_av ||
        topo.av_task.size() != n_av || topo.sbs_machine.size() != n_sbs ||
        topo.fading_dl.size() != n_av * n_sbs * static_cast<std::size_t>(topo.n_subchannels) ||
        topo.fading_ul.size() != n_av * n_sbs) {
        fail("array sizes inconsistent");
    }
    auto inside = [&](Position p) {
        return p.x >= 0.0 && p.x <= config.area_side && p.y >= 0.0 && p.y <= config.area_side;
    };
    for (auto p : topo.sbs_positions) if (!inside(p)) fail("SBS position outside the area");
    for (auto p : topo.av_positions) if (!inside(p)) fail("AV position outside the area");
    for (auto s : topo.av_task) if (s >= config.task_catalog.size()) fail("task index out of range");
    for (auto j : topo.sbs_machine) if (j >= config.machine_catalog.size()) fail("machine index out of range");
    for (double h : topo.fading_dl) if (!(h > 0.0) || !std::isfinite(h)) fail("downlink fading gain must be > 0");
    for (double h : topo.fading_ul) if (!(h > 0.0) || !std::isfinite(h)) fail("uplink fading gain must be > 0");
}

}  // namespace v2i

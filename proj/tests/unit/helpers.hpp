#pragma once

#include <vector>

#include "v2i/config.hpp"
#include "v2i/scenario.hpp"

namespace v2i::test {

/// Execution stats this narrow discretize to a single step.
inline constexpr double kDeltaStd = 1e-6;

inline ScenarioConfig small_config(int n_sbs, int n_av, int k) {
    ScenarioConfig c = ScenarioConfig::defaults();
    c.n_sbs = n_sbs;
    c.n_av = n_av;
    c.n_subchannels = k;
    return c;
}

/// One task type (budget in ms) and one machine whose execution takes exactly `steps`.
inline void use_delta_catalog(ScenarioConfig& c, const std::vector<double>& steps, double budget_ms = 100.0) {
    c.task_catalog.clear();
    c.machine_catalog.assign(1, MachineType{0, {}});
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        c.task_catalog.push_back({id, budget_ms, c.dl_packet_bits, static_cast<int>(budget_ms / c.time_step_ms)});
        c.machine_catalog[0].exec_stats.push_back({id, steps[i], kDeltaStd});
    }
}

/// Unit fading, task i % catalog size, machine 0 everywhere.
inline Topology place(const ScenarioConfig& c, const std::vector<Position>& sbs, const std::vector<Position>& avs) {
    Topology t = Topology::empty(static_cast<int>(sbs.size()), static_cast<int>(avs.size()), c.n_subchannels);
    t.sbs_positions = sbs;
    t.av_positions = avs;
    for (std::size_t m = 0; m < avs.size(); ++m) t.av_task[m] = m % c.task_catalog.size();
    return t;
}

}  // namespace v2i::test

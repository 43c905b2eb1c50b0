#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace v2i {

/// Raised for any configuration value that violates a scenario invariant.
/// The message names the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A task an AV can request, with its end-to-end latency budget.
struct TaskType {
    int id = 0;
    double latency_budget_ms = 0.0;
    double dl_packet_bits = 5000.0;
    /// Processing steps after which the task is dropped.
    int max_steps = 1;
};

/// Gaussian execution statistics (in processing steps) of one task type on one machine type.
struct ExecStats {
    int task_id = 0;
    double mean_steps = 0.0;
    double std_steps = 0.0;
};

struct MachineType {
    int id = 0;
    std::vector<ExecStats> exec_stats;

    /// Throws ConfigError if the machine has no entry for `task_id`.
    const ExecStats& stats_for(int task_id) const;
};

/// Static description of one network instance family. Every field has a default;
/// the defaults reproduce the reference urban small-cell deployment
/// (10 SBSs in a 100 m x 100 m square, 100 MHz split into 180 kHz subchannels).
struct ScenarioConfig {
    double area_side = 100.0;              // m
    int n_sbs = 10;
    int n_av = 40;
    int n_subchannels = 555;               // floor(100 MHz / 180 kHz)
    double subchannel_bw = 180e3;          // Hz
    double tti_ms = 0.125;
    double time_step_ms = 1.0;
    double sbs_tx_power_mw = 100.0;
    double av_tx_power_mw = 10.0;
    double noise_power_dbm = -90.0;
    double antenna_gain_sbs = 1.0;
    double antenna_gain_av = 1.0;
    double alpha = 20000.0;
    /// Bandwidth unit (Hz) of the salary term alpha / w_mn in the SBS utility.
    double salary_unit_hz = 1000.0;
    /// Downlink packet size for task types that do not set their own.
    double dl_packet_bits = 5000.0;
    double ul_packet_bits = 100.0;
    double pathloss_ref_db = 38.0;
    double pathloss_exponent = 3.0;
    /// Realized downlink interference: every other SBS on every subchannel instead
    /// of only SBSs that actually use the subchannel.
    bool worst_case_interference = false;
    std::vector<TaskType> task_catalog;
    std::vector<MachineType> machine_catalog;
    std::uint64_t seed = 1;

    /// Defaults with the three task types and two machine types of the reference deployment.
    static ScenarioConfig defaults();

    double noise_power_mw() const;
    double tti_s() const { return tti_ms * 1e-3; }

    /// Throws ConfigError naming the first violated invariant.
    void validate() const;
};

/// Reference task types: latency budgets 20/50/100 ms, 5 kbit downlink packets.
std::vector<TaskType> default_task_catalog(double time_step_ms = 1.0);
/// Reference machine types with per-task (mean, std) execution steps.
std::vector<MachineType> default_machine_catalog();

/// Parses a JSON object. Missing keys keep their defaults; unknown keys are rejected.
ScenarioConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_config(const std::filesystem::path& path);

}  // namespace v2i

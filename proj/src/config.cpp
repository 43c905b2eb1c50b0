#include "v2i/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace v2i {

using nlohmann::json;

const ExecStats& MachineType::stats_for(int task_id) const {
    for (const auto& s : exec_stats) {
        if (s.task_id == task_id) return s;
    }
    throw ConfigError("machine_catalog: machine " + std::to_string(id) +
                      " has no exec_stats entry for task " + std::to_string(task_id));
}

std::vector<TaskType> default_task_catalog(double time_step_ms) {
    std::vector<TaskType> tasks;
    for (auto [id, budget] : {std::pair{1, 20.0}, {2, 50.0}, {3, 100.0}}) {
        TaskType t;
        t.id = id;
        t.latency_budget_ms = budget;
        t.dl_packet_bits = 5000.0;
        t.max_steps = std::max(1, static_cast<int>(std::floor(budget / time_step_ms)));
        tasks.push_back(t);
    }
    return tasks;
}

std::vector<MachineType> default_machine_catalog() {
    MachineType fast{1, {{1, 1.0, 0.5}, {2, 2.0, 0.5}, {3, 5.0, 0.5}}};
    MachineType slow{2, {{1, 2.0, 0.5}, {2, 4.0, 0.5}, {3, 10.0, 0.5}}};
    return {fast, slow};
}

ScenarioConfig ScenarioConfig::defaults() {
    ScenarioConfig cfg;
    cfg.task_catalog = default_task_catalog(cfg.time_step_ms);
    cfg.machine_catalog = default_machine_catalog();
    return cfg;
}

double ScenarioConfig::noise_power_mw() const { return std::pow(10.0, noise_power_dbm / 10.0); }

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void ScenarioConfig::validate() const {
    require(positive(area_side), "area_side must be > 0");
    require(n_sbs >= 1, "n_sbs must be >= 1");
    require(n_av >= 0, "n_av must be >= 0");
    require(n_subchannels >= 1, "n_subchannels must be >= 1");
    require(positive(subchannel_bw), "subchannel_bw must be > 0");
    require(positive(tti_ms), "tti_ms must be > 0");
    require(positive(time_step_ms), "time_step_ms must be > 0");
    require(positive(sbs_tx_power_mw), "sbs_tx_power_mw must be > 0");
    require(positive(av_tx_power_mw), "av_tx_power_mw must be > 0");
    require(std::isfinite(noise_power_dbm), "noise_power_dbm must be finite");
    require(positive(antenna_gain_sbs), "antenna_gain_sbs must be > 0");
    require(positive(antenna_gain_av), "antenna_gain_av must be > 0");
    require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be >= 0");
    require(positive(salary_unit_hz), "salary_unit_hz must be > 0");
    require(positive(dl_packet_bits), "dl_packet_bits must be > 0");
    require(positive(ul_packet_bits), "ul_packet_bits must be > 0");
    require(std::isfinite(pathloss_ref_db), "pathloss_ref_db must be finite");
    require(positive(pathloss_exponent), "pathloss_exponent must be > 0");
    require(!task_catalog.empty(), "task_catalog must not be empty");
    require(!machine_catalog.empty(), "machine_catalog must not be empty");

    std::set<int> task_ids;
    for (const auto& t : task_catalog) {
        const std::string tag = "task_catalog[id=" + std::to_string(t.id) + "]";
        require(task_ids.insert(t.id).second, tag + ": duplicate task id");
        require(positive(t.latency_budget_ms), tag + ".latency_budget_ms must be > 0");
        require(positive(t.dl_packet_bits), tag + ".dl_packet_bits must be > 0");
        require(t.max_steps >= 1, tag + ".max_steps must be >= 1");
    }
    std::set<int> machine_ids;
    for (const auto& m : machine_catalog) {
        const std::string tag = "machine_catalog[id=" + std::to_string(m.id) + "]";
        require(machine_ids.insert(m.id).second, tag + ": duplicate machine id");
        for (const auto& t : task_catalog) {
            const ExecStats& s = m.stats_for(t.id);
            require(positive(s.mean_steps), tag + ".mean_steps must be > 0");
            require(positive(s.std_steps), tag + ".std_steps must be > 0");
        }
    }
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
    }
}

}  // namespace

ScenarioConfig config_from_json(const json& j) {
    static const std::set<std::string> known = {
        "area_side", "n_sbs", "n_av", "n_subchannels", "subchannel_bw", "tti_ms",
        "time_step_ms", "sbs_tx_power_mw", "av_tx_power_mw", "noise_power_dbm",
        "antenna_gain_sbs", "antenna_gain_av", "alpha", "salary_unit_hz", "dl_packet_bits",
        "ul_packet_bits", "pathloss_ref_db", "pathloss_exponent", "worst_case_interference",
        "task_catalog", "machine_catalog", "seed"};
    reject_unknown(j, known, "config");

    ScenarioConfig cfg = ScenarioConfig::defaults();
    read(j, "area_side", cfg.area_side);
    read(j, "n_sbs", cfg.n_sbs);
    read(j, "n_av", cfg.n_av);
    read(j, "n_subchannels", cfg.n_subchannels);
    read(j, "subchannel_bw", cfg.subchannel_bw);
    read(j, "tti_ms", cfg.tti_ms);
    read(j, "time_step_ms", cfg.time_step_ms);
    read(j, "sbs_tx_power_mw", cfg.sbs_tx_power_mw);
    read(j, "av_tx_power_mw", cfg.av_tx_power_mw);
    read(j, "noise_power_dbm", cfg.noise_power_dbm);
    read(j, "antenna_gain_sbs", cfg.antenna_gain_sbs);
    read(j, "antenna_gain_av", cfg.antenna_gain_av);
    read(j, "alpha", cfg.alpha);
    read(j, "salary_unit_hz", cfg.salary_unit_hz);
    read(j, "dl_packet_bits", cfg.dl_packet_bits);
    read(j, "ul_packet_bits", cfg.ul_packet_bits);
    read(j, "pathloss_ref_db", cfg.pathloss_ref_db);
    read(j, "pathloss_exponent", cfg.pathloss_exponent);
    read(j, "worst_case_interference", cfg.worst_case_interference);
    read(j, "seed", cfg.seed);

    if (auto it = j.find("task_catalog"); it != j.end()) {
        if (!it->is_array()) throw ConfigError("task_catalog must be an array");
        cfg.task_catalog.clear();
        for (const auto& tj : *it) {
            reject_unknown(tj, {"id", "latency_budget_ms", "dl_packet_bits", "max_steps"},
                           "task_catalog entry");
            TaskType t;
            read(tj, "id", t.id);
            read(tj, "latency_budget_ms", t.latency_budget_ms);
            t.dl_packet_bits = cfg.dl_packet_bits;
            read(tj, "dl_packet_bits", t.dl_packet_bits);
            t.max_steps = -1;
            read(tj, "max_steps", t.max_steps);
            if (t.max_steps < 0 && cfg.time_step_ms > 0.0) {
                t.max_steps = std::max(1, static_cast<int>(std::floor(t.latency_budget_ms / cfg.time_step_ms)));
            }
            cfg.task_catalog.push_back(t);
        }
    } else {
        // Keep the reference tasks consistent with overridden packet size and step length.
        for (auto& t : cfg.task_catalog) {
            t.dl_packet_bits = cfg.dl_packet_bits;
            if (cfg.time_step_ms > 0.0) {
                t.max_steps = std::max(1, static_cast<int>(std::floor(t.latency_budget_ms / cfg.time_step_ms)));
            }
        }
    }

    if (auto it = j.find("machine_catalog"); it != j.end()) {
        if (!it->is_array()) throw ConfigError("machine_catalog must be an array");
        cfg.machine_catalog.clear();
        for (const auto& mj : *it) {
            reject_unknown(mj, {"id", "exec_stats"}, "machine_catalog entry");
            MachineType m;
            read(mj, "id", m.id);
            if (auto es = mj.find("exec_stats"); es != mj.end()) {
                if (!es->is_array()) throw ConfigError("exec_stats must be an array");
                for (const auto& ej : *es) {
                    reject_unknown(ej, {"task", "mean_steps", "std_steps"}, "exec_stats entry");
                    ExecStats s;
                    read(ej, "task", s.task_id);
                    read(ej, "mean_steps", s.mean_steps);
                    read(ej, "std_steps", s.std_steps);
                    m.exec_stats.push_back(s);
                }
            }
            cfg.machine_catalog.push_back(m);
        }
    }

    cfg.validate();
    return cfg;
}

json config_to_json(const ScenarioConfig& cfg) {
    json tasks = json::array();
    for (const auto& t : cfg.task_catalog) {
        tasks.push_back({{"id", t.id},
                         {"latency_budget_ms", t.latency_budget_ms},
                         {"dl_packet_bits", t.dl_packet_bits},
                         {"max_steps", t.max_steps}});
    }
    json machines = json::array();
    for (const auto& m : cfg.machine_catalog) {
        json stats = json::array();
        for (const auto& s : m.exec_stats) {
            stats.push_back({{"task", s.task_id}, {"mean_steps", s.mean_steps}, {"std_steps", s.std_steps}});
        }
        machines.push_back({{"id", m.id}, {"exec_stats", stats}});
    }
    return json{{"area_side", cfg.area_side},
                {"n_sbs", cfg.n_sbs},
                {"n_av", cfg.n_av},
                {"n_subchannels", cfg.n_subchannels},
                {"subchannel_bw", cfg.subchannel_bw},
                {"tti_ms", cfg.tti_ms},
                {"time_step_ms", cfg.time_step_ms},
                {"sbs_tx_power_mw", cfg.sbs_tx_power_mw},
                {"av_tx_power_mw", cfg.av_tx_power_mw},
                {"noise_power_dbm", cfg.noise_power_dbm},
                {"antenna_gain_sbs", cfg.antenna_gain_sbs},
                {"antenna_gain_av", cfg.antenna_gain_av},
                {"alpha", cfg.alpha},
                {"salary_unit_hz", cfg.salary_unit_hz},
                {"dl_packet_bits", cfg.dl_packet_bits},
                {"ul_packet_bits", cfg.ul_packet_bits},
                {"pathloss_ref_db", cfg.pathloss_ref_db},
                {"pathloss_exponent", cfg.pathloss_exponent},
                {"worst_case_interference", cfg.worst_case_interference},
                {"task_catalog", tasks},
                {"machine_catalog", machines},
                {"seed", cfg.seed}};
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

}  // namespace v2i

#include "v2i/compute.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "v2i/kernels.hpp"

namespace v2i {

double ExecutionPmf::total() const { return kernels::sum(probs); }

double ExecutionPmf::mean_steps() const { return kernels::weighted_index_sum(probs, 1.0); }

double ExecutionPmf::tail_above(std::size_t steps) const {
    if (steps >= probs.size()) return 0.0;
    return kernels::sum(std::span<const double>(probs).subspan(steps));
}

std::size_t ExecutionPmf::mode_steps() const {
    if (probs.empty()) return 0;
    return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin()) + 1;
}

namespace {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

ExecutionPmf discretize_gaussian(double mean_steps, double std_steps, int max_steps, double step_ms) {
    if (!(std::isfinite(mean_steps) && mean_steps > 0.0)) throw ConfigError("discretize_gaussian: mean_steps must be > 0");
    if (!(std::isfinite(std_steps) && std_steps > 0.0)) throw ConfigError("discretize_gaussian: std_steps must be > 0");
    if (max_steps < 1) throw ConfigError("discretize_gaussian: max_steps must be >= 1");
    if (!(std::isfinite(step_ms) && step_ms > 0.0)) throw ConfigError("discretize_gaussian: step_ms must be > 0");

    ExecutionPmf pmf;
    pmf.step_ms = step_ms;
    pmf.probs.resize(static_cast<std::size_t>(max_steps));
    for (int t = 1; t <= max_steps; ++t) {
        const double hi = std_normal_cdf((t + 0.5 - mean_steps) / std_steps);
        const double lo = std_normal_cdf((t - 0.5 - mean_steps) / std_steps);
        pmf.probs[static_cast<std::size_t>(t - 1)] = std::max(hi - lo, 0.0);
    }
    const double total = pmf.total();
    if (total > 0.0) {
        kernels::scale(pmf.probs, 1.0 / total);
    } else {
        // All mass lies outside 1..max_steps: fold it onto the nearest end.
        const long nearest = std::clamp(std::lround(mean_steps), 1L, static_cast<long>(max_steps));
        pmf.probs[static_cast<std::size_t>(nearest - 1)] = 1.0;
    }
    return pmf;
}

ExecutionPmf convolve(const ExecutionPmf& a, const ExecutionPmf& b) {
    if (std::fabs(a.step_ms - b.step_ms) > 1e-12 * std::max(a.step_ms, b.step_ms)) {
        throw std::invalid_argument("convolve: step lengths differ (" + std::to_string(a.step_ms) + " vs " +
                                    std::to_string(b.step_ms) + " ms)");
    }
    ExecutionPmf out;
    out.step_ms = a.step_ms;
    if (a.probs.empty() || b.probs.empty()) return out;
    // Steps i+1 and j+1 complete together at step i+j+2, i.e. index i+j+1.
    out.probs.assign(a.size() + b.size(), 0.0);
    kernels::convolve(a.probs, b.probs, std::span<double>(out.probs).subspan(1));
    return out;
}

double total_variation(const ExecutionPmf& a, const ExecutionPmf& b) {
    const std::size_t n = std::max(a.size(), b.size());
    std::vector<double> pa(a.probs), pb(b.probs);
    pa.resize(n, 0.0);
    pb.resize(n, 0.0);
    return 0.5 * kernels::abs_diff_sum(pa, pb);
}

std::size_t sample_steps(const ExecutionPmf& pmf, RngStream& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf.probs.size(); ++i) {
        acc += pmf.probs[i];
        if (u < acc) return i + 1;
    }
    // Rounding left u above the accumulated total: take the last step with mass.
    for (std::size_t i = pmf.probs.size(); i > 0; --i) {
        if (pmf.probs[i - 1] > 0.0) return i;
    }
    return pmf.probs.size();
}

std::optional<std::size_t> MachineQueue::position_of(int av) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].av == av) return i;
    }
    return std::nullopt;
}

ExecutionModel::ExecutionModel(const ScenarioConfig& config)
    : n_tasks_(config.task_catalog.size()), n_machines_(config.machine_catalog.size()), step_ms_(config.time_step_ms) {
    pmfs_.reserve(n_tasks_ * n_machines_);
    for (const auto& task : config.task_catalog) {
        max_steps_.push_back(task.max_steps);
        for (const auto& machine : config.machine_catalog) {
            const ExecStats& s = machine.stats_for(task.id);
            pmfs_.push_back(discretize_gaussian(s.mean_steps, s.std_steps, task.max_steps, config.time_step_ms));
        }
    }
    for (const auto& pmf : pmfs_) {
        means_ms_.push_back(pmf.mean_ms());
        std::vector<double> cdf(pmf.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < pmf.size(); ++i) cdf[i] = (acc += pmf.probs[i]);
        cdfs_.push_back(std::move(cdf));
    }
}

std::size_t ExecutionModel::sample(std::size_t task, std::size_t machine, RngStream& rng) const {
    const auto& cdf = cdfs_[index(task, machine)];
    const double u = rng.uniform() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) return cdf.size();
    return static_cast<std::size_t>(it - cdf.begin()) + 1;
}

ExecutionPmf completion_pmf(const MachineQueue& queue, int target, const ExecutionModel& model) {
    const auto pos = queue.position_of(target);
    if (!pos) throw QueueError("completion_pmf: AV " + std::to_string(target) + " is not in the queue");
    ExecutionPmf acc = model.pmf(queue.entries[0].task, queue.machine);
    for (std::size_t i = 1; i <= *pos; ++i) acc = convolve(acc, model.pmf(queue.entries[i].task, queue.machine));
    return acc;
}

double expected_task_completion_ms(const MachineQueue& queue, int target, const ExecutionModel& model) {
    return completion_pmf(queue, target, model).mean_ms();
}

double expected_completion_ms(const MachineQueue& queue, const ExecutionModel& model) {
    if (queue.entries.empty()) return 0.0;
    double total = 0.0;
    ExecutionPmf acc = model.pmf(queue.entries[0].task, queue.machine);
    total += acc.mean_ms();
    for (std::size_t i = 1; i < queue.entries.size(); ++i) {
        acc = convolve(acc, model.pmf(queue.entries[i].task, queue.machine));
        total += acc.mean_ms();
    }
    return total;
}

std::vector<CompletionSample> sample_completion_steps(const MachineQueue& queue, const ExecutionModel& model,
                                                      RngStream& rng) {
    std::vector<CompletionSample> out;
    out.reserve(queue.entries.size());
    std::size_t clock = 0;
    for (const auto& e : queue.entries) {
        CompletionSample s;
        s.av = e.av;
        s.exec_steps = model.sample(e.task, queue.machine, rng);
        clock += s.exec_steps;
        s.completion_steps = clock;
        s.dropped = clock > static_cast<std::size_t>(model.max_steps(e.task));
        out.push_back(s);
    }
    return out;
}

}  // namespace v2i

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "v2i/config.hpp"
#include "v2i/rng.hpp"

namespace v2i {

/// Probability mass over processing steps 1..size(): probs[i] is P(t = i + 1).
struct ExecutionPmf {
    std::vector<double> probs;
    double step_ms = 1.0;

    std::size_t size() const { return probs.size(); }
    /// P(t = steps); zero outside the support.
    double at(std::size_t steps) const { return steps >= 1 && steps <= probs.size() ? probs[steps - 1] : 0.0; }
    double total() const;
    double mean_steps() const;
    double mean_ms() const { return mean_steps() * step_ms; }
    /// Mass strictly above `steps`.
    double tail_above(std::size_t steps) const;
    /// Index of the largest entry (as a step count), lowest step on ties.
    std::size_t mode_steps() const;
};

/// Half-step binning of N(mean, std^2) onto steps 1..max_steps, renormalized so
/// that mass outside the range is folded back in. Throws ConfigError on bad parameters.
ExecutionPmf discretize_gaussian(double mean_steps, double std_steps, int max_steps, double step_ms = 1.0);

/// Distribution of the sum of two independent step counts. Support of the result
/// is 1..a.size()+b.size() (step 1 has zero mass). Throws std::invalid_argument if
/// the step lengths differ.
ExecutionPmf convolve(const ExecutionPmf& a, const ExecutionPmf& b);

/// 0.5 * sum |a - b| over the union of supports.
double total_variation(const ExecutionPmf& a, const ExecutionPmf& b);

/// Draws one step count by inverse transform.
std::size_t sample_steps(const ExecutionPmf& pmf, RngStream& rng);

struct QueueEntry {
    int av = 0;
    std::size_t task = 0;  // index into task_catalog
};

/// Tasks batched at one SBS's machine, in service order.
struct MachineQueue {
    std::size_t machine = 0;  // index into machine_catalog
    std::vector<QueueEntry> entries;

    std::optional<std::size_t> position_of(int av) const;
};

/// Execution pmfs of every (task type, machine type) pair of a config, built once.
class ExecutionModel {
public:
    explicit ExecutionModel(const ScenarioConfig& config);

    const ExecutionPmf& pmf(std::size_t task, std::size_t machine) const { return pmfs_[index(task, machine)]; }
    double mean_ms(std::size_t task, std::size_t machine) const { return means_ms_[index(task, machine)]; }
    int max_steps(std::size_t task) const { return max_steps_[task]; }
    double step_ms() const { return step_ms_; }
    std::size_t n_tasks() const { return n_tasks_; }
    std::size_t n_machines() const { return n_machines_; }

    /// Inverse-CDF draw from pmf(task, machine).
    std::size_t sample(std::size_t task, std::size_t machine, RngStream& rng) const;

private:
    std::size_t index(std::size_t task, std::size_t machine) const { return task * n_machines_ + machine; }

    std::size_t n_tasks_ = 0;
    std::size_t n_machines_ = 0;
    double step_ms_ = 1.0;
    std::vector<ExecutionPmf> pmfs_;
    std::vector<std::vector<double>> cdfs_;
    std::vector<double> means_ms_;
    std::vector<int> max_steps_;
};

class QueueError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Completion-time pmf of `target`: its own execution convolved with every task
/// ahead of it. Throws QueueError if `target` is not queued.
ExecutionPmf completion_pmf(const MachineQueue& queue, int target, const ExecutionModel& model);

/// Mean completion time of `target`, in ms.
double expected_task_completion_ms(const MachineQueue& queue, int target, const ExecutionModel& model);

/// Sum over the queue of each task's mean completion time, in ms (zero for an empty queue).
double expected_completion_ms(const MachineQueue& queue, const ExecutionModel& model);

struct CompletionSample {
    int av = 0;
    std::size_t exec_steps = 0;
    std::size_t completion_steps = 0;
    /// Completion went past the task's max_steps.
    bool dropped = false;
};

/// One realization of the queue: independent execution draws, completion as
/// running sums, in queue order.
std::vector<CompletionSample> sample_completion_steps(const MachineQueue& queue, const ExecutionModel& model,
                                                      RngStream& rng);

}  // namespace v2i

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ntfhmm/types.hpp"

namespace ntfhmm {

struct Activity {
    int id = 0;
    std::string name;
    double d_min = 0.0;
    double d_max = 0.0;
    double d_avg = 0.0;
    std::vector<int> resources;  // sorted, unique
};

enum class DurationMode { beta, exponential };

/// A DAG of activities with stochastic durations: the SME-specified process.
struct ProcessModel {
    std::vector<Activity> activities;
    std::vector<std::pair<int, int>> edges;  // (parent id, child id)
    bool periodic = false;
    DurationMode duration_mode = DurationMode::beta;
    bool resource_constrained = false;

    /// Throws ValidationError on cycles, dangling edges, or bad durations.
    void validate() const;

    const Activity& activity(int id) const;
    std::vector<int> parents_of(int id) const;
    std::vector<int> roots() const;
};

struct TimedActivity {
    int activity = 0;
    double start = 0.0;
    double end = 0.0;
};

/// One simulated run (one cycle for periodic models), times in hours.
/// For periodic models the times are absolute: cycle c starts where cycle c-1 ended.
struct RunTimeline {
    int run_id = 0;
    std::vector<TimedActivity> entries;
};

/// A set of activities observed running simultaneously; states are ordered
/// lexicographically by their sorted member ids.
struct SuperActivity {
    int id = 0;
    std::vector<int> members;         // sorted activity ids
    std::vector<int> resource_union;  // sorted union of member resources
};

std::vector<RunTimeline> simulate_ensemble(const ProcessModel& model, int runs, std::uint64_t seed);

std::vector<SuperActivity> enumerate_states(const ProcessModel& model,
                                            const std::vector<RunTimeline>& timelines);

/// Samples the active state every `interval` hours. Periodic models yield a single
/// sequence spanning all cycles; non-periodic models yield one sequence per run.
std::vector<std::vector<int>> sample_state_sequences(const ProcessModel& model,
                                                     const std::vector<RunTimeline>& timelines,
                                                     const std::vector<SuperActivity>& states,
                                                     double interval);

/// Fraction of streams that begin in each state.
Vector starting_state_fractions(const ProcessModel& model,
                                const std::vector<RunTimeline>& timelines,
                                const std::vector<SuperActivity>& states);

/// Sample mean duration per activity id; falls back to d_avg for activities never run.
std::vector<double> mean_durations(const ProcessModel& model,
                                   const std::vector<RunTimeline>& timelines);

}  // namespace ntfhmm

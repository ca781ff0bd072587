#include "ntfhmm/process_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "ntfhmm/rng.hpp"

namespace ntfhmm {

void ProcessModel::validate() const {
    if (activities.empty()) throw ValidationError("process model: no activities");
    std::set<int> ids;
    for (const auto& a : activities) {
        if (!ids.insert(a.id).second)
            throw ValidationError("process model: duplicate activity id " + std::to_string(a.id));
        if (!(a.d_avg > 0.0))
            throw ValidationError("process model: activity " + std::to_string(a.id) +
                                  " must have d_avg > 0");
        if (a.d_min > a.d_avg || a.d_avg > a.d_max)
            throw ValidationError("process model: activity " + std::to_string(a.id) +
                                  " must satisfy d_min <= d_avg <= d_max");
        if (a.d_min < 0.0)
            throw ValidationError("process model: negative d_min on activity " +
                                  std::to_string(a.id));
    }
    std::map<int, std::vector<int>> children;
    std::map<int, int> indegree;
    for (const auto& [p, c] : edges) {
        if (!ids.count(p) || !ids.count(c))
            throw ValidationError("process model: edge references unknown activity");
        children[p].push_back(c);
        ++indegree[c];
    }
    // Kahn's algorithm; leftovers mean a cycle.
    std::vector<int> queue;
    for (int id : ids)
        if (indegree.find(id) == indegree.end()) queue.push_back(id);
    std::size_t seen = 0;
    while (!queue.empty()) {
        const int v = queue.back();
        queue.pop_back();
        ++seen;
        for (int c : children[v])
            if (--indegree[c] == 0) queue.push_back(c);
    }
    if (seen != ids.size()) throw ValidationError("process model: edges contain a cycle");
}

const Activity& ProcessModel::activity(int id) const {
    for (const auto& a : activities)
        if (a.id == id) return a;
    throw ValidationError("process model: unknown activity id " + std::to_string(id));
}

std::vector<int> ProcessModel::parents_of(int id) const {
    std::vector<int> out;
    for (const auto& [p, c] : edges)
        if (c == id) out.push_back(p);
    return out;
}

std::vector<int> ProcessModel::roots() const {
    std::vector<int> out;
    for (const auto& a : activities)
        if (parents_of(a.id).empty()) out.push_back(a.id);
    return out;
}

namespace {

double draw_duration(const Activity& a, DurationMode mode, std::mt19937_64& eng) {
    if (mode == DurationMode::exponential) return exponential(eng, a.d_avg);
    const double span = a.d_max - a.d_min;
    if (span <= 0.0) return a.d_avg;  // degenerate range: constant duration
    if (!(a.d_min < a.d_avg && a.d_avg < a.d_max))
        throw ValidationError("beta durations need d_min < d_avg < d_max on activity " +
                              std::to_string(a.id));
    const double alpha = 2.0;
    const double beta = 2.0 * (a.d_max - a.d_avg) / (a.d_avg - a.d_min);
    return a.d_min + span * beta_draw(eng, alpha, beta);
}

// Schedules one cycle starting at `offset`. Children start when their last parent
// ends; in resource-constrained mode, grants go earliest-ready-first (ties by id)
// and an activity also waits for its resources to free up.
RunTimeline run_once(const ProcessModel& model, const std::map<int, double>& durations,
                     double offset, int run_id) {
    std::map<int, double> end_of;
    std::map<int, double> resource_free;
    RunTimeline timeline;
    timeline.run_id = run_id;

    std::set<int> pending;
    for (const auto& a : model.activities) pending.insert(a.id);

    while (!pending.empty()) {
        int pick = -1;
        double pick_ready = 0.0;
        for (int id : pending) {
            bool parents_done = true;
            double ready = offset;
            for (int p : model.parents_of(id)) {
                if (!end_of.count(p)) { parents_done = false; break; }
                ready = std::max(ready, end_of.at(p));
            }
            if (!parents_done) continue;
            if (pick < 0 || ready < pick_ready || (ready == pick_ready && id < pick)) {
                pick = id;
                pick_ready = ready;
            }
        }
        if (pick < 0) throw ValidationError("process model: unreachable activities in DAG");

        double start = pick_ready;
        if (model.resource_constrained)
            for (int r : model.activity(pick).resources)
                if (resource_free.count(r)) start = std::max(start, resource_free.at(r));

        const double end = start + durations.at(pick);
        end_of[pick] = end;
        if (model.resource_constrained)
            for (int r : model.activity(pick).resources) resource_free[r] = end;
        timeline.entries.push_back({pick, start, end});
        pending.erase(pick);
    }
    std::sort(timeline.entries.begin(), timeline.entries.end(),
              [](const TimedActivity& a, const TimedActivity& b) {
                  return a.start < b.start || (a.start == b.start && a.activity < b.activity);
              });
    return timeline;
}

double makespan(const RunTimeline& t) {
    double m = 0.0;
    for (const auto& e : t.entries) m = std::max(m, e.end);
    return m;
}

}  // namespace

std::vector<RunTimeline> simulate_ensemble(const ProcessModel& model, int runs,
                                           std::uint64_t seed) {
    if (runs < 1) throw ValidationError("simulate: runs must be >= 1");
    model.validate();

    std::vector<RunTimeline> out;
    out.reserve(runs);
    double offset = 0.0;
    for (int r = 0; r < runs; ++r) {
        auto eng = make_engine(mix_seed(seed, {static_cast<std::uint64_t>(r)}));
        std::map<int, double> durations;
        for (const auto& a : model.activities)
            durations[a.id] = draw_duration(a, model.duration_mode, eng);
        out.push_back(run_once(model, durations, model.periodic ? offset : 0.0, r));
        if (model.periodic) offset = makespan(out.back());
    }
    return out;
}

namespace {

struct Boundary {
    double time;
    std::vector<int> ended;
    std::vector<int> started;
};

// Sorted boundaries of a stream of timelines; removals apply before additions at
// equal times (half-open activity intervals).
std::vector<Boundary> boundaries(const std::vector<const RunTimeline*>& stream) {
    std::map<double, Boundary> at;
    for (const RunTimeline* t : stream) {
        for (const auto& e : t->entries) {
            at[e.start].started.push_back(e.activity);
            at[e.end].ended.push_back(e.activity);
        }
    }
    std::vector<Boundary> out;
    out.reserve(at.size());
    for (auto& [time, b] : at) {
        b.time = time;
        out.push_back(std::move(b));
    }
    return out;
}

struct Segment {
    double begin, end;
    std::vector<int> active;  // sorted
};

std::vector<Segment> segments_of(const std::vector<const RunTimeline*>& stream) {
    std::vector<Segment> segs;
    std::set<int> active;
    const auto bounds = boundaries(stream);
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        for (int a : bounds[i].ended) active.erase(a);
        for (int a : bounds[i].started) active.insert(a);
        if (active.empty() || i + 1 >= bounds.size()) continue;
        const double next = bounds[i + 1].time;
        if (next > bounds[i].time)
            segs.push_back({bounds[i].time, next, {active.begin(), active.end()}});
    }
    return segs;
}

std::vector<std::vector<const RunTimeline*>> streams_of(const ProcessModel& model,
                                                        const std::vector<RunTimeline>& timelines) {
    std::vector<std::vector<const RunTimeline*>> streams;
    if (model.periodic) {
        streams.emplace_back();
        for (const auto& t : timelines) streams.back().push_back(&t);
    } else {
        for (const auto& t : timelines) streams.push_back({&t});
    }
    return streams;
}

}  // namespace

std::vector<SuperActivity> enumerate_states(const ProcessModel& model,
                                            const std::vector<RunTimeline>& timelines) {
    if (timelines.empty()) throw ValidationError("enumerate_states: no timelines");
    std::set<std::vector<int>> seen;
    for (const auto& stream : streams_of(model, timelines))
        for (const auto& seg : segments_of(stream)) seen.insert(seg.active);

    std::vector<SuperActivity> states;
    int id = 0;
    for (const auto& members : seen) {  // std::set iterates lexicographically
        SuperActivity s;
        s.id = id++;
        s.members = members;
        std::set<int> ru;
        for (int m : members) {
            const auto& res = model.activity(m).resources;
            ru.insert(res.begin(), res.end());
        }
        s.resource_union.assign(ru.begin(), ru.end());
        states.push_back(std::move(s));
    }
    return states;
}

std::vector<std::vector<int>> sample_state_sequences(const ProcessModel& model,
                                                     const std::vector<RunTimeline>& timelines,
                                                     const std::vector<SuperActivity>& states,
                                                     double interval) {
    if (interval <= 0.0) throw ValidationError("sample: interval must be positive");
    std::map<std::vector<int>, int> index;
    for (const auto& s : states) index[s.members] = s.id;

    std::vector<std::vector<int>> sequences;
    for (const auto& stream : streams_of(model, timelines)) {
        const auto segs = segments_of(stream);
        if (segs.empty()) continue;
        std::vector<int> seq;
        std::size_t cursor = 0;
        for (std::size_t k = 0;; ++k) {
            const double t = static_cast<double>(k) * interval;
            while (cursor < segs.size() && segs[cursor].end <= t) ++cursor;
            if (cursor >= segs.size()) break;
            if (t < segs[cursor].begin) break;  // no active activity at this instant
            auto it = index.find(segs[cursor].active);
            if (it == index.end())
                throw ValidationError("sample: active set not present in the state list");
            seq.push_back(it->second);
        }
        sequences.push_back(std::move(seq));
    }
    return sequences;
}

Vector starting_state_fractions(const ProcessModel& model,
                                const std::vector<RunTimeline>& timelines,
                                const std::vector<SuperActivity>& states) {
    std::map<std::vector<int>, int> index;
    for (const auto& s : states) index[s.members] = s.id;
    Vector pi = Vector::Zero(static_cast<Eigen::Index>(states.size()));
    double n = 0.0;
    for (const auto& stream : streams_of(model, timelines)) {
        const auto segs = segments_of(stream);
        if (segs.empty()) continue;
        auto it = index.find(segs.front().active);
        if (it == index.end())
            throw ValidationError("starting states: active set not present in the state list");
        pi(it->second) += 1.0;
        n += 1.0;
    }
    if (n == 0.0) throw ValidationError("starting states: no non-empty streams");
    return pi / n;
}

std::vector<double> mean_durations(const ProcessModel& model,
                                   const std::vector<RunTimeline>& timelines) {
    int max_id = 0;
    for (const auto& a : model.activities) max_id = std::max(max_id, a.id);
    std::vector<double> sum(max_id + 1, 0.0);
    std::vector<std::size_t> count(max_id + 1, 0);
    for (const auto& t : timelines)
        for (const auto& e : t.entries) {
            sum[e.activity] += e.end - e.start;
            ++count[e.activity];
        }
    std::vector<double> means(max_id + 1, 0.0);
    for (const auto& a : model.activities)
        means[a.id] = count[a.id] ? sum[a.id] / count[a.id] : a.d_avg;
    return means;
}

}  // namespace ntfhmm

#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ntfhmm/process_model.hpp"
#include "ntfhmm/types.hpp"

namespace ntfhmm {

struct EventRecord {
    std::string case_id;
    std::string activity;
    bool is_start = false;  // start vs complete
    double t_hours = 0.0;   // hours since epoch
    std::string resource;
    std::size_t line_no = 0;
};

struct ColumnMapping {
    std::string case_col = "case";
    std::string activity_col = "activity";
    std::string type_col = "type";
    std::string time_col = "time";
    std::string resource_col = "resource";
};

struct ParsedLog {
    std::vector<EventRecord> records;        // sorted by (case_id, time, line)
    std::size_t skipped_other_types = 0;     // rows whose type is neither start nor complete
};

/// CSV with a header row; timestamps ISO-8601 or numeric hours.
/// Throws ValidationError with the line number on unparseable rows,
/// and a schema error when a mapped column is missing.
ParsedLog parse_log(std::istream& in, const ColumnMapping& mapping);

/// Per-case part intervals: alternating start/complete events of the same activity.
struct CaseTimeline {
    std::string case_id;
    std::map<std::string, std::vector<std::pair<double, double>>> parts;
};

struct CaseBuildResult {
    std::vector<CaseTimeline> cases;
    std::vector<std::string> issues;        // one message per malformed case
    std::set<std::string> excluded_cases;   // complete-before-start or unmatched start
};

CaseBuildResult build_case_timelines(const std::vector<EventRecord>& records);

/// Keeps cases whose activities are exactly the required ones, whose sequential
/// activity spans follow `order` without interleaving, and whose `parallel_tail`
/// activities all start after the last sequential activity has completed.
std::vector<CaseTimeline> filter_conforming_cases(const std::vector<CaseTimeline>& cases,
                                                  const std::vector<std::string>& order,
                                                  const std::set<std::string>& parallel_tail);

struct SimplifiedTimeline {
    RunTimeline timeline;
    std::vector<std::string> activity_names;  // index = activity id in the timeline
};

/// Gap removal: per-activity duration = summed part lengths, sequential activities
/// abut, tail activities start together at the last sequential end (the shorter one
/// finishes first). Sequential order comes from the case's first-start times; ids are
/// assigned in that order, then sorted tail names.
SimplifiedTimeline collapse_gaps(const CaseTimeline& timeline,
                                 const std::set<std::string>& parallel_tail, int run_id = 0);

double parse_timestamp_hours(const std::string& text);  // ISO-8601 or numeric hours

}  // namespace ntfhmm

#include "ntfhmm/event_log.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <sstream>

namespace ntfhmm {

namespace {

// Minimal CSV row split with double-quote support.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') { field += '"'; ++i; }
                else quoted = false;
            } else field += c;
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

// Howard Hinnant's days-from-civil.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

}  // namespace

double parse_timestamp_hours(const std::string& raw) {
    const std::string text = trim(raw);
    if (text.empty()) throw ValidationError("empty timestamp");

    // ISO-8601: YYYY-MM-DD[T ]HH:MM:SS[.frac][Z|+HH:MM|-HH:MM], date-only allowed
    if (text.size() >= 10 && text[4] == '-' && text[7] == '-') {
        int y, mo, d;
        if (std::sscanf(text.c_str(), "%4d-%2d-%2d", &y, &mo, &d) != 3)
            throw ValidationError("bad ISO date: " + text);
        double seconds = 0.0;
        double offset_hours = 0.0;
        if (text.size() > 10) {
            if (text[10] != 'T' && text[10] != ' ')
                throw ValidationError("bad ISO separator: " + text);
            std::string rest = text.substr(11);
            // timezone suffix
            std::size_t tz = rest.find_first_of("Z+");
            if (tz == std::string::npos) {
                const std::size_t minus = rest.find('-');
                if (minus != std::string::npos) tz = minus;
            }
            std::string tzpart;
            if (tz != std::string::npos) {
                tzpart = rest.substr(tz);
                rest = rest.substr(0, tz);
            }
            int hh = 0, mm = 0;
            double ss = 0.0;
            if (std::sscanf(rest.c_str(), "%2d:%2d:%lf", &hh, &mm, &ss) < 2)
                throw ValidationError("bad ISO time: " + text);
            seconds = hh * 3600.0 + mm * 60.0 + ss;
            if (!tzpart.empty() && tzpart != "Z") {
                int th = 0, tm = 0;
                const char sign = tzpart[0];
                if (std::sscanf(tzpart.c_str() + 1, "%2d:%2d", &th, &tm) < 1)
                    throw ValidationError("bad ISO timezone: " + text);
                offset_hours = (th + tm / 60.0) * (sign == '-' ? -1.0 : 1.0);
            }
        }
        return static_cast<double>(days_from_civil(y, mo, d)) * 24.0 + seconds / 3600.0 -
               offset_hours;
    }

    // plain number of hours
    std::size_t pos = 0;
    double hours = 0.0;
    try {
        hours = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw ValidationError("unparseable timestamp: " + text);
    }
    if (pos != text.size()) throw ValidationError("unparseable timestamp: " + text);
    return hours;
}

ParsedLog parse_log(std::istream& in, const ColumnMapping& mapping) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("event log: empty input");
    const auto header = split_csv(line);
    auto column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == name) return static_cast<int>(i);
        throw ValidationError("event log: missing column '" + name + "'");
    };
    const int c_case = column(mapping.case_col);
    const int c_act = column(mapping.activity_col);
    const int c_type = column(mapping.type_col);
    const int c_time = column(mapping.time_col);
    int c_res = -1;
    if (!mapping.resource_col.empty())
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == mapping.resource_col) c_res = static_cast<int>(i);

    ParsedLog out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv(line);
        const int needed = std::max({c_case, c_act, c_type, c_time, c_res});
        if (static_cast<int>(fields.size()) <= needed)
            throw ValidationError("event log: line " + std::to_string(line_no) +
                                  " has too few fields");
        const std::string type = lower(trim(fields[c_type]));
        if (type != "start" && type != "complete") {
            ++out.skipped_other_types;
            continue;
        }
        EventRecord rec;
        rec.case_id = trim(fields[c_case]);
        rec.activity = trim(fields[c_act]);
        rec.is_start = type == "start";
        try {
            rec.t_hours = parse_timestamp_hours(fields[c_time]);
        } catch (const ValidationError& e) {
            throw ValidationError("event log: line " + std::to_string(line_no) + ": " + e.what());
        }
        if (rec.t_hours < 0.0)
            throw ValidationError("event log: line " + std::to_string(line_no) +
                                  ": negative timestamp");
        rec.resource = c_res >= 0 ? trim(fields[c_res]) : "";
        rec.line_no = line_no;
        out.records.push_back(std::move(rec));
    }
    std::stable_sort(out.records.begin(), out.records.end(),
                     [](const EventRecord& a, const EventRecord& b) {
                         if (a.case_id != b.case_id) return a.case_id < b.case_id;
                         if (a.t_hours != b.t_hours) return a.t_hours < b.t_hours;
                         return a.line_no < b.line_no;
                     });
    return out;
}

CaseBuildResult build_case_timelines(const std::vector<EventRecord>& records) {
    CaseBuildResult out;
    struct OpenPart {
        int depth = 0;
        double start = 0.0;
    };
    // Overlapping/nested parts of one activity are merged: depth counts opens,
    // the part closes when the last open completes.
    std::map<std::string, std::map<std::string, OpenPart>> open;  // case -> activity
    std::map<std::string, CaseTimeline> cases;

    for (const auto& rec : records) {
        auto& open_acts = open[rec.case_id];
        auto& tl = cases[rec.case_id];
        tl.case_id = rec.case_id;
        if (rec.is_start) {
            auto& part = open_acts[rec.activity];
            if (part.depth == 0) part.start = rec.t_hours;
            ++part.depth;
        } else {
            const auto it = open_acts.find(rec.activity);
            if (it == open_acts.end() || it->second.depth == 0) {
                out.issues.push_back("case " + rec.case_id + ": complete before start for '" +
                                     rec.activity + "' (line " + std::to_string(rec.line_no) + ")");
                out.excluded_cases.insert(rec.case_id);
                continue;
            }
            if (--it->second.depth == 0) {
                if (rec.t_hours > it->second.start)
                    tl.parts[rec.activity].push_back({it->second.start, rec.t_hours});
                open_acts.erase(it);
            }
        }
    }
    for (auto& [case_id, open_acts] : open) {
        if (open_acts.empty()) continue;
        out.issues.push_back("case " + case_id + ": " + std::to_string(open_acts.size()) +
                             " unmatched start event(s)");
        out.excluded_cases.insert(case_id);
    }
    for (auto& [case_id, tl] : cases) {
        if (out.excluded_cases.count(case_id) || tl.parts.empty()) continue;
        for (auto& [act, parts] : tl.parts) std::sort(parts.begin(), parts.end());
        out.cases.push_back(std::move(tl));
    }
    return out;
}

namespace {

struct Span {
    double first_start;
    double last_complete;
};

Span span_of(const std::vector<std::pair<double, double>>& parts) {
    Span s{parts.front().first, parts.front().second};
    for (const auto& [b, e] : parts) {
        s.first_start = std::min(s.first_start, b);
        s.last_complete = std::max(s.last_complete, e);
    }
    return s;
}

}  // namespace

std::vector<CaseTimeline> filter_conforming_cases(const std::vector<CaseTimeline>& cases,
                                                  const std::vector<std::string>& order,
                                                  const std::set<std::string>& parallel_tail) {
    if (order.empty()) throw ValidationError("filter: required order is empty");
    std::set<std::string> required(order.begin(), order.end());
    required.insert(parallel_tail.begin(), parallel_tail.end());

    std::vector<CaseTimeline> out;
    for (const auto& c : cases) {
        std::set<std::string> present;
        for (const auto& [act, parts] : c.parts) present.insert(act);
        if (present != required) continue;

        bool ok = true;
        Span prev{0.0, 0.0};
        for (std::size_t i = 0; i < order.size() && ok; ++i) {
            const Span s = span_of(c.parts.at(order[i]));
            if (i > 0 && s.first_start < prev.last_complete) ok = false;  // interleaving
            prev = s;
        }
        for (const auto& act : parallel_tail) {
            if (!ok) break;
            if (span_of(c.parts.at(act)).first_start < prev.last_complete) ok = false;
        }
        if (ok) out.push_back(c);
    }
    return out;
}

SimplifiedTimeline collapse_gaps(const CaseTimeline& timeline,
                                 const std::set<std::string>& parallel_tail, int run_id) {
    std::vector<std::pair<double, std::string>> sequential;  // (first start, activity)
    for (const auto& [act, parts] : timeline.parts) {
        if (parts.empty()) throw ValidationError("collapse: activity without parts");
        if (!parallel_tail.count(act)) sequential.push_back({span_of(parts).first_start, act});
    }
    std::sort(sequential.begin(), sequential.end());

    auto duration_of = [&](const std::string& act) {
        double d = 0.0;
        for (const auto& [b, e] : timeline.parts.at(act)) d += e - b;
        return d;
    };

    SimplifiedTimeline out;
    out.timeline.run_id = run_id;
    double clock = 0.0;
    int id = 0;
    for (const auto& [_, act] : sequential) {
        const double d = duration_of(act);
        out.timeline.entries.push_back({id, clock, clock + d});
        out.activity_names.push_back(act);
        clock += d;
        ++id;
    }
    for (const auto& act : parallel_tail) {  // std::set: sorted by name
        if (!timeline.parts.count(act)) throw ValidationError("collapse: tail activity missing");
        out.timeline.entries.push_back({id, clock, clock + duration_of(act)});
        out.activity_names.push_back(act);
        ++id;
    }
    return out;
}

}  // namespace ntfhmm

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ntfhmm/cooccurrence.hpp"
#include "ntfhmm/evaluation.hpp"
#include "ntfhmm/factorization.hpp"
#include "ntfhmm/hmm.hpp"
#include "ntfhmm/model_selection.hpp"
#include "ntfhmm/process_model.hpp"

namespace ntfhmm {

using nlohmann::json;

/// Provenance block embedded in every artifact. `created` is excluded from
/// reproducibility comparisons.
struct Meta {
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string created;

    json to_json() const;
};

Meta make_meta(std::uint64_t seed, const json& effective_config);
std::string fnv1a_hex(const std::string& text);

json matrix_to_json(const Matrix& m);  // row-major nested arrays
Matrix matrix_from_json(const json& j, const std::string& what);
json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j, const std::string& what);

json model_to_json(const ProcessModel& model);
ProcessModel model_from_json(const json& j);

json hmm_to_json(const Hmm& hmm);
Hmm hmm_from_json(const json& j);

json stats_to_json(const JointStats& stats);
JointStats stats_from_json(const json& j);

json factors_to_json(const FactorSet& f);
FactorSet factors_from_json(const json& j);

json report_to_json(const SelectionReport& report);
SelectionReport report_from_json(const json& j);

/// Emission matrix files: either a bare nested array or {"E": [[...]]}.
Matrix emission_from_json(const json& j);

// JSON-lines artifacts open with a single {"meta": ...} line.
void write_timelines(std::ostream& out, const std::vector<RunTimeline>& timelines,
                     const std::vector<std::string>& activity_names, const Meta& meta);
struct TimelineFile {
    std::vector<RunTimeline> timelines;
    std::vector<std::string> activity_names;
};
TimelineFile read_timelines(std::istream& in);

void write_sequences(std::ostream& out, const std::vector<std::vector<int>>& sequences,
                     const Meta& meta);
std::vector<std::vector<int>> read_sequences(std::istream& in);

void write_selection_csv(std::ostream& out, const SelectionReport& report, const Meta& meta);
void write_evaluation_csv(std::ostream& out, const std::vector<EvalRow>& rows, const Meta& meta);

json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const json& j);

}  // namespace ntfhmm

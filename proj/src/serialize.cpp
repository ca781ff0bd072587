#include "ntfhmm/serialize.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ntfhmm/version.hpp"

namespace ntfhmm {

json Meta::to_json() const {
    return json{{"tool", kToolName},
                {"version", kVersion},
                {"seed", seed},
                {"config_hash", config_hash},
                {"created", created}};
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setfill('0') << std::setw(16) << h;
    return out.str();
}

Meta make_meta(std::uint64_t seed, const json& effective_config) {
    Meta meta;
    meta.seed = seed;
    meta.config_hash = fnv1a_hex(effective_config.dump());
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    meta.created = buf;
    return meta;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ValidationError(what + ": expected a nested array");
    const auto rows = j.size();
    const auto cols = j[0].size();
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (j[i].size() != cols) throw ValidationError(what + ": ragged rows");
        for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Vector vector_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw ValidationError(what + ": expected an array");
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

json model_to_json(const ProcessModel& model) {
    json acts = json::array();
    for (const auto& a : model.activities)
        acts.push_back(json{{"id", a.id},
                            {"name", a.name},
                            {"d_min", a.d_min},
                            {"d_max", a.d_max},
                            {"d_avg", a.d_avg},
                            {"resources", a.resources}});
    json edges = json::array();
    for (const auto& [p, c] : model.edges) edges.push_back(json::array({p, c}));
    json j{{"activities", acts},
           {"edges", edges},
           {"periodic", model.periodic},
           {"duration_mode", model.duration_mode == DurationMode::beta ? "beta" : "exponential"}};
    if (model.resource_constrained) j["resource_constrained"] = true;
    return j;
}

ProcessModel model_from_json(const json& j) {
    ProcessModel model;
    if (!j.contains("activities")) throw ValidationError("model: missing 'activities'");
    for (const auto& a : j.at("activities")) {
        Activity act;
        act.id = a.at("id").get<int>();
        act.name = a.value("name", "a" + std::to_string(act.id));
        act.d_min = a.at("d_min").get<double>();
        act.d_max = a.at("d_max").get<double>();
        act.d_avg = a.at("d_avg").get<double>();
        if (a.contains("resources")) act.resources = a.at("resources").get<std::vector<int>>();
        std::sort(act.resources.begin(), act.resources.end());
        model.activities.push_back(std::move(act));
    }
    for (const auto& e : j.value("edges", json::array()))
        model.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    model.periodic = j.value("periodic", false);
    const std::string mode = j.value("duration_mode", "beta");
    if (mode == "beta") model.duration_mode = DurationMode::beta;
    else if (mode == "exponential") model.duration_mode = DurationMode::exponential;
    else throw ValidationError("model: unknown duration_mode '" + mode + "'");
    model.resource_constrained = j.value("resource_constrained", false);
    model.validate();
    return model;
}

json hmm_to_json(const Hmm& hmm) {
    return json{{"n_states", hmm.n_states}, {"n_observations", hmm.n_observations},
                {"dt", hmm.dt},             {"pi", vector_to_json(hmm.pi)},
                {"T", matrix_to_json(hmm.T)}, {"E", matrix_to_json(hmm.E)}};
}

Hmm hmm_from_json(const json& j) {
    Hmm hmm;
    hmm.n_states = j.at("n_states").get<int>();
    hmm.n_observations = j.at("n_observations").get<int>();
    hmm.dt = j.at("dt").get<double>();
    hmm.pi = vector_from_json(j.at("pi"), "hmm pi");
    hmm.T = matrix_from_json(j.at("T"), "hmm T");
    hmm.E = matrix_from_json(j.at("E"), "hmm E");
    hmm.validate();
    return hmm;
}

json stats_to_json(const JointStats& stats) {
    return json{{"k", stats.k},
                {"tensor", stats.tensor.data()},
                {"matrix", matrix_to_json(stats.matrix)},
                {"triple_count", stats.triple_count},
                {"pair_count", stats.pair_count}};
}

JointStats stats_from_json(const json& j) {
    JointStats stats;
    stats.k = j.at("k").get<int>();
    stats.tensor = Tensor3(stats.k);
    const auto flat = j.at("tensor").get<std::vector<double>>();
    if (flat.size() != stats.tensor.data().size())
        throw ValidationError("stats: tensor length does not match k^3");
    stats.tensor.data() = flat;
    stats.matrix = matrix_from_json(j.at("matrix"), "stats matrix");
    if (stats.matrix.rows() != stats.k || stats.matrix.cols() != stats.k)
        throw ValidationError("stats: matrix shape does not match k");
    stats.triple_count = j.value("triple_count", 0ULL);
    stats.pair_count = j.value("pair_count", 0ULL);
    return stats;
}

json factors_to_json(const FactorSet& f) {
    return json{{"rank", f.rank()},        {"A", matrix_to_json(f.A)},
                {"B", matrix_to_json(f.B)}, {"C", matrix_to_json(f.C)},
                {"D", matrix_to_json(f.D)}, {"objective", f.objective},
                {"iterations", f.iterations}, {"seed", f.seed}};
}

FactorSet factors_from_json(const json& j) {
    FactorSet f;
    f.A = matrix_from_json(j.at("A"), "factors A");
    f.B = matrix_from_json(j.at("B"), "factors B");
    f.C = matrix_from_json(j.at("C"), "factors C");
    f.D = matrix_from_json(j.at("D"), "factors D");
    f.objective = j.value("objective", 0.0);
    f.iterations = j.value("iterations", 0);
    f.seed = j.value("seed", 0ULL);
    return f;
}

json report_to_json(const SelectionReport& report) {
    json per_rank = json::array();
    for (const auto& r : report.per_rank)
        per_rank.push_back(json{{"rank", r.rank},
                                {"silhouette_mean", r.silhouette_mean},
                                {"silhouette_min", r.silhouette_min},
                                {"rel_objective", r.rel_objective}});
    json j{{"per_rank", per_rank}};
    if (report.selected_rank) {
        j["selected_rank"] = *report.selected_rank;
        j["centroid_factors"] = factors_to_json(report.centroids.at(*report.selected_rank));
    } else {
        j["selected_rank"] = nullptr;
    }
    return j;
}

SelectionReport report_from_json(const json& j) {
    SelectionReport report;
    for (const auto& r : j.at("per_rank"))
        report.per_rank.push_back({r.at("rank").get<int>(), r.at("silhouette_mean").get<double>(),
                                   r.at("silhouette_min").get<double>(),
                                   r.at("rel_objective").get<double>()});
    if (j.contains("selected_rank") && !j.at("selected_rank").is_null()) {
        report.selected_rank = j.at("selected_rank").get<int>();
        if (j.contains("centroid_factors"))
            report.centroids[*report.selected_rank] = factors_from_json(j.at("centroid_factors"));
    }
    return report;
}

Matrix emission_from_json(const json& j) {
    if (j.is_array()) return matrix_from_json(j, "emission");
    if (j.contains("E")) return matrix_from_json(j.at("E"), "emission");
    throw ValidationError("emission: expected a nested array or an object with 'E'");
}

void write_timelines(std::ostream& out, const std::vector<RunTimeline>& timelines,
                     const std::vector<std::string>& activity_names, const Meta& meta) {
    json head{{"meta", meta.to_json()}};
    if (!activity_names.empty()) head["activity_names"] = activity_names;
    out << head.dump() << "\n";
    for (const auto& t : timelines) {
        json entries = json::array();
        for (const auto& e : t.entries)
            entries.push_back(json{{"id", e.activity}, {"start", e.start}, {"end", e.end}});
        out << json{{"run", t.run_id}, {"activities", entries}}.dump() << "\n";
    }
}

TimelineFile read_timelines(std::istream& in) {
    TimelineFile file;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        if (j.contains("meta")) {
            if (j.contains("activity_names"))
                file.activity_names = j.at("activity_names").get<std::vector<std::string>>();
            continue;
        }
        RunTimeline t;
        t.run_id = j.at("run").get<int>();
        for (const auto& e : j.at("activities"))
            t.entries.push_back({e.at("id").get<int>(), e.at("start").get<double>(),
                                 e.at("end").get<double>()});
        file.timelines.push_back(std::move(t));
    }
    if (file.timelines.empty()) throw ValidationError("timelines: no runs found");
    return file;
}

void write_sequences(std::ostream& out, const std::vector<std::vector<int>>& sequences,
                     const Meta& meta) {
    out << json{{"meta", meta.to_json()}}.dump() << "\n";
    for (const auto& s : sequences) out << json(s).dump() << "\n";
}

std::vector<std::vector<int>> read_sequences(std::istream& in) {
    std::vector<std::vector<int>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        if (j.is_object() && j.contains("meta")) continue;
        out.push_back(j.get<std::vector<int>>());
    }
    if (out.empty()) throw ValidationError("sequences: no data lines found");
    return out;
}

namespace {

void write_csv_meta(std::ostream& out, const Meta& meta) {
    out << "# tool=" << kToolName << " version=" << kVersion << " seed=" << meta.seed
        << " config_hash=" << meta.config_hash << " created=" << meta.created << "\n";
}

}  // namespace

void write_selection_csv(std::ostream& out, const SelectionReport& report, const Meta& meta) {
    write_csv_meta(out, meta);
    out << "rank,silhouette_mean,silhouette_min,rel_objective\n";
    out << std::setprecision(12);
    for (const auto& r : report.per_rank)
        out << r.rank << "," << r.silhouette_mean << "," << r.silhouette_min << ","
            << r.rel_objective << "\n";
}

void write_evaluation_csv(std::ostream& out, const std::vector<EvalRow>& rows, const Meta& meta) {
    write_csv_meta(out, meta);
    out << "rank,nmi,distance,trials_excluded\n";
    out << std::setprecision(12);
    for (const auto& r : rows) {
        out << r.rank << "," << r.nmi << ",";
        if (r.distance) out << *r.distance;
        out << "," << r.trials_excluded << "\n";
    }
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace ntfhmm

#include "ntfhmm/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ntfhmm/evaluation.hpp"
#include "ntfhmm/event_log.hpp"
#include "ntfhmm/parallel.hpp"
#include "ntfhmm/rng.hpp"
#include "ntfhmm/serialize.hpp"
#include "ntfhmm/version.hpp"

namespace fs = std::filesystem;

namespace ntfhmm {

namespace {

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("NTFHMM_SEED")) return std::strtoull(env, nullptr, 10);
    return 1;
}

std::vector<int> parse_ranks(const std::string& spec) {
    std::vector<int> ranks;
    std::stringstream ss(spec);
    std::string token;
    while (std::getline(ss, token, ',')) {
        const auto dots = token.find("..");
        if (dots != std::string::npos) {
            const int lo = std::stoi(token.substr(0, dots));
            const int hi = std::stoi(token.substr(dots + 2));
            if (hi < lo) throw ValidationError("ranks: empty range '" + token + "'");
            for (int r = lo; r <= hi; ++r) ranks.push_back(r);
        } else if (!token.empty()) {
            ranks.push_back(std::stoi(token));
        }
    }
    if (ranks.empty()) throw ValidationError("ranks: nothing parsed from '" + spec + "'");
    return ranks;
}

std::vector<std::string> split_list(const std::string& spec) {
    std::vector<std::string> out;
    std::stringstream ss(spec);
    std::string token;
    while (std::getline(ss, token, ',')) {
        const auto b = token.find_first_not_of(' ');
        if (b == std::string::npos) continue;
        const auto e = token.find_last_not_of(' ');
        out.push_back(token.substr(b, e - b + 1));
    }
    return out;
}

TimelineFile load_timelines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return read_timelines(in);
}

std::vector<std::vector<int>> load_sequences(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return read_sequences(in);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    return out;
}

json with_meta(json artifact, const Meta& meta, const json& config) {
    artifact["meta"] = meta.to_json();
    artifact["config"] = config;
    return artifact;
}

struct PipelineFlags {
    std::string model, timelines, observations, stats, emission, out, states_out;
    std::string reference, candidates, log_path, order, tail, ranks, dir;
    ColumnMapping columns;
    double interval = 20.0;
    int runs = 1000;
    int k = 0;
    int rank = 0;
    int restarts = 10;
    int ensemble = 50;
    double epsilon = 0.03;
    double keep_fraction = 0.10;
    int trials = 100;
    int length = 10000;
    int iters = 20000;
    double tol = 1e-8;
    unsigned workers = 0;
    std::optional<std::uint64_t> seed;
};

int do_simulate(const PipelineFlags& f) {
    const ProcessModel model = model_from_json(load_json_file(f.model));
    const std::uint64_t seed = resolve_seed(f.seed);
    const auto timelines = simulate_ensemble(model, f.runs, seed);
    std::vector<std::string> names;
    int max_id = 0;
    for (const auto& a : model.activities) max_id = std::max(max_id, a.id);
    names.resize(max_id + 1);
    for (const auto& a : model.activities) names[a.id] = a.name;
    const json config{{"command", "simulate"}, {"model", f.model}, {"runs", f.runs}, {"seed", seed}};
    auto out = open_out(f.out);
    write_timelines(out, timelines, names, make_meta(seed, config));
    std::cerr << "wrote " << timelines.size() << " runs to " << f.out << "\n";
    return 0;
}

int do_observe(const PipelineFlags& f) {
    const ProcessModel model = model_from_json(load_json_file(f.model));
    const auto timelines = load_timelines(f.timelines).timelines;
    const auto states = enumerate_states(model, timelines);
    const Matrix emission = emission_from_json(load_json_file(f.emission));
    if (emission.rows() != static_cast<Eigen::Index>(states.size()))
        throw ValidationError("observe: emission has " + std::to_string(emission.rows()) +
                              " rows but " + std::to_string(states.size()) +
                              " states were enumerated");
    const std::uint64_t seed = resolve_seed(f.seed);
    const auto state_seqs = sample_state_sequences(model, timelines, states, f.interval);

    auto eng = make_engine(mix_seed(seed, {0x6f627365ULL}));
    std::vector<std::vector<int>> obs_seqs;
    for (const auto& sseq : state_seqs) {
        std::vector<int> obs(sseq.size());
        for (std::size_t t = 0; t < sseq.size(); ++t)
            obs[t] = categorical(eng, emission.row(sseq[t]), static_cast<int>(emission.cols()));
        obs_seqs.push_back(std::move(obs));
    }

    const json config{{"command", "observe"},
                      {"model", f.model},
                      {"timelines", f.timelines},
                      {"interval", f.interval},
                      {"emission", f.emission},
                      {"seed", seed}};
    const Meta meta = make_meta(seed, config);
    auto out = open_out(f.out);
    write_sequences(out, obs_seqs, meta);
    if (!f.states_out.empty()) {
        json st = json::array();
        for (const auto& s : states)
            st.push_back(json{{"id", s.id}, {"members", s.members},
                              {"resource_union", s.resource_union}});
        save_json_file(f.states_out, with_meta(json{{"states", st}}, meta, config));
    }
    std::size_t total = 0;
    for (const auto& s : obs_seqs) total += s.size();
    std::cerr << "wrote " << obs_seqs.size() << " sequence(s), " << total << " observations\n";
    return 0;
}

int do_stats(const PipelineFlags& f) {
    const auto sequences = load_sequences(f.observations);
    int k = f.k;
    if (k == 0) {
        for (const auto& s : sequences)
            for (int v : s) k = std::max(k, v + 1);
    }
    const JointStats stats = accumulate(sequences, k);
    const std::uint64_t seed = resolve_seed(f.seed);
    const json config{{"command", "stats"}, {"observations", f.observations}, {"k", k}};
    save_json_file(f.out, with_meta(stats_to_json(stats), make_meta(seed, config), config));
    std::cerr << "accumulated " << stats.triple_count << " triples, " << stats.pair_count
              << " pairs (k=" << k << ")\n";
    return 0;
}

int do_reference_hmm(const PipelineFlags& f) {
    const ProcessModel model = model_from_json(load_json_file(f.model));
    const auto timelines = load_timelines(f.timelines).timelines;
    const auto states = enumerate_states(model, timelines);
    const Matrix emission = emission_from_json(load_json_file(f.emission));
    std::vector<std::string> warnings;
    const Hmm hmm = estimate_reference_hmm(model, states, timelines, f.interval, emission, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    const std::uint64_t seed = resolve_seed(f.seed);
    const json config{{"command", "reference-hmm"},
                      {"model", f.model},
                      {"timelines", f.timelines},
                      {"interval", f.interval},
                      {"emission", f.emission}};
    save_json_file(f.out, with_meta(hmm_to_json(hmm), make_meta(seed, config), config));
    std::cerr << "reference HMM with " << hmm.n_states << " states written to " << f.out << "\n";
    return 0;
}

int do_factorize(const PipelineFlags& f) {
    const JointStats stats = stats_from_json(load_json_file(f.stats));
    if (f.rank < 1) throw ValidationError("factorize: --rank must be >= 1");
    const std::uint64_t seed = resolve_seed(f.seed);
    MuOptions opts;
    opts.max_iters = f.iters;
    opts.tol = f.tol;
    FactorSet best;
    for (int r = 0; r < f.restarts; ++r) {
        FactorSet cand = multiplicative_updates(
            stats, f.rank, mix_seed(seed, {static_cast<std::uint64_t>(f.rank),
                                           static_cast<std::uint64_t>(r)}), opts);
        if (r == 0 || cand.objective < best.objective) best = std::move(cand);
    }
    const json config{{"command", "factorize"}, {"stats", f.stats},     {"rank", f.rank},
                      {"restarts", f.restarts}, {"iters", f.iters},     {"tol", f.tol},
                      {"seed", seed}};
    save_json_file(f.out, with_meta(factors_to_json(best), make_meta(seed, config), config));
    std::cerr << "rank " << f.rank << " objective " << best.objective << " after "
              << best.iterations << " iterations\n";
    return 0;
}

int do_select(const PipelineFlags& f) {
    const JointStats stats = stats_from_json(load_json_file(f.stats));
    SelectionConfig config;
    config.candidate_ranks = parse_ranks(f.ranks);
    config.ensemble_size = f.ensemble;
    config.epsilon = f.epsilon;
    config.restarts = f.restarts;
    config.keep_fraction = f.keep_fraction;
    config.mu.max_iters = f.iters;
    config.mu.tol = f.tol;
    config.seed = resolve_seed(f.seed);
    config.workers = f.workers;

    const SelectionReport report = select_rank(stats, config);

    fs::create_directories(f.out);
    const json config_json{{"command", "select"},
                           {"stats", f.stats},
                           {"ranks", f.ranks},
                           {"ensemble", f.ensemble},
                           {"epsilon", f.epsilon},
                           {"restarts", f.restarts},
                           {"keep_fraction", f.keep_fraction},
                           {"iters", f.iters},
                           {"tol", f.tol},
                           {"seed", config.seed}};
    const Meta meta = make_meta(config.seed, config_json);
    save_json_file((fs::path(f.out) / "selection.json").string(),
                   with_meta(report_to_json(report), meta, config_json));
    auto csv = open_out((fs::path(f.out) / "selection.csv").string());
    write_selection_csv(csv, report, meta);

    // the stats time gap is not recorded in the stats file; candidate HMMs get dt from --interval
    for (const auto& [rank, factors] : report.centroids) {
        const Hmm hmm = factors_to_hmm(factors, f.interval);
        save_json_file((fs::path(f.out) / ("hmm_rank_" + std::to_string(rank) + ".json")).string(),
                       with_meta(hmm_to_json(hmm), meta, config_json));
    }
    if (report.selected_rank) {
        const Hmm hmm = factors_to_hmm(report.centroid_factors(), f.interval);
        save_json_file((fs::path(f.out) / "hmm_selected.json").string(),
                       with_meta(hmm_to_json(hmm), meta, config_json));
        std::cerr << "selected rank " << *report.selected_rank << "\n";
    } else {
        std::cerr << "no rank passed the stability thresholds; see selection.csv\n";
    }
    for (const auto& r : report.per_rank)
        std::cerr << "  rank " << r.rank << ": silhouette " << r.silhouette_mean << " (min "
                  << r.silhouette_min << "), rel objective " << r.rel_objective << "\n";
    return 0;
}

int do_evaluate(const PipelineFlags& f) {
    const Hmm reference = hmm_from_json(load_json_file(f.reference));
    std::map<int, Hmm> candidates;
    for (const auto& entry : fs::directory_iterator(f.candidates)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("hmm_rank_", 0) != 0 || entry.path().extension() != ".json") continue;
        const int rank = std::stoi(name.substr(9));
        candidates[rank] = hmm_from_json(load_json_file(entry.path().string()));
    }
    if (candidates.empty())
        throw ValidationError("evaluate: no hmm_rank_<L>.json files in " + f.candidates);
    const std::uint64_t seed = resolve_seed(f.seed);
    const auto rows = evaluate_pipeline(reference, candidates, f.trials, f.length, seed);
    const json config{{"command", "evaluate"}, {"reference", f.reference},
                      {"candidates", f.candidates}, {"trials", f.trials},
                      {"length", f.length},     {"seed", seed}};
    auto out = open_out(f.out);
    write_evaluation_csv(out, rows, make_meta(seed, config));
    for (const auto& r : rows) {
        std::cerr << "  rank " << r.rank << ": nmi " << r.nmi;
        if (r.distance) std::cerr << ", distance " << *r.distance;
        std::cerr << "\n";
    }
    return 0;
}

int do_ingest_log(const PipelineFlags& f) {
    std::ifstream in(f.log_path);
    if (!in) throw ValidationError("cannot open " + f.log_path);
    const ParsedLog parsed = parse_log(in, f.columns);
    const CaseBuildResult built = build_case_timelines(parsed.records);
    for (const auto& issue : built.issues) std::cerr << "warning: " << issue << "\n";

    const auto order = split_list(f.order);
    const auto tail_list = split_list(f.tail);
    const std::set<std::string> tail(tail_list.begin(), tail_list.end());
    const auto conforming = filter_conforming_cases(built.cases, order, tail);

    std::vector<RunTimeline> timelines;
    std::vector<std::string> names;
    int run_id = 0;
    for (const auto& c : conforming) {
        SimplifiedTimeline s = collapse_gaps(c, tail, run_id++);
        if (names.empty()) names = s.activity_names;
        timelines.push_back(std::move(s.timeline));
    }
    if (timelines.empty()) throw ValidationError("ingest-log: no conforming cases");

    const std::uint64_t seed = resolve_seed(f.seed);
    const json config{{"command", "ingest-log"}, {"log", f.log_path},
                      {"order", f.order},        {"parallel_tail", f.tail}};
    auto out = open_out(f.out);
    write_timelines(out, timelines, names, make_meta(seed, config));
    std::cerr << "cases: " << built.cases.size() + built.excluded_cases.size() << " parsed, "
              << built.excluded_cases.size() << " malformed, " << conforming.size()
              << " conforming\n";
    return 0;
}

int do_report(const PipelineFlags& f) {
    const fs::path dir(f.dir);
    const fs::path selection_path = dir / "selection.json";
    const fs::path eval_path = dir / "evaluation.csv";
    if (!fs::exists(selection_path))
        throw ValidationError("report: missing " + selection_path.string());
    const SelectionReport report = report_from_json(load_json_file(selection_path.string()));

    // rank -> (nmi, distance, excluded)
    std::map<int, std::tuple<double, std::optional<double>, int>> eval;
    if (fs::exists(eval_path)) {
        std::ifstream in(eval_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#' || line.rfind("rank,", 0) == 0) continue;
            std::stringstream ss(line);
            std::string rank_s, nmi_s, dist_s, excl_s;
            std::getline(ss, rank_s, ',');
            std::getline(ss, nmi_s, ',');
            std::getline(ss, dist_s, ',');
            std::getline(ss, excl_s, ',');
            std::optional<double> dist;
            if (!dist_s.empty()) dist = std::stod(dist_s);
            eval[std::stoi(rank_s)] = {std::stod(nmi_s), dist,
                                       excl_s.empty() ? 0 : std::stoi(excl_s)};
        }
        for (const auto& [rank, _] : eval) {
            const bool known = std::any_of(report.per_rank.begin(), report.per_rank.end(),
                                           [&](const RankDiagnostics& d) { return d.rank == rank; });
            if (!known)
                throw ValidationError("report: evaluation.csv has rank " + std::to_string(rank) +
                                      " absent from selection.json");
        }
    }

    json rows = json::array();
    std::ostringstream csv;
    csv << "rank,silhouette_mean,silhouette_min,rel_objective,nmi,distance,trials_excluded\n";
    csv << std::setprecision(12);
    for (const auto& r : report.per_rank) {
        json row{{"rank", r.rank},
                 {"silhouette_mean", r.silhouette_mean},
                 {"silhouette_min", r.silhouette_min},
                 {"rel_objective", r.rel_objective}};
        csv << r.rank << "," << r.silhouette_mean << "," << r.silhouette_min << ","
            << r.rel_objective << ",";
        const auto it = eval.find(r.rank);
        if (it != eval.end()) {
            row["nmi"] = std::get<0>(it->second);
            csv << std::get<0>(it->second);
            if (std::get<1>(it->second)) row["distance"] = *std::get<1>(it->second);
            csv << ",";
            if (std::get<1>(it->second)) csv << *std::get<1>(it->second);
            csv << "," << std::get<2>(it->second);
            row["trials_excluded"] = std::get<2>(it->second);
        } else {
            csv << ",,";
        }
        csv << "\n";
        rows.push_back(std::move(row));
    }

    json summary{{"rows", rows}};
    if (report.selected_rank) {
        summary["selected_rank"] = *report.selected_rank;
        summary["hmm_file"] = "hmm_selected.json";
    } else {
        summary["selected_rank"] = nullptr;
    }
    const std::uint64_t seed = resolve_seed(f.seed);
    const json config{{"command", "report"}, {"dir", f.dir}};
    save_json_file((dir / "report.json").string(), with_meta(summary, make_meta(seed, config), config));
    auto out = open_out((dir / "report.csv").string());
    out << csv.str();

    if (report.selected_rank)
        std::cout << "selected rank: " << *report.selected_rank
                  << " (final model: " << (dir / "hmm_selected.json").string() << ")\n";
    else
        std::cout << "no rank selected; inspect " << (dir / "report.csv").string() << "\n";
    for (const auto& r : report.per_rank)
        std::cout << "  rank " << r.rank << ": silhouette " << r.silhouette_mean
                  << ", rel objective " << r.rel_objective << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"minimal HMM construction from process models via joint tensor factorization"};
    app.set_version_flag("--version", std::string(kVersion));
    app.set_config("--config");
    app.require_subcommand(1);

    PipelineFlags f;
    std::optional<std::uint64_t> seed_flag;

    auto add_seed = [&](CLI::App* cmd) { cmd->add_option("--seed", seed_flag, "master seed"); };
    auto add_workers = [&](CLI::App* cmd) {
        cmd->add_option("--workers", f.workers, "worker threads (0 = all cores)");
    };

    auto* simulate = app.add_subcommand("simulate", "simulate an ensemble of process runs");
    simulate->add_option("--model", f.model, "process model JSON")->required();
    simulate->add_option("--runs", f.runs, "number of runs (cycles when periodic)");
    simulate->add_option("--out", f.out, "timelines JSONL output")->required();
    add_seed(simulate);

    auto* observe = app.add_subcommand("observe", "sample states and emit observations");
    observe->add_option("--model", f.model)->required();
    observe->add_option("--timelines", f.timelines, "timelines JSONL from simulate")->required();
    observe->add_option("--interval", f.interval, "sampling gap in hours");
    observe->add_option("--emission", f.emission, "emission matrix JSON")->required();
    observe->add_option("--out", f.out, "observations JSONL output")->required();
    observe->add_option("--states-out", f.states_out, "also write the enumerated states");
    add_seed(observe);

    auto* stats = app.add_subcommand("stats", "accumulate joint co-occurrence statistics");
    stats->add_option("--observations", f.observations, "observations JSONL")->required();
    stats->add_option("--k", f.k, "alphabet size (default: inferred)");
    stats->add_option("--out", f.out, "stats JSON output")->required();
    add_seed(stats);

    auto* ref = app.add_subcommand("reference-hmm", "estimate the reference HMM");
    ref->add_option("--model", f.model)->required();
    ref->add_option("--timelines", f.timelines)->required();
    ref->add_option("--interval", f.interval);
    ref->add_option("--emission", f.emission)->required();
    ref->add_option("--out", f.out)->required();
    add_seed(ref);

    auto* factorize = app.add_subcommand("factorize", "decompose statistics at one rank");
    factorize->add_option("--stats", f.stats)->required();
    factorize->add_option("--rank", f.rank)->required();
    factorize->add_option("--restarts", f.restarts);
    factorize->add_option("--iters", f.iters, "max iterations");
    factorize->add_option("--tol", f.tol, "relative objective tolerance");
    factorize->add_option("--out", f.out)->required();
    add_seed(factorize);

    auto* select = app.add_subcommand("select", "stability-based rank selection");
    select->add_option("--stats", f.stats)->required();
    select->add_option("--ranks", f.ranks, "candidate ranks, e.g. 2..8 or 2,4,6")->required();
    select->add_option("--ensemble", f.ensemble, "perturbed copies per rank");
    select->add_option("--epsilon", f.epsilon, "perturbation half-width");
    select->add_option("--restarts", f.restarts);
    select->add_option("--keep-fraction", f.keep_fraction);
    select->add_option("--iters", f.iters);
    select->add_option("--tol", f.tol);
    select->add_option("--interval", f.interval, "time gap recorded in candidate HMMs");
    select->add_option("--out", f.out, "output directory")->required();
    add_seed(select);
    add_workers(select);

    auto* evaluate = app.add_subcommand("evaluate", "NMI and distance scores per rank");
    evaluate->add_option("--reference", f.reference, "reference HMM JSON")->required();
    evaluate->add_option("--candidates", f.candidates, "directory with hmm_rank_<L>.json")
        ->required();
    evaluate->add_option("--trials", f.trials);
    evaluate->add_option("--length", f.length);
    evaluate->add_option("--out", f.out, "evaluation CSV output")->required();
    add_seed(evaluate);

    auto* ingest = app.add_subcommand("ingest-log", "simplify a CSV event log into timelines");
    ingest->add_option("--log", f.log_path, "CSV event log")->required();
    ingest->add_option("--col-case", f.columns.case_col, "case id column");
    ingest->add_option("--col-activity", f.columns.activity_col, "activity column");
    ingest->add_option("--col-type", f.columns.type_col, "event type column (start/complete)");
    ingest->add_option("--col-time", f.columns.time_col, "timestamp column");
    ingest->add_option("--col-resource", f.columns.resource_col, "resource column");
    ingest->add_option("--order", f.order, "required sequential activities, comma separated")
        ->required();
    ingest->add_option("--parallel-tail", f.tail, "final concurrent activities, comma separated");
    ingest->add_option("--out", f.out)->required();
    add_seed(ingest);

    auto* report = app.add_subcommand("report", "merge selection and evaluation artifacts");
    report->add_option("--dir", f.dir, "directory with selection.json [evaluation.csv]")
        ->required();
    add_seed(report);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    f.seed = seed_flag;
    try {
        if (simulate->parsed()) return do_simulate(f);
        if (observe->parsed()) return do_observe(f);
        if (stats->parsed()) return do_stats(f);
        if (ref->parsed()) return do_reference_hmm(f);
        if (factorize->parsed()) return do_factorize(f);
        if (select->parsed()) return do_select(f);
        if (evaluate->parsed()) return do_evaluate(f);
        if (ingest->parsed()) return do_ingest_log(f);
        if (report->parsed()) return do_report(f);
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace ntfhmm

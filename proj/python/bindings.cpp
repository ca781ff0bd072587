#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ntfhmm/cooccurrence.hpp"
#include "ntfhmm/evaluation.hpp"
#include "ntfhmm/factorization.hpp"
#include "ntfhmm/hmm.hpp"
#include "ntfhmm/model_selection.hpp"
#include "ntfhmm/process_model.hpp"
#include "ntfhmm/rng.hpp"
#include "ntfhmm/serialize.hpp"
#include "ntfhmm/version.hpp"

namespace py = pybind11;
using namespace ntfhmm;

namespace {

py::array_t<double> tensor_to_numpy(const Tensor3& t) {
    const int k = t.dim();
    py::array_t<double> out({k, k, k});
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

Tensor3 tensor_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3 || a.shape(0) != a.shape(1) || a.shape(1) != a.shape(2))
        throw ValidationError("tensor must be a (k, k, k) array");
    Tensor3 t(static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), t.data().begin());
    return t;
}

std::vector<SuperActivity> states_from_members(const ProcessModel& model,
                                               const std::vector<std::vector<int>>& members) {
    std::vector<SuperActivity> states;
    for (std::size_t i = 0; i < members.size(); ++i) {
        SuperActivity s;
        s.id = static_cast<int>(i);
        s.members = members[i];
        std::sort(s.members.begin(), s.members.end());
        std::set<int> ru;
        for (int m : s.members) {
            const auto& res = model.activity(m).resources;
            ru.insert(res.begin(), res.end());
        }
        s.resource_union.assign(ru.begin(), ru.end());
        states.push_back(std::move(s));
    }
    return states;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Minimal-HMM construction from process models via joint non-negative "
              "tensor/matrix factorization with stability-based model selection.";
    m.attr("__version__") = kVersion;

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

    py::class_<ProcessModel>(m, "ProcessModel")
        .def_static("from_json", [](const std::string& text) {
            return model_from_json(json::parse(text));
        })
        .def("to_json", [](const ProcessModel& self) { return model_to_json(self).dump(); })
        .def_property_readonly("periodic", [](const ProcessModel& self) { return self.periodic; })
        .def_property_readonly("n_activities",
                               [](const ProcessModel& self) { return self.activities.size(); });

    py::class_<RunTimeline>(m, "RunTimeline")
        .def_property_readonly("run_id", [](const RunTimeline& self) { return self.run_id; })
        .def_property_readonly("entries", [](const RunTimeline& self) {
            std::vector<std::tuple<int, double, double>> out;
            for (const auto& e : self.entries) out.emplace_back(e.activity, e.start, e.end);
            return out;
        });

    m.def("simulate_ensemble", &simulate_ensemble, py::arg("model"), py::arg("runs"),
          py::arg("seed"));
    m.def(
        "enumerate_states",
        [](const ProcessModel& model, const std::vector<RunTimeline>& timelines) {
            std::vector<std::vector<int>> members;
            for (const auto& s : enumerate_states(model, timelines)) members.push_back(s.members);
            return members;
        },
        py::arg("model"), py::arg("timelines"),
        "Distinct simultaneously-active activity sets, ordered lexicographically.");
    m.def(
        "sample_state_sequences",
        [](const ProcessModel& model, const std::vector<RunTimeline>& timelines,
           const std::vector<std::vector<int>>& states, double interval) {
            return sample_state_sequences(model, timelines, states_from_members(model, states),
                                          interval);
        },
        py::arg("model"), py::arg("timelines"), py::arg("states"), py::arg("interval"));
    m.def(
        "build_rate_matrix",
        [](const ProcessModel& model, const std::vector<std::vector<int>>& states,
           const std::vector<double>& means) {
            return build_rate_matrix(model, states_from_members(model, states), means);
        },
        py::arg("model"), py::arg("states"), py::arg("means") = std::vector<double>{});
    m.def("mean_durations", &mean_durations, py::arg("model"), py::arg("timelines"));

    m.def("expm", &expm, py::arg("matrix"), "Matrix exponential (scaling-and-squaring, Pade).");
    m.def("transition_matrix", &transition_matrix, py::arg("rate_matrix"), py::arg("dt"));

    py::class_<Hmm>(m, "Hmm")
        .def(py::init([](const Vector& pi, const Matrix& T, const Matrix& E, double dt) {
                 Hmm h;
                 h.n_states = static_cast<int>(T.rows());
                 h.n_observations = static_cast<int>(E.cols());
                 h.pi = pi;
                 h.T = T;
                 h.E = E;
                 h.dt = dt;
                 h.validate();
                 return h;
             }),
             py::arg("pi"), py::arg("T"), py::arg("E"), py::arg("dt") = 1.0)
        .def_static("from_json",
                    [](const std::string& text) { return hmm_from_json(json::parse(text)); })
        .def("to_json", [](const Hmm& self) { return hmm_to_json(self).dump(); })
        .def_readonly("n_states", &Hmm::n_states)
        .def_readonly("n_observations", &Hmm::n_observations)
        .def_readonly("dt", &Hmm::dt)
        .def_readonly("pi", &Hmm::pi)
        .def_readonly("T", &Hmm::T)
        .def_readonly("E", &Hmm::E)
        .def("sample", &sample_observations, py::arg("length"), py::arg("seed"),
             "Returns (states, observations).")
        .def("viterbi", &viterbi, py::arg("observations"))
        .def("log_likelihood", &log_likelihood, py::arg("observations"));

    m.def("estimate_reference_hmm",
          [](const ProcessModel& model, const std::vector<std::vector<int>>& states,
             const std::vector<RunTimeline>& timelines, double interval, const Matrix& emission) {
              return estimate_reference_hmm(model, states_from_members(model, states), timelines,
                                            interval, emission);
          },
          py::arg("model"), py::arg("states"), py::arg("timelines"), py::arg("interval"),
          py::arg("emission"));

    py::class_<JointStats>(m, "JointStats")
        .def(py::init([](const py::array_t<double, py::array::c_style | py::array::forcecast>& tensor,
                         const Matrix& matrix) {
                 JointStats s;
                 s.tensor = tensor_from_numpy(tensor);
                 s.k = s.tensor.dim();
                 s.matrix = matrix;
                 if (matrix.rows() != s.k || matrix.cols() != s.k)
                     throw ValidationError("matrix shape must match the tensor");
                 return s;
             }),
             py::arg("tensor"), py::arg("matrix"))
        .def_readonly("k", &JointStats::k)
        .def_readonly("triple_count", &JointStats::triple_count)
        .def_readonly("pair_count", &JointStats::pair_count)
        .def_property_readonly("tensor",
                               [](const JointStats& self) { return tensor_to_numpy(self.tensor); })
        .def_readonly("matrix", &JointStats::matrix);

    m.def("accumulate", &accumulate, py::arg("sequences"), py::arg("n_observations"));
    m.def("perturb", &perturb, py::arg("stats"), py::arg("epsilon"), py::arg("seed"));

    py::class_<FactorSet>(m, "FactorSet")
        .def_readonly("A", &FactorSet::A)
        .def_readonly("B", &FactorSet::B)
        .def_readonly("C", &FactorSet::C)
        .def_readonly("D", &FactorSet::D)
        .def_readonly("objective", &FactorSet::objective)
        .def_readonly("iterations", &FactorSet::iterations)
        .def_property_readonly("rank", &FactorSet::rank);

    m.def(
        "factorize",
        [](const JointStats& stats, int rank, std::uint64_t seed, int restarts, int max_iters,
           double tol) {
            MuOptions opts;
            opts.max_iters = max_iters;
            opts.tol = tol;
            FactorSet best;
            for (int r = 0; r < restarts; ++r) {
                FactorSet f = multiplicative_updates(
                    stats, rank, mix_seed(seed, {static_cast<std::uint64_t>(r)}), opts);
                if (r == 0 || f.objective < best.objective) best = std::move(f);
            }
            return best;
        },
        py::arg("stats"), py::arg("rank"), py::arg("seed") = 1, py::arg("restarts") = 1,
        py::arg("max_iters") = 20000, py::arg("tol") = 1e-8,
        "Joint multiplicative-updates decomposition; best of `restarts`.");
    m.def("objective", &objective, py::arg("stats"), py::arg("factors"));
    m.def("factors_to_hmm",
          [](const FactorSet& f, double dt) { return factors_to_hmm(f, dt); },
          py::arg("factors"), py::arg("dt") = 1.0);

    py::class_<RankDiagnostics>(m, "RankDiagnostics")
        .def_readonly("rank", &RankDiagnostics::rank)
        .def_readonly("silhouette_mean", &RankDiagnostics::silhouette_mean)
        .def_readonly("silhouette_min", &RankDiagnostics::silhouette_min)
        .def_readonly("rel_objective", &RankDiagnostics::rel_objective);

    py::class_<SelectionReport>(m, "SelectionReport")
        .def_readonly("per_rank", &SelectionReport::per_rank)
        .def_property_readonly("selected_rank",
                               [](const SelectionReport& self) { return self.selected_rank; })
        .def_readonly("centroids", &SelectionReport::centroids);

    m.def(
        "select_rank",
        [](const JointStats& stats, const std::vector<int>& ranks, double epsilon, int ensemble,
           int restarts, double keep_fraction, int max_iters, double tol, std::uint64_t seed,
           unsigned workers) {
            SelectionConfig config;
            config.candidate_ranks = ranks;
            config.epsilon = epsilon;
            config.ensemble_size = ensemble;
            config.restarts = restarts;
            config.keep_fraction = keep_fraction;
            config.mu.max_iters = max_iters;
            config.mu.tol = tol;
            config.seed = seed;
            config.workers = workers;
            return select_rank(stats, config);
        },
        py::arg("stats"), py::arg("ranks"), py::arg("epsilon") = 0.03, py::arg("ensemble") = 50,
        py::arg("restarts") = 10, py::arg("keep_fraction") = 0.10, py::arg("max_iters") = 20000,
        py::arg("tol") = 1e-8, py::arg("seed") = 1, py::arg("workers") = 0,
        py::call_guard<py::gil_scoped_release>());

    m.def("nmi", &nmi, py::arg("ref_states"), py::arg("pred_states"));
    m.def(
        "distance",
        [](const Hmm& best_k, const Hmm& best_km1, const Hmm& reference, int trials, int length,
           std::uint64_t seed) {
            int excluded = 0;
            const double d = distance(best_k, best_km1, reference, trials, length, seed, &excluded);
            return py::make_tuple(d, excluded);
        },
        py::arg("best_k"), py::arg("best_k_minus_1"), py::arg("reference"),
        py::arg("trials") = 100, py::arg("length") = 10000, py::arg("seed") = 1,
        "Returns (mean per-step log-likelihood gap, trials excluded).");
}

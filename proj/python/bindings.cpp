#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bnpseg/errors.hpp"
#include "bnpseg/evaluation.hpp"
#include "bnpseg/io.hpp"
#include "bnpseg/samplers.hpp"

namespace py = pybind11;
using namespace bnpseg;

namespace {

std::shared_ptr<const Model> model_for(const Problem& problem, const PartitionPrior& prior,
                                       double phi) {
  return Model::create(problem.graph, problem.obs, base_measure_from_data(problem.obs, phi),
                       prior);
}

Problem make_problem(const std::vector<std::vector<Count>>& histograms,
                     const std::vector<std::tuple<SiteIndex, SiteIndex, double>>& edges,
                     std::optional<std::vector<Label>> ground_truth) {
  if (histograms.empty()) throw InputError("no histograms");
  const std::size_t bins = histograms.front().size();
  std::vector<Count> counts;
  for (const auto& h : histograms) {
    if (h.size() != bins) throw InputError("histograms differ in length");
    counts.insert(counts.end(), h.begin(), h.end());
  }
  std::vector<Edge> list;
  for (auto [i, j, b] : edges) list.push_back({i, j, b});
  Problem p{SiteGraph(histograms.size(), std::move(list)),
            Observations(histograms.size(), bins, std::move(counts)), std::move(ground_truth),
            std::nullopt};
  if (p.ground_truth && p.ground_truth->size() != histograms.size()) {
    throw InputError("ground truth length does not match the number of sites");
  }
  return p;
}

py::dict trace_to_dict(const ChainTrace& t) {
  py::list records;
  for (const TraceRecord& r : t.records) {
    py::dict d;
    d["iteration"] = r.iteration;
    d["log_posterior"] = r.log_posterior;
    d["clusters"] = r.clusters;
    d["seconds"] = r.seconds;
    if (!r.sizes.empty()) d["sizes"] = r.sizes;
    records.append(d);
  }
  py::dict out;
  out["records"] = records;
  out["best_log_posterior"] = t.best_log_posterior;
  out["best_iteration"] = t.best_iteration;
  out["best_labels"] = t.best_labels;
  out["final_labels"] = t.final_labels;
  return out;
}

py::dict summary_to_dict(const Summary& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["sd"] = s.sd;
  d["standard_error"] = s.standard_error;
  d["median"] = s.median;
  d["q05"] = s.q05;
  d["q25"] = s.q25;
  d["q75"] = s.q75;
  d["q95"] = s.q95;
  return d;
}

py::dict stats_to_dict(const PriorStats& s) {
  py::dict d;
  d["clusters"] = s.clusters;
  d["size_histogram"] = s.size_histogram;
  d["summary"] = summary_to_dict(s.summary);
  return d;
}

}  // namespace

PYBIND11_MODULE(_bnpseg, m) {
  m.doc() = "Bayesian nonparametric image segmentation with Potts-coupled partition priors";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  // Priors
  py::class_<MaxK>(m, "MaxK")
      .def(py::init([](int K) { return MaxK{K}; }), py::arg("K"))
      .def_readwrite("K", &MaxK::K);
  py::class_<FiniteDirichlet>(m, "FiniteDirichlet")
      .def(py::init([](int K, double alpha) { return FiniteDirichlet{K, alpha}; }), py::arg("K"),
           py::arg("alpha") = 1.0)
      .def_readwrite("K", &FiniteDirichlet::K)
      .def_readwrite("alpha", &FiniteDirichlet::alpha);
  py::class_<DirichletProcess>(m, "DirichletProcess")
      .def(py::init([](double alpha) { return DirichletProcess{alpha}; }), py::arg("alpha") = 1.0)
      .def_readwrite("alpha", &DirichletProcess::alpha);
  py::class_<PoissonDirichlet>(m, "PoissonDirichlet")
      .def(py::init([](double alpha, double theta) { return PoissonDirichlet{alpha, theta}; }),
           py::arg("alpha") = 1.0, py::arg("theta") = 0.0)
      .def_readwrite("alpha", &PoissonDirichlet::alpha)
      .def_readwrite("theta", &PoissonDirichlet::theta);
  py::class_<TruncatedDP>(m, "TruncatedDP")
      .def(py::init([](double alpha, int t_min) { return TruncatedDP{alpha, t_min}; }),
           py::arg("alpha") = 1.0, py::arg("t_min") = 1)
      .def_readwrite("alpha", &TruncatedDP::alpha)
      .def_readwrite("t_min", &TruncatedDP::t_min);
  m.def("describe", &describe, py::arg("prior"));
  m.def("log_epf", [](const PartitionPrior& prior, const std::vector<std::size_t>& sizes) {
    return log_epf(prior, sizes);
  }, py::arg("prior"), py::arg("sizes"));

  // Kernels
  py::enum_<DistanceKind>(m, "DistanceKind")
      .value("TOTAL_VARIATION", DistanceKind::kTotalVariation)
      .value("HELLINGER", DistanceKind::kHellinger);
  py::enum_<ScanOrder>(m, "ScanOrder")
      .value("ASCENDING", ScanOrder::kAscending)
      .value("RANDOM", ScanOrder::kRandom);
  py::class_<ConstantDelta>(m, "ConstantDelta")
      .def(py::init([](double lambda) { return ConstantDelta{lambda}; }), py::arg("lam") = 1.0)
      .def_readwrite("lam", &ConstantDelta::lambda);
  py::class_<DataDependentDelta>(m, "DataDependentDelta")
      .def(py::init([](double lambda, double tau, DistanceKind kind) {
             return DataDependentDelta{lambda, tau, kind};
           }),
           py::arg("lam") = 1.0, py::arg("tau") = 1.0,
           py::arg("distance") = DistanceKind::kTotalVariation)
      .def_readwrite("lam", &DataDependentDelta::lambda)
      .def_readwrite("tau", &DataDependentDelta::tau)
      .def_readwrite("distance", &DataDependentDelta::distance);
  py::class_<GibbsKernel>(m, "GibbsKernel").def(py::init<>());
  py::class_<GswKernel>(m, "GswKernel")
      .def(py::init([](DeltaRule rule, ScanOrder order) { return GswKernel{rule, order}; }),
           py::arg("rule") = ConstantDelta{1.0}, py::arg("order") = ScanOrder::kAscending);

  // Problems
  py::class_<Problem>(m, "Problem")
      .def_property_readonly("num_sites", [](const Problem& p) { return p.graph.num_sites(); })
      .def_property_readonly("num_edges", [](const Problem& p) { return p.graph.num_edges(); })
      .def_property_readonly("bins", [](const Problem& p) { return p.obs.bins(); })
      .def_property_readonly("ground_truth", [](const Problem& p) { return p.ground_truth; })
      .def("histogram",
           [](const Problem& p, SiteIndex s) {
             if (s >= p.obs.num_sites()) throw py::index_error("site out of range");
             const auto row = p.obs.row(s);
             return std::vector<Count>(row.begin(), row.end());
           },
           py::arg("site"))
      .def("edges",
           [](const Problem& p) {
             std::vector<std::tuple<SiteIndex, SiteIndex, double>> out;
             for (const Edge& e : p.graph.edges()) out.emplace_back(e.i, e.j, e.beta);
             return out;
           })
      .def("save", [](const Problem& p, const std::filesystem::path& path) {
        save_problem(path, p);
      }, py::arg("path"));

  m.def("make_problem", &make_problem, py::arg("histograms"), py::arg("edges"),
        py::arg("ground_truth") = std::nullopt);
  m.def("load_problem", &load_problem, py::arg("path"));
  m.def("synthesize",
        [](std::size_t width, std::size_t height, std::size_t clusters, double concentration,
           std::size_t pixels_per_site, std::size_t bins, double beta, std::uint64_t seed) {
          SyntheticSpec spec;
          spec.width = width;
          spec.height = height;
          spec.clusters = clusters;
          spec.concentration = concentration;
          spec.pixels_per_site = pixels_per_site;
          spec.bins = bins;
          spec.beta = beta;
          spec.seed = seed;
          return synthesize(spec);
        },
        py::arg("width") = 20, py::arg("height") = 20, py::arg("clusters") = 4,
        py::arg("concentration") = 0.5, py::arg("pixels_per_site") = 60, py::arg("bins") = 16,
        py::arg("beta") = 0.02, py::arg("seed") = 1);

  // Inference
  m.def("segment",
        [](const Problem& problem, const PartitionPrior& prior, const Kernel& kernel, double phi,
           std::uint64_t iterations, std::uint64_t seed, bool record_sizes, bool timing,
           std::optional<std::vector<Label>> init_labels) {
          const auto model = model_for(problem, prior, phi);
          ChainConfig cfg;
          cfg.iterations = iterations;
          cfg.seed = seed;
          cfg.record_sizes = record_sizes;
          cfg.timing = timing;
          if (init_labels) {
            cfg.init = InitKind::kLabels;
            cfg.init_labels = *init_labels;
          }
          ChainTrace trace;
          {
            py::gil_scoped_release release;
            trace = run_chain(model, kernel, cfg);
          }
          return trace_to_dict(trace);
        },
        py::arg("problem"), py::arg("prior") = DirichletProcess{3.0},
        py::arg("kernel") = GswKernel{ConstantDelta{10.0}}, py::arg("phi") = 50.0,
        py::arg("iterations") = 1000, py::arg("seed") = 1, py::arg("record_sizes") = false,
        py::arg("timing") = true, py::arg("init_labels") = std::nullopt);

  m.def("log_posterior",
        [](const Problem& problem, const PartitionPrior& prior, const std::vector<Label>& labels,
           double phi) {
          const auto model = model_for(problem, prior, phi);
          return ChainState(model, build_partition(model->graph, labels), 1).log_posterior();
        },
        py::arg("problem"), py::arg("prior"), py::arg("labels"), py::arg("phi") = 50.0);

  m.def("exact_posterior",
        [](const Problem& problem, const PartitionPrior& prior, double phi) {
          py::dict out;
          for (const auto& [rgs, prob] : exact_posterior(*model_for(problem, prior, phi))) {
            out[py::tuple(py::cast(rgs))] = prob;
          }
          return out;
        },
        py::arg("problem"), py::arg("prior"), py::arg("phi") = 50.0);

  m.def("enumerate_partitions", &enumerate_partitions, py::arg("n"));

  // Evaluation
  m.def("rand_index", [](const std::vector<Label>& a, const std::vector<Label>& b) {
    return rand_index(a, b);
  }, py::arg("a"), py::arg("b"));
  m.def("crp_expected_clusters", &crp_expected_clusters, py::arg("alpha"), py::arg("n"));
  m.def("crp_simulate",
        [](double alpha, std::size_t n, std::size_t draws, std::uint64_t seed) {
          return stats_to_dict(crp_simulate(alpha, n, draws, seed));
        },
        py::arg("alpha"), py::arg("n"), py::arg("draws") = 1000, py::arg("seed") = 1);
  m.def("prior_simulate",
        [](const PartitionPrior& prior, std::size_t n, double beta, const DeltaRule& rule,
           std::size_t draws, std::size_t sweeps_per_draw, std::size_t burn_in,
           std::size_t chains, std::uint64_t seed) {
          PriorSimConfig cfg;
          cfg.draws = draws;
          cfg.sweeps_per_draw = sweeps_per_draw;
          cfg.burn_in = burn_in;
          cfg.chains = chains;
          cfg.seed = seed;
          PriorStats stats;
          {
            py::gil_scoped_release release;
            stats = prior_simulate(prior, near_square_lattice(n, beta), rule, cfg);
          }
          return stats_to_dict(stats);
        },
        py::arg("prior"), py::arg("n"), py::arg("beta") = 0.0,
        py::arg("rule") = ConstantDelta{1.0}, py::arg("draws") = 1000,
        py::arg("sweeps_per_draw") = 200, py::arg("burn_in") = 200, py::arg("chains") = 1,
        py::arg("seed") = 1);
  m.def("ks_pvalue", [](const std::vector<double>& a, const std::vector<double>& b) {
    return ks_two_sample_pvalue(a, b);
  }, py::arg("a"), py::arg("b"));

  m.def("render_ppm",
        [](const Problem& problem, const std::vector<Label>& labels) {
          const auto bytes = encode_ppm(render_labels(problem, labels));
          return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
        },
        py::arg("problem"), py::arg("labels"));
}

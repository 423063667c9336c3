// bnpseg: command-line driver for Potts-partition image segmentation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "bnpseg/errors.hpp"
#include "bnpseg/evaluation.hpp"
#include "bnpseg/io.hpp"
#include "bnpseg/samplers.hpp"

namespace fs = std::filesystem;
using namespace bnpseg;

namespace {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kParse = 2,
  kConfig = 3,
  kRuntime = 4,
};

fs::path default_output_dir() {
  if (const char* env = std::getenv("BNPSEG_OUTPUT_DIR"); env && *env) return env;
  return ".";
}

struct PriorOptions {
  std::string kind = "dp";
  double alpha = 3.0;
  double theta = 0.0;
  int tmin = 0;
  int K = 10;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--prior", kind, "Partition prior")
        ->check(CLI::IsMember({"dp", "truncated-dp", "finite-dirichlet", "maxk",
                               "poisson-dirichlet"}));
    cmd->add_option("--alpha", alpha, "Concentration / scale parameter");
    cmd->add_option("--theta", theta, "Poisson-Dirichlet second parameter");
    cmd->add_option("--tmin", tmin, "Minimum cluster size (truncated-dp)");
    cmd->add_option("--K", K, "Maximum number of clusters (maxk, finite-dirichlet)");
  }

  PartitionPrior build() const {
    PartitionPrior prior;
    if (kind == "dp") {
      prior = DirichletProcess{alpha};
    } else if (kind == "truncated-dp") {
      prior = TruncatedDP{alpha, tmin};
    } else if (kind == "finite-dirichlet") {
      prior = FiniteDirichlet{K, alpha};
    } else if (kind == "maxk") {
      prior = MaxK{K};
    } else {
      prior = PoissonDirichlet{alpha, theta};
    }
    validate(prior);
    return prior;
  }
};

struct DeltaOptions {
  std::string rule = "constant";
  double lambda = 10.0;
  double tau = 1.0;
  std::string distance = "tv";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--lambda", lambda, "GSW bond strength; 0 = single-site Gibbs");
    cmd->add_option("--delta-rule", rule, "constant or data")
        ->check(CLI::IsMember({"constant", "data"}));
    cmd->add_option("--tau", tau, "Decay for the data-dependent rule");
    cmd->add_option("--distance", distance, "Histogram distance for the data rule")
        ->check(CLI::IsMember({"tv", "hellinger"}));
  }

  DeltaRule build() const {
    if (rule == "constant") return ConstantDelta{lambda};
    return DataDependentDelta{lambda, tau,
                              distance == "tv" ? DistanceKind::kTotalVariation
                                               : DistanceKind::kHellinger};
  }
};

std::vector<Label> to_labels(const std::vector<std::uint32_t>& v) {
  return {v.begin(), v.end()};
}

Problem with_beta(Problem problem, std::optional<double> beta) {
  if (beta) problem.graph = problem.graph.with_constant_beta(*beta);
  return problem;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian nonparametric super-pixel segmentation with a generalized "
               "Swendsen-Wang sampler"};
  app.require_subcommand(1);

  // synth
  SyntheticSpec synth_spec;
  fs::path synth_out = "synthetic.problem";
  auto* synth = app.add_subcommand("synth", "Write a synthetic lattice problem");
  synth->add_option("--width", synth_spec.width);
  synth->add_option("--height", synth_spec.height);
  synth->add_option("--clusters", synth_spec.clusters, "Planted region count");
  synth->add_option("--concentration", synth_spec.concentration,
                    "Dirichlet parameter of planted multinomials");
  synth->add_option("--pixels", synth_spec.pixels_per_site, "Histogram draws per site");
  synth->add_option("--bins", synth_spec.bins);
  synth->add_option("--beta", synth_spec.beta);
  synth->add_option("--cell", synth_spec.cell_pixels, "Footprint pixels per site side");
  synth->add_option("--seed", synth_spec.seed);
  synth->add_option("-o,--out", synth_out);

  // ingest
  fs::path ingest_image, ingest_map, ingest_out = "image.problem";
  std::size_t ingest_bins = 120;
  double ingest_beta = 0.02;
  auto* ingest = app.add_subcommand("ingest", "Image + super-pixel map to problem file");
  ingest->add_option("--image", ingest_image, "PPM image")->required();
  ingest->add_option("--superpixels", ingest_map, "PGM or text label raster")->required();
  ingest->add_option("--bins", ingest_bins);
  ingest->add_option("--beta", ingest_beta);
  ingest->add_option("-o,--out", ingest_out);

  // segment
  fs::path seg_problem;
  PriorOptions seg_prior;
  DeltaOptions seg_delta;
  std::optional<double> seg_beta;
  std::uint64_t seg_iters = 1000;
  std::vector<std::uint64_t> seg_seeds{1};
  double seg_phi = 50.0;
  bool seg_random_scan = false, seg_no_timing = false, seg_no_render = false;
  std::string seg_init = "auto";
  std::size_t seg_threads = 1;
  fs::path seg_out;
  auto* segment = app.add_subcommand("segment", "Run one chain per seed");
  segment->add_option("--problem", seg_problem)->required();
  seg_prior.add_to(segment);
  seg_delta.add_to(segment);
  segment->add_option("--beta", seg_beta, "Override every edge coupling");
  segment->add_option("--iters", seg_iters, "Sweeps per chain");
  segment->add_option("--seeds", seg_seeds)->delimiter(',');
  segment->add_option("--phi", seg_phi, "Base-measure concentration scale");
  segment->add_option("--init", seg_init)
      ->check(CLI::IsMember({"auto", "singletons", "single"}));
  segment->add_flag("--random-scan", seg_random_scan, "Shuffle spin-cluster order");
  segment->add_flag("--no-timing", seg_no_timing, "Write 0 in the seconds column");
  segment->add_flag("--no-render", seg_no_render);
  segment->add_option("--threads", seg_threads);
  segment->add_option("--out-dir", seg_out);

  // simulate-prior
  PriorOptions sim_prior;
  double sim_beta = 0.0, sim_lambda = 1.0;
  std::size_t sim_n = 1099;
  PriorSimConfig sim_config;
  sim_config.chains = 10;
  fs::path sim_problem, sim_out;
  bool sim_crp = false;
  auto* simulate = app.add_subcommand("simulate-prior", "Cluster counts under the prior");
  sim_prior.add_to(simulate);
  simulate->add_option("--beta", sim_beta);
  simulate->add_option("--n", sim_n, "Sites of a near-square lattice");
  simulate->add_option("--problem", sim_problem, "Use this problem's graph instead");
  simulate->add_option("--lambda", sim_lambda);
  simulate->add_option("--draws", sim_config.draws);
  simulate->add_option("--sweeps", sim_config.sweeps_per_draw, "Sweeps between draws");
  simulate->add_option("--burn-in", sim_config.burn_in);
  simulate->add_option("--chains", sim_config.chains);
  simulate->add_option("--threads", sim_config.threads);
  simulate->add_option("--seed", sim_config.seed);
  simulate->add_flag("--crp", sim_crp, "Also draw from the sequential CRP");
  simulate->add_option("-o,--out", sim_out, "CSV of retained cluster counts");

  // oracle-check
  fs::path oracle_problem;
  PriorOptions oracle_prior;
  std::vector<double> oracle_lambdas{0.0, 1.0, 5.0};
  std::size_t oracle_sweeps = 200000, oracle_sites = 4;
  double oracle_beta = 0.5, oracle_phi = 2.0;
  std::uint64_t oracle_seed = 1;
  auto* oracle = app.add_subcommand(
      "oracle-check", "Total variation between GSW frequencies and exact enumeration");
  oracle->add_option("--problem", oracle_problem, "At most 12 sites");
  oracle->add_option("--sites", oracle_sites, "Random path instance size without --problem");
  oracle->add_option("--beta", oracle_beta, "Coupling of the random instance");
  oracle->add_option("--phi", oracle_phi);
  oracle_prior.add_to(oracle);
  oracle->add_option("--lambdas", oracle_lambdas)->delimiter(',');
  oracle->add_option("--sweeps", oracle_sweeps);
  oracle->add_option("--seed", oracle_seed);

  // lambda-sweep
  std::vector<fs::path> sweep_problems;
  std::size_t sweep_synthetic = 0;
  PriorOptions sweep_prior;
  LambdaSweepConfig sweep_config;
  double sweep_phi = 50.0;
  std::optional<double> sweep_beta;
  fs::path sweep_out;
  auto* lsweep = app.add_subcommand("lambda-sweep", "Best log-posterior versus lambda");
  lsweep->add_option("--problems", sweep_problems);
  lsweep->add_option("--synthetic", sweep_synthetic, "Generate this many 20x20 problems");
  sweep_prior.add_to(lsweep);
  lsweep->add_option("--beta", sweep_beta);
  lsweep->add_option("--phi", sweep_phi);
  lsweep->add_option("--lambdas", sweep_config.lambdas)->delimiter(',');
  lsweep->add_option("--iters", sweep_config.iterations);
  lsweep->add_option("--repeats", sweep_config.repeats);
  lsweep->add_option("--seed", sweep_config.seed);
  lsweep->add_option("--threads", sweep_config.threads);
  lsweep->add_option("-o,--out", sweep_out, "CSV of per-lambda summaries");

  // rand-index
  fs::path ri_a, ri_b;
  auto* ri = app.add_subcommand("rand-index", "Rand index between two label files");
  ri->add_option("a", ri_a)->required();
  ri->add_option("b", ri_b)->required();

  // render
  fs::path render_problem, render_labels_path, render_out = "labels.ppm";
  auto* render = app.add_subcommand("render", "Colour a label file over the footprint");
  render->add_option("--problem", render_problem)->required();
  render->add_option("--labels", render_labels_path)->required();
  render->add_option("-o,--out", render_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) {
      save_problem(synth_out, synthesize(synth_spec));
      std::cout << "wrote " << synth_out.string() << '\n';
    } else if (*ingest) {
      const Problem problem = ingest_superpixels(
          read_ppm(ingest_image), read_label_raster(ingest_map), ingest_bins, ingest_beta);
      save_problem(ingest_out, problem);
      std::cout << "wrote " << ingest_out.string() << " (" << problem.graph.num_sites()
                << " sites, " << problem.graph.num_edges() << " edges)\n";
    } else if (*segment) {
      const Problem problem = with_beta(load_problem(seg_problem), seg_beta);
      const auto model =
          Model::create(problem.graph, problem.obs,
                        base_measure_from_data(problem.obs, seg_phi), seg_prior.build());
      Kernel kernel = GibbsKernel{};
      const DeltaRule rule = seg_delta.build();
      const bool gibbs = std::holds_alternative<ConstantDelta>(rule) && seg_delta.lambda == 0.0;
      if (!gibbs) {
        kernel = GswKernel{rule, seg_random_scan ? ScanOrder::kRandom : ScanOrder::kAscending};
      }
      const fs::path out_dir = seg_out.empty() ? default_output_dir() : seg_out;
      fs::create_directories(out_dir);

      std::vector<ChainTrace> traces(seg_seeds.size());
      // One worker per chain; every chain writes only its own files.
      std::vector<std::thread> workers;
      std::vector<std::exception_ptr> errors(seg_seeds.size());
      auto run = [&](std::size_t c) {
        try {
          ChainConfig config;
          config.iterations = seg_iters;
          config.seed = seg_seeds[c];
          config.timing = !seg_no_timing;
          config.init = seg_init == "singletons" ? InitKind::kSingletons
                        : seg_init == "single"   ? InitKind::kSingleCluster
                                                 : InitKind::kAuto;
          traces[c] = run_chain(model, kernel, config);
          const std::string stem = "seed" + std::to_string(seg_seeds[c]);
          write_trace_csv(out_dir / ("trace_" + stem + ".csv"), traces[c]);
          const auto labels = to_labels(traces[c].best_labels);
          write_labels(out_dir / ("labels_" + stem + ".txt"), labels);
          if (problem.footprint && !seg_no_render) {
            write_ppm(out_dir / ("map_" + stem + ".ppm"), render_labels(problem, labels));
          }
        } catch (...) {
          errors[c] = std::current_exception();
        }
      };
      for (std::size_t next = 0; next < seg_seeds.size();) {
        workers.clear();
        for (std::size_t t = 0; t < std::max<std::size_t>(1, seg_threads) &&
                                next < seg_seeds.size();
             ++t, ++next) {
          workers.emplace_back(run, next);
        }
        for (auto& w : workers) w.join();
      }
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
      std::cout << "seed,best_log_posterior,best_iteration,k";
      if (problem.ground_truth) std::cout << ",rand_index";
      std::cout << '\n' << std::setprecision(10);
      for (std::size_t c = 0; c < seg_seeds.size(); ++c) {
        const auto& t = traces[c];
        std::cout << seg_seeds[c] << ',' << t.best_log_posterior << ',' << t.best_iteration
                  << ',' << Partition::from_labels(to_labels(t.best_labels)).num_clusters();
        if (problem.ground_truth) {
          std::cout << ',' << rand_index(to_labels(t.best_labels), *problem.ground_truth);
        }
        std::cout << '\n';
      }
    } else if (*simulate) {
      const SiteGraph graph = sim_problem.empty()
                                  ? near_square_lattice(sim_n, sim_beta)
                                  : load_problem(sim_problem).graph.with_constant_beta(sim_beta);
      const PartitionPrior prior = sim_prior.build();
      const PriorStats stats =
          prior_simulate(prior, graph, ConstantDelta{sim_lambda}, sim_config);
      std::cout << std::setprecision(6) << "prior " << describe(prior)
                << " beta=" << sim_beta << " n=" << graph.num_sites() << '\n'
                << "gsw  mean_k=" << stats.summary.mean << " se=" << stats.summary.standard_error
                << " median=" << stats.summary.median << " q05=" << stats.summary.q05
                << " q95=" << stats.summary.q95 << '\n';
      if (const auto* dp = std::get_if<DirichletProcess>(&prior)) {
        std::cout << "analytic CRP mean_k=" << crp_expected_clusters(dp->alpha, graph.num_sites())
                  << '\n';
        if (sim_crp) {
          const PriorStats crp =
              crp_simulate(dp->alpha, graph.num_sites(), sim_config.draws, sim_config.seed);
          std::vector<double> a(stats.clusters.begin(), stats.clusters.end());
          std::vector<double> b(crp.clusters.begin(), crp.clusters.end());
          std::cout << "crp  mean_k=" << crp.summary.mean << " se=" << crp.summary.standard_error
                    << " ks_pvalue=" << ks_two_sample_pvalue(a, b) << '\n';
        }
      }
      if (!sim_out.empty()) {
        std::ofstream out(sim_out);
        out << "draw,k\n";
        for (std::size_t d = 0; d < stats.clusters.size(); ++d) {
          out << d << ',' << stats.clusters[d] << '\n';
        }
      }
    } else if (*oracle) {
      Problem problem;
      if (!oracle_problem.empty()) {
        problem = load_problem(oracle_problem);
      } else {
        SyntheticSpec spec;
        spec.width = oracle_sites;
        spec.height = 1;
        spec.clusters = std::min<std::size_t>(2, oracle_sites);
        spec.bins = 2;
        spec.pixels_per_site = 3;
        spec.beta = oracle_beta;
        spec.seed = oracle_seed;
        problem = synthesize(spec);
      }
      const auto model =
          Model::create(problem.graph, problem.obs,
                        base_measure_from_data(problem.obs, oracle_phi), oracle_prior.build());
      const auto exact = exact_posterior(*model);
      std::cout << "partitions in support: " << exact.size() << '\n';
      for (double lambda : oracle_lambdas) {
        const auto deltas = edge_deltas(ConstantDelta{lambda}, model->graph, model->obs);
        ChainState state(model, initial_partition(*model, {}), derive_seed(oracle_seed, 7));
        std::map<std::vector<std::uint32_t>, double> freq;
        for (std::size_t s = 0; s < oracle_sweeps; ++s) {
          state.gsw_sweep(deltas);
          freq[state.partition().canonical_labels()] += 1.0;
        }
        double tv = 0.0;
        for (const auto& [key, p] : exact) {
          const auto it = freq.find(key);
          tv += std::abs(p - (it == freq.end() ? 0.0 : it->second / oracle_sweeps));
        }
        for (const auto& [key, c] : freq) {
          if (!exact.count(key)) tv += c / oracle_sweeps;
        }
        std::cout << "lambda=" << lambda << " tv=" << 0.5 * tv << '\n';
      }
    } else if (*lsweep) {
      std::vector<std::shared_ptr<const Model>> models;
      const PartitionPrior prior = sweep_prior.build();
      auto add_model = [&](const Problem& p) {
        const Problem q = with_beta(p, sweep_beta);
        models.push_back(
            Model::create(q.graph, q.obs, base_measure_from_data(q.obs, sweep_phi), prior));
      };
      for (const auto& path : sweep_problems) add_model(load_problem(path));
      for (std::size_t i = 0; i < sweep_synthetic; ++i) {
        SyntheticSpec spec;
        spec.seed = derive_seed(sweep_config.seed, 1000 + i);
        add_model(synthesize(spec));
      }
      if (models.empty()) throw ConfigError("lambda-sweep: give --problems or --synthetic");
      const LambdaSweep result = lambda_sweep(models, sweep_config);
      std::ostringstream csv;
      csv << std::setprecision(10)
          << "lambda,median_best,q1_best,q3_best,median_increase_pct,q1_increase_pct,"
             "q3_increase_pct,median_tail_variance\n";
      for (const auto& r : result.rows) {
        csv << r.lambda << ',' << r.median_best << ',' << r.q1_best << ',' << r.q3_best << ','
            << r.median_increase << ',' << r.q1_increase << ',' << r.q3_increase << ','
            << r.median_tail_variance << '\n';
      }
      std::cout << csv.str();
      if (!sweep_out.empty()) std::ofstream(sweep_out) << csv.str();
    } else if (*ri) {
      std::cout << std::setprecision(10) << rand_index(read_labels(ri_a), read_labels(ri_b))
                << '\n';
    } else if (*render) {
      const Problem problem = load_problem(render_problem);
      write_ppm(render_out, render_labels(problem, read_labels(render_labels_path)));
      std::cout << "wrote " << render_out.string() << '\n';
    }
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kParse;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}

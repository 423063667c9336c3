#include "bnpseg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bnpseg/errors.hpp"
#include "parallel.hpp"

namespace bnpseg {

Partition crp_sample(double alpha, std::size_t n, Rng& rng) {
  if (!(alpha > 0.0)) throw ConfigError("crp_sample: alpha must be positive");
  if (n == 0) throw ConfigError("crp_sample: n must be at least 1");
  std::vector<Label> labels(n, 0);
  Label tables = 1;
  for (std::size_t i = 1; i < n; ++i) {
    // Joining an existing table with probability proportional to its size is
    // the same as copying the table of a uniformly chosen earlier customer.
    const double u = uniform01(rng) * (alpha + static_cast<double>(i));
    if (u < static_cast<double>(i)) {
      labels[i] = labels[static_cast<std::size_t>(u)];
    } else {
      labels[i] = tables++;
    }
  }
  return Partition::from_labels(labels);
}

double crp_expected_clusters(double alpha, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += alpha / (alpha + static_cast<double>(i));
  return sum;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  // Shifted by the first value: a constant sample has exactly zero spread.
  const double shift = values.front();
  double centred = 0.0;
  for (double v : values) centred += v - shift;
  centred /= n;
  s.mean = shift + centred;
  double ss = 0.0;
  for (double v : values) ss += (v - shift - centred) * (v - shift - centred);
  s.sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.standard_error = s.sd / std::sqrt(n);
  std::vector<double> copy(values.begin(), values.end());
  s.median = quantile(copy, 0.5);
  s.q05 = quantile(copy, 0.05);
  s.q25 = quantile(copy, 0.25);
  s.q75 = quantile(copy, 0.75);
  s.q95 = quantile(copy, 0.95);
  return s;
}

namespace {

void finish(PriorStats& stats) {
  std::vector<double> ks(stats.clusters.begin(), stats.clusters.end());
  stats.summary = summarize(ks);
}

void accumulate_sizes(const Partition& p, std::vector<std::uint64_t>& histogram) {
  for (std::size_t m : p.sizes()) {
    if (histogram.size() <= m) histogram.resize(m + 1, 0);
    ++histogram[m];
  }
}

}  // namespace

PriorStats crp_simulate(double alpha, std::size_t n, std::size_t draws,
                        std::uint64_t seed) {
  Rng rng(seed);
  PriorStats stats;
  stats.clusters.reserve(draws);
  for (std::size_t d = 0; d < draws; ++d) {
    const Partition p = crp_sample(alpha, n, rng);
    stats.clusters.push_back(p.num_clusters());
    accumulate_sizes(p, stats.size_histogram);
  }
  finish(stats);
  return stats;
}

PriorStats prior_simulate(const PartitionPrior& prior, const SiteGraph& graph,
                          const DeltaRule& rule, const PriorSimConfig& config) {
  if (config.chains == 0) throw ConfigError("prior_simulate: need at least one chain");
  if (config.sweeps_per_draw == 0) {
    throw ConfigError("prior_simulate: sweeps_per_draw must be positive");
  }
  const auto model = Model::create_prior_only(graph, prior);
  const std::vector<double> deltas = edge_deltas(rule, model->graph, model->obs);

  struct ChainOutput {
    std::vector<std::size_t> clusters;
    std::vector<std::uint64_t> sizes;
  };
  std::vector<ChainOutput> outputs(config.chains);
  detail::parallel_for(config.chains, config.threads, [&](std::size_t chain) {
    const std::size_t share = config.draws / config.chains +
                              (chain < config.draws % config.chains ? 1 : 0);
    ChainConfig init_config;
    ChainState state(model, initial_partition(*model, init_config),
                     derive_seed(config.seed, chain));
    for (std::size_t s = 0; s < config.burn_in; ++s) state.gsw_sweep(deltas);
    ChainOutput& out = outputs[chain];
    for (std::size_t d = 0; d < share; ++d) {
      for (std::size_t s = 0; s < config.sweeps_per_draw; ++s) state.gsw_sweep(deltas);
      out.clusters.push_back(state.partition().num_clusters());
      accumulate_sizes(state.partition(), out.sizes);
    }
  });

  PriorStats stats;
  for (const ChainOutput& out : outputs) {
    stats.clusters.insert(stats.clusters.end(), out.clusters.begin(), out.clusters.end());
    if (stats.size_histogram.size() < out.sizes.size()) {
      stats.size_histogram.resize(out.sizes.size(), 0);
    }
    for (std::size_t m = 0; m < out.sizes.size(); ++m) {
      stats.size_histogram[m] += out.sizes[m];
    }
  }
  finish(stats);
  return stats;
}

double ks_two_sample_pvalue(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks test: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  // Step both empirical CDFs past each distinct value before comparing, so
  // ties are handled correctly.
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  const double en = std::sqrt(nx * ny / (nx + ny));
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

LambdaSweep lambda_sweep(std::span<const std::shared_ptr<const Model>> problems,
                         const LambdaSweepConfig& config) {
  if (config.lambdas.empty()) throw ConfigError("lambda_sweep: empty lambda grid");
  for (double l : config.lambdas) {
    if (!(l >= 0.0)) throw ConfigError("lambda_sweep: lambda must be >= 0");
  }
  std::vector<double> grid = config.lambdas;
  const bool has_baseline = std::find(grid.begin(), grid.end(), 0.0) != grid.end();
  if (!has_baseline) grid.insert(grid.begin(), 0.0);

  const std::size_t cells = problems.size() * config.repeats;
  std::vector<LambdaRun> runs(cells * grid.size());
  detail::parallel_for(runs.size(), config.threads, [&](std::size_t idx) {
    const std::size_t cell = idx / grid.size();
    const std::size_t g = idx % grid.size();
    LambdaRun& run = runs[idx];
    run.problem = cell / config.repeats;
    run.repeat = cell % config.repeats;
    run.lambda = grid[g];
    ChainConfig chain;
    chain.iterations = config.iterations;
    chain.seed = derive_seed(config.seed, cell);
    chain.timing = false;
    Kernel kernel = GibbsKernel{};
    if (run.lambda > 0.0) kernel = GswKernel{ConstantDelta{run.lambda}};
    const ChainTrace trace = run_chain(problems[run.problem], kernel, chain);
    run.best_log_posterior = trace.best_log_posterior;
    std::vector<double> tail;
    for (std::size_t r = trace.records.size() / 2; r < trace.records.size(); ++r) {
      tail.push_back(trace.records[r].log_posterior);
    }
    const Summary s = summarize(tail);
    run.tail_variance = s.sd * s.sd;
  });

  for (std::size_t cell = 0; cell < cells; ++cell) {
    const std::size_t base_idx =
        cell * grid.size() +
        static_cast<std::size_t>(std::find(grid.begin(), grid.end(), 0.0) - grid.begin());
    const double baseline = runs[base_idx].best_log_posterior;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      LambdaRun& run = runs[cell * grid.size() + g];
      run.percent_increase =
          100.0 * (run.best_log_posterior - baseline) / std::abs(baseline);
    }
  }

  LambdaSweep result;
  for (double lambda : config.lambdas) {
    std::vector<double> best, increase, variance;
    for (const LambdaRun& run : runs) {
      if (run.lambda != lambda) continue;
      best.push_back(run.best_log_posterior);
      increase.push_back(run.percent_increase);
      variance.push_back(run.tail_variance);
    }
    LambdaRow row;
    row.lambda = lambda;
    row.median_best = quantile(best, 0.5);
    row.q1_best = quantile(best, 0.25);
    row.q3_best = quantile(best, 0.75);
    row.median_increase = quantile(increase, 0.5);
    row.q1_increase = quantile(increase, 0.25);
    row.q3_increase = quantile(increase, 0.75);
    row.median_tail_variance = quantile(variance, 0.5);
    result.rows.push_back(row);
  }
  for (LambdaRun& run : runs) {
    if (has_baseline || run.lambda != 0.0) result.runs.push_back(run);
  }
  return result;
}

}  // namespace bnpseg

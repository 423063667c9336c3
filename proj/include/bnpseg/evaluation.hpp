#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "bnpseg/samplers.hpp"

namespace bnpseg {

// One draw from the Dirichlet process partition model by sequential
// size-biased seating (Chinese restaurant process).
Partition crp_sample(double alpha, std::size_t n, Rng& rng);

// E[k] = sum_{i=0}^{n-1} alpha / (alpha + i).
double crp_expected_clusters(double alpha, std::size_t n);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  double standard_error = 0.0;
  double median = 0.0;
  double q05 = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
};

Summary summarize(std::span<const double> values);

// Linear-interpolated quantile of an unsorted sample.
double quantile(std::vector<double> values, double q);

struct PriorStats {
  std::vector<std::size_t> clusters;          // one entry per retained draw
  std::vector<std::uint64_t> size_histogram;  // [m] = clusters of size m, pooled
  Summary summary;
};

struct PriorSimConfig {
  std::size_t draws = 1000;
  std::size_t sweeps_per_draw = 200;
  std::size_t burn_in = 200;
  // Independent chains; draws are split evenly between them.
  std::size_t chains = 1;
  std::size_t threads = 1;
  std::uint64_t seed = 1;
};

// Runs GSW on the prior alone (likelihood constant) over `graph` and
// collects the number of clusters of retained states.
PriorStats prior_simulate(const PartitionPrior& prior, const SiteGraph& graph,
                          const DeltaRule& rule, const PriorSimConfig& config);

PriorStats crp_simulate(double alpha, std::size_t n, std::size_t draws,
                        std::uint64_t seed);

// Two-sample Kolmogorov-Smirnov test; returns the asymptotic p-value.
double ks_two_sample_pvalue(std::span<const double> a, std::span<const double> b);

struct LambdaRun {
  std::size_t problem = 0;
  std::size_t repeat = 0;
  double lambda = 0.0;
  double best_log_posterior = 0.0;
  // Variance of the log-posterior trace over its second half.
  double tail_variance = 0.0;
  double percent_increase = 0.0;  // vs the lambda = 0 run with the same seed
};

struct LambdaRow {
  double lambda = 0.0;
  double median_best = 0.0;
  double q1_best = 0.0;
  double q3_best = 0.0;
  double median_increase = 0.0;
  double q1_increase = 0.0;
  double q3_increase = 0.0;
  double median_tail_variance = 0.0;
};

struct LambdaSweep {
  std::vector<LambdaRow> rows;  // one per grid value, grid order
  std::vector<LambdaRun> runs;
};

struct LambdaSweepConfig {
  std::vector<double> lambdas{0.0, 1.0, 5.0, 10.0, 20.0};
  std::size_t iterations = 1000;
  std::size_t repeats = 1;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

// For each problem and repeat, runs one chain per lambda from the same seed
// and initial state (lambda = 0 runs single-site Gibbs). The percentage
// increase of the best log-posterior is measured against lambda = 0.
LambdaSweep lambda_sweep(std::span<const std::shared_ptr<const Model>> problems,
                         const LambdaSweepConfig& config);

}  // namespace bnpseg

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "bnpseg/epf.hpp"
#include "bnpseg/likelihood.hpp"
#include "bnpseg/partition.hpp"
#include "bnpseg/random.hpp"

namespace bnpseg {

// Everything a chain reads but never writes. Shared by concurrent chains.
struct Model {
  SiteGraph graph;
  Observations obs;
  BaseMeasure base;
  PartitionPrior prior;
  // Drops the likelihood term entirely (prior simulation); obs and base are
  // then ignored and may be empty.
  bool prior_only = false;

  // Validates the prior and that graph, observations and base measure agree
  // on n and D. Throws ConfigError / InputError.
  static std::shared_ptr<const Model> create(SiteGraph graph, Observations obs,
                                             BaseMeasure base, PartitionPrior prior);
  static std::shared_ptr<const Model> create_prior_only(SiteGraph graph,
                                                        PartitionPrior prior);

  std::size_t num_sites() const noexcept { return graph.num_sites(); }
};

enum class DistanceKind { kTotalVariation, kHellinger };

// delta_ij = lambda on every edge. lambda = 0 gives single-site Gibbs,
// lambda = 1 classical Swendsen-Wang.
struct ConstantDelta {
  double lambda = 1.0;
};

// delta_ij = lambda * exp(-tau * d(y_i, y_j)) on normalized histograms.
struct DataDependentDelta {
  double lambda = 1.0;
  double tau = 1.0;
  DistanceKind distance = DistanceKind::kTotalVariation;
};

using DeltaRule = std::variant<ConstantDelta, DataDependentDelta>;

// One delta per graph edge. Throws ConfigError on negative parameters.
std::vector<double> edge_deltas(const DeltaRule& rule, const SiteGraph& graph,
                                const Observations& obs);

double histogram_distance(std::span<const Count> a, std::span<const Count> b,
                          DistanceKind kind);

// Exponent of the per-edge factor a reassigned spin-cluster picks up from an
// un-bonded edge to a neighbour in the candidate cluster: beta * (1 - delta).
inline double correction_log_factor(double beta, double delta) {
  return beta * (1.0 - delta);
}

struct BondState {
  std::vector<std::uint8_t> bonded;         // per graph edge
  std::vector<std::uint32_t> spin_label;    // per site, index into spin_clusters
  std::vector<std::vector<SiteIndex>> spin_clusters;  // ascending minimum site
};

// Independent bonds r_ij ~ Ber(1 - exp(-beta_ij delta_ij 1{z_i = z_j})), then
// spin-clusters as connected components of the bonded subgraph.
BondState sample_bonds(const SiteGraph& graph, const Partition& partition,
                       std::span<const double> deltas, Rng& rng);

enum class ScanOrder { kAscending, kRandom };

// Partition, per-cluster statistics and RNG of a single chain.
class ChainState {
 public:
  // Throws ConfigError if `init` has zero prior mass or the wrong size.
  ChainState(std::shared_ptr<const Model> model, Partition init, std::uint64_t seed);

  const Model& model() const noexcept { return *model_; }
  const Partition& partition() const noexcept { return partition_; }
  const ClusterStats& stats(ClusterId c) const { return stats_[c]; }
  const BondState& bonds() const noexcept { return bonds_; }
  std::uint64_t iteration() const noexcept { return iteration_; }
  Rng& rng() noexcept { return rng_; }

  // log prior (Potts + EPF) plus the log evidence of every cluster.
  LogWeight log_posterior() const;

  // One systematic scan of single-site updates, sites in index order.
  void gibbs_sweep();

  // Sample bonds, then reassign each spin-cluster in turn.
  void gsw_sweep(std::span<const double> deltas, ScanOrder order = ScanOrder::kAscending);

  // Recomputes statistics from membership and compares. Throws
  // std::logic_error on mismatch.
  void check_consistency() const;

 private:
  void ensure_capacity();
  void reassign_block(std::span<const SiteIndex> block, std::uint32_t spin,
                      std::span<const double> deltas);

  std::shared_ptr<const Model> model_;
  Partition partition_;
  std::vector<ClusterStats> stats_;  // indexed by ClusterId
  BondState bonds_;
  Rng rng_;
  std::uint64_t iteration_ = 0;

  // Scratch reused across updates.
  std::vector<ClusterId> candidates_;
  std::vector<std::size_t> residual_sizes_;
  std::vector<double> weights_;
  std::vector<double> coupling_;  // indexed by ClusterId
  std::vector<std::uint32_t> order_;
  ClusterStats block_stats_;
};

struct GibbsKernel {};
struct GswKernel {
  DeltaRule rule = ConstantDelta{1.0};
  ScanOrder order = ScanOrder::kAscending;
};
using Kernel = std::variant<GibbsKernel, GswKernel>;

enum class InitKind { kAuto, kSingletons, kSingleCluster, kLabels };

struct ChainConfig {
  std::uint64_t iterations = 1000;
  std::uint64_t seed = 1;
  InitKind init = InitKind::kAuto;
  std::vector<Label> init_labels;  // for kLabels
  bool record_sizes = false;
  bool timing = true;
};

struct TraceRecord {
  std::uint64_t iteration = 0;
  double log_posterior = 0.0;
  std::size_t clusters = 0;
  double seconds = 0.0;
  std::vector<std::size_t> sizes;  // descending; only with record_sizes
};

struct ChainTrace {
  std::vector<TraceRecord> records;  // records[0] is the initial state
  double best_log_posterior = kLogZero;
  std::uint64_t best_iteration = 0;
  std::vector<std::uint32_t> best_labels;
  std::vector<std::uint32_t> final_labels;
};

// Auto: all singletons, or one cluster when singletons have zero prior mass
// (minimum cluster size, or more sites than the prior allows clusters).
Partition initial_partition(const Model& model, const ChainConfig& config);

// Runs `iterations` sweeps of `kernel`. Deterministic given the seed apart
// from the seconds column.
ChainTrace run_chain(std::shared_ptr<const Model> model, const Kernel& kernel,
                     const ChainConfig& config);

// Restricted growth strings of length n: every set partition exactly once.
std::vector<std::vector<std::uint32_t>> enumerate_partitions(std::size_t n);

inline constexpr std::size_t kMaxExactSites = 12;

// Normalized posterior over all set partitions of a small model, keyed by
// canonical labels. Zero-mass partitions are omitted. Throws ConfigError
// when n > kMaxExactSites.
std::map<std::vector<std::uint32_t>, double> exact_posterior(const Model& model);

}  // namespace bnpseg

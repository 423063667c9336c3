#include "bnpseg/samplers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bnpseg/errors.hpp"

namespace bnpseg {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint8_t> rank_;
};

}  // namespace

std::shared_ptr<const Model> Model::create(SiteGraph graph, Observations obs,
                                           BaseMeasure base, PartitionPrior prior) {
  validate(prior);
  if (obs.num_sites() != graph.num_sites()) {
    throw InputError("model: graph has " + std::to_string(graph.num_sites()) +
                     " sites but observations have " +
                     std::to_string(obs.num_sites()));
  }
  if (base.bins() != obs.bins()) {
    throw InputError("model: base measure dimension does not match histograms");
  }
  auto model = std::make_shared<Model>();
  model->graph = std::move(graph);
  model->obs = std::move(obs);
  model->base = std::move(base);
  model->prior = prior;
  return model;
}

std::shared_ptr<const Model> Model::create_prior_only(SiteGraph graph,
                                                      PartitionPrior prior) {
  validate(prior);
  auto model = std::make_shared<Model>();
  model->graph = std::move(graph);
  model->prior = prior;
  model->prior_only = true;
  return model;
}

double histogram_distance(std::span<const Count> a, std::span<const Count> b,
                          DistanceKind kind) {
  if (a.size() != b.size()) throw std::invalid_argument("histogram size mismatch");
  double ta = 0.0, tb = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    ta += static_cast<double>(a[d]);
    tb += static_cast<double>(b[d]);
  }
  double acc = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double p = static_cast<double>(a[d]) / ta;
    const double q = static_cast<double>(b[d]) / tb;
    if (kind == DistanceKind::kTotalVariation) {
      acc += std::abs(p - q);
    } else {
      const double r = std::sqrt(p) - std::sqrt(q);
      acc += r * r;
    }
  }
  return kind == DistanceKind::kTotalVariation ? 0.5 * acc : std::sqrt(0.5 * acc);
}

std::vector<double> edge_deltas(const DeltaRule& rule, const SiteGraph& graph,
                                const Observations& obs) {
  std::vector<double> deltas(graph.num_edges());
  if (const auto* c = std::get_if<ConstantDelta>(&rule)) {
    if (!(c->lambda >= 0.0)) throw ConfigError("delta rule: lambda must be >= 0");
    std::fill(deltas.begin(), deltas.end(), c->lambda);
    return deltas;
  }
  const auto& d = std::get<DataDependentDelta>(rule);
  if (!(d.lambda >= 0.0) || !(d.tau >= 0.0)) {
    throw ConfigError("delta rule: lambda and tau must be >= 0");
  }
  if (obs.num_sites() != graph.num_sites()) {
    throw ConfigError("data-dependent delta rule needs observations for every site");
  }
  const auto edges = graph.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double dist =
        histogram_distance(obs.row(edges[e].i), obs.row(edges[e].j), d.distance);
    deltas[e] = d.lambda * std::exp(-d.tau * dist);
  }
  return deltas;
}

BondState sample_bonds(const SiteGraph& graph, const Partition& partition,
                       std::span<const double> deltas, Rng& rng) {
  if (deltas.size() != graph.num_edges()) {
    throw std::invalid_argument("sample_bonds: one delta per edge required");
  }
  const std::size_t n = graph.num_sites();
  BondState state;
  state.bonded.assign(graph.num_edges(), 0);
  DisjointSets sets(n);
  const auto edges = graph.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (partition.cluster_of(edges[e].i) != partition.cluster_of(edges[e].j)) continue;
    const double rate = edges[e].beta * deltas[e];
    if (rate <= 0.0) continue;
    // P(r = 0) = exp(-rate)
    if (uniform01(rng) >= std::exp(-rate)) {
      state.bonded[e] = 1;
      sets.unite(edges[e].i, edges[e].j);
    }
  }
  // Scanning sites in order numbers components by their smallest member.
  state.spin_label.assign(n, 0);
  std::vector<std::uint32_t> root_label(n, kNoCluster);
  for (std::uint32_t s = 0; s < n; ++s) {
    const std::uint32_t root = sets.find(s);
    if (root_label[root] == kNoCluster) {
      root_label[root] = static_cast<std::uint32_t>(state.spin_clusters.size());
      state.spin_clusters.emplace_back();
    }
    state.spin_label[s] = root_label[root];
    state.spin_clusters[root_label[root]].push_back(s);
  }
  return state;
}

ChainState::ChainState(std::shared_ptr<const Model> model, Partition init,
                       std::uint64_t seed)
    : model_(std::move(model)), partition_(std::move(init)), rng_(seed) {
  if (partition_.num_sites() != model_->num_sites()) {
    throw ConfigError("initial partition covers " +
                      std::to_string(partition_.num_sites()) + " sites, model has " +
                      std::to_string(model_->num_sites()));
  }
  if (log_prior_unnorm(model_->prior, model_->graph, partition_) == kLogZero) {
    throw ConfigError("initial partition has zero mass under " +
                      describe(model_->prior));
  }
  block_stats_ = ClusterStats(model_->obs.bins());
  ensure_capacity();
  if (!model_->prior_only) {
    for (ClusterId c : partition_.clusters()) {
      stats_[c] = stats_of(model_->obs, partition_.members(c));
    }
  }
}

void ChainState::ensure_capacity() {
  const std::size_t cap = partition_.capacity();
  if (stats_.size() < cap) stats_.resize(cap, ClusterStats(model_->obs.bins()));
  if (coupling_.size() < cap) coupling_.resize(cap, 0.0);
}

LogWeight ChainState::log_posterior() const {
  const LogWeight prior = log_prior_unnorm(model_->prior, model_->graph, partition_);
  if (prior == kLogZero || model_->prior_only) return prior;
  // Fixed summation order so equal partitions give bit-identical values.
  double evidence = 0.0;
  for (ClusterId c : partition_.ordered_clusters()) {
    evidence += log_marglik(stats_[c], model_->base);
  }
  return prior + evidence;
}

void ChainState::gibbs_sweep() {
  const Model& m = *model_;
  const bool with_data = !m.prior_only;
  for (SiteIndex site = 0; site < partition_.num_sites(); ++site) {
    const ClusterId origin = partition_.cluster_of(site);
    if (with_data) stats_[origin].remove_site(m.obs, site);

    candidates_.clear();
    residual_sizes_.clear();
    for (ClusterId c : partition_.clusters()) {
      const std::size_t size = partition_.size(c) - (c == origin ? 1 : 0);
      if (size == 0) continue;
      candidates_.push_back(c);
      residual_sizes_.push_back(size);
    }
    const std::size_t k = candidates_.size();
    weights_.resize(k + 1);
    log_epf_move_ratios(m.prior, residual_sizes_, 1, weights_);

    // Potts term: neighbours already sitting in each candidate.
    for (const Neighbor& nb : m.graph.neighbors(site)) {
      coupling_[partition_.cluster_of(nb.site)] += m.graph.edges()[nb.edge].beta;
    }
    for (std::size_t j = 0; j < k; ++j) {
      const ClusterId c = candidates_[j];
      if (weights_[j] == kLogZero) continue;
      weights_[j] += coupling_[c];
      if (with_data) weights_[j] += log_marglik_site_ratio(stats_[c], m.obs, site, m.base);
    }
    for (const Neighbor& nb : m.graph.neighbors(site)) {
      coupling_[partition_.cluster_of(nb.site)] = 0.0;
    }
    if (with_data && weights_[k] != kLogZero) {
      block_stats_.clear();
      weights_[k] += log_marglik_site_ratio(block_stats_, m.obs, site, m.base);
    }

    const std::size_t pick = sample_log_categorical(weights_, rng_);
    const bool origin_survives = partition_.size(origin) > 1;
    const ClusterId target = pick < k ? candidates_[pick] : kNoCluster;
    if (target == origin) {
      if (with_data) stats_[origin].add_site(m.obs, site);
      continue;
    }
    const ClusterId dest = partition_.move(site, target);
    ensure_capacity();
    if (with_data) {
      if (target == kNoCluster) stats_[dest].clear();
      stats_[dest].add_site(m.obs, site);
      if (!origin_survives && dest != origin) stats_[origin].clear();
    }
  }
  ++iteration_;
#ifndef NDEBUG
  check_consistency();
#endif
}

void ChainState::reassign_block(std::span<const SiteIndex> block, std::uint32_t spin,
                                std::span<const double> deltas) {
  const Model& m = *model_;
  const bool with_data = !m.prior_only;
  const ClusterId origin = partition_.cluster_of(block.front());

  if (with_data) {
    block_stats_.clear();
    for (SiteIndex s : block) block_stats_.add_site(m.obs, s);
    stats_[origin].subtract(block_stats_);
  }

  candidates_.clear();
  residual_sizes_.clear();
  for (ClusterId c : partition_.clusters()) {
    const std::size_t size = partition_.size(c) - (c == origin ? block.size() : 0);
    if (size == 0) continue;
    candidates_.push_back(c);
    residual_sizes_.push_back(size);
  }
  const std::size_t k = candidates_.size();
  weights_.resize(k + 1);
  log_epf_move_ratios(m.prior, residual_sizes_, block.size(), weights_);

  // Un-bonded edges leaving the block. Edges inside the block contribute the
  // same factor to every candidate and are skipped.
  const auto edges = m.graph.edges();
  for (SiteIndex s : block) {
    for (const Neighbor& nb : m.graph.neighbors(s)) {
      if (bonds_.spin_label[nb.site] == spin) continue;
      coupling_[partition_.cluster_of(nb.site)] +=
          correction_log_factor(edges[nb.edge].beta, deltas[nb.edge]);
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    const ClusterId c = candidates_[j];
    if (weights_[j] == kLogZero) continue;
    weights_[j] += coupling_[c];
    if (with_data) weights_[j] += log_marglik_ratio(stats_[c], block_stats_, m.base);
  }
  for (SiteIndex s : block) {
    for (const Neighbor& nb : m.graph.neighbors(s)) {
      coupling_[partition_.cluster_of(nb.site)] = 0.0;
    }
  }
  if (with_data && weights_[k] != kLogZero) {
    weights_[k] += log_marglik(block_stats_, m.base);
  }

  const std::size_t pick = sample_log_categorical(weights_, rng_);
  const ClusterId target = pick < k ? candidates_[pick] : kNoCluster;
  if (target == origin) {
    if (with_data) stats_[origin].merge(block_stats_);
    return;
  }
  const bool origin_survives = partition_.size(origin) > block.size();
  const ClusterId dest = partition_.move_block(block, target);
  ensure_capacity();
  if (with_data) {
    if (!origin_survives && dest != origin) stats_[origin].clear();
    if (target == kNoCluster) stats_[dest].clear();
    stats_[dest].merge(block_stats_);
  }
}

void ChainState::gsw_sweep(std::span<const double> deltas, ScanOrder order) {
  bonds_ = sample_bonds(model_->graph, partition_, deltas, rng_);
  const std::size_t p = bonds_.spin_clusters.size();
  order_.resize(p);
  std::iota(order_.begin(), order_.end(), 0u);
  if (order == ScanOrder::kRandom) {
    for (std::size_t i = p; i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng_) * static_cast<double>(i));
      std::swap(order_[i - 1], order_[std::min(j, i - 1)]);
    }
  }
  for (std::uint32_t spin : order_) {
    reassign_block(bonds_.spin_clusters[spin], spin, deltas);
  }
  ++iteration_;
#ifndef NDEBUG
  check_consistency();
#endif
}

void ChainState::check_consistency() const {
  partition_.check_invariants();
  if (model_->prior_only) return;
  for (ClusterId c : partition_.clusters()) {
    if (!(stats_of(model_->obs, partition_.members(c)) == stats_[c])) {
      throw std::logic_error("cluster statistics drifted from membership");
    }
  }
}

Partition initial_partition(const Model& model, const ChainConfig& config) {
  const std::size_t n = model.num_sites();
  switch (config.init) {
    case InitKind::kSingletons:
      return Partition::singletons(n);
    case InitKind::kSingleCluster:
      return Partition::single_cluster(n);
    case InitKind::kLabels:
      if (config.init_labels.size() != n) {
        throw ConfigError("init labels: expected " + std::to_string(n) + " labels");
      }
      return Partition::from_labels(config.init_labels);
    case InitKind::kAuto:
      break;
  }
  Partition singletons = Partition::singletons(n);
  if (log_prior_unnorm(model.prior, model.graph, singletons) == kLogZero) {
    return Partition::single_cluster(n);
  }
  return singletons;
}

ChainTrace run_chain(std::shared_ptr<const Model> model, const Kernel& kernel,
                     const ChainConfig& config) {
  const Model& m = *model;
  ChainState state(model, initial_partition(m, config), config.seed);
  std::vector<double> deltas;
  if (const auto* gsw = std::get_if<GswKernel>(&kernel)) {
    deltas = edge_deltas(gsw->rule, m.graph, m.obs);
  }

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  ChainTrace trace;
  trace.records.reserve(config.iterations + 1);
  auto record = [&] {
    TraceRecord r;
    r.iteration = state.iteration();
    r.log_posterior = state.log_posterior();
    r.clusters = state.partition().num_clusters();
    if (config.timing) {
      r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    }
    if (config.record_sizes) {
      r.sizes = state.partition().sizes();
      std::sort(r.sizes.rbegin(), r.sizes.rend());
    }
    if (trace.records.empty() || r.log_posterior > trace.best_log_posterior) {
      trace.best_log_posterior = r.log_posterior;
      trace.best_iteration = r.iteration;
      trace.best_labels = state.partition().canonical_labels();
    }
    trace.records.push_back(std::move(r));
  };

  record();
  for (std::uint64_t it = 0; it < config.iterations; ++it) {
    if (const auto* gsw = std::get_if<GswKernel>(&kernel)) {
      state.gsw_sweep(deltas, gsw->order);
    } else {
      state.gibbs_sweep();
    }
    record();
  }
  trace.final_labels = state.partition().canonical_labels();
  return trace;
}

std::vector<std::vector<std::uint32_t>> enumerate_partitions(std::size_t n) {
  std::vector<std::vector<std::uint32_t>> out;
  if (n == 0) return out;
  std::vector<std::uint32_t> rgs(n, 0);
  // prefix_max[i] = max(rgs[0..i])
  std::vector<std::uint32_t> prefix_max(n, 0);
  while (true) {
    out.push_back(rgs);
    // Rightmost position that can still be incremented.
    std::size_t i = n - 1;
    while (i > 0 && rgs[i] > prefix_max[i - 1]) --i;
    if (i == 0) break;
    ++rgs[i];
    prefix_max[i] = std::max(prefix_max[i - 1], rgs[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      rgs[j] = 0;
      prefix_max[j] = prefix_max[i];
    }
  }
  return out;
}

std::map<std::vector<std::uint32_t>, double> exact_posterior(const Model& model) {
  const std::size_t n = model.num_sites();
  if (n > kMaxExactSites) {
    throw ConfigError("exact_posterior: refusing to enumerate " + std::to_string(n) +
                      " sites (limit " + std::to_string(kMaxExactSites) + ")");
  }
  const auto partitions = enumerate_partitions(n);
  std::vector<double> log_weights;
  std::vector<const std::vector<std::uint32_t>*> kept;
  for (const auto& rgs : partitions) {
    std::vector<Label> labels(rgs.begin(), rgs.end());
    const Partition p = Partition::from_labels(labels);
    LogWeight w = log_prior_unnorm(model.prior, model.graph, p);
    if (w == kLogZero) continue;
    if (!model.prior_only) {
      for (ClusterId c : p.clusters()) {
        w += log_marglik(stats_of(model.obs, p.members(c)), model.base);
      }
    }
    log_weights.push_back(w);
    kept.push_back(&rgs);
  }
  const double norm = log_sum_exp(log_weights);
  std::map<std::vector<std::uint32_t>, double> out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out.emplace(*kept[i], std::exp(log_weights[i] - norm));
  }
  return out;
}

}  // namespace bnpseg

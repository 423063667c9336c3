#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "bnpseg/errors.hpp"
#include "bnpseg/samplers.hpp"
#include "doctest.h"

using namespace bnpseg;

namespace {

using Key = std::vector<std::uint32_t>;
using Dist = std::map<Key, double>;

std::shared_ptr<const Model> small_model(std::size_t n, std::vector<Count> counts,
                                         std::vector<Edge> edges, PartitionPrior prior,
                                         double phi = 2.0) {
  const std::size_t bins = counts.size() / n;
  Observations obs(n, bins, std::move(counts));
  BaseMeasure base = base_measure_from_data(obs, phi);
  return Model::create(SiteGraph(n, std::move(edges)), std::move(obs), std::move(base),
                       prior);
}

Key canonical(const std::vector<Label>& labels) {
  return Partition::from_labels(labels).canonical_labels();
}

// Exact law of one systematic Gibbs sweep for a DP prior with beta = 0,
// written directly from the collapsed CRP conditionals.
void crp_sweep_law(const Model& m, double alpha, std::vector<Label> labels, std::size_t site,
                   double mass, Dist& out) {
  const std::size_t n = labels.size();
  if (site == n) {
    out[canonical(labels)] += mass;
    return;
  }
  std::map<Label, std::vector<SiteIndex>> others;
  for (SiteIndex s = 0; s < n; ++s) {
    if (s != site) others[labels[s]].push_back(s);
  }
  std::vector<Label> targets;
  std::vector<double> weights;
  for (const auto& [label, members] : others) {
    const ClusterStats st = stats_of(m.obs, members);
    ClusterStats with = st;
    with.add_site(m.obs, static_cast<SiteIndex>(site));
    targets.push_back(label);
    weights.push_back(static_cast<double>(members.size()) *
                      std::exp(log_marglik(with, m.base) - log_marglik(st, m.base)));
  }
  ClusterStats alone(m.obs.bins());
  alone.add_site(m.obs, static_cast<SiteIndex>(site));
  targets.push_back(1000 + static_cast<Label>(site));
  weights.push_back(alpha * std::exp(log_marglik(alone, m.base)));
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (std::size_t j = 0; j < targets.size(); ++j) {
    std::vector<Label> next = labels;
    next[site] = targets[j];
    crp_sweep_law(m, alpha, next, site + 1, mass * weights[j] / total, out);
  }
}

double total_variation(const Dist& a, const Dist& b) {
  double tv = 0.0;
  for (const auto& [k, p] : a) {
    const auto it = b.find(k);
    tv += std::abs(p - (it == b.end() ? 0.0 : it->second));
  }
  for (const auto& [k, p] : b) {
    if (!a.count(k)) tv += p;
  }
  return 0.5 * tv;
}

}  // namespace

TEST_CASE("enumerate_partitions gives Bell numbers") {
  const std::size_t bell[] = {1, 1, 2, 5, 15, 52, 203, 877};
  for (std::size_t n = 1; n < 8; ++n) {
    const auto parts = enumerate_partitions(n);
    CHECK(parts.size() == bell[n]);
    for (const auto& rgs : parts) {
      const std::vector<Label> labels(rgs.begin(), rgs.end());
      CHECK(Partition::from_labels(labels).canonical_labels() == rgs);
    }
  }
}

TEST_CASE("exact posterior examples") {
  SUBCASE("single site") {
    const auto m = small_model(1, {2, 1}, {}, DirichletProcess{1.0});
    const Dist post = exact_posterior(*m);
    REQUIRE(post.size() == 1);
    CHECK(post.begin()->second == 1.0);
  }
  SUBCASE("two equal sites") {
    const double alpha = 0.7;
    const auto m = small_model(2, {3, 1, 3, 1}, {}, DirichletProcess{alpha});
    const Dist post = exact_posterior(*m);
    ClusterStats one(2), both(2);
    one.add_site(m->obs, 0);
    both.add_site(m->obs, 0);
    both.add_site(m->obs, 1);
    const double expected = (1.0 / alpha) * std::exp(log_marglik(both, m->base) -
                                                     2.0 * log_marglik(one, m->base));
    CHECK(post.at(Key{0, 0}) / post.at(Key{0, 1}) == doctest::Approx(expected));
  }
  SUBCASE("normalized and respects support") {
    const auto m = small_model(5, {1, 0, 0, 1, 1, 1, 2, 0, 0, 3},
                               {{0, 1, 0.4}, {1, 2, 0.4}, {3, 4, 0.9}}, TruncatedDP{1.0, 2});
    const Dist post = exact_posterior(*m);
    double total = 0.0;
    for (const auto& [k, p] : post) {
      total += p;
      const std::vector<Label> labels(k.begin(), k.end());
      for (std::size_t s : Partition::from_labels(labels).sizes()) CHECK(s >= 2);
    }
    CHECK(total == doctest::Approx(1.0));
    CHECK(post.size() == 11);  // {5} plus the ten 2+3 splits
  }
  SUBCASE("refuses large instances") {
    std::vector<Count> counts(13 * 2, 1);
    const auto m = small_model(13, counts, {}, DirichletProcess{1.0});
    CHECK_THROWS_AS(exact_posterior(*m), ConfigError);
  }
}

TEST_CASE("log posterior composition") {
  const auto m = small_model(3, {2, 0, 1, 1, 0, 3}, {{0, 1, 0.5}, {1, 2, 0.25}},
                             DirichletProcess{2.0});
  ChainState state(m, Partition::single_cluster(3), 1);
  const std::vector<SiteIndex> all{0, 1, 2};
  const double expected =
      0.75 + std::log(2.0) + std::lgamma(3.0) + log_marglik(stats_of(m->obs, all), m->base);
  CHECK(state.log_posterior() == doctest::Approx(expected));

  const auto t = small_model(3, {2, 0, 1, 1, 0, 3}, {}, TruncatedDP{1.0, 2});
  CHECK_THROWS_AS(ChainState(t, Partition::singletons(3), 1), ConfigError);
  CHECK(std::isfinite(ChainState(t, Partition::single_cluster(3), 1).log_posterior()));
}

TEST_CASE("bond sampling") {
  const SiteGraph g(3, {{0, 1, std::log(2.0)}, {1, 2, std::log(2.0)}});
  Rng rng(4);
  const std::vector<double> ones{1.0, 1.0};
  const std::vector<double> zeros{0.0, 0.0};

  SUBCASE("different clusters never bond") {
    const std::vector<Label> labels{0, 1, 2};
    const Partition p = Partition::from_labels(labels);
    for (int t = 0; t < 200; ++t) {
      const BondState b = sample_bonds(g, p, ones, rng);
      CHECK(b.bonded[0] + b.bonded[1] == 0);
      CHECK(b.spin_clusters.size() == 3);
    }
  }
  SUBCASE("delta zero gives singleton spin-clusters") {
    const BondState b = sample_bonds(g, Partition::single_cluster(3), zeros, rng);
    CHECK(b.spin_clusters.size() == 3);
    for (std::size_t l = 0; l < 3; ++l) CHECK(b.spin_clusters[l] == std::vector<SiteIndex>{static_cast<SiteIndex>(l)});
  }
  SUBCASE("beta * delta = ln 2 bonds with probability one half") {
    const int draws = 40000;
    int bonded = 0;
    for (int t = 0; t < draws; ++t) {
      bonded += sample_bonds(g, Partition::single_cluster(3), ones, rng).bonded[0];
    }
    const double se = std::sqrt(0.25 / draws);
    CHECK(std::abs(bonded / static_cast<double>(draws) - 0.5) < 4.0 * se);
  }
}

TEST_CASE("bonds stay inside clusters and spin-clusters are components") {
  std::mt19937_64 gen(6);
  const SiteGraph g = lattice_graph(6, 5, 0.8);
  Rng rng(9);
  std::vector<double> deltas(g.num_edges());
  for (auto& d : deltas) d = static_cast<double>(gen() % 30) / 10.0;
  for (int t = 0; t < 200; ++t) {
    std::vector<Label> labels(g.num_sites());
    for (auto& l : labels) l = static_cast<Label>(gen() % 3);
    const Partition p = Partition::from_labels(labels);
    const BondState b = sample_bonds(g, p, deltas, rng);
    std::vector<SiteIndex> parent(g.num_sites());
    std::iota(parent.begin(), parent.end(), 0u);
    auto find = [&](SiteIndex x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      const Edge& edge = g.edges()[e];
      if (!b.bonded[e]) continue;
      CHECK(p.cluster_of(edge.i) == p.cluster_of(edge.j));
      CHECK(b.spin_label[edge.i] == b.spin_label[edge.j]);
      parent[find(edge.i)] = find(edge.j);
    }
    std::size_t components = 0;
    for (SiteIndex s = 0; s < g.num_sites(); ++s) components += find(s) == s ? 1 : 0;
    CHECK(b.spin_clusters.size() == components);
    SiteIndex last_min = 0;
    for (std::size_t l = 0; l < b.spin_clusters.size(); ++l) {
      const auto& c = b.spin_clusters[l];
      for (SiteIndex s : c) {
        CHECK(b.spin_label[s] == l);
        CHECK(p.cluster_of(s) == p.cluster_of(c.front()));
        CHECK(find(s) == find(c.front()));
      }
      const SiteIndex mn = *std::min_element(c.begin(), c.end());
      if (l > 0) CHECK(mn > last_min);
      last_min = mn;
    }
  }
}

TEST_CASE("correction factor at the classical and single-site limits") {
  for (double beta : {0.02, 0.5, 3.0}) {
    CHECK(correction_log_factor(beta, 1.0) == 0.0);
    CHECK(correction_log_factor(beta, 0.0) == beta);
  }
}

TEST_CASE("a single site always forms one cluster") {
  const auto m = small_model(1, {1, 4}, {}, DirichletProcess{3.0});
  ChainState state(m, Partition::singletons(1), 2);
  for (int t = 0; t < 20; ++t) {
    state.gibbs_sweep();
    CHECK(state.partition().num_clusters() == 1);
  }
}

TEST_CASE("gibbs sweep matches hand-coded CRP Gibbs on three sites") {
  const double alpha = 1.3;
  const auto m = small_model(3, {2, 0, 0, 1, 1, 1}, {}, DirichletProcess{alpha});
  const std::vector<std::vector<Label>> starts{{0, 0, 0}, {0, 1, 2}, {0, 0, 1}};
  const int draws = 100000;
  for (const auto& start : starts) {
    Dist exact;
    crp_sweep_law(*m, alpha, start, 0, 1.0, exact);
    ChainState state(m, Partition::from_labels(start), 77);
    Dist freq;
    for (int t = 0; t < draws; ++t) {
      ChainState fresh = state;
      fresh.rng().seed(derive_seed(5, static_cast<std::uint64_t>(t)));
      fresh.gibbs_sweep();
      freq[fresh.partition().canonical_labels()] += 1.0 / draws;
    }
    for (const auto& [k, p] : exact) {
      const double se = std::sqrt(p * (1.0 - p) / draws);
      CHECK(std::abs(freq[k] - p) < 4.5 * se + 1e-12);
    }
  }
}

TEST_CASE("run_chain contract") {
  const auto m = small_model(4, {3, 0, 2, 1, 0, 3, 1, 2}, {{0, 1, 0.3}, {1, 2, 0.3}, {2, 3, 0.3}},
                             DirichletProcess{1.0});
  const Kernel gsw = GswKernel{ConstantDelta{5.0}, ScanOrder::kRandom};

  ChainConfig none;
  none.iterations = 0;
  const ChainTrace empty = run_chain(m, gsw, none);
  CHECK(empty.records.size() == 1);
  CHECK(empty.best_labels == Key{0, 1, 2, 3});

  ChainConfig config;
  config.iterations = 300;
  config.seed = 42;
  config.timing = false;
  config.record_sizes = true;
  const ChainTrace a = run_chain(m, gsw, config);
  const ChainTrace b = run_chain(m, gsw, config);
  REQUIRE(a.records.size() == 301);
  double running = kLogZero;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].log_posterior == b.records[i].log_posterior);
    CHECK(a.records[i].clusters == b.records[i].clusters);
    CHECK(a.records[i].sizes.size() == a.records[i].clusters);
    running = std::max(running, a.records[i].log_posterior);
  }
  CHECK(a.best_log_posterior == running);
  CHECK(a.best_labels == b.best_labels);
  CHECK(a.final_labels == b.final_labels);

  config.seed = 43;
  const ChainTrace c = run_chain(m, gsw, config);
  bool differs = false;
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    differs = differs || c.records[i].log_posterior != a.records[i].log_posterior;
  }
  CHECK(differs);

  ChainConfig bad;
  bad.init = InitKind::kLabels;
  bad.init_labels = {0, 1};
  CHECK_THROWS_AS(run_chain(m, GibbsKernel{}, bad), ConfigError);
}

TEST_CASE("statistics stay consistent across sweeps") {
  const SiteGraph g = lattice_graph(5, 4, 0.4);
  std::mt19937_64 gen(1);
  std::vector<Count> counts(20 * 3);
  for (std::size_t s = 0; s < 20; ++s) {
    for (std::size_t d = 0; d < 3; ++d) counts[s * 3 + d] = static_cast<Count>(gen() % 3);
    counts[s * 3 + s % 3] += 2;
  }
  Observations obs(20, 3, counts);
  BaseMeasure base = base_measure_from_data(obs, 5.0);
  for (const PartitionPrior& prior :
       std::vector<PartitionPrior>{DirichletProcess{1.0}, TruncatedDP{1.0, 3},
                                   FiniteDirichlet{4, 1.0}, MaxK{3},
                                   PoissonDirichlet{1.0, 0.4}}) {
    const auto m = Model::create(g, obs, base, prior);
    ChainConfig cfg;
    ChainState state(m, initial_partition(*m, cfg), 3);
    const auto deltas = edge_deltas(DataDependentDelta{8.0, 2.0, DistanceKind::kHellinger},
                                    m->graph, m->obs);
    for (int t = 0; t < 60; ++t) {
      if (t % 3 == 0) {
        state.gibbs_sweep();
      } else {
        state.gsw_sweep(deltas, t % 2 ? ScanOrder::kRandom : ScanOrder::kAscending);
      }
      state.check_consistency();
      CHECK(std::isfinite(state.log_posterior()));
      for (std::size_t s : state.partition().sizes()) CHECK(s >= min_cluster_size(prior));
    }
  }
}

TEST_CASE("delta rules") {
  const SiteGraph g(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  const Observations obs(3, 2, {4, 0, 0, 4, 2, 2});
  CHECK(edge_deltas(ConstantDelta{3.0}, g, obs) == std::vector<double>{3.0, 3.0});
  const auto tv = edge_deltas(DataDependentDelta{2.0, 1.5}, g, obs);
  CHECK(tv[0] == doctest::Approx(2.0 * std::exp(-1.5 * 1.0)));
  CHECK(tv[1] == doctest::Approx(2.0 * std::exp(-1.5 * 0.5)));
  const std::vector<Count> a{4, 0}, b{2, 2};
  CHECK(histogram_distance(a, b, DistanceKind::kTotalVariation) == doctest::Approx(0.5));
  CHECK(histogram_distance(a, b, DistanceKind::kHellinger) ==
        doctest::Approx(std::sqrt(1.0 - std::sqrt(0.5))));
  CHECK_THROWS_AS(edge_deltas(ConstantDelta{-1.0}, g, obs), ConfigError);
}

TEST_CASE("short-run frequencies approach the exact posterior") {
  const auto m = small_model(4, {2, 0, 1, 1, 0, 2, 2, 1}, {{0, 1, 0.5}, {1, 2, 0.5}, {2, 3, 0.5}},
                             DirichletProcess{1.0});
  const Dist exact = exact_posterior(*m);
  for (double lambda : {0.0, 1.0, 5.0}) {
    const auto deltas = edge_deltas(ConstantDelta{lambda}, m->graph, m->obs);
    ChainState state(m, Partition::singletons(4), 11);
    Dist freq;
    const int sweeps = 100000;
    for (int t = 0; t < sweeps; ++t) {
      state.gsw_sweep(deltas);
      freq[state.partition().canonical_labels()] += 1.0 / sweeps;
    }
    CHECK(total_variation(freq, exact) < 0.02);
  }
}

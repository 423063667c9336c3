#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "bnpseg/epf.hpp"
#include "bnpseg/errors.hpp"
#include "bnpseg/samplers.hpp"
#include "doctest.h"

using namespace bnpseg;

namespace {

using Sizes = std::vector<std::size_t>;

std::vector<PartitionPrior> all_priors() {
  return {MaxK{6},
          FiniteDirichlet{5, 0.7},
          DirichletProcess{2.5},
          PoissonDirichlet{1.5, 0.3},
          PoissonDirichlet{3.0, -0.5},  // integer branch, L = 6
          TruncatedDP{1.2, 2},
          TruncatedDP{1.2, 0}};
}

Sizes random_sizes(std::mt19937_64& rng, std::size_t max_k, std::size_t max_m) {
  Sizes s(1 + rng() % max_k);
  for (auto& m : s) m = 1 + rng() % max_m;
  return s;
}

}  // namespace

TEST_CASE("validation") {
  CHECK_THROWS_AS(validate(MaxK{0}), ConfigError);
  CHECK_THROWS_AS(validate(FiniteDirichlet{3, 0.0}), ConfigError);
  CHECK_THROWS_AS(validate(DirichletProcess{-1.0}), ConfigError);
  CHECK_THROWS_AS(validate(TruncatedDP{0.0, 2}), ConfigError);
  CHECK_THROWS_AS(validate(TruncatedDP{1.0, -1}), ConfigError);
  CHECK_THROWS_AS(validate(PoissonDirichlet{1.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(validate(PoissonDirichlet{-0.5, 0.2}), ConfigError);
  CHECK_THROWS_AS(validate(PoissonDirichlet{1.1, -0.5}), ConfigError);
  CHECK_NOTHROW(validate(PoissonDirichlet{-0.1, 0.2}));
  CHECK_NOTHROW(validate(PoissonDirichlet{1.5, -0.5}));
  CHECK_THROWS_AS(log_epf(DirichletProcess{0.0}, Sizes{1}), ConfigError);
}

TEST_CASE("log_epf examples") {
  CHECK(log_epf(DirichletProcess{1.0}, Sizes{1}) == 0.0);
  CHECK(log_epf(DirichletProcess{2.0}, Sizes{2, 1}) == doctest::Approx(std::log(4.0)));
  CHECK(log_epf(TruncatedDP{2.0, 2}, Sizes{2, 1}) == kLogZero);
  CHECK(log_epf(TruncatedDP{2.0, 2}, Sizes{2, 2}) == doctest::Approx(std::log(4.0)));
  CHECK(log_epf(MaxK{3}, Sizes{1, 1, 1, 1}) == kLogZero);
  CHECK(log_epf(MaxK{3}, Sizes{5, 1}) == doctest::Approx(std::log(6.0)));
  CHECK(log_epf(FiniteDirichlet{2, 1.0}, Sizes{1, 1, 1}) == kLogZero);
  // 2!/(2-1)! * Gamma(1 + 3)
  CHECK(log_epf(FiniteDirichlet{2, 1.0}, Sizes{3}) == doctest::Approx(std::log(12.0)));
}

TEST_CASE("poisson-dirichlet as written") {
  // alpha=2, theta=0.5, m=(2,1): (alpha + theta) * [0.5]_1^1 * [0.5]_1^0 = 2.5 * 0.5
  CHECK(log_epf(PoissonDirichlet{2.0, 0.5}, Sizes{2, 1}) ==
        doctest::Approx(std::log(1.25)));
  // theta=0 differs from the DP by a constant in k only through alpha^{k-1}/alpha^k.
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    const Sizes m = random_sizes(rng, 6, 7);
    const double pd = log_epf(PoissonDirichlet{1.7, 0.0}, m);
    const double dp = log_epf(DirichletProcess{1.7}, m);
    CHECK(pd - dp == doctest::Approx(-std::log(1.7)));
  }
}

TEST_CASE("poisson-dirichlet with theta=0 ranks partitions like the DP") {
  const std::size_t n = 6;
  const auto parts = enumerate_partitions(n);
  std::vector<double> pd, dp;
  for (const auto& rgs : parts) {
    const std::vector<Label> labels(rgs.begin(), rgs.end());
    const auto sizes = Partition::from_labels(labels).sizes();
    pd.push_back(log_epf(PoissonDirichlet{0.8, 0.0}, sizes));
    dp.push_back(log_epf(DirichletProcess{0.8}, sizes));
  }
  for (std::size_t a = 0; a < parts.size(); a += 7) {
    for (std::size_t b = 0; b < parts.size(); b += 5) {
      CHECK(pd[a] - pd[b] == doctest::Approx(dp[a] - dp[b]).epsilon(1e-12));
    }
  }
  CHECK(std::max_element(pd.begin(), pd.end()) - pd.begin() ==
        std::max_element(dp.begin(), dp.end()) - dp.begin());
}

TEST_CASE("log_epf is symmetric in the sizes") {
  std::mt19937_64 rng(9);
  for (const auto& prior : all_priors()) {
    for (int t = 0; t < 50; ++t) {
      Sizes m = random_sizes(rng, 6, 6);
      const double ref = log_epf(prior, m);
      std::shuffle(m.begin(), m.end(), rng);
      if (ref == kLogZero) {
        CHECK(log_epf(prior, m) == kLogZero);
      } else {
        CHECK(log_epf(prior, m) == doctest::Approx(ref).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("truncated dp equals dp above the minimum") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    Sizes m = random_sizes(rng, 5, 9);
    for (auto& x : m) x += 2;
    CHECK(log_epf(TruncatedDP{2.2, 3}, m) == log_epf(DirichletProcess{2.2}, m));
  }
}

TEST_CASE("move ratio examples") {
  const DirichletProcess dp{1.7};
  CHECK(log_epf_move_ratio(dp, Sizes{3}, 0, 1) == doctest::Approx(std::log(3.0)));
  CHECK(log_epf_move_ratio(dp, Sizes{3}, kNewCluster, 1) == doctest::Approx(std::log(1.7)));
  CHECK(log_epf_move_ratio(dp, Sizes{2}, 0, 2) == doctest::Approx(std::log(6.0)));
  // DP new-cluster weight for a block is alpha * Gamma(c).
  CHECK(log_epf_move_ratio(dp, Sizes{2, 5}, kNewCluster, 4) ==
        doctest::Approx(std::log(1.7 * 6.0)));
  // Empty residual: log g of the block alone.
  CHECK(log_epf_move_ratio(dp, Sizes{}, kNewCluster, 3) ==
        doctest::Approx(log_epf(dp, Sizes{3})));
  CHECK_THROWS_AS(log_epf_move_ratio(dp, Sizes{3}, 1, 1), std::out_of_range);
  CHECK(log_epf_move_ratio(MaxK{2}, Sizes{1, 1}, kNewCluster, 1) == kLogZero);
}

TEST_CASE("move ratios match differences of log_epf") {
  std::mt19937_64 rng(17);
  for (const auto& prior : all_priors()) {
    for (int t = 0; t < 200; ++t) {
      const Sizes residual = random_sizes(rng, 5, 5);
      const std::size_t c = 1 + rng() % 4;
      std::vector<double> batch(residual.size() + 1);
      log_epf_move_ratios(prior, residual, c, batch);
      const double before = log_epf(prior, residual);
      for (std::size_t j = 0; j <= residual.size(); ++j) {
        Sizes after = residual;
        if (j < residual.size()) {
          after[j] += c;
        } else {
          after.push_back(c);
        }
        const MoveTarget target = j < residual.size() ? MoveTarget{j} : kNewCluster;
        const double ratio = log_epf_move_ratio(prior, residual, target, c);
        CHECK(ratio == batch[j]);
        const double a = log_epf(prior, after);
        if (a == kLogZero) {
          CHECK(ratio == kLogZero);
        } else if (before != kLogZero) {
          CHECK(ratio == doctest::Approx(a - before).epsilon(1e-10));
        }
      }
    }
  }
}

TEST_CASE("potts term") {
  const SiteGraph cycle(4, {{0, 1, 0.02}, {1, 2, 0.02}, {2, 3, 0.02}, {0, 3, 0.02}});
  CHECK(log_potts(cycle, Partition::single_cluster(4)) == doctest::Approx(0.08));
  CHECK(log_potts(cycle, Partition::singletons(4)) == 0.0);
  const std::vector<Label> split{0, 0, 1, 1};
  CHECK(log_potts(cycle, Partition::from_labels(split)) == doctest::Approx(0.04));
}

TEST_CASE("combined prior") {
  const SiteGraph path(3, {{0, 1, 0.5}, {1, 2, 0.25}});
  const SiteGraph empty(3, {});
  const std::vector<Label> labels{0, 0, 1};
  const Partition p = Partition::from_labels(labels);
  const DirichletProcess dp{2.0};
  CHECK(log_prior_unnorm(dp, empty, p) == log_epf(dp, p.sizes()));
  CHECK(log_prior_unnorm(dp, path, p) == doctest::Approx(0.5 + std::log(4.0)));
  CHECK(log_prior_unnorm(TruncatedDP{1.0, 3}, path, p) == kLogZero);
  CHECK(std::isfinite(log_prior_unnorm(TruncatedDP{1.0, 3}, path, Partition::single_cluster(3))));
}

TEST_CASE("max-K prior matches the K-colour Potts law over partitions") {
  // Summing exp(sum beta 1{same colour}) over all K^n colourings groups
  // colourings by induced partition, each partition with k blocks having
  // K!/(K-k)! colourings.
  const int K = 3;
  const std::size_t n = 4;
  const SiteGraph g(n, {{0, 1, 0.3}, {1, 2, 0.7}, {2, 3, 0.2}, {0, 3, 0.4}});
  std::map<std::vector<std::uint32_t>, double> by_colouring;
  std::vector<Label> colours(n, 0);
  double total = 0.0;
  for (int code = 0; code < 81; ++code) {
    int c = code;
    for (std::size_t i = 0; i < n; ++i) {
      colours[i] = c % K;
      c /= K;
    }
    const Partition p = Partition::from_labels(colours);
    const double w = std::exp(log_potts(g, p));
    by_colouring[p.canonical_labels()] += w;
    total += w;
  }
  double prior_total = 0.0;
  for (const auto& rgs : enumerate_partitions(n)) {
    const std::vector<Label> labels(rgs.begin(), rgs.end());
    const double lp = log_prior_unnorm(MaxK{K}, g, Partition::from_labels(labels));
    if (lp != kLogZero) prior_total += std::exp(lp);
  }
  for (const auto& [rgs, w] : by_colouring) {
    const std::vector<Label> labels(rgs.begin(), rgs.end());
    const double lp = log_prior_unnorm(MaxK{K}, g, Partition::from_labels(labels));
    CHECK(std::exp(lp) / prior_total == doctest::Approx(w / total).epsilon(1e-12));
  }
}

#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bnpseg/partition.hpp"

namespace bnpseg {

// Log of an unnormalized weight; -infinity marks zero prior mass.
using LogWeight = double;
inline constexpr LogWeight kLogZero = -std::numeric_limits<double>::infinity();

// Exchangeable partition priors g(m_1, ..., m_k), all up to a constant.

// K!/(K-k)! for k <= K: the partition law of a K-colour Potts model.
struct MaxK {
  int K = 1;
};

// K!/(K-k)! * prod Gamma(alpha + m_j) for k <= K.
struct FiniteDirichlet {
  int K = 1;
  double alpha = 1.0;
};

// alpha^k * prod Gamma(m_j).
struct DirichletProcess {
  double alpha = 1.0;
};

// [theta + alpha]_theta^{k-1} * prod [1 - theta]_1^{m_j - 1}, with
// [x]_b^a = x (x + b) ... (x + (a - 1) b). Requires alpha > -theta with
// 0 <= theta < 1, or theta < 0 with alpha = -L theta for an integer L >= 1.
struct PoissonDirichlet {
  double alpha = 1.0;
  double theta = 0.0;
};

// Dirichlet process restricted to partitions whose clusters all have at
// least t_min members. t_min <= 1 is the plain Dirichlet process.
struct TruncatedDP {
  double alpha = 1.0;
  int t_min = 1;
};

using PartitionPrior =
    std::variant<MaxK, FiniteDirichlet, DirichletProcess, PoissonDirichlet,
                 TruncatedDP>;

// Throws ConfigError when hyperparameters are outside the allowed range.
void validate(const PartitionPrior& prior);

std::string describe(const PartitionPrior& prior);

LogWeight log_epf(const PartitionPrior& prior, std::span<const std::size_t> sizes);

// Destination of a block move: an index into the residual size vector, or a
// fresh cluster when empty.
using MoveTarget = std::optional<std::size_t>;
inline constexpr MoveTarget kNewCluster = std::nullopt;

// log g(after) - log g(residual) for moving a block of `block_size` sites
// into residual cluster `target` (or a new one). The residual may be empty,
// in which case the result is log g(block_size). For the truncated prior the
// support is judged on the after-move sizes only; the residual factor is
// shared by every candidate of one update and need not be in support.
LogWeight log_epf_move_ratio(const PartitionPrior& prior,
                             std::span<const std::size_t> residual,
                             MoveTarget target, std::size_t block_size);

// All candidates of one update at once: out[j] for residual cluster j and
// out[residual.size()] for a new cluster. out.size() must be residual.size()+1.
void log_epf_move_ratios(const PartitionPrior& prior,
                         std::span<const std::size_t> residual,
                         std::size_t block_size, std::span<double> out);

// Smallest cluster size the prior allows (1 unless truncated).
std::size_t min_cluster_size(const PartitionPrior& prior);

// Sum over edges whose endpoints share a cluster of beta_ij.
double log_potts(const SiteGraph& graph, const Partition& partition);

// log M(partition) + log g(sizes).
LogWeight log_prior_unnorm(const PartitionPrior& prior, const SiteGraph& graph,
                           const Partition& partition);

}  // namespace bnpseg

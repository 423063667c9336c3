#include "bnpseg/epf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bnpseg/errors.hpp"

namespace bnpseg {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double log_falling_factorial(int K, std::size_t k) {
  // log K!/(K-k)!
  return std::lgamma(K + 1.0) - std::lgamma(static_cast<double>(K) - k + 1.0);
}

// True when theta < 0 and alpha = -L theta for an integer L >= 1.
bool pd_integer_branch(const PoissonDirichlet& p, double* L = nullptr) {
  if (!(p.theta < 0.0)) return false;
  const double ratio = -p.alpha / p.theta;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, rounded)) {
    return false;
  }
  if (L) *L = rounded;
  return true;
}

// log of [theta + alpha]_theta^{k-1}: prod_{i=0}^{k-2} (alpha + (i+1) theta).
double log_pd_cluster_factor(const PoissonDirichlet& p, std::size_t k) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const double term = p.alpha + static_cast<double>(i + 1) * p.theta;
    if (!(term > 0.0)) return kLogZero;
    sum += std::log(term);
  }
  return sum;
}

// log of [1 - theta]_1^{m-1} = Gamma(m - theta) / Gamma(1 - theta).
double log_pd_size_factor(double theta, std::size_t m) {
  return std::lgamma(static_cast<double>(m) - theta) - std::lgamma(1.0 - theta);
}

// log Gamma(x + c) / Gamma(x).
double log_rising(double x, std::size_t c) {
  if (c == 1) return std::log(x);
  return std::lgamma(x + static_cast<double>(c)) - std::lgamma(x);
}

}  // namespace

void validate(const PartitionPrior& prior) {
  std::visit(
      Overloaded{
          [](const MaxK& p) {
            if (p.K < 1) throw ConfigError("MaxK requires K >= 1");
          },
          [](const FiniteDirichlet& p) {
            if (p.K < 1) throw ConfigError("FiniteDirichlet requires K >= 1");
            if (!(p.alpha > 0.0)) {
              throw ConfigError("FiniteDirichlet requires alpha > 0");
            }
          },
          [](const DirichletProcess& p) {
            if (!(p.alpha > 0.0)) {
              throw ConfigError("DirichletProcess requires alpha > 0");
            }
          },
          [](const PoissonDirichlet& p) {
            const bool standard =
                p.theta >= 0.0 && p.theta < 1.0 && p.alpha > -p.theta;
            if (!standard && !pd_integer_branch(p)) {
              throw ConfigError(
                  "PoissonDirichlet requires alpha > -theta with 0 <= theta < 1, "
                  "or theta < 0 with alpha = -L*theta for integer L >= 1");
            }
          },
          [](const TruncatedDP& p) {
            if (!(p.alpha > 0.0)) throw ConfigError("TruncatedDP requires alpha > 0");
            if (p.t_min < 0) throw ConfigError("TruncatedDP requires t_min >= 0");
          },
      },
      prior);
}

std::string describe(const PartitionPrior& prior) {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const MaxK& p) { out << "maxk(K=" << p.K << ")"; },
                 [&](const FiniteDirichlet& p) {
                   out << "finite-dirichlet(K=" << p.K << ", alpha=" << p.alpha << ")";
                 },
                 [&](const DirichletProcess& p) { out << "dp(alpha=" << p.alpha << ")"; },
                 [&](const PoissonDirichlet& p) {
                   out << "poisson-dirichlet(alpha=" << p.alpha << ", theta=" << p.theta
                       << ")";
                 },
                 [&](const TruncatedDP& p) {
                   out << "truncated-dp(alpha=" << p.alpha << ", tmin=" << p.t_min << ")";
                 },
             },
             prior);
  return out.str();
}

std::size_t min_cluster_size(const PartitionPrior& prior) {
  if (const auto* t = std::get_if<TruncatedDP>(&prior)) {
    return t->t_min > 1 ? static_cast<std::size_t>(t->t_min) : 1;
  }
  return 1;
}

LogWeight log_epf(const PartitionPrior& prior, std::span<const std::size_t> sizes) {
  validate(prior);
  const std::size_t k = sizes.size();
  for (std::size_t m : sizes) {
    if (m == 0) throw std::invalid_argument("log_epf: cluster of size zero");
  }
  if (k == 0) return 0.0;
  return std::visit(
      Overloaded{
          [&](const MaxK& p) -> double {
            if (k > static_cast<std::size_t>(p.K)) return kLogZero;
            return log_falling_factorial(p.K, k);
          },
          [&](const FiniteDirichlet& p) -> double {
            if (k > static_cast<std::size_t>(p.K)) return kLogZero;
            double sum = log_falling_factorial(p.K, k);
            for (std::size_t m : sizes) sum += std::lgamma(p.alpha + m);
            return sum;
          },
          [&](const DirichletProcess& p) -> double {
            double sum = k * std::log(p.alpha);
            for (std::size_t m : sizes) sum += std::lgamma(static_cast<double>(m));
            return sum;
          },
          [&](const PoissonDirichlet& p) -> double {
            double sum = log_pd_cluster_factor(p, k);
            if (sum == kLogZero) return kLogZero;
            for (std::size_t m : sizes) sum += log_pd_size_factor(p.theta, m);
            return sum;
          },
          [&](const TruncatedDP& p) -> double {
            double sum = k * std::log(p.alpha);
            for (std::size_t m : sizes) {
              if (m < static_cast<std::size_t>(std::max(p.t_min, 0))) return kLogZero;
              sum += std::lgamma(static_cast<double>(m));
            }
            return sum;
          },
      },
      prior);
}

void log_epf_move_ratios(const PartitionPrior& prior,
                         std::span<const std::size_t> residual,
                         std::size_t block_size, std::span<double> out) {
  if (out.size() != residual.size() + 1) {
    throw std::logic_error("log_epf_move_ratios: output has wrong length");
  }
  if (block_size == 0) throw std::invalid_argument("move ratio: empty block");
  const std::size_t k = residual.size();
  const double c = static_cast<double>(block_size);

  std::visit(
      Overloaded{
          [&](const MaxK& p) {
            for (std::size_t j = 0; j < k; ++j) out[j] = 0.0;
            out[k] = k < static_cast<std::size_t>(p.K)
                         ? std::log(static_cast<double>(p.K) - k)
                         : kLogZero;
          },
          [&](const FiniteDirichlet& p) {
            for (std::size_t j = 0; j < k; ++j) {
              out[j] = log_rising(p.alpha + static_cast<double>(residual[j]), block_size);
            }
            out[k] = k < static_cast<std::size_t>(p.K)
                         ? std::log(static_cast<double>(p.K) - k) +
                               std::lgamma(p.alpha + c)
                         : kLogZero;
          },
          [&](const DirichletProcess& p) {
            for (std::size_t j = 0; j < k; ++j) {
              out[j] = log_rising(static_cast<double>(residual[j]), block_size);
            }
            out[k] = std::log(p.alpha) + std::lgamma(c);
          },
          [&](const PoissonDirichlet& p) {
            for (std::size_t j = 0; j < k; ++j) {
              out[j] = log_rising(static_cast<double>(residual[j]) - p.theta, block_size);
            }
            // Opening cluster k+1 multiplies in alpha + k*theta (nothing when
            // the residual is empty).
            double open = 0.0;
            if (k > 0) {
              const double term = p.alpha + static_cast<double>(k) * p.theta;
              open = term > 0.0 ? std::log(term) : kLogZero;
            }
            out[k] = open == kLogZero ? kLogZero
                                      : open + log_pd_size_factor(p.theta, block_size);
          },
          [&](const TruncatedDP& p) {
            const std::size_t t = p.t_min > 1 ? static_cast<std::size_t>(p.t_min) : 1;
            std::size_t below = 0;
            for (std::size_t m : residual) below += m < t ? 1 : 0;
            for (std::size_t j = 0; j < k; ++j) {
              // After the move cluster j holds m + c; every other residual
              // cluster must already meet the minimum.
              const std::size_t others_below = below - (residual[j] < t ? 1 : 0);
              const bool ok = others_below == 0 && residual[j] + block_size >= t;
              out[j] = ok ? log_rising(static_cast<double>(residual[j]), block_size)
                          : kLogZero;
            }
            const bool ok = below == 0 && block_size >= t;
            out[k] = ok ? std::log(p.alpha) + std::lgamma(c) : kLogZero;
          },
      },
      prior);
}

LogWeight log_epf_move_ratio(const PartitionPrior& prior,
                             std::span<const std::size_t> residual,
                             MoveTarget target, std::size_t block_size) {
  validate(prior);
  for (std::size_t m : residual) {
    if (m == 0) throw std::invalid_argument("move ratio: residual size zero");
  }
  if (target && *target >= residual.size()) {
    throw std::out_of_range("move ratio: target index out of range");
  }
  std::vector<double> all(residual.size() + 1);
  log_epf_move_ratios(prior, residual, block_size, all);
  return target ? all[*target] : all.back();
}

double log_potts(const SiteGraph& graph, const Partition& partition) {
  double sum = 0.0;
  for (const Edge& e : graph.edges()) {
    if (partition.cluster_of(e.i) == partition.cluster_of(e.j)) sum += e.beta;
  }
  return sum;
}

LogWeight log_prior_unnorm(const PartitionPrior& prior, const SiteGraph& graph,
                           const Partition& partition) {
  const std::vector<std::size_t> sizes = partition.sizes();
  const LogWeight g = log_epf(prior, sizes);
  if (g == kLogZero) return kLogZero;
  return log_potts(graph, partition) + g;
}

}  // namespace bnpseg

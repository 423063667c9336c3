#include "bnpseg/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bnpseg/errors.hpp"

namespace bnpseg {

Observations::Observations(std::size_t n, std::size_t bins, std::vector<Count> counts)
    : n_(n), bins_(bins), counts_(std::move(counts)) {
  if (counts_.size() != n_ * bins_) {
    throw InputError("observations: expected " + std::to_string(n_ * bins_) +
                     " counts, got " + std::to_string(counts_.size()));
  }
  totals_.assign(n_, 0);
  support_offsets_.assign(n_ + 1, 0);
  for (std::size_t s = 0; s < n_; ++s) {
    for (std::size_t d = 0; d < bins_; ++d) {
      const Count c = counts_[s * bins_ + d];
      if (c < 0) {
        throw InputError("observations: negative count at site " + std::to_string(s));
      }
      if (c > 0) support_.push_back(static_cast<std::uint32_t>(d));
      totals_[s] += c;
    }
    if (totals_[s] == 0) {
      throw InputError("observations: site " + std::to_string(s) +
                       " has an empty histogram");
    }
    support_offsets_[s + 1] = support_.size();
  }
}

BaseMeasure::BaseMeasure(std::vector<double> concentration)
    : pi_(std::move(concentration)) {
  for (double p : pi_) {
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw InputError("base measure: concentration entries must be positive");
    }
    sum_ += p;
    sum_lgamma_ += std::lgamma(p);
  }
}

BaseMeasure base_measure_from_data(const Observations& obs, double phi) {
  if (!(phi > 0.0)) throw ConfigError("base measure: phi must be positive");
  const std::size_t bins = obs.bins();
  if (obs.num_sites() == 0 || bins == 0) {
    throw InputError("base measure: no observations");
  }
  std::vector<double> pooled(bins, 0.0);
  double grand = 0.0;
  for (std::size_t s = 0; s < obs.num_sites(); ++s) {
    const auto row = obs.row(static_cast<SiteIndex>(s));
    for (std::size_t d = 0; d < bins; ++d) {
      pooled[d] += static_cast<double>(row[d]);
      grand += static_cast<double>(row[d]);
    }
  }
  if (grand <= 0.0) throw InputError("base measure: all counts are zero");
  const double floor = 1e-6 * phi / static_cast<double>(bins);
  for (double& p : pooled) {
    p = phi * p / grand;
    if (p <= 0.0) p = floor;
  }
  return BaseMeasure(std::move(pooled));
}

void ClusterStats::add(std::span<const Count> row) {
  for (std::size_t d = 0; d < row.size(); ++d) {
    sums[d] += row[d];
    total += row[d];
  }
  ++members;
}

void ClusterStats::remove(std::span<const Count> row) {
  for (std::size_t d = 0; d < row.size(); ++d) {
    sums[d] -= row[d];
    total -= row[d];
  }
  --members;
}

void ClusterStats::add_site(const Observations& obs, SiteIndex site) {
  const auto row = obs.row(site);
  for (std::uint32_t d : obs.support(site)) sums[d] += row[d];
  total += obs.total(site);
  ++members;
}

void ClusterStats::remove_site(const Observations& obs, SiteIndex site) {
  const auto row = obs.row(site);
  for (std::uint32_t d : obs.support(site)) sums[d] -= row[d];
  total -= obs.total(site);
  --members;
}

void ClusterStats::merge(const ClusterStats& other) {
  for (std::size_t d = 0; d < sums.size(); ++d) sums[d] += other.sums[d];
  total += other.total;
  members += other.members;
}

void ClusterStats::subtract(const ClusterStats& other) {
  for (std::size_t d = 0; d < sums.size(); ++d) sums[d] -= other.sums[d];
  total -= other.total;
  members -= other.members;
}

void ClusterStats::clear() {
  std::fill(sums.begin(), sums.end(), 0);
  total = 0;
  members = 0;
}

ClusterStats stats_of(const Observations& obs, std::span<const SiteIndex> sites) {
  ClusterStats stats(obs.bins());
  for (SiteIndex s : sites) stats.add_site(obs, s);
  return stats;
}

double log_marglik(const ClusterStats& stats, const BaseMeasure& base) {
  const auto pi = base.concentration();
  double sum = std::lgamma(base.sum()) - std::lgamma(base.sum() + stats.total);
  for (std::size_t d = 0; d < pi.size(); ++d) {
    if (stats.sums[d] != 0) {
      sum += std::lgamma(pi[d] + stats.sums[d]) - std::lgamma(pi[d]);
    }
  }
  return sum;
}

double log_marglik_ratio(const ClusterStats& cluster, const ClusterStats& block,
                         const BaseMeasure& base) {
  const auto pi = base.concentration();
  const double before = base.sum() + cluster.total;
  double sum = std::lgamma(before) - std::lgamma(before + block.total);
  for (std::size_t d = 0; d < pi.size(); ++d) {
    if (block.sums[d] == 0) continue;
    const double a = pi[d] + cluster.sums[d];
    sum += std::lgamma(a + block.sums[d]) - std::lgamma(a);
  }
  return sum;
}

double log_marglik_site_ratio(const ClusterStats& cluster, const Observations& obs,
                              SiteIndex site, const BaseMeasure& base) {
  const auto pi = base.concentration();
  const auto row = obs.row(site);
  const double before = base.sum() + cluster.total;
  double sum = std::lgamma(before) - std::lgamma(before + obs.total(site));
  for (std::uint32_t d : obs.support(site)) {
    const double a = pi[d] + cluster.sums[d];
    sum += std::lgamma(a + row[d]) - std::lgamma(a);
  }
  return sum;
}

}  // namespace bnpseg

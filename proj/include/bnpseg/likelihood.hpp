#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bnpseg/partition.hpp"

namespace bnpseg {

using Count = std::int64_t;

// Per-site D-bin histograms, row-major n x D.
class Observations {
 public:
  Observations() = default;
  // Throws InputError if counts.size() != n * bins, any count is negative,
  // or any row sums to zero.
  Observations(std::size_t n, std::size_t bins, std::vector<Count> counts);

  std::size_t num_sites() const noexcept { return n_; }
  std::size_t bins() const noexcept { return bins_; }
  std::span<const Count> row(SiteIndex site) const {
    return {counts_.data() + site * bins_, bins_};
  }
  std::span<const Count> counts() const noexcept { return counts_; }
  Count total(SiteIndex site) const { return totals_[site]; }
  // Bins with a nonzero count for `site`, ascending.
  std::span<const std::uint32_t> support(SiteIndex site) const {
    return {support_.data() + support_offsets_[site],
            support_.data() + support_offsets_[site + 1]};
  }

 private:
  std::size_t n_ = 0;
  std::size_t bins_ = 0;
  std::vector<Count> counts_;
  std::vector<Count> totals_;
  std::vector<std::uint32_t> support_;
  std::vector<std::size_t> support_offsets_{0};
};

// Dirichlet concentration vector of the base measure, with cached sums.
class BaseMeasure {
 public:
  BaseMeasure() = default;
  // Throws InputError unless every entry is positive and finite.
  explicit BaseMeasure(std::vector<double> concentration);

  std::size_t bins() const noexcept { return pi_.size(); }
  std::span<const double> concentration() const noexcept { return pi_; }
  double sum() const noexcept { return sum_; }
  double sum_lgamma() const noexcept { return sum_lgamma_; }

 private:
  std::vector<double> pi_;
  double sum_ = 0.0;
  double sum_lgamma_ = 0.0;
};

// pi = phi * ybar where ybar is the normalized pooled histogram. Bins that
// never occur get 1e-6 * phi / D so the Dirichlet stays proper.
BaseMeasure base_measure_from_data(const Observations& obs, double phi);

// Pooled counts of a set of sites.
struct ClusterStats {
  std::vector<Count> sums;
  Count total = 0;
  std::size_t members = 0;

  explicit ClusterStats(std::size_t bins = 0) : sums(bins, 0) {}

  void add(std::span<const Count> row);
  void remove(std::span<const Count> row);
  void add_site(const Observations& obs, SiteIndex site);
  void remove_site(const Observations& obs, SiteIndex site);
  void merge(const ClusterStats& other);
  void subtract(const ClusterStats& other);
  void clear();

  bool operator==(const ClusterStats&) const = default;
};

ClusterStats stats_of(const Observations& obs, std::span<const SiteIndex> sites);

// log of the Dirichlet-multinomial evidence of the pooled counts, without
// the per-site multinomial coefficients:
//   lgamma(sum pi) - sum lgamma(pi_d) + sum lgamma(pi_d + s_d)
//   - lgamma(sum pi + S).
double log_marglik(const ClusterStats& stats, const BaseMeasure& base);

// log_marglik(cluster + block) - log_marglik(cluster), touching only the
// bins the block occupies.
double log_marglik_ratio(const ClusterStats& cluster, const ClusterStats& block,
                         const BaseMeasure& base);

// Single-site form of log_marglik_ratio using the site's sparse support.
double log_marglik_site_ratio(const ClusterStats& cluster, const Observations& obs,
                              SiteIndex site, const BaseMeasure& base);

}  // namespace bnpseg

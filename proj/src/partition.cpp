#include "bnpseg/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>

#include "bnpseg/errors.hpp"

namespace bnpseg {

SiteGraph::SiteGraph(std::size_t n, std::vector<Edge> edges)
    : n_(n), edges_(std::move(edges)) {
  std::set<std::pair<SiteIndex, SiteIndex>> seen;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    Edge& edge = edges_[e];
    if (edge.i >= n_ || edge.j >= n_) {
      throw InputError("edge " + std::to_string(e) + " names a site outside [0, " +
                       std::to_string(n_) + ")");
    }
    if (edge.i == edge.j) {
      throw InputError("edge " + std::to_string(e) + " is a self-loop");
    }
    if (!(edge.beta > 0.0) || !std::isfinite(edge.beta)) {
      throw InputError("edge " + std::to_string(e) +
                       " has a non-positive coupling");
    }
    if (edge.i > edge.j) std::swap(edge.i, edge.j);
    if (!seen.emplace(edge.i, edge.j).second) {
      throw InputError("duplicate edge (" + std::to_string(edge.i) + ", " +
                       std::to_string(edge.j) + ")");
    }
  }

  std::vector<std::size_t> degree(n_, 0);
  for (const Edge& edge : edges_) {
    ++degree[edge.i];
    ++degree[edge.j];
  }
  offsets_.assign(n_ + 1, 0);
  for (std::size_t s = 0; s < n_; ++s) offsets_[s + 1] = offsets_[s] + degree[s];
  adjacency_.resize(offsets_[n_]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::uint32_t e = 0; e < edges_.size(); ++e) {
    const Edge& edge = edges_[e];
    adjacency_[fill[edge.i]++] = {edge.j, e};
    adjacency_[fill[edge.j]++] = {edge.i, e};
  }
}

SiteGraph SiteGraph::with_constant_beta(double beta) const {
  if (beta == 0.0) return SiteGraph(n_, {});
  std::vector<Edge> edges = edges_;
  for (Edge& e : edges) e.beta = beta;
  return SiteGraph(n_, std::move(edges));
}

SiteGraph lattice_graph(std::size_t width, std::size_t height, double beta) {
  std::vector<Edge> edges;
  if (beta != 0.0) {
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const auto s = static_cast<SiteIndex>(y * width + x);
        if (x + 1 < width) edges.push_back({s, s + 1, beta});
        if (y + 1 < height) {
          edges.push_back({s, static_cast<SiteIndex>(s + width), beta});
        }
      }
    }
  }
  return SiteGraph(width * height, std::move(edges));
}

SiteGraph near_square_lattice(std::size_t n, double beta) {
  std::size_t width = 1;
  while (width * width < n) ++width;
  std::vector<Edge> edges;
  if (beta != 0.0) {
    for (std::size_t s = 0; s < n; ++s) {
      const auto site = static_cast<SiteIndex>(s);
      if ((s + 1) % width != 0 && s + 1 < n) edges.push_back({site, site + 1, beta});
      if (s + width < n) edges.push_back({site, static_cast<SiteIndex>(s + width), beta});
    }
  }
  return SiteGraph(n, std::move(edges));
}

Partition Partition::from_labels(std::span<const Label> labels) {
  Partition p;
  p.assignment_.assign(labels.size(), kNoCluster);
  p.position_.assign(labels.size(), 0);
  std::unordered_map<Label, ClusterId> ids;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    auto [it, inserted] = ids.try_emplace(labels[s], kNoCluster);
    if (inserted) it->second = p.allocate();
    p.attach(static_cast<SiteIndex>(s), it->second);
  }
  return p;
}

Partition Partition::singletons(std::size_t n) {
  std::vector<Label> labels(n);
  for (std::size_t s = 0; s < n; ++s) labels[s] = static_cast<Label>(s);
  return from_labels(labels);
}

Partition Partition::single_cluster(std::size_t n) {
  std::vector<Label> labels(n, 0);
  return from_labels(labels);
}

std::vector<ClusterId> Partition::ordered_clusters() const {
  std::vector<ClusterId> out;
  out.reserve(active_.size());
  std::vector<std::uint8_t> seen(members_.size(), 0);
  for (ClusterId c : assignment_) {
    if (!seen[c]) {
      seen[c] = 1;
      out.push_back(c);
    }
  }
  return out;
}

std::vector<std::size_t> Partition::sizes() const {
  std::vector<std::size_t> out;
  out.reserve(active_.size());
  for (ClusterId c : ordered_clusters()) out.push_back(members_[c].size());
  return out;
}

std::vector<std::uint32_t> Partition::canonical_labels() const {
  std::vector<std::uint32_t> out(assignment_.size());
  std::vector<std::uint32_t> relabel(members_.size(), kNoCluster);
  std::uint32_t next = 0;
  for (std::size_t s = 0; s < assignment_.size(); ++s) {
    std::uint32_t& r = relabel[assignment_[s]];
    if (r == kNoCluster) r = next++;
    out[s] = r;
  }
  return out;
}

ClusterId Partition::allocate() {
  ClusterId c;
  if (!free_.empty()) {
    c = free_.back();
    free_.pop_back();
  } else {
    c = static_cast<ClusterId>(members_.size());
    members_.emplace_back();
    active_position_.push_back(0);
  }
  active_position_[c] = static_cast<std::uint32_t>(active_.size());
  active_.push_back(c);
  return c;
}

void Partition::detach(SiteIndex site) {
  const ClusterId c = assignment_[site];
  auto& list = members_[c];
  const std::uint32_t pos = position_[site];
  list[pos] = list.back();
  position_[list[pos]] = pos;
  list.pop_back();
  assignment_[site] = kNoCluster;
  if (list.empty()) {
    const std::uint32_t apos = active_position_[c];
    active_[apos] = active_.back();
    active_position_[active_[apos]] = apos;
    active_.pop_back();
    free_.push_back(c);
  }
}

void Partition::attach(SiteIndex site, ClusterId c) {
  position_[site] = static_cast<std::uint32_t>(members_[c].size());
  members_[c].push_back(site);
  assignment_[site] = c;
}

ClusterId Partition::move(SiteIndex site, ClusterId target) {
  const SiteIndex block[1] = {site};
  return move_block(block, target);
}

ClusterId Partition::move_block(std::span<const SiteIndex> block,
                                ClusterId target) {
  if (block.empty()) throw std::logic_error("move_block: empty block");
  if (target != kNoCluster && members_[target].empty()) {
    throw std::logic_error("move_block: target cluster is not active");
  }
  // Same-cluster shortcut keeps the id stable when nothing changes.
  if (target != kNoCluster) {
    bool all_there = true;
    for (SiteIndex s : block) all_there = all_there && assignment_[s] == target;
    if (all_there) return target;
  }
  for (SiteIndex s : block) detach(s);
  if (target == kNoCluster) target = allocate();
  for (SiteIndex s : block) attach(s, target);
  return target;
}

void Partition::check_invariants() const {
  std::size_t total = 0;
  for (ClusterId c : active_) {
    if (members_[c].empty()) throw std::logic_error("empty active cluster");
    for (std::size_t p = 0; p < members_[c].size(); ++p) {
      const SiteIndex s = members_[c][p];
      if (assignment_[s] != c || position_[s] != p) {
        throw std::logic_error("membership and assignment disagree");
      }
    }
    total += members_[c].size();
  }
  if (total != assignment_.size()) {
    throw std::logic_error("cluster sizes do not sum to n");
  }
}

Partition build_partition(const SiteGraph& graph, std::span<const Label> labels) {
  if (labels.size() != graph.num_sites()) {
    throw InputError("expected " + std::to_string(graph.num_sites()) + " labels, got " +
                     std::to_string(labels.size()));
  }
  return Partition::from_labels(labels);
}

PartitionView remove_block(const Partition& partition,
                           std::span<const SiteIndex> block) {
  if (block.empty()) throw InputError("remove_block: empty block");
  std::map<ClusterId, std::size_t> taken;
  std::set<SiteIndex> unique;
  for (SiteIndex s : block) {
    if (s >= partition.num_sites()) {
      throw InputError("remove_block: site " + std::to_string(s) +
                       " out of range");
    }
    if (unique.insert(s).second) ++taken[partition.cluster_of(s)];
  }
  PartitionView view;
  view.block.assign(unique.begin(), unique.end());
  for (ClusterId c : partition.clusters()) {
    const auto it = taken.find(c);
    const std::size_t residual =
        partition.size(c) - (it == taken.end() ? 0 : it->second);
    if (residual == 0) continue;
    view.clusters.push_back(c);
    view.residual_sizes.push_back(residual);
  }
  return view;
}

double rand_index(std::span<const Label> a, std::span<const Label> b) {
  if (a.size() != b.size()) {
    throw InputError("rand_index: labelings have different lengths (" +
                     std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) throw InputError("rand_index: need at least two sites");

  auto pairs = [](std::uint64_t m) { return m * (m - 1) / 2; };
  std::map<Label, std::uint64_t> count_a, count_b;
  std::map<std::pair<Label, Label>, std::uint64_t> joint;
  for (std::size_t s = 0; s < a.size(); ++s) {
    ++count_a[a[s]];
    ++count_b[b[s]];
    ++joint[{a[s], b[s]}];
  }
  std::uint64_t same_a = 0, same_b = 0, same_both = 0;
  for (const auto& [_, m] : count_a) same_a += pairs(m);
  for (const auto& [_, m] : count_b) same_b += pairs(m);
  for (const auto& [_, m] : joint) same_both += pairs(m);
  const std::uint64_t total = pairs(a.size());
  // Agreements: together in both, plus apart in both.
  const std::uint64_t agree = total - same_a - same_b + 2 * same_both;
  return static_cast<double>(agree) / static_cast<double>(total);
}

}  // namespace bnpseg

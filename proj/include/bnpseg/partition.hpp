#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace bnpseg {

using SiteIndex = std::uint32_t;
using ClusterId = std::uint32_t;
using Label = std::int64_t;

inline constexpr ClusterId kNoCluster = std::numeric_limits<ClusterId>::max();

struct Edge {
  SiteIndex i;
  SiteIndex j;
  double beta;
};

struct Neighbor {
  SiteIndex site;
  std::uint32_t edge;  // index into SiteGraph::edges()
};

// Undirected super-pixel adjacency with per-edge Potts couplings. Edges are
// stored with i < j; pairs with zero coupling are simply absent.
// Immutable after construction.
class SiteGraph {
 public:
  SiteGraph() = default;
  // Throws InputError on self-loops, duplicates, out-of-range sites or
  // non-positive couplings. Edges given as (j, i) are normalized to (i, j).
  SiteGraph(std::size_t n, std::vector<Edge> edges);

  std::size_t num_sites() const noexcept { return n_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const Neighbor> neighbors(SiteIndex site) const noexcept {
    return {adjacency_.data() + offsets_[site],
            adjacency_.data() + offsets_[site + 1]};
  }

  // Same sites and edges with every coupling replaced by `beta`
  // (beta == 0 drops all edges).
  SiteGraph with_constant_beta(double beta) const;

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> adjacency_;
};

// 4-neighbour lattice; site index is y * width + x.
SiteGraph lattice_graph(std::size_t width, std::size_t height, double beta);

// n sites laid out row-major in rows of ceil(sqrt(n)); the last row may be
// partial.
SiteGraph near_square_lattice(std::size_t n, double beta);

// Cluster assignment of n sites with explicit membership lists. Cluster ids
// are internal slot numbers: they carry no meaning and are recycled once a
// cluster empties. Empty clusters are never retained.
class Partition {
 public:
  Partition() = default;

  // Arbitrary label values; equal labels share a cluster. Ids are assigned
  // in order of first appearance, so the result is canonical.
  static Partition from_labels(std::span<const Label> labels);
  static Partition singletons(std::size_t n);
  static Partition single_cluster(std::size_t n);

  std::size_t num_sites() const noexcept { return assignment_.size(); }
  std::size_t num_clusters() const noexcept { return active_.size(); }

  ClusterId cluster_of(SiteIndex site) const { return assignment_[site]; }
  std::span<const SiteIndex> members(ClusterId c) const { return members_[c]; }
  std::size_t size(ClusterId c) const { return members_[c].size(); }
  // Active cluster ids, in no particular order.
  std::span<const ClusterId> clusters() const noexcept { return active_; }
  // One past the largest slot id ever handed out; bound for id-indexed
  // scratch arrays.
  std::size_t capacity() const noexcept { return members_.size(); }

  // Active ids ordered by smallest member site; depends only on the
  // partition, not on slot history.
  std::vector<ClusterId> ordered_clusters() const;

  // Cluster sizes in ordered_clusters() order.
  std::vector<std::size_t> sizes() const;

  // Labels 0..k-1 in order of first appearance (a restricted growth string).
  std::vector<std::uint32_t> canonical_labels() const;

  // Moves `site` into cluster `target`, or into a fresh cluster when target
  // is kNoCluster. Returns the destination id. The source cluster is
  // released if it empties.
  ClusterId move(SiteIndex site, ClusterId target);

  // Same as move() for several sites; all land in one destination.
  ClusterId move_block(std::span<const SiteIndex> block, ClusterId target);

  bool operator==(const Partition& other) const {
    return canonical_labels() == other.canonical_labels();
  }

  // Verifies sizes, membership and the active list agree. Throws
  // std::logic_error on mismatch.
  void check_invariants() const;

 private:
  ClusterId allocate();
  void detach(SiteIndex site);
  void attach(SiteIndex site, ClusterId c);

  std::vector<ClusterId> assignment_;
  std::vector<std::uint32_t> position_;  // index of site within its members list
  std::vector<std::vector<SiteIndex>> members_;
  std::vector<ClusterId> active_;
  std::vector<std::uint32_t> active_position_;
  std::vector<ClusterId> free_;
};

// Partition of the graph's sites from per-site labels. Throws InputError if
// the label count differs from the graph's site count.
Partition build_partition(const SiteGraph& graph, std::span<const Label> labels);

// A partition with a block of sites taken out: the residual clusters and
// their sizes. Clusters emptied by the removal are dropped.
struct PartitionView {
  std::vector<SiteIndex> block;
  std::vector<ClusterId> clusters;
  std::vector<std::size_t> residual_sizes;  // parallel to `clusters`
};

// Throws InputError if the block is empty or names an invalid site.
PartitionView remove_block(const Partition& partition,
                           std::span<const SiteIndex> block);

// Fraction of the n(n-1)/2 site pairs on which both labelings agree
// (together in both or apart in both). Throws InputError on length mismatch
// or n < 2.
double rand_index(std::span<const Label> a, std::span<const Label> b);

}  // namespace bnpseg

#pragma once

#include "degree/matrix.hpp"
#include "degree/rng.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace degree {

/// A set of node indices, kept sorted and duplicate-free.
class node_group {
public:
    node_group() = default;
    explicit node_group(std::vector<int> members);

    static node_group single(int v) { return node_group({v}); }
    static node_group all(int n);

    bool empty() const { return members_.empty(); }
    std::size_t size() const { return members_.size(); }
    bool contains(int v) const;

    /// Set union / insertion; both return new groups.
    node_group with(int v) const;
    node_group united(const node_group& other) const;
    bool intersects(const node_group& other) const;

    const std::vector<int>& members() const { return members_; }
    auto begin() const { return members_.begin(); }
    auto end() const { return members_.end(); }

    bool operator==(const node_group&) const = default;

private:
    std::vector<int> members_;
};

/// Undirected graph with node features and optional labels / ground-truth
/// importance masks. Edges are stored once as (min,max) pairs in sorted
/// order; self loops are rejected (the normalized adjacency adds them).
/// Immutable after construction.
struct graph {
    graph() = default;
    /// Canonicalizes and sorts the edge list, permuting edge_mask alongside
    /// it when given, and validates every invariant.
    graph(int n_nodes, std::vector<std::pair<int, int>> edge_list, matrix node_features,
          std::vector<int> labels = {}, std::optional<int> g_label = std::nullopt,
          std::vector<std::uint8_t> node_mask = {}, std::vector<std::uint8_t> edge_mask = {});

    int n = 0;
    std::vector<std::pair<int, int>> edges;
    matrix features;                      // n x F
    std::vector<int> node_labels;         // empty or size n
    std::optional<int> graph_label;
    std::vector<std::uint8_t> gt_nodes;   // empty or size n
    std::vector<std::uint8_t> gt_edges;   // empty or size |edges|
    // When nonempty (size n), the id of the motif each node belongs to, -1
    // outside any motif. Explanation ground truth for a node instance is its
    // own motif, not every motif that strays into the computation graph.
    std::vector<int> motif_ids;
    // When nonempty (size n), per-node degree counts used for the symmetric
    // normalization in place of this graph's own degrees. khop_subgraph sets
    // it from the parent graph so message passing at the center node of a
    // computation subgraph reproduces the parent graph exactly; nodes outside
    // the subgraph then provably cannot change the explained prediction.
    std::vector<int> norm_degrees;

    std::size_t feature_dim() const { return features.cols(); }
    const std::vector<int>& neighbors(int v) const { return adjacency_[v]; }

    bool operator==(const graph&) const = default;
    bool has_edge(int u, int v) const;

private:
    std::vector<std::vector<int>> adjacency_;  // sorted neighbor lists
};

/// Symmetric n x n matrix with entry (i,j) = 1/sqrt(d_i d_j) on the closed
/// neighborhood (self loops included, so degrees are positive) and 0
/// elsewhere.
matrix normalized_adjacency(const graph& g);

/// Sparse form of normalized_adjacency: per node, the (neighbor, weight)
/// pairs over its closed neighborhood, neighbors ascending. This is what
/// the message-passing kernels iterate.
struct propagation {
    std::vector<std::vector<std::pair<int, double>>> rows;
};
propagation gcn_propagation(const graph& g);

/// Induced subgraph on every node within l hops of center, with features,
/// labels and masks restricted consistently.
/// out = P h for the sparse operator: out_i = sum_j w_ij h_j over p.rows[i].
matrix propagate(const propagation& p, const matrix& h);

struct subgraph_result {
    graph g;
    std::vector<int> new_to_old;  // size g.n
    std::vector<int> old_to_new;  // -1 for excluded nodes
};
/// The result carries the parent graph's degrees in norm_degrees, so GCN
/// propagation at the center matches the parent graph.
subgraph_result khop_subgraph(const graph& g, int center, int hops);

/// Induced subgraph on an explicit node set: original features kept, edges
/// with an endpoint outside the set dropped. Unlike khop_subgraph the result
/// is a free-standing graph (degrees recomputed), which is what prediction-
/// consistency checks on explanation subgraphs need.
subgraph_result induce_subgraph(const graph& g, const node_group& nodes);

/// All nodes outside the group with at least one edge into it.
std::vector<int> group_neighbors(const graph& g, const node_group& b);

/// Samples n_walks context groups for a target group: each walk starts at
/// a uniformly chosen neighbor of the group and takes walk_len uniform
/// steps, confined to nodes within hop_bound hops of the group and outside
/// the group itself; the context is the set of visited nodes. Walks that
/// cannot start return the empty group.
std::vector<node_group> random_walk_context(const graph& g, const node_group& seed_group,
                                            int hop_bound, int walk_len, int n_walks,
                                            rng_stream& rng);

} // namespace degree

#include "degree/graph.hpp"

#include "degree/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>

namespace degree {

node_group::node_group(std::vector<int> members) : members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
    if (!members_.empty() && members_.front() < 0) {
        throw validation_error("node_group: negative node index " +
                               std::to_string(members_.front()));
    }
}

node_group node_group::all(int n) {
    std::vector<int> m(static_cast<std::size_t>(n));
    std::iota(m.begin(), m.end(), 0);
    return node_group(std::move(m));
}

bool node_group::contains(int v) const {
    return std::binary_search(members_.begin(), members_.end(), v);
}

node_group node_group::with(int v) const {
    if (contains(v)) return *this;
    node_group out = *this;
    out.members_.insert(std::upper_bound(out.members_.begin(), out.members_.end(), v), v);
    return out;
}

node_group node_group::united(const node_group& other) const {
    std::vector<int> merged;
    merged.reserve(size() + other.size());
    std::set_union(members_.begin(), members_.end(), other.members_.begin(),
                   other.members_.end(), std::back_inserter(merged));
    node_group out;
    out.members_ = std::move(merged);
    return out;
}

bool node_group::intersects(const node_group& other) const {
    auto a = members_.begin();
    auto b = other.members_.begin();
    while (a != members_.end() && b != other.members_.end()) {
        if (*a == *b) return true;
        if (*a < *b) ++a;
        else ++b;
    }
    return false;
}

graph::graph(int n_nodes, std::vector<std::pair<int, int>> edge_list, matrix node_features,
             std::vector<int> labels, std::optional<int> g_label,
             std::vector<std::uint8_t> node_mask, std::vector<std::uint8_t> edge_mask)
    : n(n_nodes),
      features(std::move(node_features)),
      node_labels(std::move(labels)),
      graph_label(g_label),
      gt_nodes(std::move(node_mask)) {
    if (n < 0) throw validation_error("graph: negative node count");
    if (features.rows() != n) {
        throw validation_error("graph: features.rows() == " + std::to_string(features.rows()) +
                               " but n == " + std::to_string(n));
    }
    if (!features.all_finite()) throw validation_error("graph: non-finite feature entry");
    if (!node_labels.empty() && node_labels.size() != static_cast<std::size_t>(n)) {
        throw validation_error("graph: node_labels length != n");
    }
    if (!gt_nodes.empty() && gt_nodes.size() != static_cast<std::size_t>(n)) {
        throw validation_error("graph: gt_nodes length != n");
    }
    if (!edge_mask.empty() && edge_mask.size() != edge_list.size()) {
        throw validation_error("graph: gt_edges length != |edges|");
    }

    for (auto& [u, v] : edge_list) {
        if (u < 0 || u >= n || v < 0 || v >= n) {
            throw validation_error("graph: edge (" + std::to_string(u) + "," + std::to_string(v) +
                                   ") out of range for n=" + std::to_string(n));
        }
        if (u == v) {
            throw validation_error("graph: self loop at node " + std::to_string(u));
        }
        if (u > v) std::swap(u, v);
    }

    // Sort edges (and the mask with them), then reject duplicates.
    std::vector<std::size_t> order(edge_list.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return edge_list[a] < edge_list[b]; });
    edges.reserve(edge_list.size());
    if (!edge_mask.empty()) gt_edges.reserve(edge_list.size());
    for (std::size_t idx : order) {
        if (!edges.empty() && edges.back() == edge_list[idx]) {
            throw validation_error("graph: duplicate edge (" + std::to_string(edge_list[idx].first) +
                                   "," + std::to_string(edge_list[idx].second) + ")");
        }
        edges.push_back(edge_list[idx]);
        if (!edge_mask.empty()) gt_edges.push_back(edge_mask[idx]);
    }

    adjacency_.assign(static_cast<std::size_t>(n), {});
    for (const auto& [u, v] : edges) {
        adjacency_[u].push_back(v);
        adjacency_[v].push_back(u);
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

bool graph::has_edge(int u, int v) const {
    if (u < 0 || v < 0 || u >= n || v >= n) return false;
    const auto& nbrs = adjacency_[u];
    return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

matrix propagate(const propagation& p, const matrix& h) {
    matrix out(static_cast<int>(p.rows.size()), h.cols());
    for (int i = 0; i < out.rows(); ++i)
        for (auto [j, w] : p.rows[static_cast<std::size_t>(i)])
            for (int c = 0; c < h.cols(); ++c) out(i, c) += w * h(j, c);
    return out;
}

matrix normalized_adjacency(const graph& g) {
    matrix out(g.n, g.n);
    const propagation prop = gcn_propagation(g);
    for (int i = 0; i < g.n; ++i)
        for (const auto& [j, w] : prop.rows[i]) out(i, j) = w;
    return out;
}

propagation gcn_propagation(const graph& g) {
    const bool overridden = !g.norm_degrees.empty();
    if (overridden && g.norm_degrees.size() != static_cast<std::size_t>(g.n)) {
        throw validation_error("gcn_propagation: norm_degrees length != n");
    }
    std::vector<double> inv_sqrt_deg(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) {
        const std::size_t deg =
            overridden ? static_cast<std::size_t>(g.norm_degrees[i]) : g.neighbors(i).size();
        inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(deg + 1));
    }
    propagation prop;
    prop.rows.resize(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) {
        auto& row = prop.rows[i];
        row.reserve(g.neighbors(i).size() + 1);
        bool self_inserted = false;
        for (int j : g.neighbors(i)) {
            if (!self_inserted && j > i) {
                row.emplace_back(i, inv_sqrt_deg[i] * inv_sqrt_deg[i]);
                self_inserted = true;
            }
            row.emplace_back(j, inv_sqrt_deg[i] * inv_sqrt_deg[j]);
        }
        if (!self_inserted) row.emplace_back(i, inv_sqrt_deg[i] * inv_sqrt_deg[i]);
    }
    return prop;
}

namespace {

/// Hop distance from a set of sources, -1 where unreachable within bound.
std::vector<int> bfs_depths(const graph& g, const std::vector<int>& sources, int bound) {
    std::vector<int> depth(static_cast<std::size_t>(g.n), -1);
    std::deque<int> queue;
    for (int s : sources) {
        if (depth[s] == -1) {
            depth[s] = 0;
            queue.push_back(s);
        }
    }
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        if (depth[u] == bound) continue;
        for (int v : g.neighbors(u)) {
            if (depth[v] == -1) {
                depth[v] = depth[u] + 1;
                queue.push_back(v);
            }
        }
    }
    return depth;
}

} // namespace

namespace {

/// keep must be sorted, unique, in range. keep_parent_degrees records the
/// parent graph's effective degree of every kept node in norm_degrees.
subgraph_result induce_on_nodes(const graph& g, const std::vector<int>& keep,
                                bool keep_parent_degrees) {
    subgraph_result res;
    res.old_to_new.assign(static_cast<std::size_t>(g.n), -1);
    for (int v : keep) {
        res.old_to_new[v] = static_cast<int>(res.new_to_old.size());
        res.new_to_old.push_back(v);
    }

    const int m = static_cast<int>(res.new_to_old.size());
    matrix feats(m, g.features.cols());
    for (int v = 0; v < m; ++v) {
        auto src = g.features.row(res.new_to_old[v]);
        std::copy(src.begin(), src.end(), feats.row(v).begin());
    }
    std::vector<int> labels;
    if (!g.node_labels.empty()) {
        labels.reserve(m);
        for (int v : res.new_to_old) labels.push_back(g.node_labels[v]);
    }
    std::vector<std::uint8_t> node_mask;
    if (!g.gt_nodes.empty()) {
        node_mask.reserve(m);
        for (int v : res.new_to_old) node_mask.push_back(g.gt_nodes[v]);
    }
    std::vector<int> motif_ids;
    if (!g.motif_ids.empty()) {
        motif_ids.reserve(m);
        for (int v : res.new_to_old) motif_ids.push_back(g.motif_ids[v]);
    }
    std::vector<std::pair<int, int>> sub_edges;
    std::vector<std::uint8_t> edge_mask;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const auto [u, v] = g.edges[e];
        if (res.old_to_new[u] >= 0 && res.old_to_new[v] >= 0) {
            sub_edges.emplace_back(res.old_to_new[u], res.old_to_new[v]);
            if (!g.gt_edges.empty()) edge_mask.push_back(g.gt_edges[e]);
        }
    }
    res.g = graph(m, std::move(sub_edges), std::move(feats), std::move(labels), g.graph_label,
                  std::move(node_mask), std::move(edge_mask));
    res.g.motif_ids = std::move(motif_ids);
    if (keep_parent_degrees) {
        res.g.norm_degrees.reserve(static_cast<std::size_t>(m));
        for (int v : res.new_to_old) {
            res.g.norm_degrees.push_back(g.norm_degrees.empty()
                                             ? static_cast<int>(g.neighbors(v).size())
                                             : g.norm_degrees[v]);
        }
    }
    return res;
}

} // namespace

subgraph_result khop_subgraph(const graph& g, int center, int hops) {
    if (center < 0 || center >= g.n) {
        throw validation_error("khop_subgraph: center " + std::to_string(center) +
                               " out of range for n=" + std::to_string(g.n));
    }
    if (hops < 0) throw validation_error("khop_subgraph: negative hop count");

    const std::vector<int> depth = bfs_depths(g, {center}, hops);
    std::vector<int> keep;
    for (int v = 0; v < g.n; ++v)
        if (depth[v] >= 0) keep.push_back(v);
    return induce_on_nodes(g, keep, true);
}

subgraph_result induce_subgraph(const graph& g, const node_group& nodes) {
    if (nodes.empty()) throw validation_error("induce_subgraph: empty node set");
    for (int v : nodes)
        if (v < 0 || v >= g.n)
            throw validation_error("induce_subgraph: node " + std::to_string(v) +
                                   " out of range for n=" + std::to_string(g.n));
    return induce_on_nodes(g, nodes.members(), false);
}

std::vector<int> group_neighbors(const graph& g, const node_group& b) {
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(g.n), 0);
    std::vector<int> out;
    for (int u : b) {
        for (int v : g.neighbors(u)) {
            if (!b.contains(v) && !seen[v]) {
                seen[v] = 1;
                out.push_back(v);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<node_group> random_walk_context(const graph& g, const node_group& seed_group,
                                            int hop_bound, int walk_len, int n_walks,
                                            rng_stream& rng) {
    if (seed_group.empty()) {
        throw validation_error("random_walk_context: empty seed group");
    }
    if (hop_bound < 0 || walk_len < 0 || n_walks < 0) {
        throw validation_error("random_walk_context: negative walk parameter");
    }

    const std::vector<int> depth = bfs_depths(g, seed_group.members(), hop_bound);
    std::vector<std::uint8_t> allowed(static_cast<std::size_t>(g.n), 0);
    for (int v = 0; v < g.n; ++v) {
        allowed[v] = depth[v] > 0;  // within hop_bound of the group, outside the group
    }
    std::vector<int> starts;
    for (int v : group_neighbors(g, seed_group)) {
        if (allowed[v]) starts.push_back(v);
    }

    std::vector<node_group> contexts;
    contexts.reserve(static_cast<std::size_t>(n_walks));
    std::vector<int> options;
    for (int w = 0; w < n_walks; ++w) {
        if (starts.empty()) {
            contexts.emplace_back();
            continue;
        }
        int cur = starts[rng.next_below(starts.size())];
        std::vector<int> visited{cur};
        for (int step = 0; step < walk_len; ++step) {
            options.clear();
            for (int v : g.neighbors(cur)) {
                if (allowed[v]) options.push_back(v);
            }
            if (options.empty()) break;
            cur = options[rng.next_below(options.size())];
            visited.push_back(cur);
        }
        contexts.push_back(node_group(std::move(visited)));
    }
    return contexts;
}

} // namespace degree

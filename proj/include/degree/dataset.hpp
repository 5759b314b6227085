#pragma once

#include "degree/graph.hpp"
#include "degree/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace degree {

enum class task_kind { node_classification, graph_classification };

enum split_tag : std::int8_t { split_train = 0, split_validation = 1, split_test = 2 };

/// A benchmark: one or more graphs plus an 80/10/10 split. For node
/// classification the split is per node (of the single graph); for graph
/// classification it is per graph.
struct dataset {
    task_kind task = task_kind::node_classification;
    int n_classes = 0;
    std::vector<graph> graphs;
    std::vector<std::int8_t> split;

    void validate() const;
};

/// Barabasi-Albert base graph plus attached house motifs.
struct ba_shapes_config {
    int base_nodes = 300;
    int attach_edges = 5;       // edges added per new BA node
    int n_motifs = 80;          // five-node houses
    // Extra random edges relative to the pre-perturbation edge count. The
    // default reproduces the published graph statistics (700 nodes, 2055
    // undirected edges).
    double perturb_ratio = 0.01;
    int feature_dim = 10;       // constant all-ones features
};

/// Two BA-Shapes communities joined by random edges; features are
/// community-dependent gaussians so the communities are separable.
/// Defaults reproduce the published statistics (1400 nodes, 4460
/// undirected edges, of which 350 join the communities).
struct ba_community_config {
    ba_shapes_config community;
    double feature_shift = 1.0;  // mean of community 1 features (community 0 has mean 0)
    double inter_ratio = 0.25;   // inter-community edges = round(ratio * total nodes)
};

/// Balanced binary tree base plus attached cycle motifs. Defaults reproduce
/// the published statistics (871 nodes, 975 undirected edges).
struct tree_cycles_config {
    int depth = 8;  // tree has 2^(depth+1) - 1 nodes
    int n_motifs = 60;
    double perturb_ratio = 0.048;
    int feature_dim = 10;
};

/// The same tree base with 3-by-3 grid motifs. Defaults reproduce the
/// published statistics (1231 nodes, 1705 undirected edges).
struct tree_grid_config {
    int depth = 8;
    int n_motifs = 80;
    double perturb_ratio = 0.10;
    int feature_dim = 10;
};

/// Graph-classification toy set: half the graphs hide one node whose
/// feature vector is all ones; every other feature is gaussian noise.
struct special_node_config {
    int n_graphs = 100;
    int nodes_per_graph = 15;
    int attach_edges = 2;
    double noise_scale = 0.1;
    int feature_dim = 10;
};

dataset gen_ba_shapes(const ba_shapes_config& cfg, rng_stream& rng);
dataset gen_ba_community(const ba_community_config& cfg, rng_stream& rng);
dataset gen_tree_cycles(const tree_cycles_config& cfg, rng_stream& rng);
dataset gen_tree_grid(const tree_grid_config& cfg, rng_stream& rng);
dataset gen_special_node(const special_node_config& cfg, rng_stream& rng);

/// Lossless JSON round trip; see README for the schema.
void save_dataset(const dataset& ds, const std::string& path);
dataset load_dataset(const std::string& path);

bool operator==(const dataset& a, const dataset& b);

} // namespace degree

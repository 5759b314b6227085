#include "degree/dataset.hpp"

#include "degree/errors.hpp"
#include "degree/json_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

namespace degree {
namespace {

// Intermediate form while a generator is still appending nodes and edges;
// edge_mask stays parallel to edges until the graph is constructed.
struct graph_parts {
    int n = 0;
    std::vector<std::pair<int, int>> edges;
    std::vector<std::uint8_t> edge_mask;
    std::vector<int> labels;
    std::vector<std::uint8_t> gt;
    std::vector<int> motif;  // -1 outside motifs
    int next_motif = 0;
};

void check_positive(int value, const char* name) {
    if (value <= 0)
        throw config_error(std::string(name) + " must be positive, got " + std::to_string(value));
}

void check_ratio(double value, const char* name) {
    if (!(value >= 0.0))
        throw config_error(std::string(name) + " must be >= 0, got " + std::to_string(value));
}

// Preferential attachment: node i >= m links to m distinct targets drawn
// uniformly from a list where every prior endpoint appears once per incident
// edge. The first m nodes start edgeless and seed the first target set.
std::vector<std::pair<int, int>> ba_edges(int n, int m, rng_stream& rng) {
    std::vector<std::pair<int, int>> edges;
    if (n <= m) return edges;
    std::vector<int> targets(static_cast<std::size_t>(m));
    std::iota(targets.begin(), targets.end(), 0);
    std::vector<int> repeated;
    std::vector<std::uint8_t> picked(static_cast<std::size_t>(n), 0);
    for (int source = m; source < n; ++source) {
        for (int t : targets) edges.emplace_back(source, t);
        repeated.insert(repeated.end(), targets.begin(), targets.end());
        repeated.insert(repeated.end(), static_cast<std::size_t>(m), source);
        targets.clear();
        while (static_cast<int>(targets.size()) < m) {
            int x = repeated[static_cast<std::size_t>(rng.next_below(repeated.size()))];
            if (!picked[static_cast<std::size_t>(x)]) {
                picked[static_cast<std::size_t>(x)] = 1;
                targets.push_back(x);
            }
        }
        for (int t : targets) picked[static_cast<std::size_t>(t)] = 0;
    }
    return edges;
}

// Appends `count` new undirected edges avoiding self-loops and duplicates.
void add_random_edges(graph_parts& parts, int count, rng_stream& rng) {
    std::set<std::pair<int, int>> existing;
    for (auto [u, v] : parts.edges) existing.insert(std::minmax(u, v));
    const long long slots =
        static_cast<long long>(parts.n) * (parts.n - 1) / 2 - static_cast<long long>(existing.size());
    if (count > slots)
        throw config_error("perturbation asks for " + std::to_string(count) + " new edges but only " +
                           std::to_string(slots) + " node pairs remain");
    int added = 0;
    while (added < count) {
        int u = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(parts.n)));
        int v = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(parts.n)));
        if (u == v) continue;
        auto e = std::minmax(u, v);
        if (!existing.insert(e).second) continue;
        parts.edges.push_back(e);
        parts.edge_mask.push_back(0);
        ++added;
    }
}

int perturb_count(double ratio, std::size_t edges_before) {
    return static_cast<int>(std::llround(ratio * static_cast<double>(edges_before)));
}

// Fisher-Yates shuffle of [0, n), then 80/10/10 by position.
std::vector<std::int8_t> make_split(int n, rng_stream& rng) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    const int n_train = n * 8 / 10;
    const int n_val = n / 10;
    std::vector<std::int8_t> split(static_cast<std::size_t>(n), split_test);
    for (int i = 0; i < n_train; ++i) split[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = split_train;
    for (int i = n_train; i < n_train + n_val; ++i)
        split[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = split_validation;
    return split;
}

// House motif: square 1-2-4-3 with roof node 0; node 3 is the attachment
// point. Labels: top 1, middle 2, bottom 3.
constexpr std::array<std::pair<int, int>, 6> house_edges = {
    {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 4}, {3, 4}}};
constexpr std::array<int, 5> house_labels = {1, 2, 2, 3, 3};

void attach_motif(graph_parts& parts, const std::pair<int, int>* motif_edges, std::size_t n_edges,
                  const int* motif_labels, int motif_size, int anchor_local, int base_nodes,
                  rng_stream& rng) {
    const int offset = parts.n;
    for (std::size_t e = 0; e < n_edges; ++e) {
        parts.edges.emplace_back(offset + motif_edges[e].first, offset + motif_edges[e].second);
        parts.edge_mask.push_back(1);
    }
    const int anchor = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(base_nodes)));
    parts.edges.emplace_back(offset + anchor_local, anchor);
    parts.edge_mask.push_back(0);
    for (int i = 0; i < motif_size; ++i) {
        parts.labels.push_back(motif_labels[i]);
        parts.gt.push_back(1);
        parts.motif.push_back(parts.next_motif);
    }
    ++parts.next_motif;
    parts.n += motif_size;
}

graph_parts build_ba_shapes(const ba_shapes_config& cfg, rng_stream& rng) {
    check_positive(cfg.base_nodes, "base_nodes");
    check_positive(cfg.attach_edges, "attach_edges");
    check_positive(cfg.feature_dim, "feature_dim");
    check_ratio(cfg.perturb_ratio, "perturb_ratio");
    if (cfg.n_motifs < 0)
        throw config_error("n_motifs must be >= 0, got " + std::to_string(cfg.n_motifs));

    graph_parts parts;
    parts.n = cfg.base_nodes;
    parts.edges = ba_edges(cfg.base_nodes, cfg.attach_edges, rng);
    parts.edge_mask.assign(parts.edges.size(), 0);
    parts.labels.assign(static_cast<std::size_t>(cfg.base_nodes), 0);
    parts.gt.assign(static_cast<std::size_t>(cfg.base_nodes), 0);
    parts.motif.assign(static_cast<std::size_t>(cfg.base_nodes), -1);
    for (int k = 0; k < cfg.n_motifs; ++k)
        attach_motif(parts, house_edges.data(), house_edges.size(), house_labels.data(), 5, 3,
                     cfg.base_nodes, rng);
    add_random_edges(parts, perturb_count(cfg.perturb_ratio, parts.edges.size()), rng);
    return parts;
}

graph_parts build_tree(int depth) {
    if (depth < 0) throw config_error("depth must be >= 0, got " + std::to_string(depth));
    if (depth > 24) throw config_error("depth " + std::to_string(depth) + " exceeds the supported 24");
    graph_parts parts;
    parts.n = (1 << (depth + 1)) - 1;
    for (int i = 0; 2 * i + 1 < parts.n; ++i) {
        parts.edges.emplace_back(i, 2 * i + 1);
        if (2 * i + 2 < parts.n) parts.edges.emplace_back(i, 2 * i + 2);
    }
    parts.edge_mask.assign(parts.edges.size(), 0);
    parts.labels.assign(static_cast<std::size_t>(parts.n), 0);
    parts.gt.assign(static_cast<std::size_t>(parts.n), 0);
    parts.motif.assign(static_cast<std::size_t>(parts.n), -1);
    return parts;
}

dataset tree_motif_dataset(int depth, int n_motifs, double perturb_ratio, int feature_dim,
                           const std::pair<int, int>* motif_edges, std::size_t n_edges,
                           int motif_size, rng_stream& rng) {
    check_positive(feature_dim, "feature_dim");
    check_ratio(perturb_ratio, "perturb_ratio");
    if (n_motifs < 0)
        throw config_error("n_motifs must be >= 0, got " + std::to_string(n_motifs));

    graph_parts parts = build_tree(depth);
    const int base_nodes = parts.n;
    std::vector<int> motif_labels(static_cast<std::size_t>(motif_size), 1);
    for (int k = 0; k < n_motifs; ++k)
        attach_motif(parts, motif_edges, n_edges, motif_labels.data(), motif_size, 0, base_nodes, rng);
    add_random_edges(parts, perturb_count(perturb_ratio, parts.edges.size()), rng);

    matrix features(parts.n, feature_dim, 1.0);
    dataset ds;
    ds.task = task_kind::node_classification;
    ds.n_classes = 2;
    ds.graphs.emplace_back(parts.n, std::move(parts.edges), std::move(features),
                           std::move(parts.labels), std::nullopt, std::move(parts.gt),
                           std::move(parts.edge_mask));
    ds.graphs.back().motif_ids = std::move(parts.motif);
    ds.split = make_split(parts.n, rng);
    ds.validate();
    return ds;
}

const char* task_name(task_kind task) {
    return task == task_kind::node_classification ? "node-classification" : "graph-classification";
}

task_kind task_from_name(const std::string& name) {
    if (name == "node-classification") return task_kind::node_classification;
    if (name == "graph-classification") return task_kind::graph_classification;
    throw validation_error("unknown task '" + name + "'");
}

} // namespace

void dataset::validate() const {
    if (n_classes <= 0) throw validation_error("dataset: n_classes must be positive");
    if (graphs.empty()) throw validation_error("dataset: no graphs");
    if (task == task_kind::node_classification) {
        if (graphs.size() != 1)
            throw validation_error("dataset: node classification expects exactly one graph, got " +
                                   std::to_string(graphs.size()));
        if (split.size() != static_cast<std::size_t>(graphs[0].n))
            throw validation_error("dataset: split size " + std::to_string(split.size()) +
                                   " != node count " + std::to_string(graphs[0].n));
    } else if (split.size() != graphs.size()) {
        throw validation_error("dataset: split size " + std::to_string(split.size()) +
                               " != graph count " + std::to_string(graphs.size()));
    }
    for (std::int8_t s : split)
        if (s != split_train && s != split_validation && s != split_test)
            throw validation_error("dataset: split entry " + std::to_string(int(s)) +
                                   " outside {0,1,2}");
    for (const graph& g : graphs) {
        for (int label : g.node_labels)
            if (label < 0 || label >= n_classes)
                throw validation_error("dataset: node label " + std::to_string(label) +
                                       " outside [0, " + std::to_string(n_classes) + ")");
        if (g.graph_label && (*g.graph_label < 0 || *g.graph_label >= n_classes))
            throw validation_error("dataset: graph label " + std::to_string(*g.graph_label) +
                                   " outside [0, " + std::to_string(n_classes) + ")");
        if (task == task_kind::graph_classification && !g.graph_label)
            throw validation_error("dataset: graph classification requires graph labels");
        if (!g.motif_ids.empty() && g.motif_ids.size() != static_cast<std::size_t>(g.n))
            throw validation_error("dataset: motif_ids size " + std::to_string(g.motif_ids.size()) +
                                   " != node count " + std::to_string(g.n));
    }
}

dataset gen_ba_shapes(const ba_shapes_config& cfg, rng_stream& rng) {
    graph_parts parts = build_ba_shapes(cfg, rng);
    matrix features(parts.n, cfg.feature_dim, 1.0);
    dataset ds;
    ds.task = task_kind::node_classification;
    ds.n_classes = 4;
    ds.graphs.emplace_back(parts.n, std::move(parts.edges), std::move(features),
                           std::move(parts.labels), std::nullopt, std::move(parts.gt),
                           std::move(parts.edge_mask));
    ds.graphs.back().motif_ids = std::move(parts.motif);
    ds.split = make_split(parts.n, rng);
    ds.validate();
    return ds;
}

dataset gen_ba_community(const ba_community_config& cfg, rng_stream& rng) {
    check_ratio(cfg.inter_ratio, "inter_ratio");
    graph_parts left = build_ba_shapes(cfg.community, rng);
    graph_parts right = build_ba_shapes(cfg.community, rng);

    graph_parts parts = std::move(left);
    const int offset = parts.n;
    parts.n += right.n;
    for (auto [u, v] : right.edges) parts.edges.emplace_back(u + offset, v + offset);
    parts.edge_mask.insert(parts.edge_mask.end(), right.edge_mask.begin(), right.edge_mask.end());
    for (int label : right.labels) parts.labels.push_back(label + 4);
    parts.gt.insert(parts.gt.end(), right.gt.begin(), right.gt.end());
    for (int id : right.motif) parts.motif.push_back(id < 0 ? id : id + parts.next_motif);

    const int n_inter = static_cast<int>(std::llround(cfg.inter_ratio * parts.n));
    std::set<std::pair<int, int>> used;
    for (int added = 0; added < n_inter;) {
        int u = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(offset)));
        int v = offset + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(right.n)));
        if (!used.insert({u, v}).second) continue;
        parts.edges.emplace_back(u, v);
        parts.edge_mask.push_back(0);
        ++added;
    }

    matrix features(parts.n, cfg.community.feature_dim);
    for (int v = 0; v < parts.n; ++v) {
        const double mean = v < offset ? 0.0 : cfg.feature_shift;
        for (int d = 0; d < cfg.community.feature_dim; ++d)
            features(v, d) = rng.next_gaussian(mean, 1.0);
    }

    dataset ds;
    ds.task = task_kind::node_classification;
    ds.n_classes = 8;
    ds.graphs.emplace_back(parts.n, std::move(parts.edges), std::move(features),
                           std::move(parts.labels), std::nullopt, std::move(parts.gt),
                           std::move(parts.edge_mask));
    ds.graphs.back().motif_ids = std::move(parts.motif);
    ds.split = make_split(parts.n, rng);
    ds.validate();
    return ds;
}

dataset gen_tree_cycles(const tree_cycles_config& cfg, rng_stream& rng) {
    static constexpr std::array<std::pair<int, int>, 6> cycle_edges = {
        {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}}};
    return tree_motif_dataset(cfg.depth, cfg.n_motifs, cfg.perturb_ratio, cfg.feature_dim,
                              cycle_edges.data(), cycle_edges.size(), 6, rng);
}

dataset gen_tree_grid(const tree_grid_config& cfg, rng_stream& rng) {
    // 3x3 grid, row-major local ids.
    std::vector<std::pair<int, int>> grid_edges;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            if (c + 1 < 3) grid_edges.emplace_back(r * 3 + c, r * 3 + c + 1);
            if (r + 1 < 3) grid_edges.emplace_back(r * 3 + c, (r + 1) * 3 + c);
        }
    return tree_motif_dataset(cfg.depth, cfg.n_motifs, cfg.perturb_ratio, cfg.feature_dim,
                              grid_edges.data(), grid_edges.size(), 9, rng);
}

dataset gen_special_node(const special_node_config& cfg, rng_stream& rng) {
    check_positive(cfg.n_graphs, "n_graphs");
    check_positive(cfg.nodes_per_graph, "nodes_per_graph");
    check_positive(cfg.attach_edges, "attach_edges");
    check_positive(cfg.feature_dim, "feature_dim");
    check_ratio(cfg.noise_scale, "noise_scale");

    dataset ds;
    ds.task = task_kind::graph_classification;
    ds.n_classes = 2;
    for (int gi = 0; gi < cfg.n_graphs; ++gi) {
        auto edges = ba_edges(cfg.nodes_per_graph, cfg.attach_edges, rng);
        matrix features(cfg.nodes_per_graph, cfg.feature_dim);
        for (int v = 0; v < cfg.nodes_per_graph; ++v)
            for (int d = 0; d < cfg.feature_dim; ++d)
                features(v, d) = rng.next_gaussian(0.0, cfg.noise_scale);
        std::vector<std::uint8_t> gt(static_cast<std::size_t>(cfg.nodes_per_graph), 0);
        std::vector<int> motif(static_cast<std::size_t>(cfg.nodes_per_graph), -1);
        const bool special = gi % 2 == 0;
        if (special) {
            const int sp = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(cfg.nodes_per_graph)));
            for (int d = 0; d < cfg.feature_dim; ++d) features(sp, d) = 1.0;
            gt[static_cast<std::size_t>(sp)] = 1;
            motif[static_cast<std::size_t>(sp)] = 0;
        }
        ds.graphs.emplace_back(cfg.nodes_per_graph, std::move(edges), std::move(features),
                               std::vector<int>{}, special ? 1 : 0, std::move(gt),
                               std::vector<std::uint8_t>{});
        ds.graphs.back().motif_ids = std::move(motif);
    }
    ds.split = make_split(cfg.n_graphs, rng);
    ds.validate();
    return ds;
}

void save_dataset(const dataset& ds, const std::string& path) {
    nlohmann::json j;
    j["task"] = task_name(ds.task);
    j["n_classes"] = ds.n_classes;
    j["graphs"] = nlohmann::json::array();
    for (const graph& g : ds.graphs) j["graphs"].push_back(graph_to_json(g));
    j["split"] = std::vector<int>(ds.split.begin(), ds.split.end());
    atomic_write_text(path, j.dump(2) + "\n");
}

dataset load_dataset(const std::string& path) {
    nlohmann::json j = parse_json(read_text_file(path), path);
    if (!j.is_object()) throw validation_error(path + ": expected a JSON object");
    for (const char* field : {"task", "n_classes", "graphs", "split"})
        if (!j.contains(field)) throw validation_error(path + ": missing field '" + field + "'");

    dataset ds;
    if (!j["task"].is_string()) throw validation_error(path + ": 'task' must be a string");
    ds.task = task_from_name(j["task"].get<std::string>());
    if (!j["n_classes"].is_number_integer())
        throw validation_error(path + ": 'n_classes' must be an integer");
    ds.n_classes = j["n_classes"].get<int>();
    if (!j["graphs"].is_array()) throw validation_error(path + ": 'graphs' must be an array");
    for (const auto& jg : j["graphs"]) ds.graphs.push_back(graph_from_json(jg));
    if (!j["split"].is_array()) throw validation_error(path + ": 'split' must be an array");
    for (const auto& s : j["split"]) {
        if (!s.is_number_integer()) throw validation_error(path + ": 'split' entries must be integers");
        ds.split.push_back(static_cast<std::int8_t>(s.get<int>()));
    }
    ds.validate();
    return ds;
}

bool operator==(const dataset& a, const dataset& b) {
    return a.task == b.task && a.n_classes == b.n_classes && a.graphs == b.graphs &&
           a.split == b.split;
}

} // namespace degree

#pragma once

#include "degree/decompose.hpp"
#include "degree/graph.hpp"
#include "degree/model.hpp"
#include "degree/rng.hpp"

#include <map>
#include <string>
#include <vector>

namespace degree {

struct sampler_config {
    int n_walks = 10;
    int walk_len = 8;
    int hop_bound = 0; ///< 0 picks the model's message-passing depth.
};

/// One ranked candidate from a single step. `group` indexes the level the
/// ranking started from; -1 marks the seed ranking that builds level 1.
struct candidate_record {
    int group = -1;
    int node = 0;
    double s = 0.0;
    double r = 0.0;
    bool selected = false;
};

struct tree_group {
    node_group nodes;
    double score = 0.0;       ///< contextual score of the group
    std::vector<int> parents; ///< indices into the previous level
};

struct tree_level {
    std::vector<tree_group> groups;
    /// Ranking log of the step that produced the next level; empty on the
    /// final level. Selection soundness is re-checkable from these.
    std::vector<candidate_record> candidates;
};

struct explanation_tree {
    int cls = 0;
    std::vector<candidate_record> seed_candidates; ///< base-free ranking behind level 1
    std::vector<tree_level> levels;
    bool budget_exhausted = false;
    std::string stop_reason; ///< "complete", "budget" or "stalled"
};

struct agglomerate_config {
    double q = 0.6;
    int budget = 0;            ///< max merge steps; 0 picks the node count
    bool top_fraction = false; ///< select the top ceil(q*|C|) by r instead of thresholding
    sampler_config sampler;
    decompose_options decomp;
};

/// Relative contribution of `group` against sampled random-walk contexts:
/// the mean over contexts of f(group + context) - f(context), where f is the
/// class-`cls` target contribution. Contexts never intersect the group.
/// Throws validation_error on an empty group.
double contextual_score(const decompose_engine& engine, const graph& g, const node_group& group,
                        int cls, const sampler_config& cfg, rng_stream& rng);
double contextual_score(const trained_model& m, const graph& g, const node_group& group, int cls,
                        const sampler_config& cfg, rng_stream& rng,
                        const decompose_options& opt = {});

/// Ranks the growth candidates of `base`: all nodes when base is empty,
/// group_neighbors(g, base) otherwise. s(v) is the contextual score gain of
/// adding v; r(v) its absolute deviation from the candidate mean. The base
/// score draws contexts first, then candidates in ascending node order.
std::vector<candidate_record> rank_candidates(const decompose_engine& engine, const graph& g,
                                              const node_group& base, int cls,
                                              const sampler_config& cfg, rng_stream& rng);
std::vector<candidate_record> rank_candidates(const trained_model& m, const graph& g,
                                              const node_group& base, int cls,
                                              const sampler_config& cfg, rng_stream& rng,
                                              const decompose_options& opt = {});

/// Greedy subgraph agglomeration. Level 1 holds the singletons selected by
/// ranking every node against the empty base; each later step ranks the
/// neighbors of every group, keeps candidates with r >= q * max r (or the
/// top ceil(q*|C|) when cfg.top_fraction), grows the groups and merges any
/// that come to share a node. Stops once a single group spans the graph,
/// when the step budget runs out, or when no step makes progress.
explanation_tree agglomerate(const trained_model& m, const graph& g, int cls,
                             const agglomerate_config& cfg, rng_stream& rng);

/// Re-checks nesting, monotone level sizes and threshold-selection soundness
/// from the logged rankings. Throws validation_error on the first violation.
void validate_tree(const explanation_tree& tree, const graph& g, double q);

/// Best-scoring group of each level, deduplicated, ordered by size. Feeds
/// accuracy-sparsity curves.
std::vector<node_group> best_group_chain(const explanation_tree& tree);

std::string tree_to_json_text(const explanation_tree& tree);

/// Undirected DOT rendering: node fill encodes the sign of the singleton
/// score (red positive, blue negative), nested clusters trace the
/// best-scoring lineage level by level.
std::string tree_to_dot(const explanation_tree& tree, const graph& g);

} // namespace degree

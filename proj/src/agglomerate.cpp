#include "degree/agglomerate.hpp"

#include "degree/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace degree {
namespace {

int resolve_hop_bound(const sampler_config& cfg, const trained_model& m) {
    if (cfg.n_walks < 1) throw config_error("sampler: n_walks must be positive");
    if (cfg.walk_len < 0) throw config_error("sampler: walk_len must be nonnegative");
    if (cfg.hop_bound < 0) throw config_error("sampler: hop_bound must be nonnegative");
    if (cfg.hop_bound > 0) return cfg.hop_bound;
    return std::max(1, m.message_passing_layers());
}

/// Scores groups through one shared engine; target contributions are
/// deterministic, so repeated groups hit the memo instead of the engine.
struct scorer {
    const decompose_engine* engine;
    const graph* g;
    int cls;
    sampler_config cfg; // hop_bound resolved
    mutable std::map<std::vector<int>, double> memo;

    double target_value(const node_group& group) const {
        auto it = memo.find(group.members());
        if (it != memo.end()) return it->second;
        const double v = engine->run(group).gamma[static_cast<std::size_t>(cls)];
        memo.emplace(group.members(), v);
        return v;
    }

    double phi(const node_group& group, rng_stream& rng) const {
        const auto contexts =
            random_walk_context(*g, group, cfg.hop_bound, cfg.walk_len, cfg.n_walks, rng);
        double sum = 0.0;
        for (const node_group& c : contexts) sum += target_value(group.united(c)) - target_value(c);
        return sum / static_cast<double>(contexts.size());
    }
};

std::vector<candidate_record> rank_core(const scorer& sc, const node_group& base, int group_index,
                                        rng_stream& rng) {
    std::vector<int> cand;
    if (base.empty()) {
        cand.resize(static_cast<std::size_t>(sc.g->n));
        std::iota(cand.begin(), cand.end(), 0);
    } else {
        cand = group_neighbors(*sc.g, base);
    }
    if (cand.empty()) return {};

    const double base_phi = base.empty() ? 0.0 : sc.phi(base, rng);
    std::vector<candidate_record> out;
    out.reserve(cand.size());
    double mean = 0.0;
    for (int v : cand) {
        candidate_record rec;
        rec.group = group_index;
        rec.node = v;
        rec.s = sc.phi(base.with(v), rng) - base_phi;
        mean += rec.s;
        out.push_back(rec);
    }
    mean /= static_cast<double>(out.size());
    for (candidate_record& rec : out) rec.r = std::abs(rec.s - mean);
    return out;
}

void mark_selected(std::vector<candidate_record>& recs, double q, bool top_fraction) {
    if (recs.empty()) return;
    if (!top_fraction) {
        double rmax = 0.0;
        for (const candidate_record& rec : recs) rmax = std::max(rmax, rec.r);
        for (candidate_record& rec : recs) rec.selected = rec.r >= q * rmax;
        return;
    }
    std::vector<std::size_t> order(recs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (recs[a].r != recs[b].r) return recs[a].r > recs[b].r;
        return recs[a].node < recs[b].node;
    });
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(q * static_cast<double>(recs.size()))));
    for (std::size_t i = 0; i < keep && i < order.size(); ++i) recs[order[i]].selected = true;
}

int uf_find(std::vector<int>& parent, int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
        parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        x = parent[static_cast<std::size_t>(x)];
    }
    return x;
}

scorer make_scorer(const decompose_engine& engine, const graph& g, int cls,
                   const sampler_config& cfg) {
    if (cls < 0 || cls >= engine.model().n_classes)
        throw config_error("agglomerate: class " + std::to_string(cls) + " outside [0, " +
                           std::to_string(engine.model().n_classes) + ")");
    scorer sc;
    sc.engine = &engine;
    sc.g = &g;
    sc.cls = cls;
    sc.cfg = cfg;
    sc.cfg.hop_bound = resolve_hop_bound(cfg, engine.model());
    return sc;
}

} // namespace

double contextual_score(const decompose_engine& engine, const graph& g, const node_group& group,
                        int cls, const sampler_config& cfg, rng_stream& rng) {
    if (group.empty()) throw validation_error("contextual_score: empty group");
    const scorer sc = make_scorer(engine, g, cls, cfg);
    return sc.phi(group, rng);
}

double contextual_score(const trained_model& m, const graph& g, const node_group& group, int cls,
                        const sampler_config& cfg, rng_stream& rng, const decompose_options& opt) {
    const decompose_engine engine(m, g, opt);
    return contextual_score(engine, g, group, cls, cfg, rng);
}

std::vector<candidate_record> rank_candidates(const decompose_engine& engine, const graph& g,
                                              const node_group& base, int cls,
                                              const sampler_config& cfg, rng_stream& rng) {
    const scorer sc = make_scorer(engine, g, cls, cfg);
    return rank_core(sc, base, -1, rng);
}

std::vector<candidate_record> rank_candidates(const trained_model& m, const graph& g,
                                              const node_group& base, int cls,
                                              const sampler_config& cfg, rng_stream& rng,
                                              const decompose_options& opt) {
    const decompose_engine engine(m, g, opt);
    return rank_candidates(engine, g, base, cls, cfg, rng);
}

explanation_tree agglomerate(const trained_model& m, const graph& g, int cls,
                             const agglomerate_config& cfg, rng_stream& rng) {
    if (g.n <= 0) throw validation_error("agglomerate: empty graph");
    if (!(cfg.q >= 0.0 && cfg.q <= 1.0))
        throw config_error("agglomerate: q must lie in [0, 1], got " + std::to_string(cfg.q));
    const int budget = cfg.budget == 0 ? g.n : cfg.budget;
    if (budget < 1) throw config_error("agglomerate: budget must be positive");

    const decompose_engine engine(m, g, cfg.decomp);
    const scorer sc = make_scorer(engine, g, cls, cfg.sampler);

    explanation_tree tree;
    tree.cls = cls;

    tree.seed_candidates = rank_core(sc, {}, -1, rng);
    mark_selected(tree.seed_candidates, cfg.q, cfg.top_fraction);
    tree_level first;
    for (const candidate_record& rec : tree.seed_candidates)
        if (rec.selected) first.groups.push_back({node_group::single(rec.node), rec.s, {}});
    tree.levels.push_back(std::move(first));

    for (int step = 0;; ++step) {
        tree_level& cur = tree.levels.back();
        if (cur.groups.size() == 1 && cur.groups[0].nodes.size() == static_cast<std::size_t>(g.n)) {
            tree.stop_reason = "complete";
            break;
        }
        if (step == budget) {
            tree.budget_exhausted = true;
            tree.stop_reason = "budget";
            break;
        }

        const int n_groups = static_cast<int>(cur.groups.size());
        std::vector<node_group> expanded(static_cast<std::size_t>(n_groups));
        bool any_growth = false;
        for (int gi = 0; gi < n_groups; ++gi) {
            auto recs = rank_core(sc, cur.groups[static_cast<std::size_t>(gi)].nodes, gi, rng);
            mark_selected(recs, cfg.q, cfg.top_fraction);
            node_group grown = cur.groups[static_cast<std::size_t>(gi)].nodes;
            for (const candidate_record& rec : recs) {
                if (rec.selected) {
                    grown = grown.with(rec.node);
                    any_growth = true;
                }
                cur.candidates.push_back(rec);
            }
            expanded[static_cast<std::size_t>(gi)] = std::move(grown);
        }
        if (!any_growth) {
            // Levels hold disjoint groups, so without growth nothing merges.
            tree.stop_reason = "stalled";
            cur.candidates.clear();
            break;
        }

        std::vector<int> parent(static_cast<std::size_t>(n_groups));
        std::iota(parent.begin(), parent.end(), 0);
        std::map<int, int> owner; // node -> first group claiming it
        for (int gi = 0; gi < n_groups; ++gi)
            for (int v : expanded[static_cast<std::size_t>(gi)]) {
                auto [it, inserted] = owner.emplace(v, gi);
                if (!inserted) parent[static_cast<std::size_t>(uf_find(parent, gi))] = uf_find(parent, it->second);
            }

        std::map<int, tree_group> merged; // root -> group under construction
        for (int gi = 0; gi < n_groups; ++gi) {
            tree_group& t = merged[uf_find(parent, gi)];
            t.nodes = t.nodes.united(expanded[static_cast<std::size_t>(gi)]);
            t.parents.push_back(gi);
        }
        tree_level next;
        next.groups.reserve(merged.size());
        for (auto& [root, grp] : merged) next.groups.push_back(std::move(grp));
        std::sort(next.groups.begin(), next.groups.end(), [](const tree_group& a, const tree_group& b) {
            return a.nodes.members().front() < b.nodes.members().front();
        });
        for (tree_group& grp : next.groups) grp.score = sc.phi(grp.nodes, rng);
        tree.levels.push_back(std::move(next));
    }
    return tree;
}

void validate_tree(const explanation_tree& tree, const graph& g, double q) {
    if (tree.levels.empty()) throw validation_error("tree: no levels");
    auto check_selection = [&](const std::vector<candidate_record>& recs, const char* where) {
        double rmax = 0.0;
        for (const candidate_record& rec : recs) rmax = std::max(rmax, rec.r);
        for (const candidate_record& rec : recs) {
            const bool sound = rec.r >= q * rmax;
            if (rec.selected && !sound)
                throw validation_error(std::string("tree: unsound selection of node ") +
                                       std::to_string(rec.node) + " at " + where);
            if (!rec.selected && sound)
                throw validation_error(std::string("tree: missed selection of node ") +
                                       std::to_string(rec.node) + " at " + where);
        }
    };
    check_selection(tree.seed_candidates, "seed");

    for (std::size_t i = 0; i < tree.levels.size(); ++i) {
        const tree_level& lvl = tree.levels[i];
        if (lvl.groups.empty()) throw validation_error("tree: empty level");
        for (const tree_group& grp : lvl.groups)
            for (int v : grp.nodes)
                if (v < 0 || v >= g.n) throw validation_error("tree: node outside graph");
        if (i == 0) continue;
        const tree_level& prev = tree.levels[i - 1];
        if (lvl.groups.size() > prev.groups.size())
            throw validation_error("tree: level sizes must be nonincreasing");
        std::vector<bool> used(prev.groups.size(), false);
        for (const tree_group& grp : lvl.groups) {
            if (grp.parents.empty()) throw validation_error("tree: group without parents");
            for (int p : grp.parents) {
                if (p < 0 || static_cast<std::size_t>(p) >= prev.groups.size() || used[static_cast<std::size_t>(p)])
                    throw validation_error("tree: bad parent link");
                used[static_cast<std::size_t>(p)] = true;
                for (int v : prev.groups[static_cast<std::size_t>(p)].nodes)
                    if (!grp.nodes.contains(v))
                        throw validation_error("tree: child does not contain its parent");
            }
        }
        // Per-group soundness of the step that produced this level.
        std::map<int, std::vector<candidate_record>> by_group;
        for (const candidate_record& rec : prev.candidates) by_group[rec.group].push_back(rec);
        for (const auto& [gi, recs] : by_group)
            check_selection(recs, ("level " + std::to_string(i)).c_str());
    }
}

std::vector<node_group> best_group_chain(const explanation_tree& tree) {
    std::vector<node_group> out;
    for (const tree_level& lvl : tree.levels) {
        const tree_group* best = nullptr;
        for (const tree_group& grp : lvl.groups)
            if (best == nullptr || grp.score > best->score) best = &grp;
        if (best != nullptr && (out.empty() || out.back() != best->nodes))
            out.push_back(best->nodes);
    }
    std::sort(out.begin(), out.end(),
              [](const node_group& a, const node_group& b) { return a.size() < b.size(); });
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

nlohmann::json candidates_to_json(const std::vector<candidate_record>& recs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const candidate_record& rec : recs)
        arr.push_back({{"group", rec.group},
                       {"node", rec.node},
                       {"s", rec.s},
                       {"r", rec.r},
                       {"selected", rec.selected}});
    return arr;
}

} // namespace

std::string tree_to_json_text(const explanation_tree& tree) {
    nlohmann::json j;
    j["class"] = tree.cls;
    j["stop_reason"] = tree.stop_reason;
    j["budget_exhausted"] = tree.budget_exhausted;
    j["seed_candidates"] = candidates_to_json(tree.seed_candidates);
    nlohmann::json levels = nlohmann::json::array();
    for (const tree_level& lvl : tree.levels) {
        nlohmann::json groups = nlohmann::json::array();
        for (const tree_group& grp : lvl.groups)
            groups.push_back({{"nodes", grp.nodes.members()},
                              {"score", grp.score},
                              {"parents", grp.parents}});
        levels.push_back({{"groups", groups}, {"candidates", candidates_to_json(lvl.candidates)}});
    }
    j["levels"] = levels;
    return j.dump(2) + "\n";
}

std::string tree_to_dot(const explanation_tree& tree, const graph& g) {
    std::vector<double> singleton(static_cast<std::size_t>(g.n), 0.0);
    std::vector<bool> seen(static_cast<std::size_t>(g.n), false);
    for (const candidate_record& rec : tree.seed_candidates) {
        singleton[static_cast<std::size_t>(rec.node)] = rec.s;
        seen[static_cast<std::size_t>(rec.node)] = true;
    }

    // Nested lineage: best final group, then the best-scoring parent at
    // every level below it.
    std::vector<node_group> lineage;
    if (!tree.levels.empty()) {
        std::size_t li = tree.levels.size() - 1;
        int best = 0;
        for (std::size_t k = 1; k < tree.levels[li].groups.size(); ++k)
            if (tree.levels[li].groups[k].score > tree.levels[li].groups[static_cast<std::size_t>(best)].score)
                best = static_cast<int>(k);
        for (;;) {
            const tree_group& grp = tree.levels[li].groups[static_cast<std::size_t>(best)];
            lineage.push_back(grp.nodes);
            if (li == 0 || grp.parents.empty()) break;
            --li;
            int next = grp.parents.front();
            for (int p : grp.parents)
                if (tree.levels[li].groups[static_cast<std::size_t>(p)].score >
                    tree.levels[li].groups[static_cast<std::size_t>(next)].score)
                    next = p;
            best = next;
        }
        std::reverse(lineage.begin(), lineage.end()); // innermost first
    }

    std::ostringstream dot;
    dot << "graph explanation {\n  node [style=filled, shape=circle];\n";
    auto emit_node = [&](int v, const std::string& indent) {
        const double s = singleton[static_cast<std::size_t>(v)];
        const char* color = !seen[static_cast<std::size_t>(v)] || s == 0.0 ? "gray85"
                            : s > 0.0                                      ? "lightcoral"
                                                                           : "lightblue";
        std::ostringstream label;
        label.precision(3);
        label << v;
        if (seen[static_cast<std::size_t>(v)]) label << "\\n" << s;
        dot << indent << v << " [fillcolor=" << color << ", label=\"" << label.str() << "\"];\n";
    };

    std::vector<bool> emitted(static_cast<std::size_t>(g.n), false);
    std::string indent = "  ";
    for (std::size_t d = lineage.size(); d-- > 0;) {
        dot << indent << "subgraph cluster_level_" << d + 1 << " {\n";
        indent += "  ";
        dot << indent << "label=\"level " << d + 1 << "\";\n";
        if (d == 0) {
            for (int v : lineage[0]) {
                emit_node(v, indent);
                emitted[static_cast<std::size_t>(v)] = true;
            }
        } else {
            for (int v : lineage[d])
                if (!lineage[d - 1].contains(v)) {
                    emit_node(v, indent);
                    emitted[static_cast<std::size_t>(v)] = true;
                }
        }
    }
    for (std::size_t d = 0; d < lineage.size(); ++d) {
        indent.resize(indent.size() - 2);
        dot << indent << "}\n";
    }
    for (int v = 0; v < g.n; ++v)
        if (!emitted[static_cast<std::size_t>(v)]) emit_node(v, "  ");
    for (const auto& [u, v] : g.edges) dot << "  " << u << " -- " << v << ";\n";
    dot << "}\n";
    return dot.str();
}

} // namespace degree

#include "degree/json_io.hpp"

#include "degree/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace degree {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void atomic_write_text(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw parse_error(tmp.string() + ": cannot open for writing");
        out << content;
        out.flush();
        if (!out) throw parse_error(tmp.string() + ": write failed");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw parse_error(path + ": rename failed: " + ec.message());
    }
}

json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw parse_error(origin + ": " + e.what());
    }
}

json matrix_to_json(const matrix& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (double v : m.row(r)) row.push_back(v);
        rows.push_back(std::move(row));
    }
    return rows;
}

matrix matrix_from_json(const json& j, const std::string& field) {
    if (!j.is_array()) throw validation_error(field + ": expected an array of rows");
    std::vector<std::vector<double>> rows;
    rows.reserve(j.size());
    for (const auto& row : j) {
        if (!row.is_array()) throw validation_error(field + ": expected an array of rows");
        std::vector<double> vals;
        vals.reserve(row.size());
        for (const auto& v : row) {
            if (!v.is_number()) throw validation_error(field + ": non-numeric entry");
            vals.push_back(v.get<double>());
        }
        rows.push_back(std::move(vals));
    }
    try {
        matrix m = matrix::from_rows(rows);
        if (!m.all_finite()) throw validation_error(field + ": non-finite entry");
        return m;
    } catch (const dimension_error& e) {
        throw validation_error(field + ": " + e.what());
    }
}

json graph_to_json(const graph& g) {
    json j;
    j["n"] = g.n;
    json edges = json::array();
    for (const auto& [u, v] : g.edges) edges.push_back(json::array({u, v}));
    j["edges"] = std::move(edges);
    j["features"] = matrix_to_json(g.features);
    if (!g.node_labels.empty()) j["node_labels"] = g.node_labels;
    if (g.graph_label) j["graph_label"] = *g.graph_label;
    if (!g.gt_nodes.empty()) j["gt_nodes"] = g.gt_nodes;
    if (!g.gt_edges.empty()) j["gt_edges"] = g.gt_edges;
    if (!g.motif_ids.empty()) j["motif_ids"] = g.motif_ids;
    return j;
}

namespace {

template <typename T>
std::vector<T> int_list(const json& j, const std::string& field) {
    if (!j.is_array()) throw validation_error(field + ": expected an array");
    std::vector<T> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number_integer()) throw validation_error(field + ": non-integer entry");
        out.push_back(static_cast<T>(v.get<long long>()));
    }
    return out;
}

} // namespace

graph graph_from_json(const json& j) {
    if (!j.is_object()) throw validation_error("graph: expected an object");
    if (!j.contains("n") || !j["n"].is_number_integer()) {
        throw validation_error("graph: missing integer field 'n'");
    }
    const int n = j["n"].get<int>();
    if (!j.contains("edges")) throw validation_error("graph: missing field 'edges'");
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : j["edges"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
            !e[1].is_number_integer()) {
            throw validation_error("graph: edges must be [u,v] integer pairs");
        }
        edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    if (!j.contains("features")) throw validation_error("graph: missing field 'features'");
    matrix feats = matrix_from_json(j["features"], "graph.features");

    std::vector<int> labels;
    if (j.contains("node_labels")) labels = int_list<int>(j["node_labels"], "graph.node_labels");
    std::optional<int> graph_label;
    if (j.contains("graph_label")) {
        if (!j["graph_label"].is_number_integer()) {
            throw validation_error("graph: graph_label must be an integer");
        }
        graph_label = j["graph_label"].get<int>();
    }
    std::vector<std::uint8_t> gt_nodes, gt_edges;
    if (j.contains("gt_nodes")) gt_nodes = int_list<std::uint8_t>(j["gt_nodes"], "graph.gt_nodes");
    if (j.contains("gt_edges")) gt_edges = int_list<std::uint8_t>(j["gt_edges"], "graph.gt_edges");

    graph g(n, std::move(edges), std::move(feats), std::move(labels), graph_label,
            std::move(gt_nodes), std::move(gt_edges));
    if (j.contains("motif_ids")) {
        g.motif_ids = int_list<int>(j["motif_ids"], "graph.motif_ids");
        if (g.motif_ids.size() != static_cast<std::size_t>(g.n)) {
            throw validation_error("graph: motif_ids length != n");
        }
        for (int id : g.motif_ids)
            if (id < -1) throw validation_error("graph: motif id below -1");
    }
    return g;
}

} // namespace degree

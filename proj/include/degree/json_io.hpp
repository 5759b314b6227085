#pragma once

#include "degree/graph.hpp"
#include "degree/matrix.hpp"

#include <json.hpp>

#include <string>

namespace degree {

/// Reads a whole file; throws parse_error when it cannot be opened.
std::string read_text_file(const std::string& path);

/// Writes via a temp file in the same directory plus rename, so a partial
/// artifact is never left behind.
void atomic_write_text(const std::string& path, const std::string& content);

/// Parses JSON, converting nlohmann's diagnostics into parse_error.
nlohmann::json parse_json(const std::string& text, const std::string& origin);

nlohmann::json matrix_to_json(const matrix& m);
matrix matrix_from_json(const nlohmann::json& j, const std::string& field);

nlohmann::json graph_to_json(const graph& g);
graph graph_from_json(const nlohmann::json& j);

} // namespace degree

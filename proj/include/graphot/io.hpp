#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "graphot/cluster.hpp"
#include "graphot/error.hpp"
#include "graphot/generators.hpp"
#include "graphot/graph.hpp"
#include "graphot/measure.hpp"

namespace graphot::io {

using nlohmann::json;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[i] = digits[v & 0xf];
  return out;
}

inline std::uint64_t hash_graph(const WeightedGraph& g) {
  const int n = g.num_vertices();
  std::uint64_t h = fnv1a(&n, sizeof n);
  for (const auto& e : g.edges()) {
    h = fnv1a(&e.tail, sizeof e.tail, h);
    h = fnv1a(&e.head, sizeof e.head, h);
    h = fnv1a(&e.weight, sizeof e.weight, h);
  }
  return h;
}

inline std::uint64_t hash_vector(const Vector& v) {
  return fnv1a(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
}

/// {"n": int, "edges": [[i, j, w], ...]}; w defaults to 1.
inline WeightedGraph graph_from_json(const json& doc) {
  try {
    std::vector<Edge> edges;
    for (const auto& e : doc.at("edges")) {
      edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.size() > 2 ? e.at(2).get<double>() : 1.0});
    }
    if (doc.contains("n")) return build_graph(doc.at("n").get<int>(), std::move(edges));
    return WeightedGraph::build(std::move(edges));
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kParseError, std::string("graph JSON: ") + ex.what());
  }
}

inline json graph_to_json(const WeightedGraph& g) {
  json edges = json::array();
  for (const auto& e : g.edges()) edges.push_back({e.tail, e.head, e.weight});
  return {{"n", g.num_vertices()}, {"edges", edges}};
}

/// Lines "i<TAB>j<TAB>w" (w optional, any whitespace); a non-numeric first
/// line is a header; '#' starts a comment.
inline WeightedGraph graph_from_tsv(std::istream& in) {
  std::vector<Edge> edges;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    Edge e;
    if (!(row >> e.tail >> e.head)) {
      detail::require(first, ErrorCode::kParseError, "bad edge line: " + line);
      first = false;
      continue;
    }
    first = false;
    if (!(row >> e.weight)) e.weight = 1.0;
    edges.push_back(e);
  }
  return WeightedGraph::build(std::move(edges));
}

/// Generator strings: path:n, cycle:n, complete:n, star:k, lattice:RxC,
/// hexlattice:RxC, tree:seed,n. Anything else is read as a file.
inline WeightedGraph load_graph(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon != std::string::npos) {
    const std::string kind = spec.substr(0, colon);
    const std::string args = spec.substr(colon + 1);
    auto two = [&](char sep) {
      const auto at = args.find(sep);
      detail::require(at != std::string::npos, ErrorCode::kParseError, "generator needs two numbers: " + spec);
      return std::pair(std::stol(args.substr(0, at)), std::stol(args.substr(at + 1)));
    };
    try {
      if (kind == "path") return path_graph(std::stoi(args));
      if (kind == "cycle") return cycle_graph(std::stoi(args));
      if (kind == "complete") return complete_graph(std::stoi(args));
      if (kind == "star") return star_graph(std::stoi(args));
      if (kind == "lattice") {
        const auto [r, c] = two('x');
        return lattice_graph(static_cast<int>(r), static_cast<int>(c));
      }
      if (kind == "hexlattice") {
        const auto [r, c] = two('x');
        return hex_lattice_graph(static_cast<int>(r), static_cast<int>(c));
      }
      if (kind == "tree") {
        const auto [seed, n] = two(',');
        return random_tree(static_cast<std::uint64_t>(seed), static_cast<int>(n));
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kParseError, "bad generator arguments: " + spec);
    }
  }
  const std::string text = read_file(spec);
  if (ends_with(spec, ".json")) {
    try {
      return graph_from_json(json::parse(text));
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kParseError, spec + ": " + ex.what());
    }
  }
  std::istringstream in(text);
  return graph_from_tsv(in);
}

/// JSON array of numbers, or one number per line (optional header).
inline Vector vector_from_text(const std::string& text, const std::string& origin) {
  const auto start = text.find_first_not_of(" \t\r\n");
  if (start != std::string::npos && text[start] == '[') {
    try {
      const auto values = json::parse(text).get<std::vector<double>>();
      return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kParseError, origin + ": " + ex.what());
    }
  }
  std::vector<double> values;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const auto cells = detail::split_csv_line(line);
    if (cells.empty() || (cells.size() == 1 && cells[0].empty())) continue;
    double v = 0.0;
    if (cells.size() != 1 || !detail::parse_double(cells[0], v)) {
      detail::require(first, ErrorCode::kParseError, origin + ": expected one number per line");
      first = false;
      continue;
    }
    first = false;
    values.push_back(v);
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline Measure load_measure(const std::string& path) {
  return Measure(vector_from_text(read_file(path), path));
}

inline json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace graphot::io

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <vector>

#include "schurtree/error.hpp"
#include "schurtree/graph.hpp"
#include "schurtree/reff_estimator.hpp"

namespace schurtree {

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline bool skip_line(std::string_view line) {
  for (char c : line) {
    if (c == '#') return true;
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

[[noreturn]] inline void parse_fail(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": " + what);
}

inline std::uint64_t parse_vertex(std::string_view s, std::size_t line_no) {
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    parse_fail(line_no, "expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return x;
}

inline double parse_weight(std::string_view s, std::size_t line_no) {
  double w = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), w);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    parse_fail(line_no, "expected a decimal weight, got '" + std::string(s) + "'");
  }
  return w;
}

// Reads lines with exactly `arity` fields, skipping blanks and comments.
inline std::vector<std::pair<std::size_t, std::vector<std::string_view>>> read_records(
    std::istream& in, std::size_t arity, std::vector<std::string>& storage) {
  std::vector<std::pair<std::size_t, std::vector<std::string_view>>> out;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> numbers;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    storage.push_back(line);
    numbers.push_back(line_no);
  }
  for (std::size_t i = 0; i < storage.size(); ++i) {
    auto fields = split_fields(storage[i]);
    if (fields.size() != arity) {
      parse_fail(numbers[i], "expected " + std::to_string(arity) + " fields, got " +
                                 std::to_string(fields.size()));
    }
    out.emplace_back(numbers[i], std::move(fields));
  }
  return out;
}

}  // namespace detail

// Edge list: one "u v w" per line; '#' comments and blank lines ignored.
inline std::vector<InputEdge> read_edge_list(std::istream& in) {
  std::vector<std::string> storage;
  std::vector<InputEdge> edges;
  for (const auto& [line_no, f] : detail::read_records(in, 3, storage)) {
    edges.push_back({detail::parse_vertex(f[0], line_no), detail::parse_vertex(f[1], line_no),
                     detail::parse_weight(f[2], line_no)});
  }
  return edges;
}

inline Multigraph read_graph(std::istream& in) {
  const std::vector<InputEdge> edges = read_edge_list(in);
  return build_graph(edges);
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::parse_error, "cannot open '" + path + "'");
  return in;
}

inline Multigraph read_graph_file(const std::string& path) {
  auto in = open_input(path);
  return read_graph(in);
}

// Vertex pairs "u v" given in input labels.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>> read_pair_list(std::istream& in) {
  std::vector<std::string> storage;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  for (const auto& [line_no, f] : detail::read_records(in, 2, storage)) {
    out.emplace_back(detail::parse_vertex(f[0], line_no), detail::parse_vertex(f[1], line_no));
  }
  return out;
}

// Whitespace-separated vertex labels, any number per line.
inline std::vector<std::uint64_t> read_vertex_list(std::istream& in) {
  std::vector<std::uint64_t> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skip_line(line)) continue;
    for (std::string_view f : detail::split_fields(line)) out.push_back(detail::parse_vertex(f, line_no));
  }
  return out;
}

// Maps input labels to compacted vertices; BadPair for unknown labels.
class LabelIndex {
 public:
  explicit LabelIndex(const Multigraph& g) {
    for (Vertex v = 0; v < g.original_order(); ++v) index_.emplace(g.label(v), v);
  }

  Vertex at(std::uint64_t label) const {
    auto it = index_.find(label);
    if (it == index_.end()) {
      throw Error(ErrorCode::bad_pair, "vertex " + std::to_string(label) + " does not occur in the graph");
    }
    return it->second;
  }

 private:
  std::unordered_map<std::uint64_t, Vertex> index_;
};

inline std::vector<VertexPair> to_vertex_pairs(const Multigraph& g,
                                               const std::vector<std::pair<std::uint64_t, std::uint64_t>>& raw) {
  const LabelIndex index(g);
  std::vector<VertexPair> out;
  out.reserve(raw.size());
  for (const auto& [a, b] : raw) out.push_back({index.at(a), index.at(b)});
  return out;
}

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Writes "u v w" lines in input labels, in edge-id order.
inline void write_graph(std::ostream& out, const Multigraph& g) {
  for (const Edge& e : g.edges()) {
    out << g.label(e.u) << ' ' << g.label(e.v) << ' ' << format_double(e.weight) << '\n';
  }
}

}  // namespace schurtree

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "schurtree/graph.hpp"
#include "schurtree/reff_estimator.hpp"
#include "schurtree/stats.hpp"
#include "schurtree/tree_sampler.hpp"

namespace schurtree {

using Json = nlohmann::ordered_json;

inline Json edge_ids_json(const std::vector<EdgeId>& ids) {
  Json a = Json::array();
  for (EdgeId id : ids) a.push_back(id.value);
  return a;
}

// One JSON Lines record per sampled tree.
inline Json tree_sample_json(const TreeSample& t) {
  Json j;
  j["edges"] = edge_ids_json(t.edges);
  j["seed"] = t.seed;
  j["climb_hist"] = t.stats.climb_hist;
  j["root_fallbacks"] = t.stats.root_fallbacks;
  return j;
}

inline std::vector<EdgeId> tree_edges_from_json(const Json& j) {
  std::vector<EdgeId> out;
  for (const auto& x : j.at("edges")) out.push_back(EdgeId{x.get<std::uint64_t>()});
  return out;
}

inline Json stats_json(const SamplerStats& s) {
  Json j;
  j["decisions"] = s.decisions;
  j["climb_hist"] = s.climb_hist;
  j["root_fallbacks"] = s.root_fallbacks;
  j["root_refinements"] = s.root_refinements;
  j["nodes_per_level"] = s.nodes_per_level;
  j["node_bound_violations"] = s.node_bound_violations;
  j["approx_schur_calls"] = s.approx_calls;
  j["exact_schur_calls"] = s.exact_calls;
  j["max_run_length"] = s.max_run_length;
  j["run_length_alarms"] = s.run_length_alarms;
  j["interval_violations"] = s.interval_violations;
  return j;
}

inline Json distribution_report_json(const DistributionTestReport& r) {
  Json j;
  j["pass"] = r.pass;
  j["samples"] = r.samples;
  j["alpha"] = r.alpha;
  j["statistic"] = std::isfinite(r.statistic) ? Json(r.statistic) : Json(nullptr);
  j["dof"] = r.dof;
  j["pvalue"] = r.pvalue;
  j["tv_distance"] = r.tv_distance;
  j["outside_support"] = r.outside_support;
  Json cells = Json::array();
  for (const auto& [key, count] : r.observed) {
    auto e = r.expected.find(key);
    Json c;
    c["tree"] = key;
    c["observed"] = count;
    c["expected"] = e == r.expected.end() ? 0.0 : e->second;
    cells.push_back(c);
  }
  j["cells"] = cells;
  return j;
}

inline Json marginal_report_json(const MarginalReport& r) {
  Json j;
  j["pass"] = r.pass;
  j["samples"] = r.samples;
  j["fraction_within"] = r.fraction_within;
  Json edges = Json::array();
  for (const auto& m : r.edges) {
    Json e;
    e["edge"] = m.edge.value;
    e["frequency"] = m.frequency;
    e["leverage"] = m.leverage;
    e["sigma"] = m.sigma;
    e["within"] = m.within;
    edges.push_back(e);
  }
  j["edges"] = edges;
  return j;
}

}  // namespace schurtree

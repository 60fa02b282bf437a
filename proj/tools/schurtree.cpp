#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "schurtree/io.hpp"
#include "schurtree/json_io.hpp"
#include "schurtree/schurtree.hpp"

namespace st = schurtree;

namespace {

enum Exit : int {
  kOk = 0,
  kValidationFailed = 1,
  kParseError = 2,
  kDisconnected = 3,
  kInternal = 4,
  kBadPair = 5,
};

int exit_code_for(st::ErrorCode code) {
  switch (code) {
    case st::ErrorCode::parse_error:
    case st::ErrorCode::non_positive_weight:
    case st::ErrorCode::self_loop_input:
    case st::ErrorCode::empty_input:
    case st::ErrorCode::invalid_argument:
      return kParseError;
    case st::ErrorCode::disconnected: return kDisconnected;
    case st::ErrorCode::bad_pair:
    case st::ErrorCode::same_vertex:
      return kBadPair;
    default: return kInternal;
  }
}

struct Common {
  std::string input;
  std::string output = "-";
  std::uint64_t seed = st::kDefaultSeed;
  double delta = 0.01;
  double epsilon = 0.1;
  double split_scale = -1.0;  // negative: per-command default
  double c_sp = st::ApproxConfig{}.c_sp;
  double c_jl = st::ApproxConfig{}.c_jl;
  std::uint64_t copy_budget = st::ApproxConfig{}.copy_budget;

  st::ApproxConfig approx(double default_scale) const {
    st::ApproxConfig a;
    a.split_scale = split_scale > 0.0 ? split_scale : default_scale;
    a.c_sp = c_sp;
    a.c_jl = c_jl;
    a.copy_budget = copy_budget;
    return a;
  }
};

void add_constants(CLI::App* app, Common& c) {
  app->add_option("--split-scale", c.split_scale, "Multiplier on the edge-splitting count")
      ->envname("SCHURTREE_SPLIT_SCALE")
      ->check(CLI::PositiveNumber);
  app->add_option("--c-sp", c.c_sp, "Sparsifier oversampling constant")
      ->envname("SCHURTREE_C_SP")
      ->check(CLI::PositiveNumber);
  app->add_option("--c-jl", c.c_jl, "JL sketch length constant")
      ->envname("SCHURTREE_C_JL")
      ->check(CLI::PositiveNumber);
  app->add_option("--copy-budget", c.copy_budget, "Largest number of split multi-edges per elimination")
      ->envname("SCHURTREE_COPY_BUDGET");
}

void add_seed(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "RNG seed")->envname("SCHURTREE_SEED");
}

void add_output(CLI::App* app, Common& c) {
  app->add_option("-o,--output", c.output, "Output file ('-' for stdout)")->envname("SCHURTREE_OUTPUT");
}

// Writes through a temporary buffer so a failed run leaves no partial file.
void emit(const std::string& path, const std::string& data) {
  if (path == "-") {
    std::cout << data;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw st::Error(st::ErrorCode::parse_error, "cannot write '" + path + "'");
  out << data;
}

template <class F>
void parallel_for(std::size_t count, unsigned threads, F&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// --- sample -----------------------------------------------------------------

struct SampleArgs {
  Common c;
  std::size_t trees = 1;
  std::string eps_mode = "auto";
  std::size_t dense_leaf = 0;
  unsigned threads = 1;
};

int cmd_sample(const SampleArgs& a) {
  const st::Multigraph g = st::read_graph_file(a.c.input);
  st::require_connected(g);
  st::SamplerConfig cfg;
  cfg.delta = a.c.delta;
  cfg.eps_mode = *st::parse_eps_mode(a.eps_mode);
  cfg.approx = a.c.approx(st::kSamplerSplitScale);
  cfg.dense_leaf_threshold = a.dense_leaf;
  std::vector<std::string> lines(a.trees);
  parallel_for(a.trees, a.threads, [&](std::size_t i) {
    const st::TreeSample t = st::generate_spanning_tree(g, cfg, st::derive_seed(a.c.seed, i));
    lines[i] = st::tree_sample_json(t).dump() + "\n";
  });
  std::string out;
  for (const auto& l : lines) out += l;
  emit(a.c.output, out);
  return kOk;
}

// --- reff -------------------------------------------------------------------

struct ReffArgs {
  Common c;
  std::string pairs;
  bool exact = false;
};

int cmd_reff(const ReffArgs& a) {
  const st::Multigraph g = st::read_graph_file(a.c.input);
  auto in = st::open_input(a.pairs);
  const auto raw = st::read_pair_list(in);
  const auto pairs = st::to_vertex_pairs(g, raw);
  st::ReffConfig cfg;
  cfg.approx = a.c.approx(st::kReffSplitScale);
  cfg.exact = a.exact;
  st::Philox4x32 rng(a.c.seed);
  const st::ReffEstimates est = st::estimate_reff(g, pairs, a.c.epsilon, rng, cfg);
  st::Json arr = st::Json::array();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    st::Json j;
    j["u"] = raw[i].first;
    j["v"] = raw[i].second;
    j["reff"] = est.values[i];
    arr.push_back(j);
  }
  emit(a.c.output, arr.dump(2) + "\n");
  return kOk;
}

// --- schur ------------------------------------------------------------------

struct SchurArgs {
  Common c;
  std::string keep;
  bool exact = false;
};

int cmd_schur(const SchurArgs& a) {
  const st::Multigraph g = st::read_graph_file(a.c.input);
  auto in = st::open_input(a.keep);
  const st::LabelIndex index(g);
  std::vector<st::Vertex> keep;
  for (std::uint64_t label : st::read_vertex_list(in)) keep.push_back(index.at(label));
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  if (keep.empty()) throw st::Error(st::ErrorCode::empty_keep, "keep set is empty");
  st::require_connected(g);
  st::Multigraph h;
  if (a.exact) {
    h = st::schur_exact_graph(g, keep);
  } else {
    st::Philox4x32 rng(a.c.seed);
    h = st::approx_schur(g, keep, a.c.epsilon, a.c.delta, rng, a.c.approx(st::kSchurSplitScale));
  }
  std::ostringstream out;
  st::write_graph(out, h);
  emit(a.c.output, out.str());
  return kOk;
}

// --- validate ---------------------------------------------------------------

struct ValidateArgs {
  Common c;
  std::string trees = "-";
  double alpha = 0.001;
};

int cmd_validate(const ValidateArgs& a) {
  const st::Multigraph g = st::read_graph_file(a.c.input);
  st::require_connected(g);
  std::ifstream file;
  std::istream* in = &std::cin;
  if (a.trees != "-") {
    file = st::open_input(a.trees);
    in = &file;
  }
  std::vector<std::vector<st::EdgeId>> samples;
  std::string line;
  std::size_t line_no = 0;
  std::size_t invalid = 0;
  while (std::getline(*in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    st::Json j;
    try {
      j = st::Json::parse(line);
      samples.push_back(st::tree_edges_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw st::Error(st::ErrorCode::parse_error, "line " + std::to_string(line_no) + ": " + e.what());
    }
    for (st::EdgeId id : samples.back()) {
      if (!id.is_original() || id.value >= g.num_edges()) {
        throw st::Error(st::ErrorCode::parse_error,
                        "line " + std::to_string(line_no) + ": unknown edge id " + std::to_string(id.value));
      }
    }
    if (!st::is_spanning_tree(g, samples.back())) ++invalid;
  }
  if (samples.empty()) throw st::Error(st::ErrorCode::empty_input, "no trees to validate");

  st::Json report;
  report["n"] = g.num_vertices();
  report["m"] = g.num_edges();
  report["samples"] = samples.size();
  report["invalid_trees"] = invalid;
  bool pass = invalid == 0;
  if (g.num_vertices() <= 10 && g.num_edges() <= 20) {
    try {
      const auto dist = st::distribution_test(st::enumerate_trees(g), samples, a.alpha);
      report["distribution"] = st::distribution_report_json(dist);
      pass = pass && dist.pass;
    } catch (const st::Error& e) {
      if (e.code() != st::ErrorCode::undersampled_cell) throw;
      report["distribution"] = nullptr;
      report["distribution_skipped"] = e.what();
    }
  } else {
    report["distribution"] = nullptr;
    report["distribution_skipped"] = "graph too large to enumerate";
  }
  const auto marg = st::marginal_test(g, samples);
  report["marginals"] = st::marginal_report_json(marg);
  pass = pass && marg.pass;
  report["pass"] = pass;
  emit(a.c.output, report.dump(2) + "\n");
  return pass ? kOk : kValidationFailed;
}

// --- bench ------------------------------------------------------------------

struct BenchArgs {
  Common c;
  std::string family = "random";
  std::vector<std::uint64_t> sizes{8, 16, 32};
  std::size_t trees = 20;
  std::string eps_mode = "auto";
  std::size_t dense_leaf = 0;
  bool timings = false;
};

struct BenchRun {
  st::SamplerStats stats;
  std::vector<std::uint64_t> max_nodes;
  double ms = 0.0;
};

BenchRun bench_mode(const st::Multigraph& g, const st::SamplerConfig& cfg, std::uint64_t seed, std::size_t trees) {
  BenchRun run;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < trees; ++i) {
    const st::TreeSample t = st::generate_spanning_tree(g, cfg, st::derive_seed(seed, i));
    run.stats.merge(t.stats);
    const auto& nodes = t.stats.nodes_per_level;
    if (run.max_nodes.size() < nodes.size()) run.max_nodes.resize(nodes.size(), 0);
    for (std::size_t k = 0; k < nodes.size(); ++k) run.max_nodes[k] = std::max(run.max_nodes[k], nodes[k]);
  }
  run.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return run;
}

st::Json bench_mode_json(const st::Multigraph& g, const st::SamplerConfig& cfg, const BenchRun& run,
                         bool timings) {
  const auto sched = st::EpsilonSchedule::make(g.num_vertices(), g.num_edges(), cfg.eps_mode);
  st::Json j;
  j["mode"] = std::string(st::to_string(sched.mode));
  j["t1"] = sched.t1;
  j["max_level"] = sched.max_level;
  st::Json eps = st::Json::array();
  for (int i = 0; i <= sched.max_level; ++i) eps.push_back(sched.epsilon(i));
  j["epsilon"] = eps;
  j["stats"] = st::stats_json(run.stats);
  j["max_nodes_per_level"] = run.max_nodes;
  std::vector<std::uint64_t> bound;
  bool ok = true;
  for (std::size_t k = 0; k < run.max_nodes.size(); ++k) {
    bound.push_back(st::node_bound(static_cast<int>(k)));
    ok = ok && run.max_nodes[k] <= bound.back();
  }
  j["node_bound"] = bound;
  j["node_bound_ok"] = ok && run.stats.node_bound_violations == 0;
  if (timings) j["wall_ms"] = run.ms;
  return j;
}

int cmd_bench(const BenchArgs& a) {
  st::Json report;
  report["seed"] = a.c.seed;
  report["family"] = a.family;
  report["trees"] = a.trees;
  report["delta"] = a.c.delta;
  st::Json sizes = st::Json::array();
  st::Json table = st::Json::array();
  bool all_ok = true;
  for (std::size_t s = 0; s < a.sizes.size(); ++s) {
    const std::uint64_t seed = st::derive_seed(a.c.seed, s);
    st::Philox4x32 graph_rng(seed, 1);
    const st::Multigraph g = st::build_graph(st::family_edges(a.family, a.sizes[s], graph_rng));
    st::SamplerConfig exact;
    exact.delta = a.c.delta;
    exact.eps_mode = st::EpsMode::exact;
    st::SamplerConfig approx = exact;
    approx.eps_mode = *st::parse_eps_mode(a.eps_mode);
    approx.approx = a.c.approx(st::kSamplerSplitScale);
    approx.dense_leaf_threshold = a.dense_leaf;
    const BenchRun re = bench_mode(g, exact, seed, a.trees);
    const BenchRun ra = bench_mode(g, approx, seed, a.trees);
    st::Json entry;
    entry["n"] = g.num_vertices();
    entry["m"] = g.num_edges();
    entry["exact"] = bench_mode_json(g, exact, re, a.timings);
    entry["approx"] = bench_mode_json(g, approx, ra, a.timings);
    all_ok = all_ok && entry["exact"]["node_bound_ok"].get<bool>() && entry["approx"]["node_bound_ok"].get<bool>();
    sizes.push_back(entry);
    st::Json row;
    row["n"] = g.num_vertices();
    row["m"] = g.num_edges();
    row["exact_ms"] = a.timings ? st::Json(re.ms) : st::Json(nullptr);
    row["approx_ms"] = a.timings ? st::Json(ra.ms) : st::Json(nullptr);
    table.push_back(row);
  }
  report["sizes"] = sizes;
  report["timing_table"] = table;
  report["node_bounds_ok"] = all_ok;
  emit(a.c.output, report.dump(2) + "\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spanning tree sampling and effective resistances via approximate Schur complements"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "schurtree 0.1.0");

  const auto eps_modes = CLI::IsMember({"auto", "sparse", "dense", "exact"});

  SampleArgs sample;
  auto* s = app.add_subcommand("sample", "Sample w-uniform spanning trees (JSON Lines)");
  s->add_option("graph", sample.c.input, "Edge list file")->required();
  s->add_option("--trees", sample.trees, "Number of trees")->envname("SCHURTREE_TREES");
  s->add_option("--delta", sample.c.delta, "Failure probability")
      ->envname("SCHURTREE_DELTA")
      ->check(CLI::Range(0.0, 1.0));
  s->add_option("--eps-mode", sample.eps_mode, "auto|sparse|dense|exact")
      ->envname("SCHURTREE_EPS_MODE")
      ->check(eps_modes);
  s->add_option("--dense-leaf", sample.dense_leaf, "Use exact Schur complements at or below this many vertices")
      ->envname("SCHURTREE_DENSE_LEAF");
  s->add_option("--threads", sample.threads, "Worker threads")->envname("SCHURTREE_THREADS");
  add_seed(s, sample.c);
  add_output(s, sample.c);
  add_constants(s, sample.c);

  ReffArgs reff;
  auto* r = app.add_subcommand("reff", "Estimate effective resistances of vertex pairs");
  r->add_option("graph", reff.c.input, "Edge list file")->required();
  r->add_option("pairs", reff.pairs, "Pair file")->required();
  r->add_option("--epsilon", reff.c.epsilon, "Multiplicative tolerance")
      ->envname("SCHURTREE_EPSILON")
      ->check(CLI::Range(0.0, 1.0));
  r->add_flag("--exact", reff.exact, "Exact Schur complements at every layer");
  add_seed(r, reff.c);
  add_output(r, reff.c);
  add_constants(r, reff.c);

  SchurArgs schur;
  auto* c = app.add_subcommand("schur", "Approximate Schur complement onto a vertex subset");
  c->add_option("graph", schur.c.input, "Edge list file")->required();
  c->add_option("keep", schur.keep, "File listing the vertices to keep")->required();
  c->add_option("--epsilon", schur.c.epsilon, "Spectral tolerance")
      ->envname("SCHURTREE_EPSILON")
      ->check(CLI::Range(0.0, 0.5));
  c->add_option("--delta", schur.c.delta, "Failure probability")
      ->envname("SCHURTREE_DELTA")
      ->check(CLI::Range(0.0, 1.0));
  c->add_flag("--exact", schur.exact, "Exact dense Schur complement");
  add_seed(c, schur.c);
  add_output(c, schur.c);
  add_constants(c, schur.c);

  ValidateArgs validate;
  auto* v = app.add_subcommand("validate", "Test sampled trees against exact probabilities");
  v->add_option("graph", validate.c.input, "Edge list file")->required();
  v->add_option("trees", validate.trees, "JSON Lines trees ('-' for stdin)");
  v->add_option("--alpha", validate.alpha, "Significance level")
      ->envname("SCHURTREE_ALPHA")
      ->check(CLI::Range(0.0, 1.0));
  add_output(v, validate.c);

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Recursion and timing report across graph sizes");
  b->add_option("--family", bench.family, "Graph family")
      ->envname("SCHURTREE_FAMILY")
      ->check(CLI::IsMember({"path", "cycle", "grid", "complete", "random"}));
  b->add_option("--sizes", bench.sizes, "Vertex counts")->delimiter(',')->envname("SCHURTREE_SIZES");
  b->add_option("--trees", bench.trees, "Trees per size and mode")->envname("SCHURTREE_TREES");
  b->add_option("--delta", bench.c.delta, "Failure probability")
      ->envname("SCHURTREE_DELTA")
      ->check(CLI::Range(0.0, 1.0));
  b->add_option("--eps-mode", bench.eps_mode, "Mode for the approximate runs")
      ->envname("SCHURTREE_EPS_MODE")
      ->check(eps_modes);
  b->add_option("--dense-leaf", bench.dense_leaf, "Use exact Schur complements at or below this many vertices")
      ->envname("SCHURTREE_DENSE_LEAF");
  b->add_flag("--timings", bench.timings, "Include wall-clock times");
  add_seed(b, bench.c);
  add_output(b, bench.c);
  add_constants(b, bench.c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParseError;
  }

  try {
    if (*s) return cmd_sample(sample);
    if (*r) return cmd_reff(reff);
    if (*c) return cmd_schur(schur);
    if (*v) return cmd_validate(validate);
    if (*b) return cmd_bench(bench);
  } catch (const st::Error& e) {
    std::cerr << "schurtree: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "schurtree: internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

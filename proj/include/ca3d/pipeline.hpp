#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ca3d/ca_engine.hpp"
#include "ca3d/error.hpp"
#include "ca3d/evaluate.hpp"
#include "ca3d/ingest.hpp"
#include "ca3d/labels.hpp"
#include "ca3d/proximity.hpp"
#include "ca3d/reduce.hpp"
#include "ca3d/represent.hpp"

namespace ca3d {

inline constexpr int kMinLevel = 1;
inline constexpr int kMaxLevel = 10;

struct ThresholdResolution {
  double value = 0.0;
  bool degenerate = false;  // all off-diagonal similarities equal
};

/// Level 1 is the tightest threshold, level 10 the loosest:
/// s_min + (10 − level) · (s_max − s_min) / 10 over off-diagonal entries.
inline ThresholdResolution resolve_threshold(int level, const ProximityMatrix& sim) {
  if (level < kMinLevel || level > kMaxLevel) {
    throw Error(Errc::invalid_argument, "cli_service",
                "threshold level must be in 1..10, got " + std::to_string(level));
  }
  if (sim.kind != ProximityMatrix::Kind::similarity) {
    throw Error(Errc::invalid_argument, "cli_service",
                "threshold levels are defined on similarity matrices");
  }
  if (sim.n < 2) return {1.0, true};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sim.n; ++i) {
    for (std::size_t j = i + 1; j < sim.n; ++j) {
      lo = std::min(lo, sim.at(i, j));
      hi = std::max(hi, sim.at(i, j));
    }
  }
  if (lo == hi) return {lo, true};
  return {lo + (kMaxLevel - level) * (hi - lo) / 10.0, false};
}

struct RunSpec {
  std::string corpus;
  std::string format;  // sgml | plaintext | json; empty → detect
  std::string labels;
  std::size_t n_docs = 0;  // 0 → whole corpus
  std::string representation = "bag";
  int ngram_n = 3;
  std::string tokenizer;
  std::string reduction = "none";
  std::size_t k = 50;
  std::string distance = "cosine";
  double minkowski_r = 2.0;
  std::optional<int> threshold_level;
  std::optional<double> threshold;
  std::string strategy = "neighborhood";
  std::string neighborhood = "moore";
  double beta = 1.0;
  std::string output;
  bool timing = true;

  /// Checks every enumeration and range before any work is done.
  void validate() const {
    auto fail = [](const std::string& what) {
      throw Error(Errc::invalid_argument, "cli_service", what);
    };
    if (corpus.empty()) fail("corpus path is required");
    if (!format.empty() && format != "sgml" && format != "plaintext" && format != "json") {
      fail("format must be sgml, plaintext or json");
    }
    if (representation != "bag" && representation != "ngram") {
      fail("representation must be bag or ngram");
    }
    if (representation == "ngram" && (ngram_n < kMinNgram || ngram_n > kMaxNgram)) {
      fail("n-gram length must be in 2..5");
    }
    if (reduction != "none" && reduction != "chi2" && reduction != "infogain") {
      fail("reduction must be none, chi2 or infogain");
    }
    if (reduction != "none" && k < 1) fail("k must be >= 1");
    parse_metric(distance, minkowski_r);
    if (threshold_level && threshold) fail("give either threshold_level or threshold, not both");
    if (threshold_level && (*threshold_level < kMinLevel || *threshold_level > kMaxLevel)) {
      fail("threshold level must be in 1..10");
    }
    if (threshold && !(*threshold >= 0.0 && *threshold <= 1.0)) {
      fail("threshold must be in [0, 1]");
    }
    parse_strategy(strategy);
    parse_neighborhood(neighborhood);
    if (!(beta > 0.0)) fail("beta must be positive");
  }

  int level_or_default() const { return threshold_level.value_or(5); }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"corpus", corpus},
                        {"format", format},
                        {"labels", labels},
                        {"n_docs", n_docs},
                        {"representation", representation},
                        {"ngram_n", ngram_n},
                        {"tokenizer", tokenizer},
                        {"reduction", reduction},
                        {"k", k},
                        {"distance", distance},
                        {"minkowski_r", minkowski_r},
                        {"strategy", strategy},
                        {"neighborhood", neighborhood},
                        {"beta", beta},
                        {"output", output},
                        {"timing", timing}};
    if (threshold) {
      j["threshold"] = *threshold;
    } else {
      j["threshold_level"] = level_or_default();
    }
    return j;
  }

  static RunSpec from_json(const nlohmann::json& j) {
    RunSpec s;
    try {
      if (!j.is_object()) throw Error(Errc::invalid_argument, "cli_service", "spec must be an object");
      s.corpus = j.value("corpus", s.corpus);
      s.format = j.value("format", s.format);
      s.labels = j.value("labels", s.labels);
      s.n_docs = j.value("n_docs", s.n_docs);
      s.representation = j.value("representation", s.representation);
      s.ngram_n = j.value("ngram_n", s.ngram_n);
      s.tokenizer = j.value("tokenizer", s.tokenizer);
      s.reduction = j.value("reduction", s.reduction);
      s.k = j.value("k", s.k);
      s.distance = j.value("distance", s.distance);
      s.minkowski_r = j.value("minkowski_r", s.minkowski_r);
      if (j.contains("threshold_level") && !j["threshold_level"].is_null()) {
        s.threshold_level = j["threshold_level"].get<int>();
      }
      if (j.contains("threshold") && !j["threshold"].is_null()) {
        s.threshold = j["threshold"].get<double>();
      }
      s.strategy = j.value("strategy", s.strategy);
      s.neighborhood = j.value("neighborhood", s.neighborhood);
      s.beta = j.value("beta", s.beta);
      s.output = j.value("output", s.output);
      s.timing = j.value("timing", s.timing);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::invalid_argument, "cli_service", std::string("run spec: ") + e.what());
    }
    return s;
  }
};

inline Corpus load_corpus(const RunSpec& spec) {
  namespace fs = std::filesystem;
  const fs::path path(spec.corpus);
  if (!fs::exists(path)) {
    throw Error(Errc::io_error, "ingest", "corpus not found: " + spec.corpus);
  }
  std::string format = spec.format;
  if (format.empty()) {
    if (path.extension() == ".json") {
      format = "json";
    } else if (path.extension() == ".sgm") {
      format = "sgml";
    } else if (fs::is_directory(path)) {
      format = "plaintext";
      for (const auto& e : fs::directory_iterator(path)) {
        if (e.path().extension() == ".sgm") format = "sgml";
      }
    } else {
      throw Error(Errc::invalid_argument, "ingest", "cannot detect corpus format of " + spec.corpus);
    }
  }
  Corpus c;
  if (format == "json") {
    c = load_corpus_json(path);
  } else if (format == "sgml") {
    c = load_reuters(path);
  } else {
    c = load_plaintext_corpus(path, spec.labels.empty() ? fs::path{} : fs::path(spec.labels));
  }
  if (c.documents.empty()) throw Error(Errc::empty_corpus, "ingest", "corpus is empty");
  if (spec.n_docs > 0) c = select_first_n(c, spec.n_docs);
  return c;
}

/// Everything upstream of the distance computation.
struct PreparedCorpus {
  Corpus corpus;
  ClassLabeling labels;
  TermDocumentMatrix weighted;  // TF-IDF over the kept vocabulary
  std::optional<ReductionReport> reduction;
  DenseRows rows;               // documents with a non-zero vector
  std::vector<DocId> quarantined;  // zero vectors, never placed
};

inline PreparedCorpus prepare(const RunSpec& spec) {
  spec.validate();
  PreparedCorpus p;
  p.corpus = load_corpus(spec);
  p.labels = ClassLabeling::from_corpus(p.corpus);

  Representation rep = spec.representation == "bag" ? Representation::bag()
                                                     : Representation::ngram(spec.ngram_n);
  if (!spec.tokenizer.empty()) rep.tokenizer = load_tokenizer_config(spec.tokenizer);
  TermDocumentMatrix counts = build_matrix(p.corpus, rep);

  if (spec.reduction == "chi2") {
    p.reduction = chi2_select(chi2_contributions(counts), spec.k);
  } else if (spec.reduction == "infogain") {
    p.reduction = infogain_select(information_gain(counts, p.labels), spec.k);
  }
  if (p.reduction) counts = project(counts, p.reduction->kept).matrix;

  p.weighted = apply_tfidf(counts);
  TermDocumentMatrix nonzero;
  nonzero.vocabulary = p.weighted.vocabulary;
  for (const auto& col : p.weighted.columns) {
    if (col.empty()) {
      p.quarantined.push_back(col.doc_id);
    } else {
      nonzero.columns.push_back(col);
    }
  }
  p.rows = densify(nonzero);
  return p;
}

inline ProximityMatrix similarity_for(const PreparedCorpus& p, const RunSpec& spec) {
  return to_similarity(build_proximity(p.rows, parse_metric(spec.distance, spec.minkowski_r)));
}

struct PipelineResult {
  RunSpec spec;
  double threshold = 0.0;
  bool degenerate_threshold = false;
  RunResult run;
  ClusterAssignment assignment;
  std::optional<ContingencyTable> table;
  MetricsRow row;
  nlohmann::json grid_json;
  double ca_ms = 0.0;
};

inline PipelineResult cluster_prepared(const PreparedCorpus& p, const ProximityMatrix& sim,
                                       const RunSpec& spec) {
  using Clock = std::chrono::steady_clock;
  PipelineResult r;
  r.spec = spec;
  if (spec.threshold) {
    r.threshold = *spec.threshold;
  } else {
    const auto resolved = resolve_threshold(spec.level_or_default(), sim);
    r.threshold = resolved.value;
    r.degenerate_threshold = resolved.degenerate;
  }
  CaConfig config;
  config.neighborhood = parse_neighborhood(spec.neighborhood);
  config.strategy = parse_strategy(spec.strategy);
  config.threshold = r.threshold;

  const auto start = Clock::now();
  r.run = run(p.rows.doc_ids, sim, config);
  std::vector<DocId> unplaced = p.quarantined;
  unplaced.insert(unplaced.end(), r.run.unplaced.begin(), r.run.unplaced.end());
  r.assignment = extract_clusters(r.run.grid, config.neighborhood, std::move(unplaced));
  r.ca_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();

  r.row.metric = std::string(to_string(config.strategy)) + "-" +
                 std::string(to_string(config.neighborhood));
  r.row.n_docs = p.corpus.size();
  r.row.representation =
      spec.representation == "bag" ? "bag" : "ngram" + std::to_string(spec.ngram_n);
  r.row.distance = parse_metric(spec.distance, spec.minkowski_r).name();
  if (spec.threshold) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "t=%.6f", *spec.threshold);
    r.row.threshold_level = buf;
  } else {
    r.row.threshold_level = std::to_string(spec.level_or_default());
  }
  r.row.n_clusters = r.assignment.n_clusters;
  r.row.time_ms = spec.timing ? r.ca_ms : 0.0;

  const bool can_evaluate = std::any_of(
      r.assignment.cluster_of.begin(), r.assignment.cluster_of.end(),
      [&](const auto& e) { return p.labels.find(e.first) != nullptr; });
  if (can_evaluate) {
    r.table = contingency(r.assignment, p.labels);
    r.row.entropy = entropy(*r.table);
    r.row.fmeasure = f_measure(*r.table, EvalConfig{spec.beta});
  }
  r.grid_json = grid_state_json(r.run.grid, r.assignment);
  return r;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cli_service", "cannot write " + path.string());
  out << content;
}

inline void append_csv_row(const std::filesystem::path& path, const std::string& header,
                           const std::string& row) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(Errc::io_error, "cli_service", "cannot write " + path.string());
  if (fresh) out << header << '\n';
  out << row << '\n';
}

}  // namespace detail

inline nlohmann::json assignment_json(const ClusterAssignment& a) {
  nlohmann::json clusters = nlohmann::json::object();
  for (const auto& [doc, k] : a.cluster_of) clusters[std::to_string(doc)] = k;
  return {{"n_clusters", a.n_clusters}, {"cluster_of", clusters}, {"unplaced", a.unplaced}};
}

/// Writes grid.json, assignment.json and run.json and appends to metrics.csv.
inline void write_run_outputs(const std::filesystem::path& dir, const PreparedCorpus& p,
                              const PipelineResult& r, double total_ms) {
  std::filesystem::create_directories(dir);
  detail::write_text(dir / "grid.json", r.grid_json.dump(1) + "\n");
  detail::write_text(dir / "assignment.json", assignment_json(r.assignment).dump(1) + "\n");
  detail::append_csv_row(dir / "metrics.csv", MetricsRow::csv_header(), r.row.csv());
  nlohmann::json prov = {{"spec", r.spec.to_json()},
                         {"threshold", r.threshold},
                         {"degenerate_threshold", r.degenerate_threshold},
                         {"n_docs", p.corpus.size()},
                         {"vocabulary_size", p.weighted.n_terms()},
                         {"quarantined", p.quarantined},
                         {"unplaced", r.assignment.unplaced},
                         {"n_clusters", r.assignment.n_clusters}};
  if (p.reduction) {
    nlohmann::json red = p.reduction->to_json();
    red.erase("kept");
    prov["reduction"] = red;
  }
  if (r.spec.timing) prov["timing"] = {{"ca_ms", r.ca_ms}, {"total_ms", total_ms}};
  detail::write_text(dir / "run.json", prov.dump(1) + "\n");
}

struct PipelineOutput {
  PreparedCorpus prepared;
  PipelineResult result;
  double total_ms = 0.0;
};

inline PipelineOutput run_pipeline(const RunSpec& spec) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  PipelineOutput out;
  out.prepared = prepare(spec);
  const auto sim = similarity_for(out.prepared, spec);
  out.result = cluster_prepared(out.prepared, sim, spec);
  out.total_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  if (!spec.output.empty()) {
    write_run_outputs(spec.output, out.prepared, out.result, out.total_ms);
  }
  return out;
}

struct SweepRow {
  std::string distance;
  int level = 0;
  std::size_t n_clusters = 0;
  double time_ms = 0.0;
  std::optional<double> entropy;
  std::optional<double> fmeasure;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<MetricsRow> metrics;
};

/// Levels 1..10 for every distance; the corpus is prepared once and the
/// proximity matrix once per distance.
inline SweepResult run_sweep(const RunSpec& base, const std::vector<std::string>& distances) {
  RunSpec spec = base;
  spec.threshold.reset();
  spec.threshold_level = kMinLevel;
  for (const auto& d : distances) parse_metric(d, spec.minkowski_r);
  const auto prepared = prepare(spec);
  SweepResult out;
  for (const auto& d : distances) {
    spec.distance = d;
    const auto sim = similarity_for(prepared, spec);
    for (int level = kMinLevel; level <= kMaxLevel; ++level) {
      spec.threshold_level = level;
      const auto r = cluster_prepared(prepared, sim, spec);
      out.rows.push_back({r.row.distance, level, r.row.n_clusters, r.ca_ms, r.row.entropy,
                          r.row.fmeasure});
      out.metrics.push_back(r.row);
    }
  }
  if (!base.output.empty()) {
    std::filesystem::create_directories(base.output);
    std::string csv = MetricsRow::csv_header() + "\n";
    for (const auto& m : out.metrics) csv += m.csv() + "\n";
    detail::write_text(std::filesystem::path(base.output) / "sweep.csv", csv);
  }
  return out;
}

}  // namespace ca3d

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ca3d/ca3d.hpp"
#include "ca3d/service.hpp"

namespace {

// Options shared by every verb that runs the pipeline. Unset flags leave
// the spec-file (or default) value alone.
struct RunFlags {
  std::string spec_file;
  std::optional<std::string> corpus, format, labels, representation, tokenizer, reduction,
      distance, strategy, neighborhood, output;
  std::optional<std::size_t> n_docs, k;
  std::optional<int> ngram_n, level;
  std::optional<double> minkowski_r, threshold, beta;
  bool no_timing = false;

  void add_to(CLI::App& app, bool with_output) {
    app.add_option("--spec", spec_file, "Run spec JSON file")->check(CLI::ExistingFile);
    app.add_option("--corpus", corpus, "Corpus path (.sgm file or directory, .txt directory, corpus .json)");
    app.add_option("--format", format, "Corpus format")->check(CLI::IsMember({"sgml", "plaintext", "json"}));
    app.add_option("--labels", labels, "Labels file for plain-text corpora");
    app.add_option("--n-docs", n_docs, "Use only the first N documents");
    app.add_option("--representation", representation, "bag or ngram")
        ->check(CLI::IsMember({"bag", "ngram"}));
    app.add_option("--ngram", ngram_n, "Character n-gram length (2..5)")->check(CLI::Range(2, 5));
    app.add_option("--tokenizer", tokenizer, "Tokenizer config JSON");
    app.add_option("--reduction", reduction, "none, chi2 or infogain")
        ->check(CLI::IsMember({"none", "chi2", "infogain"}));
    app.add_option("-k,--k", k, "Terms kept per document (chi2) or in total (infogain)");
    app.add_option("--distance", distance, "cosine, euclidean, manhattan, minkowski, chebyshev, average, mahalanobis");
    app.add_option("--minkowski-r", minkowski_r, "Minkowski order r >= 1");
    app.add_option("--level", level, "Threshold level 1..10 (1 = tightest)")->check(CLI::Range(1, 10));
    app.add_option("--threshold", threshold, "Explicit similarity threshold in [0,1]")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--strategy", strategy, "neighborhood or linear")
        ->check(CLI::IsMember({"neighborhood", "linear"}));
    app.add_option("--neighborhood", neighborhood, "moore or von_neumann")
        ->check(CLI::IsMember({"moore", "von_neumann"}));
    app.add_option("--beta", beta, "F-measure beta");
    app.add_flag("--no-timing", no_timing, "Write time_ms as 0 so outputs are byte-reproducible");
    if (with_output) app.add_option("-o,--out", output, "Output directory");
  }

  ca3d::RunSpec resolve() const {
    ca3d::RunSpec s;
    if (!spec_file.empty()) {
      s = ca3d::RunSpec::from_json(nlohmann::json::parse(ca3d::read_file(spec_file)));
    }
    auto set = [](auto& target, const auto& flag) {
      if (flag) target = *flag;
    };
    set(s.corpus, corpus);
    set(s.format, format);
    set(s.labels, labels);
    set(s.n_docs, n_docs);
    set(s.representation, representation);
    set(s.ngram_n, ngram_n);
    set(s.tokenizer, tokenizer);
    set(s.reduction, reduction);
    set(s.k, k);
    set(s.distance, distance);
    set(s.minkowski_r, minkowski_r);
    set(s.strategy, strategy);
    set(s.neighborhood, neighborhood);
    set(s.beta, beta);
    set(s.output, output);
    if (ngram_n && !representation) s.representation = "ngram";
    if (level) {
      s.threshold_level = *level;
      s.threshold.reset();
    }
    if (threshold) {
      s.threshold = *threshold;
      s.threshold_level.reset();
    }
    if (no_timing) s.timing = false;
    s.validate();
    return s;
  }
};

std::string bind_address(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("CA3D_BIND"); env && *env) return env;
  return "127.0.0.1:8080";
}

int cmd_ingest(const std::string& input, const std::string& format, const std::string& labels,
               std::size_t n, const std::string& out) {
  ca3d::RunSpec s;
  s.corpus = input;
  s.format = format;
  s.labels = labels;
  s.n_docs = n;
  const auto corpus = ca3d::load_corpus(s);
  const auto text = ca3d::corpus_to_json(corpus).dump(1) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream(out, std::ios::binary) << text;
    std::cerr << "wrote " << corpus.size() << " documents to " << out << "\n";
  }
  return 0;
}

int cmd_cluster(const RunFlags& flags) {
  const auto spec = flags.resolve();
  if (spec.output.empty()) throw CLI::ValidationError("--out", "an output directory is required");
  const auto out = ca3d::run_pipeline(spec);
  const auto& r = out.result;
  std::cout << "clusters=" << r.assignment.n_clusters << " placed=" << r.run.grid.placed
            << " unplaced=" << r.assignment.unplaced.size() << " threshold=" << r.threshold;
  if (r.row.entropy) std::cout << " entropy=" << *r.row.entropy << " fmeasure=" << *r.row.fmeasure;
  std::cout << " -> " << spec.output << "\n";
  if (r.degenerate_threshold) std::cerr << "warning: all similarities are equal\n";
  return 0;
}

int cmd_sweep(const RunFlags& flags, const std::vector<std::string>& distances) {
  const auto spec = flags.resolve();
  const auto result = ca3d::run_sweep(spec, distances);
  std::cout << ca3d::MetricsRow::csv_header() << "\n";
  for (const auto& m : result.metrics) std::cout << m.csv() << "\n";
  return 0;
}

int cmd_export_grid(const RunFlags& flags, const std::string& out, const std::string& dump) {
  auto spec = flags.resolve();
  spec.output.clear();
  const auto prepared = ca3d::prepare(spec);
  const auto sim = ca3d::similarity_for(prepared, spec);
  const auto r = ca3d::cluster_prepared(prepared, sim, spec);
  const auto text = r.grid_json.dump(1) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream(out, std::ios::binary) << text;
  }
  if (!dump.empty()) {
    std::ofstream os(dump, std::ios::binary);
    ca3d::write_proximity(os, sim);
  }
  return 0;
}

int cmd_serve(const std::string& state_dir, const std::string& bind, const RunFlags& initial) {
  const auto address = bind_address(bind);
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) {
    throw CLI::ValidationError("--bind", "expected host:port, got " + address);
  }
  const auto host = address.substr(0, colon);
  const int port = std::stoi(address.substr(colon + 1));
  ca3d::Service service(state_dir);
  if (!initial.spec_file.empty() || initial.corpus) {
    const auto pub = service.submit(initial.resolve());
    std::cerr << "initial run " << pub->run_id << ": "
              << pub->output.result.assignment.n_clusters << " clusters\n";
  }
  std::cerr << "serving on " << host << ":" << port << "\n";
  if (!service.listen(host, port)) {
    std::cerr << "error: cannot bind " << address << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D cellular automaton text clustering"};
  app.require_subcommand(1);

  std::string in_path, in_format, in_labels, in_out;
  std::size_t in_n = 0;
  auto* ingest = app.add_subcommand("ingest", "Parse a corpus into corpus JSON");
  ingest->add_option("input", in_path, "Corpus path")->required();
  ingest->add_option("--format", in_format, "sgml, plaintext or json")
      ->check(CLI::IsMember({"sgml", "plaintext", "json"}));
  ingest->add_option("--labels", in_labels, "Labels file (plaintext)");
  ingest->add_option("--n-docs", in_n, "Keep only the first N documents");
  ingest->add_option("-o,--out", in_out, "Output file (default stdout)");

  RunFlags cluster_flags;
  auto* cluster = app.add_subcommand("cluster", "Run the full pipeline once");
  cluster_flags.add_to(*cluster, true);

  RunFlags sweep_flags;
  std::vector<std::string> distances{"cosine", "euclidean", "chebyshev"};
  auto* sweep = app.add_subcommand("sweep", "Threshold levels 1..10 for several distances");
  sweep_flags.add_to(*sweep, true);
  sweep->add_option("--distances", distances, "Distances to sweep")->delimiter(',');

  RunFlags serve_flags;
  std::string state_dir = "ca3d-state", bind;
  auto* serve = app.add_subcommand("serve", "HTTP service for the viewer");
  serve->add_option("--state-dir", state_dir, "Directory for run outputs");
  serve->add_option("--bind", bind, "host:port (default $CA3D_BIND or 127.0.0.1:8080)");
  serve_flags.add_to(*serve, false);

  RunFlags export_flags;
  std::string export_out, export_dump;
  auto* export_grid = app.add_subcommand("export-grid", "Print the grid-state JSON of a run");
  export_flags.add_to(*export_grid, false);
  export_grid->add_option("-o,--out", export_out, "Output file (default stdout)");
  export_grid->add_option("--proximity-dump", export_dump, "Also write the binary similarity matrix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(in_path, in_format, in_labels, in_n, in_out);
    if (*cluster) return cmd_cluster(cluster_flags);
    if (*sweep) return cmd_sweep(sweep_flags, distances);
    if (*serve) return cmd_serve(state_dir, bind, serve_flags);
    if (*export_grid) return cmd_export_grid(export_flags, export_out, export_dump);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const ca3d::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ca3d::Errc::invalid_argument ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

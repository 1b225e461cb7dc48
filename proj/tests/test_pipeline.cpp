#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "ca3d/ca3d.hpp"
#include "support.hpp"

using namespace ca3d;
namespace fs = std::filesystem;

namespace {

struct Exec {
  int status = -1;
  std::string out;
};

Exec run_cli(const std::string& args) {
  const std::string cmd = std::string(CA3D_CLI_PATH) + " " + args + " 2>&1";
  Exec e;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return e;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) e.out.append(buf, n);
  const int raw = ::pclose(pipe);
  e.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return e;
}

RunSpec spec_for(const fs::path& corpus_json) {
  RunSpec s;
  s.corpus = corpus_json.string();
  s.timing = false;
  return s;
}

fs::path write_corpus_json(const Corpus& c, const ca3d::testing::TempDir& dir,
                           const std::string& name) {
  const auto p = dir / name;
  ca3d::testing::write_file(p, corpus_to_json(c).dump());
  return p;
}

ProximityMatrix sim_of(std::vector<double> upper, std::size_t n) {
  ProximityMatrix pm;
  pm.kind = ProximityMatrix::Kind::similarity;
  pm.n = n;
  pm.values.assign(n * n, 1.0);
  std::size_t e = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pm.at(i, j) = pm.at(j, i) = upper[e++];
  }
  return pm;
}

}  // namespace

TEST(ResolveThreshold, LevelsSpanTheRange) {
  const auto sim = sim_of({0.2, 0.7, 0.4}, 3);
  EXPECT_NEAR(resolve_threshold(10, sim).value, 0.2, 1e-12);
  EXPECT_NEAR(resolve_threshold(1, sim).value, 0.2 + 0.9 * 0.5, 1e-12);
  EXPECT_NEAR(resolve_threshold(5, sim).value, 0.2 + 0.5 * 0.5, 1e-12);
  EXPECT_FALSE(resolve_threshold(5, sim).degenerate);
  for (int level = 2; level <= 10; ++level) {
    EXPECT_LT(resolve_threshold(level, sim).value, resolve_threshold(level - 1, sim).value);
  }
  EXPECT_THROW(resolve_threshold(0, sim), Error);
  EXPECT_THROW(resolve_threshold(11, sim), Error);
}

TEST(ResolveThreshold, Degenerate) {
  EXPECT_TRUE(resolve_threshold(3, sim_of({0.5, 0.5, 0.5}, 3)).degenerate);
  const auto one = resolve_threshold(3, sim_of({}, 1));
  EXPECT_TRUE(one.degenerate);
  EXPECT_EQ(one.value, 1.0);
}

TEST(RunSpec, JsonRoundTripAndValidation) {
  RunSpec s;
  s.corpus = "c.json";
  s.representation = "ngram";
  s.ngram_n = 4;
  s.reduction = "chi2";
  s.k = 7;
  s.distance = "minkowski";
  s.minkowski_r = 3;
  s.threshold = 0.25;
  s.neighborhood = "von_neumann";
  const auto back = RunSpec::from_json(s.to_json());
  EXPECT_EQ(back.to_json(), s.to_json());
  EXPECT_NO_THROW(back.validate());

  auto bad = [&](auto mutate) {
    RunSpec b = s;
    mutate(b);
    try {
      b.validate();
    } catch (const Error& e) {
      return e.code() == Errc::invalid_argument || e.code() == Errc::invalid_order;
    }
    return false;
  };
  EXPECT_TRUE(bad([](RunSpec& b) { b.corpus.clear(); }));
  EXPECT_TRUE(bad([](RunSpec& b) { b.ngram_n = 6; }));
  EXPECT_TRUE(bad([](RunSpec& b) { b.distance = "hamming"; }));
  EXPECT_TRUE(bad([](RunSpec& b) { b.minkowski_r = 0.5; }));
  EXPECT_TRUE(bad([](RunSpec& b) { b.threshold_level = 3; }));
  EXPECT_TRUE(bad([](RunSpec& b) { b.strategy = "spiral"; }));
  EXPECT_TRUE(bad([](RunSpec& b) { b.beta = 0; }));
  EXPECT_THROW(RunSpec::from_json(nlohmann::json::parse(R"({"k":"many"})")), Error);
}

TEST(Pipeline, SeparatedCorpusIsRecovered) {
  ca3d::testing::TempDir dir;
  const auto path = write_corpus_json(ca3d::testing::separated_corpus(), dir, "c.json");
  for (const std::string neighborhood : {"moore", "von_neumann"}) {
    auto spec = spec_for(path);
    spec.threshold_level = 5;
    spec.neighborhood = neighborhood;
    const auto out = run_pipeline(spec);
    EXPECT_EQ(out.result.assignment.n_clusters, 3u) << neighborhood;
    ASSERT_TRUE(out.result.row.entropy);
    EXPECT_NEAR(*out.result.row.entropy, 0.0, 1e-12);
    EXPECT_NEAR(*out.result.row.fmeasure, 1.0, 1e-12);
  }
}

TEST(Pipeline, ReductionsAndQuarantine) {
  auto corpus = ca3d::testing::separated_corpus();
  // Only words found in every other document: its TF-IDF vector is empty.
  auto docs = corpus.documents;
  for (auto& d : docs) d.body += " shared";
  docs.push_back(ca3d::testing::doc("shared shared", {"alpha"}));
  ca3d::testing::TempDir dir;
  const auto path = write_corpus_json(make_corpus("q", docs), dir, "q.json");
  for (const std::string reduction : {"none", "chi2", "infogain"}) {
    auto spec = spec_for(path);
    spec.reduction = reduction;
    // chi2 keeps k per document, infogain k overall.
    spec.k = reduction == "infogain" ? 21 : 3;
    const auto out = run_pipeline(spec);
    EXPECT_EQ(out.prepared.quarantined, (std::vector<DocId>{13})) << reduction;
    EXPECT_EQ(out.result.assignment.unplaced, (std::vector<DocId>{13}));
    EXPECT_EQ(out.result.run.grid.placed, 12u);
    EXPECT_EQ(out.prepared.reduction.has_value(), reduction != "none");
  }
}

TEST(Pipeline, AllDistancesRun) {
  ca3d::testing::TempDir dir;
  const auto path = write_corpus_json(ca3d::testing::separated_corpus(), dir, "c.json");
  for (const std::string d :
       {"cosine", "euclidean", "manhattan", "minkowski", "chebyshev", "average", "mahalanobis"}) {
    auto spec = spec_for(path);
    spec.distance = d;
    spec.minkowski_r = 3;
    const auto out = run_pipeline(spec);
    EXPECT_EQ(out.result.run.grid.placed, 12u) << d;
    EXPECT_GE(out.result.assignment.n_clusters, 1u);
  }
}

TEST(Pipeline, SweepIsMonotone) {
  ca3d::testing::TempDir dir;
  const auto path = write_corpus_json(ca3d::testing::grouped_corpus(), dir, "g.json");
  auto spec = spec_for(path);
  spec.output = (dir / "sweep").string();
  const auto result = run_sweep(spec, {"cosine", "euclidean", "chebyshev"});
  ASSERT_EQ(result.rows.size(), 30u);
  for (std::size_t d = 0; d < 3; ++d) {
    for (int level = 2; level <= 10; ++level) {
      const auto& prev = result.rows[d * 10 + level - 2];
      const auto& cur = result.rows[d * 10 + level - 1];
      EXPECT_EQ(cur.level, level);
      EXPECT_LE(cur.n_clusters, prev.n_clusters) << cur.distance << " level " << level;
    }
    EXPECT_GT(result.rows[d * 10].n_clusters, result.rows[d * 10 + 9].n_clusters);
  }
  const auto csv = ca3d::testing::slurp(dir / "sweep" / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 31);
}

TEST(Pipeline, OutputsAreWritten) {
  ca3d::testing::TempDir dir;
  const auto path = write_corpus_json(ca3d::testing::separated_corpus(), dir, "c.json");
  auto spec = spec_for(path);
  spec.output = (dir / "out").string();
  run_pipeline(spec);
  for (const auto* f : {"grid.json", "assignment.json", "run.json", "metrics.csv"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  }
  const auto grid = parse_grid_state(nlohmann::json::parse(ca3d::testing::slurp(dir / "out" / "grid.json")));
  EXPECT_EQ(grid.grid.placed, 12u);
  const auto run = nlohmann::json::parse(ca3d::testing::slurp(dir / "out" / "run.json"));
  EXPECT_FALSE(run.contains("timing"));
  EXPECT_EQ(run["spec"]["threshold_level"], 5);
  const auto csv = ca3d::testing::slurp(dir / "out" / "metrics.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), MetricsRow::csv_header());
  EXPECT_NE(csv.find("neighborhood-moore,12,bag,cosine,5,3,0.000,0.0000,100.0000"), std::string::npos)
      << csv;
}

TEST(Cli, EveryVerbHasHelp) {
  for (const auto* verb : {"ingest", "cluster", "sweep", "serve", "export-grid"}) {
    const auto r = run_cli(std::string(verb) + " --help");
    EXPECT_EQ(r.status, 0) << verb;
    EXPECT_NE(r.out.find("Usage"), std::string::npos) << r.out;
  }
  EXPECT_NE(run_cli("").status, 0);
}

TEST(Cli, IngestPlaintextAndSgml) {
  ca3d::testing::TempDir dir;
  ca3d::testing::write_plaintext(ca3d::testing::separated_corpus(), dir.path());
  const auto r = run_cli("ingest " + (dir / "docs").string() + " --labels " +
                         (dir / "labels.tsv").string() + " -o " + (dir / "c.json").string());
  ASSERT_EQ(r.status, 0) << r.out;
  const auto c = load_corpus_json(dir / "c.json");
  EXPECT_EQ(c.size(), 12u);
  EXPECT_EQ(c.documents[0].labels, (std::set<std::string>{"alpha"}));

  ca3d::testing::write_file(dir / "r" / "reut2-000.sgm", ca3d::testing::kReutersFixture);
  const auto s = run_cli("ingest " + (dir / "r").string() + " --n-docs 2");
  ASSERT_EQ(s.status, 0) << s.out;
  const auto j = nlohmann::json::parse(s.out);
  EXPECT_EQ(j["documents"].size(), 2u);
}

TEST(Cli, ClusterIsDeterministic) {
  ca3d::testing::TempDir dir;
  const auto path = write_corpus_json(ca3d::testing::grouped_corpus(), dir, "g.json");
  const std::string common = "cluster --corpus " + path.string() + " --level 4 --no-timing -o ";
  ASSERT_EQ(run_cli(common + (dir / "a").string()).status, 0);
  ASSERT_EQ(run_cli(common + (dir / "b").string()).status, 0);
  for (const auto* f : {"grid.json", "metrics.csv", "assignment.json"}) {
    EXPECT_EQ(ca3d::testing::slurp(dir / "a" / f), ca3d::testing::slurp(dir / "b" / f)) << f;
  }
}

TEST(Cli, SpecFileAndFlagPrecedence) {
  ca3d::testing::TempDir dir;
  const auto path = write_corpus_json(ca3d::testing::separated_corpus(), dir, "c.json");
  auto spec = spec_for(path);
  spec.distance = "euclidean";
  spec.threshold_level = 2;
  ca3d::testing::write_file(dir / "spec.json", spec.to_json().dump());
  const auto r = run_cli("cluster --spec " + (dir / "spec.json").string() + " --level 7 -o " +
                         (dir / "o").string());
  ASSERT_EQ(r.status, 0) << r.out;
  const auto run = nlohmann::json::parse(ca3d::testing::slurp(dir / "o" / "run.json"));
  EXPECT_EQ(run["spec"]["distance"], "euclidean");
  EXPECT_EQ(run["spec"]["threshold_level"], 7);
}

TEST(Cli, SweepAndExportGrid) {
  ca3d::testing::TempDir dir;
  const auto path = write_corpus_json(ca3d::testing::separated_corpus(), dir, "c.json");
  const auto sweep = run_cli("sweep --corpus " + path.string() + " --distances cosine,average");
  ASSERT_EQ(sweep.status, 0) << sweep.out;
  EXPECT_EQ(std::count(sweep.out.begin(), sweep.out.end(), '\n'), 21);

  const auto grid = run_cli("export-grid --corpus " + path.string() + " -o " +
                            (dir / "grid.json").string() + " --proximity-dump " +
                            (dir / "sim.bin").string());
  ASSERT_EQ(grid.status, 0) << grid.out;
  const auto state = parse_grid_state(nlohmann::json::parse(ca3d::testing::slurp(dir / "grid.json")));
  EXPECT_EQ(state.assignment.n_clusters, 3u);
  std::ifstream bin(dir / "sim.bin", std::ios::binary);
  const auto sim = read_proximity(bin);
  EXPECT_EQ(sim.n, 12u);
  EXPECT_EQ(sim.kind, ProximityMatrix::Kind::similarity);
}

TEST(Cli, ErrorsExitNonZero) {
  ca3d::testing::TempDir dir;
  EXPECT_EQ(run_cli("cluster --corpus " + (dir / "missing.json").string() + " -o " +
                    (dir / "o").string()).status, 1);
  const auto path = write_corpus_json(ca3d::testing::separated_corpus(), dir, "c.json");
  EXPECT_NE(run_cli("cluster --corpus " + path.string() + " --level 11 -o x").status, 0);
  const auto r = run_cli("cluster --corpus " + path.string() + " --distance hamming -o " +
                         (dir / "o").string());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.out.find("proximity"), std::string::npos) << r.out;
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ca3d/ca_engine.hpp"
#include "ca3d/error.hpp"
#include "ca3d/labels.hpp"

namespace ca3d {

struct EvalConfig {
  double beta = 1.0;
};

/// N_{i,k}: evaluated documents of class i in cluster k (column k − 1).
struct ContingencyTable {
  std::vector<std::string> classes;
  std::size_t n_clusters = 0;
  std::vector<std::vector<double>> counts;  // classes × clusters
  std::vector<double> cluster_sizes;        // N_k
  std::vector<double> class_sizes;          // N_{C_i}
  double total = 0;                         // N
  std::vector<DocId> excluded;              // unplaced or unlabeled

  std::size_t n_classes() const { return classes.size(); }

  /// Builds a table straight from counts; each column is a cluster and each
  /// document carries one class.
  static ContingencyTable from_counts(const std::vector<std::vector<double>>& counts) {
    ContingencyTable t;
    t.counts = counts;
    t.n_clusters = counts.empty() ? 0 : counts.front().size();
    t.cluster_sizes.assign(t.n_clusters, 0.0);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      t.classes.push_back("class" + std::to_string(i + 1));
      double row = 0;
      for (std::size_t k = 0; k < t.n_clusters; ++k) {
        row += counts[i][k];
        t.cluster_sizes[k] += counts[i][k];
      }
      t.class_sizes.push_back(row);
      t.total += row;
    }
    return t;
  }
};

inline ContingencyTable contingency(const ClusterAssignment& assignment,
                                    const ClassLabeling& labels) {
  ContingencyTable t;
  std::vector<std::pair<std::uint32_t, const std::set<std::string>*>> evaluated;
  for (const auto& [doc, cluster] : assignment.cluster_of) {
    const auto* ls = labels.find(doc);
    if (!ls || ls->empty()) {
      t.excluded.push_back(doc);
      continue;
    }
    evaluated.emplace_back(cluster, ls);
  }
  for (const auto& [doc, _] : labels.class_of) {
    if (!assignment.cluster_of.contains(doc)) t.excluded.push_back(doc);
  }
  std::sort(t.excluded.begin(), t.excluded.end());
  if (evaluated.empty()) {
    throw Error(Errc::empty_overlap, "evaluate",
                "no document is both clustered and labeled");
  }
  std::set<std::string> present;
  for (const auto& [_, ls] : evaluated) present.insert(ls->begin(), ls->end());
  t.classes.assign(present.begin(), present.end());
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < t.classes.size(); ++i) row_of[t.classes[i]] = i;

  std::uint32_t max_cluster = 0;
  for (const auto& [_, k] : assignment.cluster_of) max_cluster = std::max(max_cluster, k);
  t.n_clusters = std::max<std::size_t>(assignment.n_clusters, max_cluster);
  t.counts.assign(t.classes.size(), std::vector<double>(t.n_clusters, 0.0));
  t.cluster_sizes.assign(t.n_clusters, 0.0);
  t.class_sizes.assign(t.classes.size(), 0.0);
  for (const auto& [cluster, ls] : evaluated) {
    const std::size_t k = cluster - 1;
    t.cluster_sizes[k] += 1.0;
    for (const auto& name : *ls) {
      const auto i = row_of[name];
      t.counts[i][k] += 1.0;
      t.class_sizes[i] += 1.0;
    }
  }
  t.total = static_cast<double>(evaluated.size());
  return t;
}

/// N_{i,k} / N_k.
inline double precision(const ContingencyTable& t, std::size_t i, std::size_t k) {
  if (!(t.cluster_sizes.at(k) > 0.0)) {
    throw Error(Errc::empty_cluster, "evaluate", "cluster " + std::to_string(k + 1) + " is empty");
  }
  return t.counts.at(i).at(k) / t.cluster_sizes[k];
}

/// N_{i,k} / N_{C_i}.
inline double recall(const ContingencyTable& t, std::size_t i, std::size_t k) {
  if (!(t.class_sizes.at(i) > 0.0)) {
    throw Error(Errc::empty_class, "evaluate", "class " + t.classes.at(i) + " is empty");
  }
  return t.counts.at(i).at(k) / t.class_sizes[i];
}

/// E(p) = Σ_k (N_k/N) · (−Σ_i p_ik ln p_ik), with 0 · ln 0 = 0.
inline double entropy(const ContingencyTable& t) {
  if (!(t.total > 0.0)) throw Error(Errc::empty_overlap, "evaluate", "empty table");
  double e = 0.0;
  for (std::size_t k = 0; k < t.n_clusters; ++k) {
    if (!(t.cluster_sizes[k] > 0.0)) continue;
    double h = 0.0;
    for (std::size_t i = 0; i < t.n_classes(); ++i) {
      const double p = precision(t, i, k);
      if (p > 0.0) h -= p * std::log(p);
    }
    e += (t.cluster_sizes[k] / t.total) * h;
  }
  return e;
}

/// F(p) = Σ_i (N_{C_i}/N) · max_k (1+β)·r·p / (β·r + p).
inline double f_measure(const ContingencyTable& t, const EvalConfig& config = {}) {
  if (!(config.beta > 0.0)) {
    throw Error(Errc::invalid_argument, "evaluate", "beta must be positive");
  }
  if (!(t.total > 0.0)) throw Error(Errc::empty_overlap, "evaluate", "empty table");
  const double beta = config.beta;
  double f = 0.0;
  for (std::size_t i = 0; i < t.n_classes(); ++i) {
    double best = 0.0;
    for (std::size_t k = 0; k < t.n_clusters; ++k) {
      if (!(t.cluster_sizes[k] > 0.0)) continue;
      const double r = recall(t, i, k);
      const double p = precision(t, i, k);
      if (r == 0.0 && p == 0.0) continue;
      best = std::max(best, (1.0 + beta) * r * p / (beta * r + p));
    }
    f += (t.class_sizes[i] / t.total) * best;
  }
  return f;
}

/// Treats a clustering as a reference partition, one class per cluster.
inline ClassLabeling labeling_from_assignment(const ClusterAssignment& a) {
  ClassLabeling l;
  std::set<std::string> names;
  for (const auto& [doc, k] : a.cluster_of) {
    auto name = "cluster" + std::to_string(k);
    names.insert(name);
    l.class_of[doc] = {std::move(name)};
  }
  l.classes.assign(names.begin(), names.end());
  return l;
}

struct MetricsRow {
  std::string metric;
  std::size_t n_docs = 0;
  std::string representation;
  std::string distance;
  std::string threshold_level;
  std::size_t n_clusters = 0;
  double time_ms = 0.0;
  std::optional<double> entropy;
  std::optional<double> fmeasure;

  static std::string csv_header() {
    return "metric,n_docs,representation,distance,threshold_level,n_clusters,time_ms,"
           "entropy_pct,fmeasure_pct";
  }

  std::string csv() const {
    char num[64];
    std::string out = metric + ',' + std::to_string(n_docs) + ',' + representation + ',' +
                      distance + ',' + threshold_level + ',' + std::to_string(n_clusters) + ',';
    std::snprintf(num, sizeof num, "%.3f", time_ms);
    out += num;
    out += ',';
    if (entropy) {
      std::snprintf(num, sizeof num, "%.4f", *entropy * 100.0);
      out += num;
    }
    out += ',';
    if (fmeasure) {
      std::snprintf(num, sizeof num, "%.4f", *fmeasure * 100.0);
      out += num;
    }
    return out;
  }
};

}  // namespace ca3d

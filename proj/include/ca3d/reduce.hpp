#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ca3d/error.hpp"
#include "ca3d/labels.hpp"
#include "ca3d/represent.hpp"

namespace ca3d {

/// Relative frequencies of a term-document count matrix and the per-cell
/// contributions to its chi-square independence statistic.
class ChiSquareTable {
 public:
  ChiSquareTable() = default;

  explicit ChiSquareTable(const TermDocumentMatrix& matrix)
      : n_terms_(matrix.n_terms()), n_docs_(matrix.n_docs()) {
    for (const auto& col : matrix.columns) total_ += col.sum();
    if (!(total_ > 0.0)) {
      throw Error(Errc::empty_matrix, "reduce",
                  "chi-square needs at least one non-zero entry");
    }
    row_.assign(n_terms_, 0.0);
    col_.assign(n_docs_, 0.0);
    freq_.resize(n_docs_);
    for (std::size_t j = 0; j < n_docs_; ++j) {
      for (const auto& [t, count] : matrix.columns[j].entries) {
        const double f = count / total_;
        freq_[j].emplace_back(t, f);
        row_[t] += f;
        col_[j] += f;
      }
    }
  }

  std::size_t n_terms() const { return n_terms_; }
  std::size_t n_docs() const { return n_docs_; }
  /// N: sum of all occurrences.
  double total() const { return total_; }
  double row_marginal(TermIndex t) const { return row_[t]; }
  double col_marginal(std::size_t doc) const { return col_[doc]; }

  double frequency(TermIndex t, std::size_t doc) const {
    const auto& f = freq_[doc];
    const auto it = std::lower_bound(
        f.begin(), f.end(), t,
        [](const auto& e, TermIndex key) { return e.first < key; });
    return (it != f.end() && it->first == t) ? it->second : 0.0;
  }

  /// N·(f_ij − f_i.·f_.j)² / (f_i.·f_.j); zero when the expected mass is 0.
  double contribution(TermIndex t, std::size_t doc) const {
    return cell(frequency(t, doc), row_[t] * col_[doc]);
  }

  /// Contributions of the terms that occur in `doc`, by ascending term index.
  std::vector<std::pair<TermIndex, double>> present_contributions(
      std::size_t doc) const {
    std::vector<std::pair<TermIndex, double>> out;
    out.reserve(freq_[doc].size());
    for (const auto& [t, f] : freq_[doc]) {
      out.emplace_back(t, cell(f, row_[t] * col_[doc]));
    }
    return out;
  }

 private:
  double cell(double f, double expected) const {
    if (expected <= 0.0) return 0.0;
    const double d = f - expected;
    return total_ * d * d / expected;
  }

  std::size_t n_terms_ = 0;
  std::size_t n_docs_ = 0;
  double total_ = 0.0;
  std::vector<double> row_;
  std::vector<double> col_;
  std::vector<std::vector<std::pair<TermIndex, double>>> freq_;
};

inline ChiSquareTable chi2_contributions(const TermDocumentMatrix& matrix) {
  return ChiSquareTable(matrix);
}

struct ReductionReport {
  std::string mode;  // "chi2" | "infogain" | "none"
  std::size_t terms_before = 0;
  std::size_t terms_after = 0;
  std::vector<TermIndex> kept;  // ascending

  nlohmann::json to_json() const {
    return {{"mode", mode},
            {"terms_before", terms_before},
            {"terms_after", terms_after},
            {"kept", kept}};
  }

  static std::string csv_header() { return "mode,n,before,after"; }

  /// `ngram` is the n-gram length, 0 for bag of words.
  std::string csv_row(int ngram) const {
    std::ostringstream os;
    os << mode << ',' << ngram << ',' << terms_before << ',' << terms_after;
    return os.str();
  }
};

namespace detail {

inline ReductionReport make_report(std::string mode, std::size_t before,
                                   std::vector<TermIndex> kept) {
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  ReductionReport r;
  r.mode = std::move(mode);
  r.terms_before = before;
  r.terms_after = kept.size();
  r.kept = std::move(kept);
  return r;
}

// Descending score, ascending index on ties.
inline bool ranks_before(const std::pair<TermIndex, double>& a,
                         const std::pair<TermIndex, double>& b) {
  if (a.second != b.second) return a.second > b.second;
  return a.first < b.first;
}

inline double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace detail

/// Keeps, for every document, its `k_per_doc` occurring terms with the
/// largest contributions; the result is the union over documents.
inline ReductionReport chi2_select(const ChiSquareTable& table,
                                   std::size_t k_per_doc) {
  if (k_per_doc < 1) {
    throw Error(Errc::invalid_argument, "reduce", "k_per_doc must be >= 1");
  }
  std::vector<TermIndex> kept;
  for (std::size_t j = 0; j < table.n_docs(); ++j) {
    auto scores = table.present_contributions(j);
    const auto k = std::min(k_per_doc, scores.size());
    std::partial_sort(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(k),
                      scores.end(), detail::ranks_before);
    for (std::size_t r = 0; r < k; ++r) kept.push_back(scores[r].first);
  }
  return detail::make_report("chi2", table.n_terms(), std::move(kept));
}

/// Information gain of term presence with respect to reference classes.
/// A document with several classes counts 1/|classes| toward each.
class GainTable {
 public:
  std::size_t n_terms() const { return gains_.size(); }
  const std::vector<std::string>& classes() const { return classes_; }
  double gain(TermIndex t) const { return gains_[t]; }
  const std::vector<double>& gains() const { return gains_; }
  double class_prior(std::size_t c) const { return priors_[c]; }
  double class_entropy() const { return class_entropy_; }
  double pr_term(TermIndex t) const { return pr_term_[t]; }
  double pr_absent(TermIndex t) const { return 1.0 - pr_term_[t]; }

  double pr_class_given_term(TermIndex t, std::size_t c) const {
    const double with = with_count(t, c);
    const double docs = pr_term_[t] * n_docs_;
    return docs > 0.0 ? with / docs : 0.0;
  }

  double pr_class_given_absent(TermIndex t, std::size_t c) const {
    const double without = std::max(0.0, class_mass_[c] - with_count(t, c));
    const double docs = (1.0 - pr_term_[t]) * n_docs_;
    return docs > 0.0 ? without / docs : 0.0;
  }

 private:
  friend GainTable information_gain(const TermDocumentMatrix&,
                                    const ClassLabeling&);

  double with_count(TermIndex t, std::size_t c) const {
    for (const auto& [cls, w] : with_[t]) {
      if (cls == c) return w;
    }
    return 0.0;
  }

  double n_docs_ = 0.0;
  std::vector<std::string> classes_;
  std::vector<double> priors_;
  std::vector<double> class_mass_;
  double class_entropy_ = 0.0;
  std::vector<double> pr_term_;
  std::vector<std::vector<std::pair<std::size_t, double>>> with_;
  std::vector<double> gains_;
};

inline GainTable information_gain(const TermDocumentMatrix& matrix,
                                  const ClassLabeling& labels) {
  GainTable g;
  const std::size_t n = matrix.n_docs();
  if (n == 0) throw Error(Errc::empty_matrix, "reduce", "no documents");

  std::vector<const std::set<std::string>*> doc_labels(n);
  std::set<std::string> used;
  for (std::size_t j = 0; j < n; ++j) {
    doc_labels[j] = labels.find(matrix.columns[j].doc_id);
    if (!doc_labels[j] || doc_labels[j]->empty()) {
      throw Error(Errc::unlabeled_document, "reduce",
                  "document " + std::to_string(matrix.columns[j].doc_id) +
                      " has no reference class");
    }
    used.insert(doc_labels[j]->begin(), doc_labels[j]->end());
  }
  g.classes_.assign(used.begin(), used.end());
  std::map<std::string, std::size_t> class_index;
  for (std::size_t c = 0; c < g.classes_.size(); ++c) {
    class_index[g.classes_[c]] = c;
  }
  const std::size_t m = g.classes_.size();
  g.n_docs_ = static_cast<double>(n);
  g.class_mass_.assign(m, 0.0);

  // Fractional class weights per document.
  std::vector<std::vector<std::pair<std::size_t, double>>> weights(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double w = 1.0 / static_cast<double>(doc_labels[j]->size());
    for (const auto& name : *doc_labels[j]) {
      const auto c = class_index[name];
      weights[j].emplace_back(c, w);
      g.class_mass_[c] += w;
    }
  }
  g.priors_.resize(m);
  for (std::size_t c = 0; c < m; ++c) {
    g.priors_[c] = g.class_mass_[c] / g.n_docs_;
    g.class_entropy_ -= detail::xlogx(g.priors_[c]);
  }

  const std::size_t v = matrix.n_terms();
  std::vector<double> docs_with(v, 0.0);
  std::vector<std::map<std::size_t, double>> with(v);
  for (std::size_t j = 0; j < n; ++j) {
    for (const auto& [t, x] : matrix.columns[j].entries) {
      if (!(x > 0.0)) continue;
      docs_with[t] += 1.0;
      for (const auto& [c, w] : weights[j]) with[t][c] += w;
    }
  }

  g.pr_term_.resize(v);
  g.with_.resize(v);
  g.gains_.resize(v);
  for (std::size_t t = 0; t < v; ++t) {
    g.with_[t].assign(with[t].begin(), with[t].end());
    const double present = docs_with[t];
    const double absent = g.n_docs_ - present;
    g.pr_term_[t] = present / g.n_docs_;
    double h_present = 0.0;
    double h_absent = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const auto it = with[t].find(c);
      const double cw = it == with[t].end() ? 0.0 : it->second;
      if (present > 0.0) h_present += detail::xlogx(cw / present);
      if (absent > 0.0) {
        h_absent += detail::xlogx(std::max(0.0, g.class_mass_[c] - cw) / absent);
      }
    }
    const double gain = g.class_entropy_ + (present / g.n_docs_) * h_present +
                        (absent / g.n_docs_) * h_absent;
    g.gains_[t] = std::max(0.0, gain);
  }
  return g;
}

inline ReductionReport infogain_select(const GainTable& table, std::size_t k) {
  if (k < 1) throw Error(Errc::invalid_argument, "reduce", "k must be >= 1");
  std::vector<std::pair<TermIndex, double>> scores;
  scores.reserve(table.n_terms());
  for (std::size_t t = 0; t < table.n_terms(); ++t) {
    scores.emplace_back(static_cast<TermIndex>(t), table.gain(static_cast<TermIndex>(t)));
  }
  const auto keep = std::min(k, scores.size());
  std::partial_sort(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(keep),
                    scores.end(), detail::ranks_before);
  std::vector<TermIndex> kept;
  for (std::size_t r = 0; r < keep; ++r) kept.push_back(scores[r].first);
  return detail::make_report("infogain", table.n_terms(), std::move(kept));
}

struct Projection {
  TermDocumentMatrix matrix;
  std::vector<DocId> emptied;  // documents left without any kept term
};

/// Restricts the matrix to `kept` and re-indexes the vocabulary densely in
/// the original relative order. Document frequencies carry over.
inline Projection project(const TermDocumentMatrix& matrix,
                          std::vector<TermIndex> kept) {
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  if (!kept.empty() && kept.back() >= matrix.n_terms()) {
    throw Error(Errc::out_of_range, "reduce", "kept term index out of range");
  }
  constexpr TermIndex kDropped = ~TermIndex{0};
  std::vector<TermIndex> remap(matrix.n_terms(), kDropped);
  Projection p;
  for (const auto t : kept) {
    remap[t] = static_cast<TermIndex>(p.matrix.vocabulary.size());
    p.matrix.vocabulary.add(matrix.vocabulary.terms[t]);
    p.matrix.vocabulary.doc_frequency.back() = matrix.vocabulary.doc_frequency[t];
  }
  p.matrix.columns.reserve(matrix.n_docs());
  for (const auto& col : matrix.columns) {
    DocumentVector v;
    v.doc_id = col.doc_id;
    for (const auto& [t, w] : col.entries) {
      if (remap[t] != kDropped) v.entries.emplace_back(remap[t], w);
    }
    if (v.entries.empty()) p.emptied.push_back(col.doc_id);
    p.matrix.columns.push_back(std::move(v));
  }
  return p;
}

}  // namespace ca3d

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <future>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ca3d/error.hpp"
#include "ca3d/ingest.hpp"
#include "ca3d/stopwords.hpp"

namespace ca3d {

using TermIndex = std::uint32_t;

/// Term multiset that remembers first-appearance order.
class TermBag {
 public:
  void add(std::string_view term, std::size_t count = 1) {
    auto [it, inserted] = index_.try_emplace(std::string(term), entries_.size());
    if (inserted) entries_.emplace_back(std::string(term), 0);
    entries_[it->second].second += count;
    total_ += count;
  }

  std::size_t count(std::string_view term) const {
    const auto it = index_.find(std::string(term));
    return it == index_.end() ? 0 : entries_[it->second].second;
  }

  std::size_t distinct() const { return entries_.size(); }
  std::size_t total() const { return total_; }
  bool empty() const { return entries_.empty(); }

  const std::vector<std::pair<std::string, std::size_t>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::size_t>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t total_ = 0;
};

struct TokenizerConfig {
  std::unordered_set<std::string> stop_words;
  std::unordered_map<std::string, std::string> lemmas;

  static TokenizerConfig english() {
    TokenizerConfig c;
    for (auto w : kEnglishStopWords) c.stop_words.emplace(w);
    return c;
  }
};

/// Reads `{"stopwords": path, "lemmas": path}`. A missing `stopwords` key
/// keeps the built-in English list; `null` disables stop-word removal.
/// Stop-word files hold one word per line, lemma files `surface<TAB>lemma`.
inline TokenizerConfig load_tokenizer_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_argument, "represent",
                path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  TokenizerConfig c = TokenizerConfig::english();
  if (j.contains("stopwords")) {
    c.stop_words.clear();
    if (!j["stopwords"].is_null()) {
      std::istringstream in(read_file(resolve(j["stopwords"].get<std::string>())));
      std::string line;
      while (std::getline(in, line)) {
        auto w = text::trim(line);
        if (!w.empty()) c.stop_words.emplace(w);
      }
    }
  }
  if (j.contains("lemmas") && !j["lemmas"].is_null()) {
    std::istringstream in(read_file(resolve(j["lemmas"].get<std::string>())));
    std::string line;
    while (std::getline(in, line)) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) continue;
      auto surface = text::trim(std::string_view(line).substr(0, tab));
      auto lemma = text::trim(std::string_view(line).substr(tab + 1));
      if (!surface.empty() && !lemma.empty()) {
        c.lemmas.emplace(surface, lemma);
      }
    }
  }
  return c;
}

namespace detail {

struct CodePoint {
  std::uint32_t value;
  std::size_t length;
};

// Invalid sequences decode byte-by-byte.
inline CodePoint next_code_point(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) {
    return i + k < s.size() &&
           (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  auto byte = [&](std::size_t k) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(s[i + k]) & 0x3F);
  };
  if (b0 < 0x80) return {b0, 1};
  if ((b0 & 0xE0) == 0xC0 && cont(1)) return {((b0 & 0x1Fu) << 6) | byte(1), 2};
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    return {((b0 & 0x0Fu) << 12) | (byte(1) << 6) | byte(2), 3};
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    return {((b0 & 0x07u) << 18) | (byte(1) << 12) | (byte(2) << 6) | byte(3), 4};
  }
  return {b0, 1};
}

inline std::uint32_t to_lower(std::uint32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  return cp;
}

inline bool is_letter(std::uint32_t cp) {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (cp < 0xC0) return false;
  return cp != 0xD7 && cp != 0xF7;
}

inline bool is_space(std::uint32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' ||
         cp == '\v' || cp == 0xA0;
}

}  // namespace detail

/// Title and body joined by a newline; a plain body when the title is empty.
inline std::string document_text(const RawDocument& doc) {
  if (doc.title.empty()) return doc.body;
  return doc.title + "\n" + doc.body;
}

inline TermBag tokenize_bag_of_words(std::string_view text,
                                     const TokenizerConfig& config) {
  TermBag bag;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    if (!config.stop_words.contains(token)) {
      const auto lemma = config.lemmas.find(token);
      bag.add(lemma == config.lemmas.end() ? token : lemma->second);
    }
    token.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    const auto cp = detail::next_code_point(text, i);
    i += cp.length;
    if (detail::is_letter(cp.value)) {
      text::append_utf8(token, detail::to_lower(cp.value));
    } else {
      flush();
    }
  }
  flush();
  return bag;
}

inline TermBag tokenize_bag_of_words(const RawDocument& doc,
                                     const TokenizerConfig& config) {
  return tokenize_bag_of_words(document_text(doc), config);
}

/// Lowercases and collapses whitespace runs to one space (ends trimmed).
/// Returns the text as a sequence of UTF-8 encoded code points.
inline std::vector<std::string> normalize_for_ngrams(std::string_view text) {
  std::vector<std::string> out;
  bool pending_space = false;
  for (std::size_t i = 0; i < text.size();) {
    const auto cp = detail::next_code_point(text, i);
    i += cp.length;
    if (detail::is_space(cp.value)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.emplace_back(" ");
      pending_space = false;
    }
    std::string c;
    text::append_utf8(c, detail::to_lower(cp.value));
    out.push_back(std::move(c));
  }
  return out;
}

struct NgramBag {
  TermBag terms;
  bool too_short = false;
};

inline constexpr int kMinNgram = 2;
inline constexpr int kMaxNgram = 5;

inline NgramBag char_ngrams(std::string_view text, int n) {
  if (n < kMinNgram || n > kMaxNgram) {
    throw Error(Errc::invalid_argument, "represent",
                "n-gram length must be in 2..5, got " + std::to_string(n));
  }
  const auto chars = normalize_for_ngrams(text);
  NgramBag result;
  const auto width = static_cast<std::size_t>(n);
  if (chars.size() < width) {
    result.too_short = true;
    return result;
  }
  for (std::size_t i = 0; i + width <= chars.size(); ++i) {
    std::string gram;
    for (std::size_t k = 0; k < width; ++k) gram += chars[i + k];
    result.terms.add(gram);
  }
  return result;
}

struct Vocabulary {
  std::vector<std::string> terms;
  std::unordered_map<std::string, TermIndex> index;
  std::vector<std::uint32_t> doc_frequency;

  std::size_t size() const { return terms.size(); }

  TermIndex add(const std::string& term) {
    auto [it, inserted] =
        index.try_emplace(term, static_cast<TermIndex>(terms.size()));
    if (inserted) {
      terms.push_back(term);
      doc_frequency.push_back(0);
    }
    return it->second;
  }

  bool operator==(const Vocabulary& o) const {
    return terms == o.terms && doc_frequency == o.doc_frequency;
  }
};

/// Sparse column; entries sorted by term index, zero weights omitted.
struct DocumentVector {
  DocId doc_id = 0;
  std::vector<std::pair<TermIndex, double>> entries;

  double weight(TermIndex t) const {
    const auto it = std::lower_bound(
        entries.begin(), entries.end(), t,
        [](const auto& e, TermIndex key) { return e.first < key; });
    return (it != entries.end() && it->first == t) ? it->second : 0.0;
  }

  double sum() const {
    double s = 0;
    for (const auto& [_, w] : entries) s += w;
    return s;
  }

  double norm() const {
    double s = 0;
    for (const auto& [_, w] : entries) s += w * w;
    return std::sqrt(s);
  }

  bool empty() const { return entries.empty(); }
  bool operator==(const DocumentVector&) const = default;
};

struct TermDocumentMatrix {
  Vocabulary vocabulary;
  std::vector<DocumentVector> columns;

  std::size_t n_docs() const { return columns.size(); }
  std::size_t n_terms() const { return vocabulary.size(); }
  bool operator==(const TermDocumentMatrix&) const = default;
};

struct Representation {
  enum class Mode { bag_of_words, ngram };
  Mode mode = Mode::bag_of_words;
  int n = 3;
  TokenizerConfig tokenizer = TokenizerConfig::english();

  static Representation bag(TokenizerConfig tok = TokenizerConfig::english()) {
    return {Mode::bag_of_words, 0, std::move(tok)};
  }
  static Representation ngram(int n) {
    return {Mode::ngram, n, TokenizerConfig::english()};
  }

  std::string name() const {
    return mode == Mode::bag_of_words ? "bag" : "ngram" + std::to_string(n);
  }
};

inline TermBag represent_document(const RawDocument& doc,
                                  const Representation& rep) {
  if (rep.mode == Representation::Mode::bag_of_words) {
    return tokenize_bag_of_words(doc, rep.tokenizer);
  }
  return char_ngrams(document_text(doc), rep.n).terms;
}

/// Raw term-frequency matrix. Documents are counted concurrently; the
/// vocabulary is merged afterwards in corpus order, so term indices follow
/// first appearance.
inline TermDocumentMatrix build_matrix(const Corpus& corpus,
                                       const Representation& rep) {
  if (corpus.documents.empty()) {
    throw Error(Errc::empty_corpus, "represent", "build_matrix on empty corpus");
  }
  if (rep.mode == Representation::Mode::ngram &&
      (rep.n < kMinNgram || rep.n > kMaxNgram)) {
    throw Error(Errc::invalid_argument, "represent",
                "n-gram length must be in 2..5, got " + std::to_string(rep.n));
  }
  const std::size_t n = corpus.documents.size();
  std::vector<TermBag> bags(n);
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::future<void>> jobs;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    const std::size_t end = std::min(n, begin + chunk);
    jobs.push_back(std::async(std::launch::async, [&, begin, end] {
      for (std::size_t i = begin; i < end; ++i) {
        bags[i] = represent_document(corpus.documents[i], rep);
      }
    }));
  }
  for (auto& j : jobs) j.get();

  TermDocumentMatrix m;
  m.columns.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    DocumentVector col;
    col.doc_id = corpus.documents[i].doc_id;
    for (const auto& [term, count] : bags[i].entries()) {
      const auto t = m.vocabulary.add(term);
      ++m.vocabulary.doc_frequency[t];
      col.entries.emplace_back(t, static_cast<double>(count));
    }
    std::sort(col.entries.begin(), col.entries.end());
    m.columns.push_back(std::move(col));
  }
  return m;
}

/// TF · ln(N / n_i). Terms present in every document vanish.
inline TermDocumentMatrix apply_tfidf(const TermDocumentMatrix& matrix) {
  TermDocumentMatrix out;
  out.vocabulary = matrix.vocabulary;
  out.columns.reserve(matrix.columns.size());
  const double n_docs = static_cast<double>(matrix.n_docs());
  std::vector<double> idf(matrix.n_terms(), 0.0);
  for (std::size_t t = 0; t < idf.size(); ++t) {
    const auto df = matrix.vocabulary.doc_frequency[t];
    idf[t] = df == 0 ? 0.0 : std::log(n_docs / static_cast<double>(df));
  }
  for (const auto& col : matrix.columns) {
    DocumentVector v;
    v.doc_id = col.doc_id;
    for (const auto& [t, tf] : col.entries) {
      const double w = tf * idf[t];
      if (w > 0.0 && std::isfinite(w)) v.entries.emplace_back(t, w);
    }
    out.columns.push_back(std::move(v));
  }
  return out;
}

inline nlohmann::json matrix_to_json(const TermDocumentMatrix& m) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : m.columns) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [t, w] : c.entries) entries.push_back({t, w});
    cols.push_back({{"id", c.doc_id}, {"entries", std::move(entries)}});
  }
  return {{"vocabulary", m.vocabulary.terms},
          {"doc_frequency", m.vocabulary.doc_frequency},
          {"columns", std::move(cols)}};
}

}  // namespace ca3d

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ca3d/error.hpp"

namespace ca3d {

using DocId = std::uint32_t;

struct RawDocument {
  DocId doc_id = 0;
  std::string title;
  std::string body;
  std::set<std::string> labels;

  bool operator==(const RawDocument&) const = default;
};

struct Corpus {
  std::string name;
  std::vector<RawDocument> documents;
  std::set<std::string> label_universe;

  std::size_t size() const { return documents.size(); }
  bool operator==(const Corpus&) const = default;
};

namespace text {

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

/// Latin-1 bytes to UTF-8. C0 control bytes other than tab/newline/CR are
/// dropped; a NUL byte is not tolerated.
inline std::string latin1_to_utf8(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size() + bytes.size() / 8);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const auto b = static_cast<unsigned char>(bytes[i]);
    if (b == 0) {
      throw Error(Errc::encoding_error, "ingest",
                  "NUL byte at offset " + std::to_string(i));
    }
    if (b < 0x20 && b != '\t' && b != '\n' && b != '\r') continue;
    append_utf8(out, b);
  }
  return out;
}

inline std::string decode_entities(std::string_view s) {
  static const std::map<std::string, std::string, std::less<>> named = {
      {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}};
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    const auto semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back(s[i++]);
      continue;
    }
    const auto name = s.substr(i + 1, semi - i - 1);
    if (!name.empty() && name[0] == '#') {
      std::uint32_t cp = 0;
      bool ok = name.size() > 1;
      const bool hex = ok && (name[1] == 'x' || name[1] == 'X');
      for (std::size_t k = hex ? 2 : 1; ok && k < name.size(); ++k) {
        const char c = name[k];
        int digit = -1;
        if (c >= '0' && c <= '9') digit = c - '0';
        else if (hex && c >= 'a' && c <= 'f') digit = c - 'a' + 10;
        else if (hex && c >= 'A' && c <= 'F') digit = c - 'A' + 10;
        if (digit < 0 || cp > 0x10FFFF) ok = false;
        else cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(digit);
      }
      if (ok && hex && name.size() == 2) ok = false;
      if (ok && cp <= 0x10FFFF) {
        if (cp >= 0x20 || cp == '\t' || cp == '\n' || cp == '\r') {
          append_utf8(out, cp);
        }
        i = semi + 1;
        continue;
      }
    } else if (auto it = named.find(name); it != named.end()) {
      out += it->second;
      i = semi + 1;
      continue;
    }
    out.push_back(s[i++]);
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace text

namespace detail {

inline bool iequal_ascii(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto lower = [](char c) {
      return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    };
    if (lower(a[i]) != lower(b[i])) return false;
  }
  return true;
}

struct TagPos {
  std::size_t begin = std::string_view::npos;  // position of '<'
  std::size_t end = std::string_view::npos;    // one past '>'
  bool found() const { return begin != std::string_view::npos; }
};

// Finds `<name ...>` (closing = false) or `</name>` (closing = true),
// case-insensitively. An unterminated tag extends to the end of input.
inline TagPos find_tag(std::string_view s, std::string_view name,
                       std::size_t from, bool closing) {
  const std::size_t prefix = closing ? 2 : 1;
  for (auto p = s.find('<', from); p != std::string_view::npos;
       p = s.find('<', p + 1)) {
    if (closing && (p + 1 >= s.size() || s[p + 1] != '/')) continue;
    if (!closing && p + 1 < s.size() && s[p + 1] == '/') continue;
    if (p + prefix + name.size() > s.size()) return {};
    if (!iequal_ascii(s.substr(p + prefix, name.size()), name)) continue;
    const auto after = p + prefix + name.size();
    if (after < s.size() && s[after] != '>' && s[after] != ' ' &&
        s[after] != '\t' && s[after] != '\n' && s[after] != '\r') {
      continue;
    }
    const auto gt = s.find('>', after);
    return {p, gt == std::string_view::npos ? s.size() : gt + 1};
  }
  return {};
}

// Inner text of the first <name>…</name> in s; absent → nullopt-like empty
// with `present` false. A missing close tag runs to the end of s.
inline std::string_view element_inner(std::string_view s, std::string_view name,
                                      bool* present = nullptr) {
  const auto open = find_tag(s, name, 0, false);
  if (present) *present = open.found();
  if (!open.found()) return {};
  const auto close = find_tag(s, name, open.end, true);
  const auto stop = close.found() ? close.begin : s.size();
  return s.substr(open.end, stop - open.end);
}

}  // namespace detail

inline std::set<std::string> label_union(const std::vector<RawDocument>& docs) {
  std::set<std::string> all;
  for (const auto& d : docs) all.insert(d.labels.begin(), d.labels.end());
  return all;
}

/// Builds a corpus with doc ids renumbered 1..n in the given order.
inline Corpus make_corpus(std::string name, std::vector<RawDocument> docs) {
  for (std::size_t i = 0; i < docs.size(); ++i) {
    docs[i].doc_id = static_cast<DocId>(i + 1);
  }
  Corpus c;
  c.name = std::move(name);
  c.label_universe = label_union(docs);
  c.documents = std::move(docs);
  return c;
}

/// Parses one Reuters-21578 `.sgm` file. TOPICS `<D>` entries become labels;
/// PLACES, PEOPLE, ORGS and other tags are ignored.
inline std::vector<RawDocument> parse_reuters_sgml(std::string_view bytes) {
  const std::string decoded = text::latin1_to_utf8(bytes);
  const std::string_view s = decoded;

  std::vector<RawDocument> docs;
  std::size_t pos = 0;
  while (true) {
    const auto open = detail::find_tag(s, "REUTERS", pos, false);
    if (!open.found()) break;
    const auto close = detail::find_tag(s, "REUTERS", open.end, true);
    const auto next = detail::find_tag(s, "REUTERS", open.end, false);
    std::size_t stop = s.size();
    if (close.found()) stop = close.begin;
    if (next.found() && next.begin < stop) stop = next.begin;
    const auto element = s.substr(open.end, stop - open.end);

    RawDocument doc;
    doc.doc_id = static_cast<DocId>(docs.size() + 1);
    doc.title = std::string(text::trim(
        text::decode_entities(detail::element_inner(element, "TITLE"))));
    doc.body = std::string(text::trim(
        text::decode_entities(detail::element_inner(element, "BODY"))));
    const auto topics = detail::element_inner(element, "TOPICS");
    for (std::size_t p = 0;;) {
      const auto d_open = detail::find_tag(topics, "D", p, false);
      if (!d_open.found()) break;
      const auto d_close = detail::find_tag(topics, "D", d_open.end, true);
      const auto d_stop = d_close.found() ? d_close.begin : topics.size();
      auto label = std::string(text::trim(text::decode_entities(
          topics.substr(d_open.end, d_stop - d_open.end))));
      if (!label.empty()) doc.labels.insert(std::move(label));
      p = d_close.found() ? d_close.end : topics.size();
    }
    docs.push_back(std::move(doc));

    pos = (close.found() && close.begin == stop) ? close.end : stop;
    if (pos >= s.size()) break;
  }
  if (docs.empty()) {
    throw Error(Errc::malformed_sgml, "ingest", "no REUTERS element found");
  }
  return docs;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::io_error, "ingest", "cannot read " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Loads one `.sgm` file, or every `.sgm` file of a directory in
/// lexicographic filename order. Files are parsed concurrently; the merge
/// keeps file order.
inline Corpus load_reuters(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".sgm") {
        files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  if (files.empty()) {
    throw Error(Errc::empty_corpus, "ingest",
                "no .sgm files in " + path.string());
  }
  std::vector<std::future<std::vector<RawDocument>>> parts;
  parts.reserve(files.size());
  for (const auto& f : files) {
    parts.push_back(std::async(std::launch::async, [f] {
      return parse_reuters_sgml(read_file(f));
    }));
  }
  std::vector<RawDocument> all;
  for (auto& part : parts) {
    auto docs = part.get();
    std::move(docs.begin(), docs.end(), std::back_inserter(all));
  }
  return make_corpus(path.stem().string(), std::move(all));
}

/// Reads a labels file: one `filename<TAB>label1,label2` line per document.
inline std::map<std::string, std::set<std::string>> read_labels_file(
    const std::filesystem::path& path) {
  std::map<std::string, std::set<std::string>> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    const auto name = std::string(text::trim(line.substr(0, tab)));
    auto& labels = out[name];
    if (tab == std::string::npos) continue;
    std::string_view rest = std::string_view(line).substr(tab + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = text::trim(rest.substr(0, comma));
      if (!item.empty()) labels.insert(std::string(item));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  return out;
}

/// One `.txt` file per document, ordered by filename. Titles are left
/// empty; the whole file is the body.
inline Corpus load_plaintext_corpus(
    const std::filesystem::path& directory,
    const std::filesystem::path& labels_file = {}) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory)) {
    throw Error(Errc::io_error, "ingest",
                directory.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(directory)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") {
      files.push_back(e.path());
    }
  }
  if (files.empty()) {
    throw Error(Errc::empty_corpus, "ingest",
                "no .txt files in " + directory.string());
  }
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) {
    return a.filename().string() < b.filename().string();
  });

  std::map<std::string, std::set<std::string>> labels;
  const bool labeled = !labels_file.empty();
  if (labeled) labels = read_labels_file(labels_file);

  std::vector<RawDocument> docs;
  docs.reserve(files.size());
  for (const auto& f : files) {
    RawDocument d;
    d.body = text::latin1_to_utf8(read_file(f));
    if (labeled) {
      const auto it = labels.find(f.filename().string());
      if (it == labels.end()) {
        throw Error(Errc::missing_label, "ingest",
                    "no labels for " + f.filename().string());
      }
      d.labels = it->second;
    }
    docs.push_back(std::move(d));
  }
  return make_corpus(directory.filename().string(), std::move(docs));
}

inline Corpus select_first_n(const Corpus& corpus, std::size_t n) {
  if (n < 1 || n > corpus.size()) {
    throw Error(Errc::out_of_range, "ingest",
                "select_first_n: n=" + std::to_string(n) + " outside 1.." +
                    std::to_string(corpus.size()));
  }
  std::vector<RawDocument> docs(corpus.documents.begin(),
                                corpus.documents.begin() +
                                    static_cast<std::ptrdiff_t>(n));
  return make_corpus(corpus.name, std::move(docs));
}

inline nlohmann::json corpus_to_json(const Corpus& corpus) {
  nlohmann::json docs = nlohmann::json::array();
  for (const auto& d : corpus.documents) {
    docs.push_back({{"id", d.doc_id},
                    {"title", d.title},
                    {"body", d.body},
                    {"labels", d.labels}});
  }
  return {{"name", corpus.name}, {"documents", std::move(docs)}};
}

inline Corpus corpus_from_json(const nlohmann::json& j) {
  Corpus c;
  try {
    c.name = j.value("name", std::string{});
    for (const auto& d : j.at("documents")) {
      RawDocument doc;
      doc.doc_id = d.at("id").get<DocId>();
      doc.title = d.value("title", std::string{});
      doc.body = d.value("body", std::string{});
      if (d.contains("labels")) {
        doc.labels = d.at("labels").get<std::set<std::string>>();
      }
      c.documents.push_back(std::move(doc));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_argument, "ingest",
                std::string("corpus JSON: ") + e.what());
  }
  for (std::size_t i = 0; i < c.documents.size(); ++i) {
    if (c.documents[i].doc_id != i + 1) {
      throw Error(Errc::invalid_argument, "ingest",
                  "corpus JSON ids must be 1..n in order");
    }
  }
  c.label_universe = label_union(c.documents);
  return c;
}

inline Corpus load_corpus_json(const std::filesystem::path& path) {
  try {
    return corpus_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::invalid_argument, "ingest",
                path.string() + ": " + e.what());
  }
}

}  // namespace ca3d

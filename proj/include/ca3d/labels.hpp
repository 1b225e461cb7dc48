#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ca3d/ingest.hpp"

namespace ca3d {

/// Reference classes per document. Only documents with at least one class
/// are recorded.
struct ClassLabeling {
  std::map<DocId, std::set<std::string>> class_of;
  std::vector<std::string> classes;

  bool empty() const { return class_of.empty(); }

  const std::set<std::string>* find(DocId id) const {
    const auto it = class_of.find(id);
    return it == class_of.end() ? nullptr : &it->second;
  }

  void assign(DocId id, std::set<std::string> labels) {
    if (labels.empty()) return;
    class_of[id] = std::move(labels);
    std::set<std::string> all;
    for (const auto& [_, ls] : class_of) all.insert(ls.begin(), ls.end());
    classes.assign(all.begin(), all.end());
  }

  static ClassLabeling from_corpus(const Corpus& corpus) {
    ClassLabeling l;
    std::set<std::string> all;
    for (const auto& d : corpus.documents) {
      if (d.labels.empty()) continue;
      l.class_of[d.doc_id] = d.labels;
      all.insert(d.labels.begin(), d.labels.end());
    }
    l.classes.assign(all.begin(), all.end());
    return l;
  }
};

}  // namespace ca3d

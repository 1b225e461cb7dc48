#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "ca3d/ingest.hpp"

namespace ca3d::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "ca3d") {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << content;
}

inline std::string slurp(const std::filesystem::path& p) { return read_file(p); }

inline RawDocument doc(std::string body, std::set<std::string> labels) {
  RawDocument d;
  d.body = std::move(body);
  d.labels = std::move(labels);
  return d;
}

/// Twelve documents in three topical groups with disjoint vocabularies,
/// presented interleaved (alpha, beta, gamma, alpha, ...).
inline Corpus separated_corpus() {
  const std::vector<std::vector<std::string>> groups = {
      {"apple banana cherry grape apple banana lemon",
       "banana apple cherry mango apple cherry",
       "cherry apple banana grape banana lemon mango",
       "apple cherry banana lemon grape apple"},
      {"engine piston turbine gearbox engine piston axle",
       "piston engine turbine clutch engine turbine",
       "turbine engine piston gearbox piston axle clutch",
       "engine turbine piston axle gearbox engine"},
      {"river ocean glacier delta river ocean lagoon",
       "ocean river glacier estuary river glacier",
       "glacier river ocean delta ocean lagoon estuary",
       "river glacier ocean lagoon delta river"},
  };
  const std::vector<std::string> names = {"alpha", "beta", "gamma"};
  std::vector<RawDocument> docs;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t g = 0; g < 3; ++g) docs.push_back(doc(groups[g][i], {names[g]}));
  }
  return make_corpus("separated", std::move(docs));
}

/// Thirty documents, ten per group, interleaved. Each row holds the term
/// counts over three group vocabularies and a shared background vocabulary.
/// Counts were tuned so that every pairwise similarity is distinct under the
/// cosine, euclidean and chebyshev metrics on tf-idf weights.
inline Corpus grouped_corpus() {
  const std::vector<std::string> words = {
      "apple",  "banana", "cherry",  "grape",   "lemon",  "mango",   "peach", "plum",
      "engine", "piston", "turbine", "gearbox", "clutch", "axle",    "valve", "rotor",
      "river",  "ocean",  "glacier", "delta",   "lagoon", "estuary", "fjord", "marsh",
      "report", "market", "season",  "region",  "output", "weekly"};
  static const int counts[30][30] = {
      {1604, 1961, 1961, 675, 329, 228, 1423, 795, 0, 0, 0, 0, 137, 0, 226, 286, 53, 0, 0, 0, 0, 0, 141, 146, 0, 0, 111, 0, 0, 55},
      {84, 0, 0, 0, 0, 0, 1, 0, 1629, 1534, 1107, 1342, 666, 202, 991, 1144, 0, 1, 1, 49, 1, 1, 0, 285, 1, 200, 0, 93, 29, 1},
      {0, 1, 1, 1, 1, 1, 135, 1, 1, 1, 5, 1, 1, 5, 0, 0, 871, 698, 516, 1491, 1616, 324, 1051, 970, 223, 248, 1, 54, 140, 65},
      {1294, 1256, 430, 1246, 438, 1180, 505, 1431, 2, 161, 7, 3, 80, 13, 1, 4, 1, 2, 1, 8, 201, 2, 1, 213, 85, 1, 248, 1, 1, 1},
      {1, 4, 210, 2, 66, 178, 1, 2, 1193, 1695, 637, 1589, 831, 1775, 1753, 699, 136, 3, 203, 223, 126, 159, 162, 154, 2, 58, 119, 1, 1, 250},
      {238, 71, 2, 284, 1, 116, 2, 3, 1, 155, 285, 1, 136, 3, 1, 45, 266, 964, 1297, 2045, 1499, 1570, 1659, 643, 205, 270, 200, 32, 1, 0},
      {1416, 1614, 1217, 1245, 767, 1332, 1991, 958, 3, 2, 191, 95, 2, 14, 2, 5, 216, 4, 2, 227, 1, 3, 2, 74, 1, 1, 221, 107, 1, 99},
      {1, 5, 64, 1, 2, 1, 11, 4, 1820, 1893, 442, 1892, 277, 1491, 1517, 1788, 32, 254, 1, 15, 286, 192, 1, 1, 230, 1, 211, 301, 20, 1},
      {1, 6, 6, 5, 5, 1, 263, 5, 41, 5, 153, 5, 121, 118, 1, 210, 386, 1155, 769, 1362, 270, 1547, 1689, 1364, 1, 104, 1, 13, 2, 1},
      {1713, 1549, 1183, 1119, 250, 731, 1523, 313, 3, 6, 8, 49, 1, 25, 2, 6, 85, 7, 1, 16, 1, 4, 1, 2, 193, 1, 280, 2, 194, 302},
      {292, 290, 7, 109, 6, 1, 11, 7, 1609, 694, 801, 635, 1147, 1666, 252, 877, 1, 22, 1, 18, 106, 5, 3, 1, 3, 223, 1, 2, 1, 33},
      {1, 8, 8, 6, 12, 1, 212, 6, 1, 11, 13, 183, 1, 30, 4, 10, 784, 869, 1098, 602, 1433, 1730, 1079, 943, 1, 284, 104, 20, 3, 1},
      {1461, 500, 861, 1746, 1612, 1541, 1108, 1319, 1, 8, 73, 9, 1, 31, 284, 11, 1, 31, 1, 21, 282, 290, 1, 1, 245, 1, 1, 156, 1, 242},
      {2, 9, 9, 190, 276, 1, 145, 8, 648, 433, 1323, 1058, 454, 842, 1665, 1252, 1, 11, 1, 22, 98, 183, 4, 162, 4, 1, 1, 177, 69, 115},
      {3, 10, 123, 7, 138, 1, 12, 10, 4, 9, 14, 14, 3, 236, 222, 12, 729, 691, 985, 1609, 211, 431, 1122, 1631, 32, 1, 202, 1, 63, 294},
      {1606, 803, 930, 329, 1521, 1156, 1622, 823, 5, 14, 15, 263, 1, 34, 7, 14, 81, 220, 1, 132, 21, 7, 7, 80, 156, 1, 108, 1, 107, 286},
      {4, 17, 167, 8, 10, 125, 13, 13, 1277, 1574, 325, 477, 1705, 606, 1418, 690, 1, 221, 3, 28, 296, 10, 20, 1, 297, 281, 1, 223, 1, 1},
      {80, 18, 19, 235, 172, 48, 14, 153, 6, 242, 22, 15, 46, 40, 57, 15, 510, 409, 1121, 890, 362, 1562, 381, 902, 250, 1, 1, 248, 221, 1},
      {1208, 1496, 911, 1234, 1907, 713, 712, 811, 1, 9, 166, 11, 1, 41, 48, 1, 91, 9, 292, 29, 91, 1, 94, 1, 2, 221, 20, 3, 64, 163},
      {1, 19, 131, 1, 149, 61, 15, 14, 1497, 1636, 1164, 1803, 1099, 1136, 1612, 1576, 1, 191, 14, 31, 1, 8, 74, 1, 1, 240, 149, 217, 2, 123},
      {96, 78, 20, 1, 142, 1, 220, 20, 130, 109, 26, 6, 1, 42, 257, 16, 704, 1460, 353, 1949, 1236, 1313, 738, 1979, 0, 174, 0, 82, 0, 1},
      {1119, 1576, 761, 295, 756, 866, 1508, 2138, 1, 1, 20, 1, 1, 127, 1, 1, 1, 1, 1, 1, 89, 86, 1, 1, 68, 258, 119, 0, 0, 263},
      {1, 17, 229, 166, 9, 163, 243, 21, 1341, 738, 668, 525, 1361, 2060, 1584, 1225, 137, 1, 1, 28, 1, 1, 1, 1, 65, 216, 258, 226, 244, 153},
      {6, 21, 25, 9, 13, 1, 17, 18, 1, 19, 47, 16, 4, 43, 8, 17, 1277, 1702, 1415, 951, 989, 1084, 536, 807, 0, 0, 1, 1, 120, 0},
      {631, 1909, 2096, 1120, 937, 1391, 1829, 489, 1, 1, 1, 57, 1, 44, 1, 1, 72, 193, 1, 1, 163, 299, 141, 1, 0, 112, 0, 288, 0, 118},
      {43, 22, 31, 272, 14, 1, 16, 36, 730, 676, 1645, 1591, 1750, 1046, 601, 1840, 223, 1, 1, 235, 270, 1, 124, 168, 25, 1, 106, 2, 0, 36},
      {4, 23, 38, 1, 89, 159, 16, 59, 38, 18, 154, 17, 67, 45, 267, 19, 314, 1810, 1045, 652, 414, 1759, 1765, 1272, 206, 1, 296, 182, 256, 273},
      {509, 1048, 366, 642, 1562, 751, 471, 1403, 7, 20, 21, 296, 31, 47, 11, 20, 1, 18, 8, 34, 2, 291, 209, 1, 240, 0, 63, 0, 35, 0},
      {151, 24, 46, 1, 15, 1, 282, 227, 1812, 1161, 2001, 960, 1054, 1741, 1224, 1233, 1, 186, 1, 35, 1, 294, 101, 1, 177, 4, 26, 117, 1, 39},
      {7, 62, 26, 10, 16, 238, 16, 146, 8, 268, 24, 19, 184, 48, 19, 21, 718, 582, 1566, 599, 884, 823, 1201, 1012, 1, 1, 0, 0, 22, 1}};
  const std::vector<std::string> names = {"fruit", "machine", "water"};
  std::vector<RawDocument> docs;
  for (std::size_t d = 0; d < 30; ++d) {
    std::string body;
    for (std::size_t t = 0; t < words.size(); ++t) {
      for (int c = counts[d][t]; c > 0; --c) body += words[t] + " ";
    }
    docs.push_back(doc(std::move(body), {names[d % 3]}));
  }
  return make_corpus("grouped", std::move(docs));
}

/// Writes one `.txt` file per document plus `labels.tsv`.
inline void write_plaintext(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "docs");
  std::string labels;
  for (const auto& d : corpus.documents) {
    char name[32];
    std::snprintf(name, sizeof name, "doc%03u.txt", d.doc_id);
    write_file(dir / "docs" / name, d.body);
    labels += name;
    labels += '\t';
    bool first = true;
    for (const auto& l : d.labels) {
      if (!first) labels += ',';
      labels += l;
      first = false;
    }
    labels += '\n';
  }
  write_file(dir / "labels.tsv", labels);
}

/// Three Reuters-style documents; the second is multi-label, the third has no BODY
/// and no topics.
inline const char* kReutersFixture = R"(<!DOCTYPE lewis SYSTEM "lewis.dtd">
<REUTERS TOPICS="YES" LEWISSPLIT="TRAIN" CGISPLIT="TRAINING-SET" OLDID="5544" NEWID="1">
<DATE>26-FEB-1987 15:01:01.79</DATE>
<TOPICS><D>cocoa</D></TOPICS>
<PLACES><D>el-salvador</D><D>usa</D></PLACES>
<PEOPLE></PEOPLE>
<ORGS></ORGS>
<TEXT>&#2;
<TITLE>BAHIA COCOA REVIEW</TITLE>
<DATELINE>    SALVADOR, Feb 26 - </DATELINE><BODY>Showers continued throughout the week in
the Bahia cocoa zone &amp; alleviating the drought.
 Reuter
&#3;</BODY></TEXT>
</REUTERS>
<REUTERS TOPICS="YES" LEWISSPLIT="TRAIN" CGISPLIT="TRAINING-SET" OLDID="5545" NEWID="2">
<DATE>26-FEB-1987 15:02:20.00</DATE>
<TOPICS><D>grain</D><D>wheat</D></TOPICS>
<PLACES><D>usa</D></PLACES>
<TEXT>&#2;
<TITLE>U.S. WHEAT &lt;EXPORTS&gt; RISE</TITLE>
<BODY>Wheat exports rose 5 pct, the department said.</BODY></TEXT>
</REUTERS>
<REUTERS TOPICS="NO" LEWISSPLIT="TRAIN" CGISPLIT="TRAINING-SET" OLDID="5546" NEWID="3">
<DATE>26-FEB-1987 15:03:27.51</DATE>
<TOPICS></TOPICS>
<UNKNOWN>ignored</UNKNOWN>
<TEXT TYPE="BRIEF">&#2;
<TITLE>BRIEF NOTE</TITLE>
</TEXT>
</REUTERS>
)";

}  // namespace ca3d::testing

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ca3d/error.hpp"
#include "ca3d/ingest.hpp"
#include "ca3d/proximity.hpp"

namespace ca3d {

/// Cell encoding: 0 dead, −1 alive, −2 isolated, k ≥ 1 active holding
/// document k.
using CellCode = std::int32_t;
inline constexpr CellCode kDead = 0;
inline constexpr CellCode kAlive = -1;
inline constexpr CellCode kIsolated = -2;

inline bool is_active(CellCode c) { return c > 0; }

inline std::string_view state_name(CellCode c) {
  if (c == kDead) return "dead";
  if (c == kAlive) return "alive";
  if (c == kIsolated) return "isolated";
  return "active";
}

struct CellCoord {
  std::size_t i = 0, j = 0, k = 0;
  bool operator==(const CellCoord&) const = default;
};

struct Grid {
  std::size_t side = 0;
  std::vector<CellCode> cells;      // flat, (i, j, k) → i·s² + j·s + k
  std::vector<std::uint32_t> regions;  // placement region per active cell, else 0
  std::size_t placed = 0;

  Grid() = default;
  explicit Grid(std::size_t s) : side(s), cells(s * s * s, kDead), regions(s * s * s, 0) {}

  std::size_t volume() const { return cells.size(); }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * side + j) * side + k;
  }
  std::size_t index(CellCoord c) const { return index(c.i, c.j, c.k); }
  CellCoord coord(std::size_t flat) const {
    return {flat / (side * side), (flat / side) % side, flat % side};
  }
  std::size_t center() const { return index(side / 2, side / 2, side / 2); }
  std::size_t count(CellCode code) const {
    return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), code));
  }

  bool operator==(const Grid&) const = default;
};

/// Side = (smallest s with s³ ≥ n) + 1, all cells dead.
inline Grid grid_for(std::size_t n_docs) {
  if (n_docs < 1) {
    throw Error(Errc::invalid_argument, "ca_engine", "grid_for needs n_docs >= 1");
  }
  std::size_t s = 1;
  while (s * s * s < n_docs) ++s;
  return Grid(s + 1);
}

enum class NeighborhoodKind { moore, von_neumann };

inline std::string_view to_string(NeighborhoodKind k) {
  return k == NeighborhoodKind::moore ? "moore" : "von_neumann";
}

inline NeighborhoodKind parse_neighborhood(std::string_view s) {
  if (s == "moore") return NeighborhoodKind::moore;
  if (s == "von_neumann" || s == "von-neumann" || s == "vonneumann") {
    return NeighborhoodKind::von_neumann;
  }
  throw Error(Errc::invalid_argument, "ca_engine",
              "unknown neighborhood '" + std::string(s) + "'");
}

struct Offset {
  int di, dj, dk;
};

/// Radius-1 offsets in lexicographic order, the cell itself excluded.
inline std::span<const Offset> neighborhood_offsets(NeighborhoodKind kind) {
  static const auto moore = [] {
    std::array<Offset, 26> out{};
    std::size_t n = 0;
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj)
        for (int dk = -1; dk <= 1; ++dk)
          if (di != 0 || dj != 0 || dk != 0) out[n++] = {di, dj, dk};
    return out;
  }();
  static const std::array<Offset, 6> von_neumann = {
      {{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}, {0, 0, 1}, {0, 1, 0}, {1, 0, 0}}};
  if (kind == NeighborhoodKind::moore) return moore;
  return von_neumann;
}

/// In-bounds neighbours of a cell; faces do not wrap.
inline std::vector<std::size_t> neighbors(const Grid& grid, std::size_t cell,
                                          NeighborhoodKind kind) {
  if (cell >= grid.volume()) {
    throw Error(Errc::out_of_range, "ca_engine", "cell index out of bounds");
  }
  const auto c = grid.coord(cell);
  const auto s = static_cast<long>(grid.side);
  std::vector<std::size_t> out;
  out.reserve(26);
  for (const auto& o : neighborhood_offsets(kind)) {
    const long i = static_cast<long>(c.i) + o.di;
    const long j = static_cast<long>(c.j) + o.dj;
    const long k = static_cast<long>(c.k) + o.dk;
    if (i < 0 || j < 0 || k < 0 || i >= s || j >= s || k >= s) continue;
    out.push_back(grid.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                             static_cast<std::size_t>(k)));
  }
  return out;
}

inline std::size_t chebyshev_cells(CellCoord a, CellCoord b) {
  auto diff = [](std::size_t x, std::size_t y) { return x > y ? x - y : y - x; };
  return std::max({diff(a.i, b.i), diff(a.j, b.j), diff(a.k, b.k)});
}

/// Boustrophedon walk of the whole cube; consecutive cells share a face.
inline std::vector<std::size_t> serpentine_order(const Grid& grid) {
  const std::size_t s = grid.side;
  std::vector<std::size_t> order;
  order.reserve(grid.volume());
  bool j_forward = true;
  bool k_forward = true;
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t jj = 0; jj < s; ++jj) {
      const std::size_t j = j_forward ? jj : s - 1 - jj;
      for (std::size_t kk = 0; kk < s; ++kk) {
        const std::size_t k = k_forward ? kk : s - 1 - kk;
        order.push_back(grid.index(i, j, k));
      }
      k_forward = !k_forward;
    }
    j_forward = !j_forward;
  }
  return order;
}

enum class Strategy { neighborhood, linear };

inline std::string_view to_string(Strategy s) {
  return s == Strategy::neighborhood ? "neighborhood" : "linear";
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "neighborhood") return Strategy::neighborhood;
  if (s == "linear") return Strategy::linear;
  throw Error(Errc::invalid_argument, "ca_engine",
              "unknown strategy '" + std::string(s) + "'");
}

struct ThresholdLevel {
  int level = 5;  // 1..10
};

struct CaConfig {
  NeighborhoodKind neighborhood = NeighborhoodKind::moore;
  Strategy strategy = Strategy::neighborhood;
  std::variant<double, ThresholdLevel> threshold = 0.5;
};

/// Observes every cell write as (cell, old code, new code).
using TransitionObserver = std::function<void(std::size_t, CellCode, CellCode)>;

struct RunResult {
  Grid grid;
  std::vector<DocId> unplaced;
};

namespace detail {

class Automaton {
 public:
  Automaton(std::span<const DocId> docs, const ProximityMatrix& sim,
            NeighborhoodKind kind, double threshold, std::size_t side,
            const TransitionObserver& observer)
      : docs_(docs), sim_(sim), kind_(kind), threshold_(threshold),
        grid_(side), observer_(observer), position_(grid_.volume(), kNone),
        distance_(grid_.volume(), std::numeric_limits<std::size_t>::max()),
        free_(grid_.volume()) {
    neighbor_cache_.resize(grid_.volume());
    for (std::size_t c = 0; c < grid_.volume(); ++c) {
      neighbor_cache_[c] = neighbors(grid_, c, kind_);
    }
  }

  RunResult run_neighborhood() {
    for (std::size_t d = 0; d < docs_.size(); ++d) {
      const std::size_t remaining_after = docs_.size() - d - 1;
      if (grid_.placed == 0) {
        place(grid_.center(), d, next_region_++, remaining_after, false);
        continue;
      }
      std::size_t target = kNone;
      std::uint32_t region = 0;
      bool seeded = false;
      for (std::size_t c = 0; c < grid_.volume() && target == kNone; ++c) {
        if (grid_.cells[c] != kAlive) continue;
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_cell = kNone;
        for (const auto nb : neighbor_cache_[c]) {
          if (!is_active(grid_.cells[nb])) continue;
          const double s = sim_.at(d, position_[nb]);
          if (s > best) {
            best = s;
            best_cell = nb;
          }
        }
        if (best_cell != kNone && best >= threshold_) {
          target = c;
          region = grid_.regions[best_cell];
        }
      }
      if (target == kNone) {
        target = seed_cell();
        region = next_region_++;
        seeded = true;
      }
      if (target == kNone) {
        unplaced_.push_back(docs_[d]);
        continue;
      }
      place(target, d, region, remaining_after, seeded);
    }
    return finish();
  }

  RunResult run_linear() {
    const auto order = serpentine_order(grid_);
    std::size_t p = 0;
    std::size_t previous = kNone;
    std::uint32_t region = 0;
    for (std::size_t d = 0; d < docs_.size(); ++d) {
      if (p >= order.size()) {
        unplaced_.push_back(docs_[d]);
        continue;
      }
      if (previous == kNone) {
        region = next_region_++;
      } else if (sim_.at(d, previous) < threshold_) {
        region = next_region_++;
        // The skipped cell separates the two clusters, if room allows.
        const std::size_t docs_left = docs_.size() - d;
        if (order.size() - (p + 1) >= docs_left) {
          set(order[p], kIsolated);
          ++p;
        }
      }
      const std::size_t cell = order[p++];
      set(cell, static_cast<CellCode>(docs_[d]));
      grid_.regions[cell] = region;
      position_[cell] = d;
      ++grid_.placed;
      previous = d;
      if (p < order.size() && grid_.cells[order[p]] == kDead) set(order[p], kAlive);
    }
    return finish();
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  void set(std::size_t cell, CellCode code) {
    const CellCode old = grid_.cells[cell];
    if (old == code) return;
    const bool was_free = old == kDead || old == kAlive;
    const bool is_free = code == kDead || code == kAlive;
    if (was_free && !is_free) --free_;
    if (!was_free && is_free) ++free_;
    grid_.cells[cell] = code;
    if (observer_) observer_(cell, old, code);
  }

  // Farthest free cell (Chebyshev grid distance to the nearest active cell),
  // preferring dead cells; ties by flat index.
  std::size_t seed_cell() const {
    for (const CellCode wanted : {kDead, kAlive}) {
      std::size_t best = kNone;
      std::size_t best_distance = 0;
      for (std::size_t c = 0; c < grid_.volume(); ++c) {
        if (grid_.cells[c] != wanted) continue;
        if (best == kNone || distance_[c] > best_distance) {
          best = c;
          best_distance = distance_[c];
        }
      }
      if (best != kNone) return best;
    }
    return kNone;
  }

  bool touches_other_region(std::size_t cell, std::uint32_t region) const {
    for (const auto nb : neighbor_cache_[cell]) {
      if (is_active(grid_.cells[nb]) && grid_.regions[nb] != region) return true;
    }
    return false;
  }

  void place(std::size_t cell, std::size_t d, std::uint32_t region,
             std::size_t remaining_after, bool seeded) {
    set(cell, static_cast<CellCode>(docs_[d]));
    grid_.regions[cell] = region;
    position_[cell] = d;
    ++grid_.placed;
    const auto here = grid_.coord(cell);
    for (std::size_t c = 0; c < grid_.volume(); ++c) {
      distance_[c] = std::min(distance_[c], chebyshev_cells(here, grid_.coord(c)));
    }
    for (const auto nb : neighbor_cache_[cell]) {
      if (grid_.cells[nb] == kDead) set(nb, kAlive);
    }
    // A new region isolates its frontier cells that border an older region,
    // as long as enough free cells remain for the documents still to come.
    if (!seeded) return;
    for (const auto nb : neighbor_cache_[cell]) {
      if (grid_.cells[nb] != kAlive || !touches_other_region(nb, region)) continue;
      if (free_ < remaining_after + 1) break;
      set(nb, kIsolated);
    }
  }

  RunResult finish() { return {std::move(grid_), std::move(unplaced_)}; }

  std::span<const DocId> docs_;
  const ProximityMatrix& sim_;
  NeighborhoodKind kind_;
  double threshold_;
  Grid grid_;
  const TransitionObserver& observer_;
  std::vector<std::size_t> position_;
  std::vector<std::size_t> distance_;
  std::vector<std::vector<std::size_t>> neighbor_cache_;
  std::size_t free_;
  std::uint32_t next_region_ = 1;
  std::vector<DocId> unplaced_;
};

}  // namespace detail

/// Places `docs` (row i of `sim` belongs to docs[i]) into a fresh grid, one
/// pass in the given order. The threshold must already be resolved to a
/// similarity value. `side` = 0 sizes the grid with grid_for.
inline RunResult run(std::span<const DocId> docs, const ProximityMatrix& sim,
                     const CaConfig& config, const TransitionObserver& observer = {},
                     std::size_t side = 0) {
  if (sim.kind != ProximityMatrix::Kind::similarity) {
    throw Error(Errc::invalid_argument, "ca_engine", "run expects a similarity matrix");
  }
  if (sim.n != docs.size()) {
    throw Error(Errc::dimension_mismatch, "ca_engine",
                "similarity matrix covers " + std::to_string(sim.n) + " documents, got " +
                    std::to_string(docs.size()));
  }
  const auto* threshold = std::get_if<double>(&config.threshold);
  if (!threshold) {
    throw Error(Errc::invalid_argument, "ca_engine",
                "threshold level must be resolved before run");
  }
  if (docs.empty()) return {Grid(grid_for(1).side), {}};
  if (side == 0) side = grid_for(docs.size()).side;
  if (side * side * side < docs.size()) {
    throw Error(Errc::grid_full, "ca_engine", "grid smaller than the corpus");
  }
  detail::Automaton automaton(docs, sim, config.neighborhood, *threshold, side, observer);
  return config.strategy == Strategy::neighborhood ? automaton.run_neighborhood()
                                                   : automaton.run_linear();
}

struct ClusterAssignment {
  std::map<DocId, std::uint32_t> cluster_of;
  std::size_t n_clusters = 0;
  std::vector<DocId> unplaced;

  bool operator==(const ClusterAssignment&) const = default;
};

/// Connected components of active cells under `kind` adjacency. Cells from
/// different placement regions are never joined, so region boundaries
/// separate clusters even where cells touch. Cluster ids follow ascending
/// minimum document id.
inline ClusterAssignment extract_clusters(const Grid& grid, NeighborhoodKind kind,
                                          std::vector<DocId> unplaced = {}) {
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> component(grid.volume(), kUnset);
  std::vector<DocId> min_doc;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < grid.volume(); ++start) {
    if (!is_active(grid.cells[start]) || component[start] != kUnset) continue;
    const std::size_t id = min_doc.size();
    min_doc.push_back(static_cast<DocId>(grid.cells[start]));
    component[start] = id;
    stack.assign(1, start);
    while (!stack.empty()) {
      const auto c = stack.back();
      stack.pop_back();
      min_doc[id] = std::min(min_doc[id], static_cast<DocId>(grid.cells[c]));
      for (const auto nb : neighbors(grid, c, kind)) {
        if (!is_active(grid.cells[nb]) || component[nb] != kUnset) continue;
        if (grid.regions[nb] != grid.regions[c]) continue;
        component[nb] = id;
        stack.push_back(nb);
      }
    }
  }
  std::vector<std::size_t> rank(min_doc.size());
  for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = i;
  std::sort(rank.begin(), rank.end(),
            [&](std::size_t a, std::size_t b) { return min_doc[a] < min_doc[b]; });
  std::vector<std::uint32_t> cluster_id(min_doc.size());
  for (std::size_t r = 0; r < rank.size(); ++r) {
    cluster_id[rank[r]] = static_cast<std::uint32_t>(r + 1);
  }

  ClusterAssignment out;
  out.n_clusters = min_doc.size();
  for (std::size_t c = 0; c < grid.volume(); ++c) {
    if (is_active(grid.cells[c])) {
      out.cluster_of[static_cast<DocId>(grid.cells[c])] = cluster_id[component[c]];
    }
  }
  std::sort(unplaced.begin(), unplaced.end());
  out.unplaced = std::move(unplaced);
  return out;
}

/// `{side, cells:[{i,j,k,state,doc_id?,cluster_id?,region?}], n_clusters}`,
/// listing non-dead cells by flat index.
inline nlohmann::json grid_state_json(const Grid& grid, const ClusterAssignment& assignment) {
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t c = 0; c < grid.volume(); ++c) {
    const CellCode code = grid.cells[c];
    if (code == kDead) continue;
    const auto p = grid.coord(c);
    nlohmann::json cell = {{"i", p.i}, {"j", p.j}, {"k", p.k}, {"state", state_name(code)}};
    if (is_active(code)) {
      const auto doc = static_cast<DocId>(code);
      cell["doc_id"] = doc;
      if (const auto it = assignment.cluster_of.find(doc); it != assignment.cluster_of.end()) {
        cell["cluster_id"] = it->second;
      }
      cell["region"] = grid.regions[c];
    }
    cells.push_back(std::move(cell));
  }
  return {{"side", grid.side}, {"cells", std::move(cells)}, {"n_clusters", assignment.n_clusters}};
}

struct GridState {
  Grid grid;
  ClusterAssignment assignment;
};

inline GridState parse_grid_state(const nlohmann::json& j) {
  GridState out;
  try {
    out.grid = Grid(j.at("side").get<std::size_t>());
    out.assignment.n_clusters = j.at("n_clusters").get<std::size_t>();
    for (const auto& cell : j.at("cells")) {
      const auto i = cell.at("i").get<std::size_t>();
      const auto jj = cell.at("j").get<std::size_t>();
      const auto k = cell.at("k").get<std::size_t>();
      if (i >= out.grid.side || jj >= out.grid.side || k >= out.grid.side) {
        throw Error(Errc::out_of_range, "ca_engine", "cell outside grid");
      }
      const auto flat = out.grid.index(i, jj, k);
      const auto state = cell.at("state").get<std::string>();
      if (state == "alive") {
        out.grid.cells[flat] = kAlive;
      } else if (state == "isolated") {
        out.grid.cells[flat] = kIsolated;
      } else if (state == "active") {
        const auto doc = cell.at("doc_id").get<DocId>();
        out.grid.cells[flat] = static_cast<CellCode>(doc);
        out.grid.regions[flat] = cell.value("region", std::uint32_t{0});
        ++out.grid.placed;
        if (cell.contains("cluster_id")) {
          out.assignment.cluster_of[doc] = cell.at("cluster_id").get<std::uint32_t>();
        }
      } else {
        throw Error(Errc::invalid_argument, "ca_engine", "unknown cell state '" + state + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_argument, "ca_engine", std::string("grid JSON: ") + e.what());
  }
  return out;
}

}  // namespace ca3d

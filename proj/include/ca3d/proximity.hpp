#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "ca3d/error.hpp"
#include "ca3d/represent.hpp"

namespace ca3d {

using ConstVec = std::span<const double>;

namespace detail {

inline void check_dims(ConstVec x, ConstVec y) {
  if (x.size() != y.size()) {
    throw Error(Errc::dimension_mismatch, "proximity",
                "dimensions " + std::to_string(x.size()) + " and " +
                    std::to_string(y.size()));
  }
}

}  // namespace detail

inline double minkowski(ConstVec x, ConstVec y, double r) {
  detail::check_dims(x, y);
  if (!(r >= 1.0)) {
    throw Error(Errc::invalid_order, "proximity",
                "Minkowski order must be >= 1, got " + std::to_string(r));
  }
  if (r == 1.0) {
    double s = 0;
    for (std::size_t j = 0; j < x.size(); ++j) s += std::abs(x[j] - y[j]);
    return s;
  }
  if (r == 2.0) {
    double s = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - y[j];
      s += d * d;
    }
    return std::sqrt(s);
  }
  // Scale by the largest component so large r does not overflow.
  double scale = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    scale = std::max(scale, std::abs(x[j] - y[j]));
  }
  if (scale == 0.0) return 0.0;
  double s = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    s += std::pow(std::abs(x[j] - y[j]) / scale, r);
  }
  return scale * std::pow(s, 1.0 / r);
}

inline double euclidean(ConstVec x, ConstVec y) { return minkowski(x, y, 2.0); }
inline double manhattan(ConstVec x, ConstVec y) { return minkowski(x, y, 1.0); }

/// max_k |x_k − y_k|. Also known as the Chebyshev distance.
inline double maximum_distance(ConstVec x, ConstVec y) {
  detail::check_dims(x, y);
  double m = 0;
  for (std::size_t j = 0; j < x.size(); ++j) m = std::max(m, std::abs(x[j] - y[j]));
  return m;
}

inline double chebyshev(ConstVec x, ConstVec y) { return maximum_distance(x, y); }

/// Root-mean-square coordinate difference: euclidean / sqrt(d).
inline double average_distance(ConstVec x, ConstVec y) {
  detail::check_dims(x, y);
  if (x.empty()) {
    throw Error(Errc::dimension_mismatch, "proximity",
                "average distance needs d >= 1");
  }
  double s = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = x[j] - y[j];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(x.size()));
}

inline double cosine_distance(ConstVec x, ConstVec y) {
  detail::check_dims(x, y);
  double dot = 0, xx = 0, yy = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    dot += x[j] * y[j];
    xx += x[j] * x[j];
    yy += y[j] * y[j];
  }
  if (!(xx > 0.0) || !(yy > 0.0)) {
    throw Error(Errc::zero_vector, "proximity",
                "cosine distance of a zero vector");
  }
  if (std::equal(x.begin(), x.end(), y.begin())) return 0.0;
  const double c = dot / (std::sqrt(xx) * std::sqrt(yy));
  return std::max(0.0, 1.0 - std::min(1.0, c));
}

/// Covariance of the data set, ridge-regularized, and its inverse.
class MahalanobisContext {
 public:
  /// `ridge` < 0 selects the default 1e-6 · trace(Σ) / d.
  static MahalanobisContext from_covariance(Eigen::MatrixXd covariance,
                                            double ridge = -1.0) {
    if (covariance.rows() != covariance.cols() || covariance.rows() == 0) {
      throw Error(Errc::dimension_mismatch, "proximity",
                  "covariance must be square and non-empty");
    }
    MahalanobisContext ctx;
    const auto d = covariance.rows();
    if (ridge < 0.0) {
      ridge = 1e-6 * covariance.trace() / static_cast<double>(d);
      if (!(ridge > 0.0)) ridge = 1e-6;
    }
    ctx.ridge_ = ridge;
    ctx.covariance_ = std::move(covariance);
    Eigen::MatrixXd reg = ctx.covariance_;
    reg.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(reg);
    ctx.inverse_ = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
    ctx.inverse_ = 0.5 * (ctx.inverse_ + ctx.inverse_.transpose()).eval();
    return ctx;
  }

  /// Sample covariance (n − 1 denominator, n when a single row) of the rows.
  static MahalanobisContext from_rows(std::span<const std::vector<double>> rows,
                                      double ridge = -1.0) {
    if (rows.empty() || rows.front().empty()) {
      throw Error(Errc::dimension_mismatch, "proximity",
                  "Mahalanobis context needs data");
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto d = static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd data(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != d) {
        throw Error(Errc::dimension_mismatch, "proximity", "ragged rows");
      }
      for (Eigen::Index j = 0; j < d; ++j) data(i, j) = rows[i][j];
    }
    const Eigen::RowVectorXd mean = data.colwise().mean();
    data.rowwise() -= mean;
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    return from_covariance((data.transpose() * data) / denom, ridge);
  }

  const Eigen::MatrixXd& covariance() const { return covariance_; }
  const Eigen::MatrixXd& inverse() const { return inverse_; }
  double ridge() const { return ridge_; }
  std::size_t dimension() const { return static_cast<std::size_t>(inverse_.rows()); }

 private:
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd inverse_;
  double ridge_ = 0.0;
};

inline double mahalanobis(ConstVec x, ConstVec y, const MahalanobisContext& ctx) {
  detail::check_dims(x, y);
  if (x.size() != ctx.dimension()) {
    throw Error(Errc::dimension_mismatch, "proximity",
                "vector dimension differs from covariance dimension");
  }
  Eigen::VectorXd diff(static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) {
    diff(static_cast<Eigen::Index>(j)) = x[j] - y[j];
  }
  const double q = diff.dot(ctx.inverse() * diff);
  return std::sqrt(std::max(0.0, q));
}

enum class Metric { minkowski, euclidean, manhattan, maximum, average, mahalanobis, cosine };

struct MetricSpec {
  Metric kind = Metric::cosine;
  double r = 2.0;  // Minkowski order

  std::string name() const {
    switch (kind) {
      case Metric::minkowski: {
        std::string s = std::to_string(r);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return "minkowski" + s;
      }
      case Metric::euclidean: return "euclidean";
      case Metric::manhattan: return "manhattan";
      case Metric::maximum: return "chebyshev";
      case Metric::average: return "average";
      case Metric::mahalanobis: return "mahalanobis";
      case Metric::cosine: return "cosine";
    }
    return "unknown";
  }
};

/// Accepts the usual spellings; "maximum", "chebyshev" and "tchebychev"
/// name the same function.
inline MetricSpec parse_metric(std::string_view name, double r = 2.0) {
  if (name == "cosine") return {Metric::cosine};
  if (name == "euclidean" || name == "euclidian") return {Metric::euclidean};
  if (name == "manhattan" || name == "cityblock") return {Metric::manhattan};
  if (name == "minkowski") {
    if (!(r >= 1.0)) {
      throw Error(Errc::invalid_order, "proximity", "Minkowski order must be >= 1");
    }
    return {Metric::minkowski, r};
  }
  if (name == "maximum" || name == "chebyshev" || name == "tchebychev" ||
      name == "chebychev") {
    return {Metric::maximum};
  }
  if (name == "average") return {Metric::average};
  if (name == "mahalanobis") return {Metric::mahalanobis};
  throw Error(Errc::invalid_argument, "proximity",
              "unknown distance '" + std::string(name) + "'");
}

/// Documents densified over a shared vocabulary.
struct DenseRows {
  std::vector<DocId> doc_ids;
  std::vector<std::vector<double>> rows;

  std::size_t size() const { return rows.size(); }
  std::size_t dimension() const { return rows.empty() ? 0 : rows.front().size(); }
};

inline DenseRows densify(const TermDocumentMatrix& m) {
  DenseRows out;
  out.doc_ids.reserve(m.n_docs());
  out.rows.reserve(m.n_docs());
  for (const auto& col : m.columns) {
    std::vector<double> row(m.n_terms(), 0.0);
    for (const auto& [t, w] : col.entries) row[t] = w;
    out.doc_ids.push_back(col.doc_id);
    out.rows.push_back(std::move(row));
  }
  return out;
}

struct ProximityMatrix {
  enum class Kind : std::uint8_t { distance = 0, similarity = 1 };

  Kind kind = Kind::distance;
  std::size_t n = 0;
  std::string metric;
  std::vector<double> values;  // row-major n × n

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }

  bool operator==(const ProximityMatrix&) const = default;
};

/// Fills the upper triangle with `metric(row_i, row_j)` for i < j, mirrors
/// it, and leaves an exact zero diagonal. Rows are dealt to worker threads
/// round-robin; each pair is evaluated exactly once.
template <typename MetricFn>
ProximityMatrix build_proximity(const DenseRows& data, MetricFn&& metric,
                                std::string metric_name,
                                std::size_t threads = 0) {
  ProximityMatrix pm;
  pm.kind = ProximityMatrix::Kind::distance;
  pm.n = data.size();
  pm.metric = std::move(metric_name);
  pm.values.assign(pm.n * pm.n, 0.0);
  if (pm.n < 2) return pm;

  if (threads == 0) {
    threads = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 32);
  }
  threads = std::min(threads, pm.n - 1);

  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  auto worker = [&](std::size_t offset) {
    for (std::size_t i = offset; i + 1 < pm.n && !failed.load(); i += threads) {
      for (std::size_t j = i + 1; j < pm.n; ++j) {
        try {
          const double d = metric(ConstVec(data.rows[i]), ConstVec(data.rows[j]));
          pm.values[i * pm.n + j] = d;
          pm.values[j * pm.n + i] = d;
        } catch (const Error& e) {
          std::lock_guard lock(error_mutex);
          if (!first_error) {
            const auto id = [&](std::size_t k) {
              return k < data.doc_ids.size() ? std::to_string(data.doc_ids[k])
                                             : std::to_string(k);
            };
            first_error = std::make_exception_ptr(
                Error(e.code(), "proximity",
                      "pair (" + id(i) + ", " + id(j) + "): " + e.what()));
          }
          failed = true;
          return;
        }
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker, t);
    worker(0);
  }
  if (first_error) std::rethrow_exception(first_error);
  return pm;
}

inline ProximityMatrix build_proximity(const DenseRows& data, const MetricSpec& spec,
                                       std::size_t threads = 0) {
  switch (spec.kind) {
    case Metric::minkowski: {
      const double r = spec.r;
      if (!(r >= 1.0)) {
        throw Error(Errc::invalid_order, "proximity", "Minkowski order must be >= 1");
      }
      return build_proximity(
          data, [r](ConstVec x, ConstVec y) { return minkowski(x, y, r); },
          spec.name(), threads);
    }
    case Metric::euclidean:
      return build_proximity(data, euclidean, spec.name(), threads);
    case Metric::manhattan:
      return build_proximity(data, manhattan, spec.name(), threads);
    case Metric::maximum:
      return build_proximity(data, maximum_distance, spec.name(), threads);
    case Metric::average:
      return build_proximity(data, average_distance, spec.name(), threads);
    case Metric::cosine:
      return build_proximity(data, cosine_distance, spec.name(), threads);
    case Metric::mahalanobis: {
      if (data.size() == 0) return build_proximity(data, euclidean, spec.name());
      const auto ctx = MahalanobisContext::from_rows(data.rows);
      return build_proximity(
          data, [&ctx](ConstVec x, ConstVec y) { return mahalanobis(x, y, ctx); },
          spec.name(), threads);
    }
  }
  throw Error(Errc::invalid_argument, "proximity", "unknown metric");
}

/// s = 1 − d / d_max over off-diagonal entries; all ones when d_max is 0.
inline ProximityMatrix to_similarity(const ProximityMatrix& dist) {
  if (dist.kind != ProximityMatrix::Kind::distance) {
    throw Error(Errc::invalid_argument, "proximity",
                "to_similarity expects a distance matrix");
  }
  ProximityMatrix sim = dist;
  sim.kind = ProximityMatrix::Kind::similarity;
  double d_max = 0.0;
  for (std::size_t i = 0; i < dist.n; ++i) {
    for (std::size_t j = i + 1; j < dist.n; ++j) d_max = std::max(d_max, dist.at(i, j));
  }
  for (std::size_t i = 0; i < dist.n; ++i) {
    for (std::size_t j = 0; j < dist.n; ++j) {
      if (i == j || !(d_max > 0.0)) {
        sim.at(i, j) = 1.0;
      } else {
        sim.at(i, j) = 1.0 - dist.at(i, j) / d_max;
      }
    }
  }
  return sim;
}

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) os.put(static_cast<char>((v >> (8 * b)) & 0xFF));
}

inline std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) {
      throw Error(Errc::io_error, "proximity", "truncated proximity dump");
    }
    v |= static_cast<std::uint32_t>(c & 0xFF) << (8 * b);
  }
  return v;
}

inline constexpr std::string_view kProximityMagic = "CA3DPROX";

}  // namespace detail

/// Binary dump: magic, kind byte, u32 n, u32 name length, name bytes, then
/// n·n little-endian IEEE doubles in row-major order.
inline void write_proximity(std::ostream& os, const ProximityMatrix& pm) {
  os.write(detail::kProximityMagic.data(),
           static_cast<std::streamsize>(detail::kProximityMagic.size()));
  os.put(static_cast<char>(pm.kind));
  detail::put_u32(os, static_cast<std::uint32_t>(pm.n));
  detail::put_u32(os, static_cast<std::uint32_t>(pm.metric.size()));
  os.write(pm.metric.data(), static_cast<std::streamsize>(pm.metric.size()));
  for (const double v : pm.values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) os.put(static_cast<char>((bits >> (8 * b)) & 0xFF));
  }
}

inline ProximityMatrix read_proximity(std::istream& is) {
  std::string magic(detail::kProximityMagic.size(), '\0');
  is.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!is || magic != detail::kProximityMagic) {
    throw Error(Errc::io_error, "proximity", "bad proximity dump magic");
  }
  ProximityMatrix pm;
  const int kind = is.get();
  if (kind != 0 && kind != 1) {
    throw Error(Errc::io_error, "proximity", "bad proximity kind byte");
  }
  pm.kind = static_cast<ProximityMatrix::Kind>(kind);
  pm.n = detail::get_u32(is);
  pm.metric.resize(detail::get_u32(is));
  is.read(pm.metric.data(), static_cast<std::streamsize>(pm.metric.size()));
  pm.values.resize(pm.n * pm.n);
  for (auto& v : pm.values) {
    char buf[8];
    if (!is.read(buf, 8)) {
      throw Error(Errc::io_error, "proximity", "truncated proximity dump");
    }
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[b])) << (8 * b);
    }
    v = std::bit_cast<double>(bits);
  }
  return pm;
}

}  // namespace ca3d

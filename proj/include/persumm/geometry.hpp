#pragma once

// Numerical substrate of the semantic-area reward.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "persumm/errors.hpp"

namespace persumm::geometry {

// Row-major matrix of embeddings; one row per sentence.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {
    if (dim == 0) throw ArgumentError("embedding dimension must be >= 1");
  }

  static EmbeddingMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw ArgumentError("cannot infer dimension from zero rows");
    EmbeddingMatrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != m.dim_) {
        throw ArgumentError("row " + std::to_string(r) + " has length " +
                            std::to_string(rows[r].size()) + ", expected " + std::to_string(m.dim_));
      }
      for (std::size_t c = 0; c < m.dim_; ++c) {
        if (!std::isfinite(rows[r][c])) {
          throw ArgumentError("row " + std::to_string(r) + " has a non-finite value");
        }
        m(r, c) = rows[r][c];
      }
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * dim_, dim_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * dim_, dim_}; }

  // Rows selected by index, in the given order.
  EmbeddingMatrix select(std::span<const std::size_t> indices) const {
    EmbeddingMatrix m(indices.size(), dim_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      std::copy_n(row(indices[i]).begin(), dim_, m.row(i).begin());
    }
    return m;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 1;
  std::vector<double> data_;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
  auto operator<=>(const Point2&) const = default;
};

inline double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

inline double norm(std::span<const double> u) { return std::sqrt(dot(u, u)); }

// 1 - cos(u, v), clamped to [0, 2] against rounding.
inline double cosine_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ArgumentError("cosine_distance: length mismatch");
  const double nu = norm(u), nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw DegenerateVectorError("cosine_distance: zero-norm vector");
  return std::clamp(1.0 - dot(u, v) / (nu * nv), 0.0, 2.0);
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition

struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;
};

namespace detail {

using Square = std::vector<double>;  // n*n row-major

// Flips the sign so the largest-magnitude coordinate is positive (first one
// wins on exact ties).
inline void canonical_sign(std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (!v.empty() && v[best] < 0.0) {
    for (double& x : v) x = -x;
  }
}

// Cyclic Jacobi rotations; returns all eigenpairs sorted by descending value.
inline std::vector<EigenPair> jacobi_eigen(Square a, std::size_t n) {
  Square v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  auto at = [n](Square& m, std::size_t r, std::size_t c) -> double& { return m[r * n + c]; };

  double scale = 0.0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  for (int sweep = 0; sweep < 100 && scale > 0.0; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += at(a, p, q) * at(a, p, q);
    if (std::sqrt(off) <= 1e-15 * scale) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(a, p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(a, k, p), akq = at(a, k, q);
          at(a, k, p) = c * akp - s * akq;
          at(a, k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(a, p, k), aqk = at(a, q, k);
          at(a, p, k) = c * apk - s * aqk;
          at(a, q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = at(v, k, p), vkq = at(v, k, q);
          at(v, k, p) = c * vkp - s * vkq;
          at(v, k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<EigenPair> pairs(n);
  for (std::size_t j = 0; j < n; ++j) {
    pairs[j].value = at(a, j, j);
    pairs[j].vector.resize(n);
    for (std::size_t k = 0; k < n; ++k) pairs[j].vector[k] = at(v, k, j);
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const EigenPair& l, const EigenPair& r) { return l.value > r.value; });
  return pairs;
}

// Power iteration with deflation for the top `k` eigenpairs of a PSD matrix.
inline std::vector<EigenPair> power_eigen(Square a, std::size_t n, std::size_t k,
                                          double tol = 1e-10, int max_iter = 1000) {
  std::vector<EigenPair> out;
  for (std::size_t e = 0; e < k; ++e) {
    std::vector<double> v(n), w(n);
    // Deterministic, non-symmetric start so no eigenvector is orthogonal to it
    // by construction.
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.001 * static_cast<double>(i % 97);
    for (const auto& prev : out) {
      const double proj = dot(v, prev.vector);
      for (std::size_t i = 0; i < n; ++i) v[i] -= proj * prev.vector[i];
    }
    double nv = norm(v);
    if (nv == 0.0) break;
    for (double& x : v) x /= nv;
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      for (std::size_t r = 0; r < n; ++r) w[r] = dot({a.data() + r * n, n}, v);
      const double nw = norm(w);
      if (nw == 0.0) {
        lambda = 0.0;
        break;
      }
      for (double& x : w) x /= nw;
      double diff = 0.0;
      for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(w[i] - v[i]));
      v.swap(w);
      lambda = nw;
      if (diff < tol) break;
    }
    out.push_back({lambda, v});
    // Deflate: A <- A - lambda v v^T.
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) a[r * n + c] -= lambda * v[r] * v[c];
  }
  return out;
}

}  // namespace detail

// Top-two principal directions of the row set plus the projections.
struct Pca2Result {
  std::vector<Point2> points;
  std::vector<double> mean;
  std::vector<double> axis1;
  std::vector<double> axis2;  // all zeros when a second direction is undefined
  double variance1 = 0.0;     // sample variance along axis1
  double variance2 = 0.0;
  double total_variance = 0.0;  // trace of the sample covariance
};

// Dimension up to which the covariance is diagonalized with Jacobi rotations.
inline constexpr std::size_t kJacobiMaxDim = 64;

inline Pca2Result pca2_full(const EmbeddingMatrix& m) {
  const std::size_t n = m.rows(), d = m.dim();
  if (n < 2) throw PreconditionError("pca2 needs at least 2 rows, got " + std::to_string(n));

  Pca2Result res;
  res.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) res.mean[c] += m(r, c);
  for (double& x : res.mean) x /= static_cast<double>(n);

  detail::Square cov(d * d, 0.0);
  std::vector<double> centered(d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) centered[c] = m(r, c) - res.mean[c];
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) cov[i * d + j] += centered[i] * centered[j];
  }
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov[i * d + j] /= denom;
      cov[j * d + i] = cov[i * d + j];
    }
    res.total_variance += cov[i * d + i];
  }

  const std::size_t wanted = std::min<std::size_t>(2, d);
  auto pairs = d <= kJacobiMaxDim ? detail::jacobi_eigen(cov, d) : detail::power_eigen(cov, d, wanted);
  res.axis1 = pairs.at(0).vector;
  detail::canonical_sign(res.axis1);
  // Two rows span a single direction; a one-dimensional embedding has no
  // second axis at all.
  const bool has_second = n > 2 && wanted == 2 && pairs.size() > 1;
  if (has_second) {
    res.axis2 = pairs[1].vector;
    detail::canonical_sign(res.axis2);
  } else {
    res.axis2.assign(d, 0.0);
  }

  res.points.resize(n);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) centered[c] = m(r, c) - res.mean[c];
    res.points[r] = {dot(centered, res.axis1), has_second ? dot(centered, res.axis2) : 0.0};
    s1 += res.points[r].x * res.points[r].x;
    s2 += res.points[r].y * res.points[r].y;
  }
  res.variance1 = s1 / denom;
  res.variance2 = s2 / denom;
  return res;
}

inline std::vector<Point2> pca2(const EmbeddingMatrix& m) { return pca2_full(m).points; }

// ---------------------------------------------------------------------------
// Hull and area

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew's monotone chain. Output is counter-clockwise, starts at the
// lexicographically smallest point and drops collinear boundary points. With
// fewer than three non-collinear points the distinct extreme points are
// returned.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;

  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

// Shoelace formula; fewer than three vertices enclose nothing.
inline double polygon_area(std::span<const Point2> hull) {
  if (hull.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return std::abs(twice) / 2.0;
}

}  // namespace persumm::geometry

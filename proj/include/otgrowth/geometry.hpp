#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "otgrowth/errors.hpp"

namespace otgrowth {

using Point = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double squared_distance(std::span<const double> a,
                               std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

// Volume of the Euclidean unit ball, pi^{d/2} / Gamma(d/2 + 1), evaluated in
// log space so that large d does not overflow.
inline double log_unit_ball_volume(int d) {
  if (d < 1) throw DomainError("unit ball volume needs d >= 1");
  const double h = 0.5 * d;
  return h * std::log(std::numbers::pi) - std::lgamma(h + 1.0);
}

inline double unit_ball_volume(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi / 3.0;
    default: return std::exp(log_unit_ball_volume(d));
  }
}

// Row-major n x d point cloud.
class PointSet {
 public:
  PointSet() = default;
  PointSet(std::size_t n, int dim) : dim_(dim), data_(n * static_cast<std::size_t>(dim), 0.0) {}
  PointSet(int dim, std::vector<double> flat) : dim_(dim), data_(std::move(flat)) {
    if (dim_ <= 0 || data_.size() % static_cast<std::size_t>(dim_) != 0)
      throw DomainError("point set storage does not match dimension");
  }

  static PointSet from_points(const std::vector<Point>& pts) {
    if (pts.empty()) return {};
    PointSet out(pts.size(), static_cast<int>(pts.front().size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].size() != static_cast<std::size_t>(out.dim_))
        throw DomainError("points of mixed dimension");
      std::copy(pts[i].begin(), pts[i].end(), out.row(i).begin());
    }
    return out;
  }

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept {
    return dim_ == 0 ? 0 : data_.size() / static_cast<std::size_t>(dim_);
  }
  bool empty() const noexcept { return size() == 0; }

  std::span<double> row(std::size_t i) {
    return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  Point point(std::size_t i) const {
    auto r = row(i);
    return {r.begin(), r.end()};
  }

  void push_back(std::span<const double> p) {
    if (dim_ == 0) dim_ = static_cast<int>(p.size());
    if (p.size() != static_cast<std::size_t>(dim_))
      throw DomainError("point dimension mismatch");
    data_.insert(data_.end(), p.begin(), p.end());
  }

  const std::vector<double>& flat() const noexcept { return data_; }

 private:
  int dim_ = 0;
  std::vector<double> data_;
};

}  // namespace otgrowth

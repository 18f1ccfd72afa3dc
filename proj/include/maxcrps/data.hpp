#pragma once

// Observation, direction and projection containers shared by the samplers,
// the CRPS objective and the estimator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "maxcrps/error.hpp"
#include "maxcrps/numerics.hpp"
#include "maxcrps/rng.hpp"

namespace maxcrps {

struct Provenance {
  std::string family;
  std::vector<double> theta;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

[[nodiscard]] inline std::vector<std::string> default_site_labels(std::size_t d) {
  std::vector<std::string> labels;
  labels.reserve(d);
  for (std::size_t i = 1; i <= d; ++i) labels.push_back("site_" + std::to_string(i));
  return labels;
}

/// n x d matrix of strictly positive, finite observations.
class ObservationSet {
 public:
  ObservationSet() = default;
  ObservationSet(RowMatrix data, std::vector<std::string> labels = {}, Provenance provenance = {})
      : data_(std::move(data)), labels_(std::move(labels)), provenance_(std::move(provenance)) {
    if (data_.rows() < 1 || data_.cols() < 1) {
      throw DataError("ObservationSet: need at least one row and one column");
    }
    if (labels_.empty()) labels_ = default_site_labels(static_cast<std::size_t>(data_.cols()));
    if (static_cast<Eigen::Index>(labels_.size()) != data_.cols()) {
      throw ContractError("ObservationSet: " + std::to_string(labels_.size()) + " labels for " +
                          std::to_string(data_.cols()) + " columns");
    }
    for (Eigen::Index i = 0; i < data_.rows(); ++i) {
      for (Eigen::Index j = 0; j < data_.cols(); ++j) {
        const double x = data_(i, j);
        if (!(x > 0.0) || !std::isfinite(x)) {
          throw DataError("ObservationSet: entry at row " + std::to_string(i + 1) + ", column " +
                          std::to_string(j + 1) + " is not strictly positive and finite (" +
                          std::to_string(x) + ")");
        }
      }
    }
  }

  [[nodiscard]] Eigen::Index rows() const noexcept { return data_.rows(); }
  [[nodiscard]] Eigen::Index dimension() const noexcept { return data_.cols(); }
  [[nodiscard]] const RowMatrix& values() const noexcept { return data_; }
  [[nodiscard]] std::span<const double> row(Eigen::Index i) const {
    return {data_.data() + i * data_.cols(), static_cast<std::size_t>(data_.cols())};
  }
  [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
  [[nodiscard]] const Provenance& provenance() const noexcept { return provenance_; }

 private:
  RowMatrix data_;
  std::vector<std::string> labels_;
  Provenance provenance_;
};

/// Finite set of directions in the open simplex. Carries a canonical column
/// order keyed on direction content so that reductions over directions do
/// not depend on the row order they were supplied in.
class DirectionSet {
 public:
  DirectionSet() = default;
  explicit DirectionSet(RowMatrix directions, std::uint64_t seed = 0)
      : directions_(std::move(directions)), seed_(seed) {
    if (directions_.rows() < 1 || directions_.cols() < 1) {
      throw ContractError("DirectionSet: need at least one direction of dimension >= 1");
    }
    for (Eigen::Index r = 0; r < directions_.rows(); ++r) {
      for (Eigen::Index j = 0; j < directions_.cols(); ++j) {
        const double u = directions_(r, j);
        if (!(u > 0.0) || !std::isfinite(u)) {
          throw DomainError("DirectionSet: direction " + std::to_string(r) +
                            " has a non-positive coordinate");
        }
      }
    }
    order_.resize(static_cast<std::size_t>(directions_.rows()));
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    std::stable_sort(order_.begin(), order_.end(), [this](Eigen::Index a, Eigen::Index b) {
      const double* ra = directions_.data() + a * directions_.cols();
      const double* rb = directions_.data() + b * directions_.cols();
      return std::lexicographical_compare(ra, ra + directions_.cols(), rb, rb + directions_.cols());
    });
  }

  [[nodiscard]] Eigen::Index size() const noexcept { return directions_.rows(); }
  [[nodiscard]] Eigen::Index dimension() const noexcept { return directions_.cols(); }
  [[nodiscard]] const RowMatrix& values() const noexcept { return directions_; }
  [[nodiscard]] std::span<const double> direction(Eigen::Index r) const {
    return {directions_.data() + r * directions_.cols(), static_cast<std::size_t>(directions_.cols())};
  }
  [[nodiscard]] const std::vector<Eigen::Index>& canonical_order() const noexcept { return order_; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

 private:
  RowMatrix directions_;
  std::uint64_t seed_ = 0;
  std::vector<Eigen::Index> order_;
};

/// `count` iid uniform points of the simplex (normalized exponential vectors).
[[nodiscard]] inline DirectionSet build_direction_set(RngStream& stream, Eigen::Index d, Eigen::Index count) {
  if (d < 1 || count < 1) throw ContractError("build_direction_set: d and count must be >= 1");
  RowMatrix dirs(count, d);
  for (Eigen::Index r = 0; r < count; ++r) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      dirs(r, j) = stream.exponential();
      total += dirs(r, j);
    }
    for (Eigen::Index j = 0; j < d; ++j) dirs(r, j) /= total;
  }
  return DirectionSet(std::move(dirs), stream.seed());
}

/// n x |U| matrix of max-linear combinations M_u = max_j X_j / u_j.
class ProjectionMatrix {
 public:
  ProjectionMatrix() = default;

  /// Raw construction; columns are summed in index order unless `order` is given.
  explicit ProjectionMatrix(RowMatrix values, std::vector<Eigen::Index> order = {})
      : values_(std::move(values)), order_(std::move(order)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
      throw ContractError("ProjectionMatrix: empty matrix");
    }
    if (order_.empty()) {
      order_.resize(static_cast<std::size_t>(values_.cols()));
      std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    }
    if (static_cast<Eigen::Index>(order_.size()) != values_.cols()) {
      throw ContractError("ProjectionMatrix: column order has wrong length");
    }
    sqrt_values_.resize(values_.rows(), values_.cols());
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      for (Eigen::Index c = 0; c < values_.cols(); ++c) {
        const double m = values_(i, c);
        if (!(m > 0.0) || !std::isfinite(m)) {
          throw DataError("ProjectionMatrix: entry (" + std::to_string(i) + ", " + std::to_string(c) +
                          ") is not positive and finite");
        }
        sqrt_values_(i, c) = std::sqrt(m);
      }
    }
  }

  [[nodiscard]] Eigen::Index rows() const noexcept { return values_.rows(); }
  [[nodiscard]] Eigen::Index cols() const noexcept { return values_.cols(); }
  [[nodiscard]] const RowMatrix& values() const noexcept { return values_; }
  [[nodiscard]] const RowMatrix& sqrt_values() const noexcept { return sqrt_values_; }
  [[nodiscard]] const std::vector<Eigen::Index>& column_order() const noexcept { return order_; }

 private:
  RowMatrix values_;
  RowMatrix sqrt_values_;
  std::vector<Eigen::Index> order_;
};

/// Max-linear combination of one observation along one direction.
[[nodiscard]] inline double max_linear_combination(std::span<const double> x, std::span<const double> u) noexcept {
  double best = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) best = std::max(best, x[j] / u[j]);
  return best;
}

[[nodiscard]] inline ProjectionMatrix project(const ObservationSet& data, const DirectionSet& dirs) {
  if (data.dimension() != dirs.dimension()) {
    throw ContractError("project: observations have dimension " + std::to_string(data.dimension()) +
                        " but directions have dimension " + std::to_string(dirs.dimension()));
  }
  RowMatrix values(data.rows(), dirs.size());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const auto x = data.row(i);
    for (Eigen::Index c = 0; c < dirs.size(); ++c) values(i, c) = max_linear_combination(x, dirs.direction(c));
  }
  return ProjectionMatrix(std::move(values), dirs.canonical_order());
}

}  // namespace maxcrps

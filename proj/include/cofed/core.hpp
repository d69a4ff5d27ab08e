#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cofed {

/// Raised for malformed run configurations (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for wire-protocol violations (CLI exit code 4).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Index of a category in the federation-wide label union.
struct CategoryId {
  std::uint32_t value = 0;

  constexpr CategoryId() = default;
  constexpr explicit CategoryId(std::uint32_t v) : value(v) {}

  friend constexpr auto operator<=>(CategoryId, CategoryId) = default;
};

using PredictionVector = std::vector<CategoryId>;

/// Ordered, duplicate-free, non-empty set of categories owned by one task.
class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<CategoryId> categories);
  LabelSpace(std::initializer_list<std::uint32_t> ids);

  bool contains(CategoryId c) const;
  /// Position of `c` in the sorted category list; throws if absent.
  std::size_t index_of(CategoryId c) const;
  std::size_t size() const { return categories_.size(); }
  bool empty() const { return categories_.empty(); }
  CategoryId operator[](std::size_t i) const { return categories_[i]; }
  std::span<const CategoryId> categories() const { return categories_; }
  auto begin() const { return categories_.begin(); }
  auto end() const { return categories_.end(); }

  friend bool operator==(const LabelSpace&, const LabelSpace&) = default;

 private:
  std::vector<CategoryId> categories_;
};

bool intersects(const LabelSpace& a, const LabelSpace& b);

/// Instances are rows of `features`; every label lies in the owner's space.
struct LabeledDataset {
  Eigen::MatrixXd features;
  std::vector<CategoryId> labels;
  std::string provenance = "synthetic";
  /// Row of the source pool each instance was drawn from; empty when unknown.
  std::vector<std::size_t> origin;

  std::size_t size() const { return labels.size(); }
  Eigen::Index dim() const { return features.cols(); }
  bool empty() const { return labels.empty(); }
};

/// Public unlabeled set. Row order is the canonical index order of a run.
struct UnlabeledDataset {
  Eigen::MatrixXd features;

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  Eigen::Index dim() const { return features.cols(); }
};

/// Throws unless rows/labels agree, features are finite and labels fall in `space`.
void validate(const LabeledDataset& data, const LabelSpace& space);
void validate(const UnlabeledDataset& data);

LabeledDataset concatenate(const LabeledDataset& a, const LabeledDataset& b);

}  // namespace cofed

#include "cofed/core.hpp"

#include <algorithm>

namespace cofed {

LabelSpace::LabelSpace(std::vector<CategoryId> categories)
    : categories_(std::move(categories)) {
  if (categories_.empty()) throw std::invalid_argument("label space must not be empty");
  std::sort(categories_.begin(), categories_.end());
  if (std::adjacent_find(categories_.begin(), categories_.end()) != categories_.end())
    throw std::invalid_argument("label space contains duplicate categories");
}

LabelSpace::LabelSpace(std::initializer_list<std::uint32_t> ids)
    : LabelSpace([&] {
        std::vector<CategoryId> v;
        for (auto id : ids) v.emplace_back(id);
        return v;
      }()) {}

bool LabelSpace::contains(CategoryId c) const {
  return std::binary_search(categories_.begin(), categories_.end(), c);
}

std::size_t LabelSpace::index_of(CategoryId c) const {
  auto it = std::lower_bound(categories_.begin(), categories_.end(), c);
  if (it == categories_.end() || *it != c)
    throw std::out_of_range("category " + std::to_string(c.value) + " not in label space");
  return static_cast<std::size_t>(it - categories_.begin());
}

bool intersects(const LabelSpace& a, const LabelSpace& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

void validate(const LabeledDataset& data, const LabelSpace& space) {
  if (static_cast<std::size_t>(data.features.rows()) != data.labels.size())
    throw std::invalid_argument("dataset has " + std::to_string(data.features.rows()) +
                                " rows but " + std::to_string(data.labels.size()) + " labels");
  if (!data.features.allFinite()) throw std::invalid_argument("dataset contains non-finite features");
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    if (!space.contains(data.labels[i]))
      throw std::invalid_argument("label " + std::to_string(data.labels[i].value) + " at row " +
                                  std::to_string(i) + " is outside the label space");
  }
}

void validate(const UnlabeledDataset& data) {
  if (data.features.rows() < 1) throw std::invalid_argument("unlabeled dataset must hold at least one instance");
  if (!data.features.allFinite()) throw std::invalid_argument("unlabeled dataset contains non-finite features");
}

LabeledDataset concatenate(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.dim() != b.dim()) throw std::invalid_argument("cannot concatenate datasets of different dimension");
  LabeledDataset out;
  out.features.resize(a.features.rows() + b.features.rows(), a.dim());
  out.features << a.features, b.features;
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.provenance = a.provenance;
  return out;
}

}  // namespace cofed

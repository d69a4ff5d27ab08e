#include "cofed/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace cofed {
namespace {

/// Dense positions for the categories in the union of all label spaces.
struct CategoryIndex {
  std::vector<CategoryId> categories;

  explicit CategoryIndex(std::span<const LabelSpace> spaces) {
    for (const auto& s : spaces) categories.insert(categories.end(), s.begin(), s.end());
    std::sort(categories.begin(), categories.end());
    categories.erase(std::unique(categories.begin(), categories.end()), categories.end());
  }

  std::size_t position(CategoryId c) const {
    return static_cast<std::size_t>(std::lower_bound(categories.begin(), categories.end(), c) - categories.begin());
  }
  std::size_t size() const { return categories.size(); }
};

void check_inputs(std::span<const PredictionVector> predictions, std::span<const LabelSpace> spaces, double alpha,
                  std::size_t m) {
  if (predictions.size() != spaces.size())
    throw std::invalid_argument("got " + std::to_string(predictions.size()) + " prediction vectors for " +
                                std::to_string(spaces.size()) + " label spaces");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].size() != m)
      throw std::invalid_argument("participant " + std::to_string(i) + " sent " +
                                  std::to_string(predictions[i].size()) + " predictions, expected " +
                                  std::to_string(m));
    for (std::size_t j = 0; j < m; ++j)
      if (!spaces[i].contains(predictions[i][j]))
        throw std::invalid_argument("participant " + std::to_string(i) + " predicted category " +
                                    std::to_string(predictions[i][j].value) + " at index " + std::to_string(j) +
                                    " outside its label space");
  }
}

PseudolabelSets empty_sets(const CategoryIndex& index) {
  PseudolabelSets sets;
  for (auto c : index.categories) sets[c];
  return sets;
}

double ascending_sum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  return std::accumulate(values.begin(), values.end(), 0.0);
}

}  // namespace

std::size_t PseudolabelBundle::total() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.indices.size();
  return n;
}

PseudolabelSets aggregate(std::span<const PredictionVector> predictions, std::span<const LabelSpace> label_spaces,
                          double alpha, std::size_t m) {
  check_inputs(predictions, label_spaces, alpha, m);
  const CategoryIndex index(label_spaces);
  std::vector<long> total(index.size(), 0);
  for (const auto& space : label_spaces)
    for (auto c : space) ++total[index.position(c)];

  auto sets = empty_sets(index);
  std::vector<long> count(index.size(), 0);
  std::vector<std::size_t> touched;
  for (std::size_t j = 0; j < m; ++j) {
    touched.clear();
    for (const auto& p : predictions) {
      const auto k = index.position(p[j]);
      if (count[k]++ == 0) touched.push_back(k);
    }
    std::sort(touched.begin(), touched.end());
    for (auto k : touched) {
      if (static_cast<double>(count[k]) / static_cast<double>(total[k]) > alpha)
        sets[index.categories[k]].push_back(j);
      count[k] = 0;
    }
  }
  return sets;
}

PseudolabelSets aggregate_weighted(std::span<const PredictionVector> predictions,
                                   std::span<const LabelSpace> label_spaces, std::span<const double> weights,
                                   double alpha, std::size_t m) {
  check_inputs(predictions, label_spaces, alpha, m);
  if (weights.size() != predictions.size())
    throw std::invalid_argument("expected one credibility weight per participant");
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw std::invalid_argument("credibility weight of participant " + std::to_string(i) +
                                  " must be finite and non-negative");

  const CategoryIndex index(label_spaces);
  std::vector<std::vector<double>> owners(index.size());
  for (std::size_t i = 0; i < label_spaces.size(); ++i)
    for (auto c : label_spaces[i]) owners[index.position(c)].push_back(weights[i]);
  std::vector<double> total(index.size());
  for (std::size_t k = 0; k < index.size(); ++k) {
    total[k] = ascending_sum(owners[k]);
    if (!(total[k] > 0.0))
      throw std::invalid_argument("every owner of category " + std::to_string(index.categories[k].value) +
                                  " has zero weight");
  }

  auto sets = empty_sets(index);
  std::vector<std::vector<double>> votes(index.size());
  std::vector<std::size_t> touched;
  for (std::size_t j = 0; j < m; ++j) {
    touched.clear();
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      const auto k = index.position(predictions[i][j]);
      if (votes[k].empty()) touched.push_back(k);
      votes[k].push_back(weights[i]);
    }
    std::sort(touched.begin(), touched.end());
    for (auto k : touched) {
      if (ascending_sum(votes[k]) / total[k] > alpha) sets[index.categories[k]].push_back(j);
      votes[k].clear();
    }
  }
  return sets;
}

PseudolabelBundle build_bundle(const PseudolabelSets& sets, const LabelSpace& space, int owner,
                               ConflictScope scope) {
  std::unordered_map<std::size_t, int> claims;
  for (const auto& [category, indices] : sets) {
    if (scope == ConflictScope::PerParticipant && !space.contains(category)) continue;
    for (auto j : indices) ++claims[j];
  }
  PseudolabelBundle bundle;
  bundle.owner = owner;
  for (const auto& [category, indices] : sets) {
    if (!space.contains(category)) continue;
    PseudolabelSet entry{category, {}};
    std::copy_if(indices.begin(), indices.end(), std::back_inserter(entry.indices),
                 [&](std::size_t j) { return claims[j] == 1; });
    bundle.entries.push_back(std::move(entry));
  }
  return bundle;
}

LabeledDataset materialize(const PseudolabelBundle& bundle, const UnlabeledDataset& pub) {
  LabeledDataset out;
  out.provenance = "pseudolabels";
  out.features.resize(static_cast<Eigen::Index>(bundle.total()), pub.dim());
  Eigen::Index row = 0;
  for (const auto& entry : bundle.entries) {
    for (auto j : entry.indices) {
      if (j >= pub.size())
        throw std::out_of_range("bundle references index " + std::to_string(j) + " but the public set holds " +
                                std::to_string(pub.size()) + " instances");
      out.features.row(row++) = pub.features.row(static_cast<Eigen::Index>(j));
      out.labels.push_back(entry.category);
    }
  }
  return out;
}

std::size_t total_pseudolabels(const PseudolabelSets& sets) {
  std::size_t n = 0;
  for (const auto& [c, indices] : sets) n += indices.size();
  return n;
}

}  // namespace cofed

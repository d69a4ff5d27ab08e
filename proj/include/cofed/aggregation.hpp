#pragma once

#include "cofed/core.hpp"

#include <map>
#include <span>
#include <vector>

namespace cofed {

/// Indices into the public set ratified for one category, sorted ascending.
struct PseudolabelSet {
  CategoryId category;
  std::vector<std::size_t> indices;

  friend bool operator==(const PseudolabelSet&, const PseudolabelSet&) = default;
};

/// category -> ascending public-set indices. Every category in the union of
/// the label spaces has an entry, possibly empty.
using PseudolabelSets = std::map<CategoryId, std::vector<std::size_t>>;

/// One participant's share of the aggregation: entries restricted to its
/// label space, index sets pairwise disjoint.
struct PseudolabelBundle {
  int owner = 0;
  std::vector<PseudolabelSet> entries;

  std::size_t total() const;
  friend bool operator==(const PseudolabelBundle&, const PseudolabelBundle&) = default;
};

/// Where a conflicting index is dropped.
enum class ConflictScope {
  /// Only indices claimed by two categories inside the owner's space.
  PerParticipant,
  /// Any index claimed by two categories anywhere in the federation.
  Global,
};

/// Thresholded voting over participant predictions.
///
/// For every index and category c, let TOTAL(c) be the number of participants
/// whose label space holds c and COUNT(c) the number predicting c there; the
/// index joins P_c iff COUNT(c) / TOTAL(c) > alpha. alpha = 1 therefore yields
/// empty sets, alpha = 0 admits any single vote.
PseudolabelSets aggregate(std::span<const PredictionVector> predictions, std::span<const LabelSpace> label_spaces,
                          double alpha, std::size_t m);

/// As `aggregate`, with TOTAL and COUNT summed over participant weights.
/// Weights must be finite and non-negative, and every category needs an owner
/// with positive weight. Sums are taken in ascending weight order so the result
/// does not depend on participant order.
PseudolabelSets aggregate_weighted(std::span<const PredictionVector> predictions,
                                   std::span<const LabelSpace> label_spaces, std::span<const double> weights,
                                   double alpha, std::size_t m);

/// Restricts `sets` to `space` and removes conflicting indices from every entry.
PseudolabelBundle build_bundle(const PseudolabelSets& sets, const LabelSpace& space, int owner = 0,
                               ConflictScope scope = ConflictScope::PerParticipant);

/// Bundle rows as a labeled dataset drawn from the public features.
LabeledDataset materialize(const PseudolabelBundle& bundle, const UnlabeledDataset& pub);

std::size_t total_pseudolabels(const PseudolabelSets& sets);

}  // namespace cofed

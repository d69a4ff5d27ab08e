#pragma once

#include "cofed/core.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace cofed {

struct TaxonomySpec {
  int n_superclasses = 10;
  int subclasses_per_superclass = 3;
  int instances_per_subclass = 600;
  int dim = 20;
  /// Std-dev of superclass centres around the origin.
  double superclass_spread = 1.0;
  /// Std-dev of subclass means around their superclass centre.
  double subclass_spread = 1.0;
  /// Within-cluster isotropic std-dev.
  double noise = 3.5;

  friend bool operator==(const TaxonomySpec&, const TaxonomySpec&) = default;
};

/// Superclass/subclass structure with one Gaussian cluster per subclass.
/// Subclass `s` belongs to superclass `s / subclasses_per_superclass`.
struct SubclassTaxonomy {
  int n_superclasses = 0;
  int subclasses_per_superclass = 0;
  Eigen::MatrixXd means;  // one row per subclass
  double noise = 1.0;

  int n_subclasses() const { return n_superclasses * subclasses_per_superclass; }
  int superclass_of(int subclass) const { return subclass / subclasses_per_superclass; }
  Eigen::Index dim() const { return means.cols(); }
};

/// Labeled pool whose labels are superclass ids; `subclass` tags each row.
struct TaxonomyPool {
  LabeledDataset data;
  std::vector<int> subclass;
};

struct GeneratedTaxonomy {
  TaxonomyPool pool;
  SubclassTaxonomy taxonomy;
};

/// Draws cluster means, then `instances_per_subclass` samples per subclass.
GeneratedTaxonomy generate_taxonomy(const TaxonomySpec& spec, std::uint64_t seed);

/// Fresh draws from an existing taxonomy (e.g. a shared test pool).
TaxonomyPool sample_taxonomy(const SubclassTaxonomy& taxonomy, int per_subclass,
                             std::uint64_t seed, std::string provenance = "synthetic");

struct IntRange {
  int lo = 1;
  int hi = 1;

  friend bool operator==(const IntRange&, const IntRange&) = default;
};

enum class PartitionMode { IID, NonIID };

struct PartitionSpec {
  int n_participants = 10;
  IntRange superclasses_per_participant{4, 5};
  int instances_per_superclass = 50;
  PartitionMode mode = PartitionMode::NonIID;
  IntRange subclasses_owned{1, 2};
  /// Subclasses withheld from every local dataset.
  std::vector<int> held_out_subclasses;
  std::uint64_t seed = 0;

  friend bool operator==(const PartitionSpec&, const PartitionSpec&) = default;
};

inline constexpr int kOverlapResampleLimit = 1000;

struct ParticipantShard {
  int id = 0;
  LabelSpace space;
  LabeledDataset train;
  /// superclass -> subclasses this participant may draw from.
  std::map<int, std::vector<int>> owned_subclasses;
};

/// Assigns label spaces (resampled until every space overlaps another) and
/// draws disjoint local training sets from the pool.
std::vector<ParticipantShard> partition(const TaxonomyPool& pool, const SubclassTaxonomy& taxonomy,
                                        const PartitionSpec& spec);

/// Restricts a pool to the superclasses of `space`.
LabeledDataset restrict_to(const TaxonomyPool& pool, const LabelSpace& space);

enum class UnlabeledStrategy {
  /// Uniform inside the pool's bounding box, widened by `margin` per axis.
  UniformRandomValid,
  /// Gaussian draws from subclasses withheld from every local dataset.
  FromHeldOutSubclasses,
  /// Fresh draws from every cluster of the taxonomy, labels discarded.
  FromTaxonomy,
};

struct UnlabeledSpec {
  int size = 2000;
  UnlabeledStrategy strategy = UnlabeledStrategy::FromTaxonomy;
  /// Bounding-box expansion per axis, as a fraction of the axis extent.
  double margin = 0.25;

  friend bool operator==(const UnlabeledSpec&, const UnlabeledSpec&) = default;
};

/// Rows are generated sequentially, so a smaller `size` under the same seed
/// yields a prefix of a larger one.
UnlabeledDataset generate_unlabeled(const TaxonomyPool& pool, const SubclassTaxonomy& taxonomy,
                                    const std::vector<int>& held_out_subclasses,
                                    const UnlabeledSpec& spec, std::uint64_t seed);

}  // namespace cofed

#include "cofed/data.hpp"

#include "cofed/seeds.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

namespace cofed {
namespace {

void check_spec(const TaxonomySpec& spec) {
  if (spec.n_superclasses < 1 || spec.subclasses_per_superclass < 1 || spec.instances_per_subclass < 1 ||
      spec.dim < 1)
    throw std::invalid_argument("taxonomy counts must be positive");
  if (!(spec.noise > 0.0) || spec.superclass_spread < 0.0 || spec.subclass_spread < 0.0)
    throw std::invalid_argument("taxonomy scales must be non-negative (noise positive)");
}

void check_range(const IntRange& r, const char* name, int upper) {
  if (r.lo < 1 || r.hi < r.lo || r.hi > upper)
    throw std::invalid_argument(std::string(name) + " range [" + std::to_string(r.lo) + ", " +
                                std::to_string(r.hi) + "] must lie within [1, " + std::to_string(upper) + "]");
}

}  // namespace

GeneratedTaxonomy generate_taxonomy(const TaxonomySpec& spec, std::uint64_t seed) {
  check_spec(spec);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  SubclassTaxonomy tax;
  tax.n_superclasses = spec.n_superclasses;
  tax.subclasses_per_superclass = spec.subclasses_per_superclass;
  tax.noise = spec.noise;
  tax.means.resize(tax.n_subclasses(), spec.dim);
  for (int s = 0; s < spec.n_superclasses; ++s) {
    Eigen::RowVectorXd centre(spec.dim);
    for (int j = 0; j < spec.dim; ++j) centre(j) = spec.superclass_spread * normal(rng);
    for (int k = 0; k < spec.subclasses_per_superclass; ++k) {
      const int sub = s * spec.subclasses_per_superclass + k;
      for (int j = 0; j < spec.dim; ++j) tax.means(sub, j) = centre(j) + spec.subclass_spread * normal(rng);
    }
  }
  auto pool = sample_taxonomy(tax, spec.instances_per_subclass, splitmix64(seed));
  return {std::move(pool), std::move(tax)};
}

TaxonomyPool sample_taxonomy(const SubclassTaxonomy& taxonomy, int per_subclass, std::uint64_t seed,
                             std::string provenance) {
  if (per_subclass < 1) throw std::invalid_argument("samples per subclass must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto n = static_cast<Eigen::Index>(taxonomy.n_subclasses()) * per_subclass;
  TaxonomyPool pool;
  pool.data.provenance = std::move(provenance);
  pool.data.features.resize(n, taxonomy.dim());
  pool.data.labels.reserve(static_cast<std::size_t>(n));
  pool.subclass.reserve(static_cast<std::size_t>(n));
  Eigen::Index row = 0;
  for (int sub = 0; sub < taxonomy.n_subclasses(); ++sub) {
    for (int i = 0; i < per_subclass; ++i, ++row) {
      for (Eigen::Index j = 0; j < taxonomy.dim(); ++j)
        pool.data.features(row, j) = taxonomy.means(sub, j) + taxonomy.noise * normal(rng);
      pool.data.labels.emplace_back(static_cast<std::uint32_t>(taxonomy.superclass_of(sub)));
      pool.subclass.push_back(sub);
    }
  }
  return pool;
}

std::vector<ParticipantShard> partition(const TaxonomyPool& pool, const SubclassTaxonomy& taxonomy,
                                        const PartitionSpec& spec) {
  if (spec.n_participants < 1) throw std::invalid_argument("partition needs at least one participant");
  if (spec.instances_per_superclass < 1) throw std::invalid_argument("instances per superclass must be positive");
  check_range(spec.superclasses_per_participant, "superclasses per participant", taxonomy.n_superclasses);
  if (spec.mode == PartitionMode::NonIID)
    check_range(spec.subclasses_owned, "owned subclasses", taxonomy.subclasses_per_superclass);
  const std::set<int> held_out(spec.held_out_subclasses.begin(), spec.held_out_subclasses.end());
  for (int h : held_out)
    if (h < 0 || h >= taxonomy.n_subclasses())
      throw std::invalid_argument("held-out subclass " + std::to_string(h) + " does not exist");

  std::mt19937_64 rng(spec.seed);
  const auto n = static_cast<std::size_t>(spec.n_participants);

  // Label-space assignment, resampled until every space overlaps another one.
  std::vector<std::vector<int>> spaces(n);
  std::vector<int> all_super(static_cast<std::size_t>(taxonomy.n_superclasses));
  std::iota(all_super.begin(), all_super.end(), 0);
  bool overlapping = false;
  for (int attempt = 0; attempt < kOverlapResampleLimit && !overlapping; ++attempt) {
    for (auto& space : spaces) {
      std::uniform_int_distribution<int> count(spec.superclasses_per_participant.lo,
                                               spec.superclasses_per_participant.hi);
      const int k = count(rng);
      std::shuffle(all_super.begin(), all_super.end(), rng);
      space.assign(all_super.begin(), all_super.begin() + k);
      std::sort(space.begin(), space.end());
    }
    overlapping = true;
    for (std::size_t i = 0; i < n && n >= 2 && overlapping; ++i) {
      bool found = false;
      for (std::size_t j = 0; j < n && !found; ++j) {
        if (i == j) continue;
        std::vector<int> common;
        std::set_intersection(spaces[i].begin(), spaces[i].end(), spaces[j].begin(), spaces[j].end(),
                              std::back_inserter(common));
        found = !common.empty();
      }
      overlapping = found;
    }
  }
  if (!overlapping)
    throw std::runtime_error("could not assign overlapping label spaces after " +
                             std::to_string(kOverlapResampleLimit) + " attempts");

  // Remaining pool rows per subclass, in a seeded random order.
  std::vector<std::vector<std::size_t>> remaining(static_cast<std::size_t>(taxonomy.n_subclasses()));
  for (std::size_t r = 0; r < pool.subclass.size(); ++r) {
    if (!held_out.contains(pool.subclass[r])) remaining[static_cast<std::size_t>(pool.subclass[r])].push_back(r);
  }

  std::vector<ParticipantShard> shards(n);
  for (std::size_t p = 0; p < n; ++p) {
    auto& shard = shards[p];
    shard.id = static_cast<int>(p);
    std::vector<CategoryId> cats;
    std::vector<std::size_t> rows;
    for (int s : spaces[p]) {
      cats.emplace_back(static_cast<std::uint32_t>(s));
      std::vector<int> eligible;
      for (int k = 0; k < taxonomy.subclasses_per_superclass; ++k) {
        const int sub = s * taxonomy.subclasses_per_superclass + k;
        if (!held_out.contains(sub)) eligible.push_back(sub);
      }
      if (eligible.empty())
        throw std::runtime_error("superclass " + std::to_string(s) + " has every subclass held out");
      std::vector<int> owned = eligible;
      if (spec.mode == PartitionMode::NonIID) {
        std::uniform_int_distribution<int> count(spec.subclasses_owned.lo, spec.subclasses_owned.hi);
        const int k = std::min<int>(count(rng), static_cast<int>(eligible.size()));
        std::shuffle(owned.begin(), owned.end(), rng);
        owned.resize(static_cast<std::size_t>(k));
        std::sort(owned.begin(), owned.end());
      }
      std::vector<std::size_t> candidates;
      for (int sub : owned) {
        const auto& avail = remaining[static_cast<std::size_t>(sub)];
        candidates.insert(candidates.end(), avail.begin(), avail.end());
      }
      const auto need = static_cast<std::size_t>(spec.instances_per_superclass);
      if (candidates.size() < need)
        throw std::runtime_error("pool exhausted: participant " + std::to_string(p) + " needs " +
                                 std::to_string(need) + " instances of superclass " + std::to_string(s) +
                                 " but only " + std::to_string(candidates.size()) + " remain");
      std::sort(candidates.begin(), candidates.end());
      std::shuffle(candidates.begin(), candidates.end(), rng);
      candidates.resize(need);
      std::sort(candidates.begin(), candidates.end());
      for (int sub : owned) {
        auto& avail = remaining[static_cast<std::size_t>(sub)];
        std::erase_if(avail, [&](std::size_t r) {
          return std::binary_search(candidates.begin(), candidates.end(), r);
        });
      }
      rows.insert(rows.end(), candidates.begin(), candidates.end());
      shard.owned_subclasses[s] = std::move(owned);
    }
    shard.space = LabelSpace(std::move(cats));
    shard.train.provenance = "participant-" + std::to_string(p);
    shard.train.features.resize(static_cast<Eigen::Index>(rows.size()), pool.data.dim());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      shard.train.features.row(static_cast<Eigen::Index>(i)) = pool.data.features.row(static_cast<Eigen::Index>(rows[i]));
      shard.train.labels.push_back(pool.data.labels[rows[i]]);
    }
    shard.train.origin = std::move(rows);
  }
  return shards;
}

LabeledDataset restrict_to(const TaxonomyPool& pool, const LabelSpace& space) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < pool.data.labels.size(); ++r)
    if (space.contains(pool.data.labels[r])) rows.push_back(r);
  LabeledDataset out;
  out.provenance = pool.data.provenance;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), pool.data.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = pool.data.features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(pool.data.labels[rows[i]]);
  }
  out.origin = std::move(rows);
  return out;
}

UnlabeledDataset generate_unlabeled(const TaxonomyPool& pool, const SubclassTaxonomy& taxonomy,
                                    const std::vector<int>& held_out_subclasses, const UnlabeledSpec& spec,
                                    std::uint64_t seed) {
  if (spec.size < 1) throw std::invalid_argument("unlabeled dataset size must be at least 1");
  std::mt19937_64 rng(seed);
  UnlabeledDataset out;
  const Eigen::Index d = taxonomy.dim() > 0 ? taxonomy.dim() : pool.data.dim();
  out.features.resize(spec.size, d);

  if (spec.strategy == UnlabeledStrategy::UniformRandomValid) {
    if (pool.data.features.rows() == 0) throw std::invalid_argument("bounding box needs a non-empty pool");
    if (spec.margin < 0.0) throw std::invalid_argument("bounding-box margin must be non-negative");
    const Eigen::RowVectorXd lo = pool.data.features.colwise().minCoeff();
    const Eigen::RowVectorXd hi = pool.data.features.colwise().maxCoeff();
    const Eigen::RowVectorXd pad = spec.margin * (hi - lo);
    std::vector<std::uniform_real_distribution<double>> axes;
    for (Eigen::Index j = 0; j < d; ++j) axes.emplace_back(lo(j) - pad(j), hi(j) + pad(j));
    for (Eigen::Index r = 0; r < out.features.rows(); ++r)
      for (Eigen::Index j = 0; j < d; ++j) out.features(r, j) = axes[static_cast<std::size_t>(j)](rng);
    return out;
  }

  std::vector<int> sources;
  if (spec.strategy == UnlabeledStrategy::FromTaxonomy) {
    sources.resize(static_cast<std::size_t>(taxonomy.n_subclasses()));
    std::iota(sources.begin(), sources.end(), 0);
  } else {
    sources = held_out_subclasses;
  }
  if (sources.empty()) throw std::invalid_argument("no held-out subclasses available for held-out unlabeled data");
  for (int h : sources)
    if (h < 0 || h >= taxonomy.n_subclasses())
      throw std::invalid_argument("subclass " + std::to_string(h) + " does not exist");
  std::uniform_int_distribution<std::size_t> pick(0, sources.size() - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index r = 0; r < out.features.rows(); ++r) {
    const int sub = sources[pick(rng)];
    for (Eigen::Index j = 0; j < d; ++j) out.features(r, j) = taxonomy.means(sub, j) + taxonomy.noise * normal(rng);
  }
  return out;
}

}  // namespace cofed

#pragma once

// Shared helpers for the test binaries: seeded case generators, a brute-force
// vote recount and scratch directories.

#include "cofed/aggregation.hpp"
#include "cofed/core.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace cofed::testing {

struct VoteCase {
  std::vector<LabelSpace> spaces;
  std::vector<PredictionVector> predictions;
  /// Multiples of one half, so weight sums are exact in binary.
  std::vector<double> weights;
  std::size_t m = 0;
};

inline LabelSpace random_space(std::mt19937_64& rng, int n_categories) {
  std::vector<CategoryId> cats;
  std::bernoulli_distribution pick(0.5);
  for (int c = 0; c < n_categories; ++c)
    if (pick(rng)) cats.emplace_back(static_cast<std::uint32_t>(c));
  if (cats.empty()) cats.emplace_back(static_cast<std::uint32_t>(rng() % static_cast<std::uint64_t>(n_categories)));
  return LabelSpace(std::move(cats));
}

inline VoteCase random_vote_case(std::mt19937_64& rng, int max_n, int max_m, int max_categories) {
  VoteCase vc;
  const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_n));
  const int n_c = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_categories));
  vc.m = 1 + rng() % static_cast<std::uint64_t>(max_m);
  for (int i = 0; i < n; ++i) {
    vc.spaces.push_back(random_space(rng, n_c));
    PredictionVector p;
    for (std::size_t j = 0; j < vc.m; ++j) p.push_back(vc.spaces.back()[rng() % vc.spaces.back().size()]);
    vc.predictions.push_back(std::move(p));
    vc.weights.push_back(0.5 * static_cast<double>(rng() % 7));
  }
  return vc;
}

/// Exhaustive per-(index, category) recount with exact rational comparison:
/// index j is in P_c iff votes(c, j) / owners(c) > num / den. Weights are
/// counted in halves. Returns nullopt when some category has zero owner mass.
inline std::optional<PseudolabelSets> recount(const VoteCase& vc, int num, int den, bool weighted) {
  std::set<std::uint32_t> universe;
  for (const auto& s : vc.spaces)
    for (auto c : s) universe.insert(c.value);
  auto halves = [&](std::size_t i) -> long { return weighted ? std::lround(vc.weights[i] * 2.0) : 2L; };
  PseudolabelSets out;
  for (auto c : universe) {
    long total = 0;
    for (std::size_t i = 0; i < vc.spaces.size(); ++i)
      if (vc.spaces[i].contains(CategoryId(c))) total += halves(i);
    if (total == 0) return std::nullopt;
    auto& indices = out[CategoryId(c)];
    for (std::size_t j = 0; j < vc.m; ++j) {
      long count = 0;
      for (std::size_t i = 0; i < vc.predictions.size(); ++i)
        if (vc.predictions[i][j].value == c) count += halves(i);
      if (count * den > static_cast<long>(num) * total) indices.push_back(j);
    }
  }
  return out;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("cofed-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::size_t count_total(const PseudolabelSets& sets) {
  std::size_t n = 0;
  for (const auto& [c, idx] : sets) n += idx.size();
  return n;
}

}  // namespace cofed::testing

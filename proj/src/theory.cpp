#include "cofed/theory.hpp"

#include <algorithm>
#include <map>

namespace cofed::theory {

void validate(const TheoryParams& p) {
  if (p.labeled_size == 0) throw std::invalid_argument("|L| must be positive");
  if (!(p.eps_f > 0.0 && p.eps_f < 0.5)) throw std::invalid_argument("eps_f must lie in (0, 1/2)");
  if (!(p.eps_g > 0.0 && p.eps_g < 0.5)) throw std::invalid_argument("eps_g must lie in (0, 1/2)");
  if (!(p.delta > 0.0 && p.delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (!(p.d_g_fprime >= 0.0 && p.d_g_fprime <= 1.0)) throw std::invalid_argument("d(g, f') must lie in [0, 1]");
}

double empirical_disagreement(std::span<const CategoryId> a, std::span<const CategoryId> b) {
  if (a.size() != b.size()) throw std::invalid_argument("prediction vectors differ in length");
  if (a.empty()) throw std::invalid_argument("disagreement needs a non-empty sample");
  std::size_t differ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differ += a[i] != b[i];
  return static_cast<double>(differ) / static_cast<double>(a.size());
}

bool improvement_condition_holds(const TheoryParams& p) {
  validate(p);
  const double u = static_cast<double>(p.pseudo_size) * p.eps_g;
  if (!(u > 0.0)) return false;
  return static_cast<double>(p.labeled_size) * p.eps_f < improvement_condition_bound(u);
}

double retrained_error_bound(double eps_f, double pseudo_to_labeled, double eps_g, double d_g_fprime) {
  return std::max(eps_f + pseudo_to_labeled * (eps_g - d_g_fprime), 0.0);
}

double eps_f_prime(const TheoryParams& p) {
  validate(p);
  return retrained_error_bound(p.eps_f, static_cast<double>(p.pseudo_size) / static_cast<double>(p.labeled_size),
                               p.eps_g, p.d_g_fprime);
}

RoundAnalysis analyze_round(const RoundReport& report, const RoundArtifacts& art) {
  const auto n = art.ids.size();
  if (n == 0 || report.participants.size() != n || art.local_predictions.size() != n || art.bundles.size() != n ||
      art.federated_predictions.size() != n || art.spaces.size() != n || art.train_sizes.size() != n)
    throw std::invalid_argument("round artifacts are missing or inconsistent with the report");

  std::vector<double> eps(n);
  for (std::size_t i = 0; i < n; ++i) eps[i] = 1.0 - report.participants[i].initial_accuracy;

  RoundAnalysis out;
  for (std::size_t i = 0; i < n; ++i) {
    ParticipantAnalysis a;
    a.id = art.ids[i];
    a.labeled_size = art.train_sizes[i];
    a.pseudo_size = art.bundles[i].total();
    a.eps_f = eps[i];

    double sum = 0.0;
    std::size_t peers = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !intersects(art.spaces[i], art.spaces[j])) continue;
      sum += eps[j];
      ++peers;
    }
    a.eps_g = peers ? sum / static_cast<double>(peers) : a.eps_f;

    std::size_t f_differs = 0, fprime_differs = 0;
    for (const auto& entry : art.bundles[i].entries) {
      for (auto j : entry.indices) {
        f_differs += art.local_predictions[i].at(j) != entry.category;
        fprime_differs += art.federated_predictions[i].at(j) != entry.category;
      }
    }
    if (a.pseudo_size > 0) {
      a.d_f_g = static_cast<double>(f_differs) / static_cast<double>(a.pseudo_size);
      a.d_g_fprime = static_cast<double>(fprime_differs) / static_cast<double>(a.pseudo_size);
    }
    const double ratio = a.labeled_size ? static_cast<double>(a.pseudo_size) / static_cast<double>(a.labeled_size) : 0.0;
    a.eps_f_prime = retrained_error_bound(a.eps_f, ratio, a.eps_g, a.d_g_fprime);
    const double u = static_cast<double>(a.pseudo_size) * a.eps_g;
    if (u > 0.0) {
      a.condition_bound = improvement_condition_bound(u);
      a.condition_holds = static_cast<double>(a.labeled_size) * a.eps_f < *a.condition_bound;
    }
    a.preconditions_met = a.eps_f < 0.5 && a.eps_g < 0.5;
    out.participants.push_back(a);
  }

  out.pairwise_disagreement.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      out.pairwise_disagreement[i][j] = out.pairwise_disagreement[j][i] =
          empirical_disagreement(art.local_predictions[i], art.local_predictions[j]);
  return out;
}

}  // namespace cofed::theory

#pragma once

#include "cofed/learners.hpp"
#include "cofed/orchestrator.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace cofed::theory {

/// Quantities of the cotraining error bound: a model f trained on |L| labeled
/// instances, a second model g pseudolabeling |P| instances, their error
/// bounds, the confidence level and the disagreement between g and the
/// retrained model f'.
struct TheoryParams {
  std::size_t labeled_size = 1;
  std::size_t pseudo_size = 0;
  double eps_f = 0.1;
  double eps_g = 0.1;
  double delta = 0.05;
  double d_g_fprime = 0.0;
};

/// eps_f, eps_g in (0, 1/2); delta in (0, 1); disagreement in [0, 1]; |L| > 0.
void validate(const TheoryParams& p);

/// Fraction of positions where two prediction vectors differ.
double empirical_disagreement(std::span<const CategoryId> a, std::span<const CategoryId> b);

/// Fraction of rows of `x` on which the two classifiers disagree.
template <class Derived>
double empirical_disagreement(const Classifier& h1, const Classifier& h2, const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() == 0) throw std::invalid_argument("disagreement needs a non-empty sample");
  const auto a = h1.predict_batch(x);
  const auto b = h2.predict_batch(x);
  return empirical_disagreement(a, b);
}

/// Upper limit on |L| * eps_f under which pseudolabels from g can still help:
/// (u!)^(1/u) * e - u with u = |P| * eps_g, the factorial continued through
/// Gamma(u + 1) for non-integer u. Strictly increasing on (0, inf).
template <class Scalar>
Scalar improvement_condition_bound(Scalar u) {
  if (!(u > Scalar(0)) || !std::isfinite(u)) throw std::invalid_argument("bound needs a positive |P| * eps_g");
  using std::exp;
  using std::lgamma;
  return exp(lgamma(u + Scalar(1)) / u) * std::numbers::e_v<Scalar> - u;
}

inline double improvement_condition_bound(std::size_t pseudo_size, double eps_g) {
  return improvement_condition_bound(static_cast<double>(pseudo_size) * eps_g);
}

/// |L| * eps_f < bound(|P| * eps_g).
bool improvement_condition_holds(const TheoryParams& p);

/// max(eps_f + (|P| / |L|) * (eps_g - d(g, f')), 0) without precondition checks.
double retrained_error_bound(double eps_f, double pseudo_to_labeled, double eps_g, double d_g_fprime);

/// Error bound of the retrained model f', valid at confidence delta when the
/// improvement condition holds.
double eps_f_prime(const TheoryParams& p);

struct ParticipantAnalysis {
  int id = 0;
  std::size_t labeled_size = 0;
  std::size_t pseudo_size = 0;
  /// 1 - accuracy of the phase-one model.
  double eps_f = 0.0;
  /// Mean phase-one error of the other participants sharing a category.
  double eps_g = 0.0;
  /// Disagreement of the phase-one model with the received pseudolabels.
  double d_f_g = 0.0;
  /// Disagreement of the update-phase model with the received pseudolabels.
  double d_g_fprime = 0.0;
  double eps_f_prime = 0.0;
  /// Absent when |P| * eps_g = 0.
  std::optional<double> condition_bound;
  bool condition_holds = false;
  /// Both error proxies below one half.
  bool preconditions_met = false;
};

struct RoundAnalysis {
  std::vector<ParticipantAnalysis> participants;
  /// Disagreement between phase-one models over the whole public set.
  std::vector<std::vector<double>> pairwise_disagreement;
};

/// Descriptive analysis of a finished round; the pseudolabel ensemble acts as g.
RoundAnalysis analyze_round(const RoundReport& report, const RoundArtifacts& artifacts);

}  // namespace cofed::theory

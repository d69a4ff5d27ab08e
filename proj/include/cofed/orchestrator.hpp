#pragma once

#include "cofed/aggregation.hpp"
#include "cofed/data.hpp"
#include "cofed/learners.hpp"
#include "cofed/training.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace cofed {

struct ParticipantConfig {
  int id = 0;
  LearnerKind learner = LearnerKind::Logistic;
  TrainConfig train;
  /// Credibility weight of this participant's votes.
  double weight = 1.0;

  friend bool operator==(const ParticipantConfig&, const ParticipantConfig&) = default;
};

struct FederationConfig {
  double alpha = 0.3;
  std::uint64_t master_seed = 1;
  TaxonomySpec taxonomy;
  int test_instances_per_subclass = 100;
  PartitionSpec partition;
  UnlabeledSpec unlabeled;
  std::vector<ParticipantConfig> participants;
  ConflictScope conflict_scope = ConflictScope::PerParticipant;
  int update_batch_size = kUpdateBatchSize;

  friend bool operator==(const FederationConfig&, const FederationConfig&) = default;
};

/// Throws std::invalid_argument describing the first violated invariant.
void validate(const FederationConfig& config);

/// One participant per partition slot, learner kinds cycling through `kinds`.
std::vector<ParticipantConfig> cycle_learners(int n, std::span<const LearnerKind> kinds,
                                              const TrainConfig& base = {});

struct ParticipantData {
  int id = 0;
  LabelSpace space;
  LabeledDataset train;
  LabeledDataset test;
  std::map<int, std::vector<int>> owned_subclasses;
};

struct FederationData {
  std::vector<ParticipantData> participants;
  UnlabeledDataset pub;
};

/// Synthetic federation: taxonomy, shared test pool, partitions and public
/// set, each from its own stream derived from the master seed.
FederationData synthesize(const FederationConfig& config);

struct ParticipantOutcome {
  int id = 0;
  LearnerKind learner = LearnerKind::Logistic;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t bundle_size = 0;
  /// Accuracy of the phase-one model.
  double initial_accuracy = 0.0;
  /// Accuracy of a model retrained on local data alone with the update budget.
  double local_accuracy = 0.0;
  double federated_accuracy = 0.0;
  /// federated / local, absent when local accuracy is zero.
  std::optional<double> relative_accuracy;

  friend bool operator==(const ParticipantOutcome&, const ParticipantOutcome&) = default;
};

struct RoundReport {
  double alpha = 0.0;
  std::size_t public_size = 0;
  std::vector<ParticipantOutcome> participants;
  std::map<CategoryId, std::size_t> pseudolabels_per_category;
  std::size_t total_pseudolabels = 0;
  double mean_local_accuracy = 0.0;
  double mean_federated_accuracy = 0.0;
  double mean_relative_accuracy = 0.0;

  friend bool operator==(const RoundReport&, const RoundReport&) = default;
};

/// Everything exchanged or derived during a round, kept for audit and analysis.
struct RoundArtifacts {
  std::vector<int> ids;
  std::vector<LabelSpace> spaces;
  std::vector<std::size_t> train_sizes;
  std::vector<PredictionVector> local_predictions;
  PseudolabelSets pseudolabels;
  std::vector<PseudolabelBundle> bundles;
  /// Update-phase models' predictions over the public set.
  std::vector<PredictionVector> federated_predictions;

  friend bool operator==(const RoundArtifacts&, const RoundArtifacts&) = default;
};

struct RoundResult {
  RoundReport report;
  RoundArtifacts artifacts;
};

/// Phase-one output: trained local models and their public-set predictions.
struct LocalPhase {
  std::vector<std::shared_ptr<const Classifier>> models;
  std::vector<PredictionVector> predictions;
};

LocalPhase run_local_phase(const FederationData& data, const FederationConfig& config);

/// Unweighted aggregation when every weight is one, weighted otherwise.
PseudolabelSets aggregate_votes(std::span<const PredictionVector> predictions, std::span<const LabelSpace> spaces,
                                std::span<const double> weights, double alpha, std::size_t m);

struct ParticipantUpdate {
  ParticipantOutcome outcome;
  PredictionVector federated_predictions;
};

/// Update training and evaluation for one participant once its bundle is known.
ParticipantUpdate update_participant(const FederationConfig& config, const ParticipantConfig& participant,
                                     const ParticipantData& data, const Classifier& local_model,
                                     const PseudolabelBundle& bundle, const UnlabeledDataset& pub);

/// Aggregation plus update training on top of a finished local phase.
RoundResult finish_round(const FederationData& data, const FederationConfig& config, const LocalPhase& local,
                         double alpha);

/// One full round: local training, pseudolabeling, aggregation, update training.
RoundResult run_round(const FederationData& data, const FederationConfig& config);
RoundResult run_round(const FederationConfig& config);

struct AlphaSweepPoint {
  double alpha = 0.0;
  RoundReport report;
  std::size_t total_pseudolabels = 0;
};

/// Same data and seeds for every alpha.
std::vector<AlphaSweepPoint> sweep_alpha(const FederationConfig& config, std::span<const double> alphas);
std::vector<AlphaSweepPoint> sweep_alpha(const FederationData& data, const FederationConfig& config,
                                         std::span<const double> alphas);

struct SizeSweepPoint {
  int size = 0;
  RoundReport report;
};

/// Public sets are nested: each size uses a prefix of the largest set.
std::vector<SizeSweepPoint> sweep_unlabeled_size(const FederationConfig& config, std::span<const int> sizes);
/// Uses prefixes of `full.pub`, which must be at least as large as every size.
std::vector<SizeSweepPoint> sweep_unlabeled_size(const FederationData& full, const FederationConfig& config,
                                                 std::span<const int> sizes);

/// Per-participant seeds.
std::uint64_t local_seed(const FederationConfig& config, int participant);
std::uint64_t update_seed(const FederationConfig& config, int participant);

/// Federated model and its equal-budget local twin for one participant.
struct UpdateOutcome {
  std::unique_ptr<Classifier> federated;
  std::unique_ptr<Classifier> baseline;
};

UpdateOutcome run_update_phase(const ParticipantConfig& participant, const LabelSpace& space,
                               const LabeledDataset& train, const PseudolabelBundle& bundle,
                               const UnlabeledDataset& pub, std::uint64_t seed, int update_batch_size);

}  // namespace cofed

#pragma once

#include "cofed/aggregation.hpp"
#include "cofed/learners.hpp"

namespace cofed {

inline constexpr int kUpdateBatchSize = 1000;

/// Update-phase settings derived from the local ones: the same hyperparameters
/// except a minibatch of min(update_batch, combined_size), a fixed step budget
/// of `epochs * ceil(combined_size / batch)` and the supplied seed.
TrainConfig update_phase_config(const TrainConfig& local, std::size_t combined_size, std::uint64_t seed,
                                int update_batch = kUpdateBatchSize);

/// Retrains from scratch on the local data plus the materialized bundle.
std::unique_ptr<Classifier> update_train(LearnerKind kind, const LabelSpace& space, const LabeledDataset& local,
                                         const PseudolabelBundle& bundle, const UnlabeledDataset& pub,
                                         const TrainConfig& update_config);

}  // namespace cofed

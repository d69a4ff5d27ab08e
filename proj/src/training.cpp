#include "cofed/training.hpp"

#include <algorithm>

namespace cofed {

TrainConfig update_phase_config(const TrainConfig& local, std::size_t combined_size, std::uint64_t seed,
                                int update_batch) {
  if (combined_size == 0) throw std::invalid_argument("update training needs a non-empty combined dataset");
  if (update_batch < 1) throw std::invalid_argument("update batch size must be positive");
  TrainConfig c = local;
  c.batch_size = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(update_batch), combined_size));
  const auto batch = static_cast<std::size_t>(c.batch_size);
  c.steps = static_cast<long>(static_cast<std::size_t>(local.epochs) * ((combined_size + batch - 1) / batch));
  c.seed = seed;
  return c;
}

std::unique_ptr<Classifier> update_train(LearnerKind kind, const LabelSpace& space, const LabeledDataset& local,
                                         const PseudolabelBundle& bundle, const UnlabeledDataset& pub,
                                         const TrainConfig& update_config) {
  for (const auto& entry : bundle.entries)
    if (!space.contains(entry.category))
      throw std::invalid_argument("bundle carries category " + std::to_string(entry.category.value) +
                                  " outside the participant's label space");
  auto combined = concatenate(local, materialize(bundle, pub));
  if (combined.empty()) throw std::invalid_argument("update training needs a non-empty combined dataset");
  auto model = make_classifier(kind, space);
  model->fit(combined, update_config);
  return model;
}

}  // namespace cofed

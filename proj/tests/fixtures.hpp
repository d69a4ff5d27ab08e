#pragma once

#include "cofed/orchestrator.hpp"

namespace cofed::testing {

/// A federation small enough to run in well under a second.
inline FederationConfig small_federation(int n, std::uint64_t seed = 1) {
  FederationConfig c;
  c.master_seed = seed;
  c.taxonomy = TaxonomySpec{.n_superclasses = 4, .subclasses_per_superclass = 2, .instances_per_subclass = 80, .dim = 5};
  c.test_instances_per_subclass = 20;
  c.partition.n_participants = n;
  c.partition.superclasses_per_participant = {2, 3};
  c.partition.instances_per_superclass = 20;
  c.unlabeled.size = 200;
  TrainConfig t;
  t.epochs = 10;
  t.hidden = 8;
  const LearnerKind kinds[] = {LearnerKind::Logistic, LearnerKind::KNearest, LearnerKind::GaussianNaiveBayes,
                               LearnerKind::MLP};
  c.participants = cycle_learners(n, kinds, t);
  return c;
}

}  // namespace cofed::testing

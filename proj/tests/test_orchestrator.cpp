#include "cofed/orchestrator.hpp"
#include "fixtures.hpp"

#include <doctest.h>

using namespace cofed;
using testing::small_federation;

TEST_CASE("config validation") {
  auto c = small_federation(3);
  CHECK_NOTHROW(validate(c));
  c.alpha = 1.5;
  CHECK_THROWS(validate(c));
  c = small_federation(3);
  c.participants.pop_back();
  CHECK_THROWS_WITH(validate(c), doctest::Contains("3 participants"));
  c = small_federation(3);
  c.participants[1].id = 0;
  CHECK_THROWS_WITH(validate(c), doctest::Contains("duplicate"));
  c = small_federation(2);
  for (auto& p : c.participants) p.weight = 0.0;
  CHECK_THROWS(validate(c));
}

TEST_CASE("single participant round builds its bundle from its own pseudolabels") {
  const auto c = small_federation(1);
  const auto r = run_round(c);
  const auto& a = r.artifacts;
  REQUIRE(a.ids.size() == 1);
  const auto sets = aggregate(a.local_predictions, a.spaces, c.alpha, r.report.public_size);
  CHECK(a.pseudolabels == sets);
  CHECK(a.bundles[0] == build_bundle(sets, a.spaces[0], a.ids[0]));
  // One voter at alpha < 1 ratifies every one of its own predictions.
  CHECK(a.bundles[0].total() == r.report.public_size);
}

TEST_CASE("alpha = 1 leaves every bundle empty and the federated model equal to its twin") {
  auto c = small_federation(4);
  c.alpha = 1.0;
  const auto r = run_round(c);
  CHECK(r.report.total_pseudolabels == 0);
  for (const auto& b : r.artifacts.bundles) CHECK(b.total() == 0);
  for (const auto& o : r.report.participants) {
    CHECK(o.bundle_size == 0);
    CHECK(o.federated_accuracy == o.local_accuracy);
    if (o.relative_accuracy) CHECK(*o.relative_accuracy == 1.0);
  }
}

TEST_CASE("report fields are consistent with the artifacts") {
  const auto c = small_federation(4, 3);
  const auto r = run_round(c);
  const auto& rep = r.report;
  REQUIRE(rep.participants.size() == 4);
  double local = 0, fed = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& o = rep.participants[i];
    CHECK(o.id == r.artifacts.ids[i]);
    CHECK(o.bundle_size == r.artifacts.bundles[i].total());
    CHECK(o.train_size == r.artifacts.train_sizes[i]);
    for (double acc : {o.initial_accuracy, o.local_accuracy, o.federated_accuracy}) {
      CHECK(acc >= 0.0);
      CHECK(acc <= 1.0);
    }
    REQUIRE(o.relative_accuracy);
    CHECK(*o.relative_accuracy == o.federated_accuracy / o.local_accuracy);
    local += o.local_accuracy;
    fed += o.federated_accuracy;
  }
  CHECK(rep.mean_local_accuracy == doctest::Approx(local / 4).epsilon(1e-12));
  CHECK(rep.mean_federated_accuracy == doctest::Approx(fed / 4).epsilon(1e-12));
  std::size_t total = 0;
  for (const auto& [cat, n] : rep.pseudolabels_per_category) {
    CHECK(n == r.artifacts.pseudolabels.at(cat).size());
    total += n;
  }
  CHECK(total == rep.total_pseudolabels);
}

TEST_CASE("every bundled index is backed by enough votes") {
  auto c = small_federation(5, 4);
  c.alpha = 0.3;
  const auto r = run_round(c);
  const auto& a = r.artifacts;
  for (const auto& b : a.bundles)
    for (const auto& e : b.entries)
      for (auto j : e.indices) {
        int votes = 0, owners = 0;
        for (std::size_t i = 0; i < a.ids.size(); ++i) {
          owners += a.spaces[i].contains(e.category);
          votes += a.local_predictions[i][j] == e.category;
        }
        CHECK(static_cast<double>(votes) / owners > c.alpha);
      }
}

TEST_CASE("rounds are reproducible under the master seed") {
  const auto c = small_federation(4, 9);
  const auto a = run_round(c);
  const auto b = run_round(c);
  CHECK(a.report == b.report);
  CHECK(a.artifacts == b.artifacts);
  auto other = c;
  other.master_seed = 10;
  CHECK_FALSE(run_round(other).artifacts == a.artifacts);
}

TEST_CASE("per-participant seeds do not depend on federation size") {
  const auto small = small_federation(2, 5);
  const auto large = small_federation(6, 5);
  CHECK(local_seed(small, 1) == local_seed(large, 1));
  CHECK(update_seed(small, 1) == update_seed(large, 1));
  CHECK(local_seed(small, 1) != update_seed(small, 1));
}

TEST_CASE("a failing participant aborts the round with its id") {
  const auto c = small_federation(3, 2);
  auto data = synthesize(c);
  data.participants[2].train.labels[0] = CategoryId(999);
  CHECK_THROWS_WITH(run_round(data, c), doctest::Contains("participant 2"));
}

TEST_CASE("alpha sweep: counts shrink, alpha 1 gives none, repeats are identical") {
  const auto c = small_federation(4, 6);
  const std::vector<double> alphas{0.0, 0.3, 1.0};
  const auto pts = sweep_alpha(c, alphas);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].total_pseudolabels >= pts[1].total_pseudolabels);
  CHECK(pts[1].total_pseudolabels >= pts[2].total_pseudolabels);
  CHECK(pts[2].total_pseudolabels == 0);

  const std::vector<double> one{c.alpha};
  CHECK(sweep_alpha(c, one)[0].report == run_round(c).report);
  const std::vector<double> twice{0.2, 0.2};
  const auto rep = sweep_alpha(c, twice);
  CHECK(rep[0].report == rep[1].report);
  const std::vector<double> bad{1.2};
  CHECK_THROWS(sweep_alpha(c, bad));
}

TEST_CASE("size sweep: nested prefixes, repeats identical, size 1 completes") {
  const auto c = small_federation(3, 7);
  const std::vector<int> sizes{50, 50, 1};
  const auto pts = sweep_unlabeled_size(c, sizes);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].report == pts[1].report);
  CHECK(pts[2].report.public_size == 1);
  for (const auto& [cat, n] : pts[2].report.pseudolabels_per_category) CHECK(n <= 1);

  // The largest size equals a plain round at that size.
  auto at = c;
  at.unlabeled.size = 50;
  CHECK(pts[0].report == run_round(at).report);
  const std::vector<int> bad{0};
  CHECK_THROWS(sweep_unlabeled_size(c, bad));
}

TEST_CASE("weighted federations route through the weighted rule") {
  auto c = small_federation(3, 8);
  c.participants[0].weight = 3.0;
  const auto r = run_round(c);
  std::vector<double> w;
  for (const auto& p : c.participants) w.push_back(p.weight);
  CHECK(r.artifacts.pseudolabels ==
        aggregate_weighted(r.artifacts.local_predictions, r.artifacts.spaces, w, c.alpha, r.report.public_size));
}

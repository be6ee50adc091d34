#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "pmode/error.hpp"
#include "pmode/experiments.hpp"
#include "pmode/optimizer.hpp"
#include "support.hpp"

using namespace pmode;

namespace {

PartitionObjective four_point(LossKind loss = LossKind::kl) {
  return PartitionObjective(four_point_instance(), 2, EstimatorKind::gaussian, loss);
}

// Brute force over all k^m assignments with an independent loop.
std::vector<Assignment> all_assignments(std::size_t m, std::size_t k) {
  std::vector<Assignment> out;
  std::size_t total = 1;
  for (std::size_t i = 0; i < m; ++i) total *= k;
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<std::uint32_t> l(m);
    std::size_t c = code;
    for (std::size_t i = m; i-- > 0;) {
      l[i] = static_cast<std::uint32_t>(c % k);
      c /= k;
    }
    out.emplace_back(std::move(l), k);
  }
  return out;
}

} // namespace

TEST_CASE("evaluate_assignment on the four-point instance") {
  const auto split = four_point_instance();
  const LossSpec kl{LossKind::kl, {}};
  const auto good = evaluate_assignment(Assignment({0, 0, 1, 1}, 2), split, EstimatorKind::gaussian, kl);
  const auto bad = evaluate_assignment(Assignment({0, 1, 0, 1}, 2), split, EstimatorKind::gaussian, kl);
  CHECK(std::isfinite(good.loss));
  CHECK(good.loss < bad.loss);

  const auto again = evaluate_assignment(Assignment({0, 0, 1, 1}, 2), split, EstimatorKind::gaussian, kl);
  CHECK(again.loss == good.loss);

  const auto lumped = evaluate_assignment(Assignment({0, 0, 0, 0}, 2), split, EstimatorKind::gaussian, kl);
  CHECK(lumped.mixture.weight(0) == 1.0);
  CHECK(lumped.mixture.weight(1) == 0.0);
  CHECK(lumped.mixture.component(1) == nullptr);
  const auto single = MixtureDensity::single(fit_gaussian(split.estimation));
  CHECK(lumped.loss == doctest::Approx(kl_validation_loss(single, split.validation)).epsilon(1e-15));

  CHECK_THROWS_AS(evaluate_assignment(Assignment({0, 0, 1}, 2), split, EstimatorKind::gaussian, kl), ShapeError);
}

TEST_CASE("objective refuses L2 beyond the dimension limit") {
  const auto d = test::random_dataset(4, kMaxL2Dimension + 1, 1);
  CHECK_THROWS_AS(PartitionObjective(d, d, 2, EstimatorKind::gaussian, LossKind::l2), InvalidConfig);
}

TEST_CASE("exhaustive search") {
  SUBCASE("four-point optimum separates the clumps") {
    for (LossKind loss : {LossKind::kl, LossKind::l2}) {
      const auto best = exhaustive_pmode(four_point(loss));
      CHECK(best.assignment.labels() == std::vector<std::uint32_t>{0, 0, 1, 1});
      CHECK(best.evaluations == 16);
      for (const auto& a : all_assignments(4, 2)) CHECK(best.loss <= four_point(loss).loss(a));
    }
  }
  SUBCASE("one point, three labels keeps the first") {
    const PartitionObjective obj(test::column({1.0}), test::column({0.0, 2.0}), 3, EstimatorKind::gaussian,
                                 LossKind::kl);
    const auto best = exhaustive_pmode(obj);
    CHECK(best.assignment.labels() == std::vector<std::uint32_t>{0});
    CHECK(best.evaluations == 3);
  }
  SUBCASE("k = 1 has one candidate") {
    const PartitionObjective obj(test::random_dataset(6, 1, 1), test::random_dataset(4, 1, 2), 1,
                                 EstimatorKind::gaussian, LossKind::kl);
    CHECK(exhaustive_pmode(obj).evaluations == 1);
  }
  SUBCASE("cap") {
    const PartitionObjective obj(test::random_dataset(21, 1, 1), test::random_dataset(4, 1, 2), 2,
                                 EstimatorKind::gaussian, LossKind::kl);
    CHECK_THROWS_AS(exhaustive_pmode(obj), TooLarge);
    CHECK_THROWS_AS(exhaustive_pmode(four_point(), 15), TooLarge);
  }
}

TEST_CASE("kmeans init") {
  const auto labels = kmeans_init(test::column({0, 0.1, 0.2, 10, 10.1}), 2, 3).labels();
  CHECK(labels[0] == labels[1]);
  CHECK(labels[1] == labels[2]);
  CHECK(labels[3] == labels[4]);
  CHECK(labels[0] != labels[3]);

  const auto data = test::random_dataset(30, 2, 4);
  CHECK(kmeans_init(data, 1, 1) == Assignment::constant(30, 1));
  const auto each = kmeans_init(data.subset(std::vector<std::size_t>{0, 1, 2, 3, 4}), 5, 2);
  for (std::size_t c : each.counts()) CHECK(c == 1);
  CHECK(kmeans_init(data, 4, 9) == kmeans_init(data, 4, 9));
  for (std::size_t c : kmeans_init(data, 7, 5).counts()) CHECK(c > 0);
  CHECK_THROWS_AS(kmeans_init(data.subset(std::vector<std::size_t>{0, 1}), 3, 1), InvalidConfig);

  SUBCASE("duplicate points still give nonempty clusters") {
    const auto dup = test::column({1, 1, 1, 1, 2, 2});
    for (std::size_t c : kmeans_init(dup, 3, 1).counts()) CHECK(c > 0);
  }
}

TEST_CASE("greedy hill climb") {
  const auto obj = four_point();
  const auto opt = exhaustive_pmode(obj);
  SUBCASE("optimum is a fixed point") {
    const auto out = greedy_hill_climb(obj, opt);
    CHECK(out.assignment == opt.assignment);
    CHECK(out.loss == opt.loss);
  }
  SUBCASE("terminal state is a brute-force local minimum") {
    const auto out = greedy_hill_climb(obj, obj.evaluate(Assignment({0, 1, 0, 1}, 2)));
    CHECK(out.loss <= obj.loss(Assignment({0, 1, 0, 1}, 2)));
    // Neighbours by direct enumeration.
    for (std::size_t i = 0; i < 4; ++i) {
      auto labels = out.assignment.labels();
      labels[i] ^= 1u;
      CHECK(obj.loss(Assignment(labels, 2)) >= out.loss);
    }
    CHECK(is_local_minimum(obj, out.assignment, out.loss));
    for (std::size_t t = 1; t < out.accepted_losses.size(); ++t)
      CHECK(out.accepted_losses[t] < out.accepted_losses[t - 1]);
  }
  SUBCASE("k = 1 returns the start") {
    const PartitionObjective one(four_point_instance(), 1, EstimatorKind::gaussian, LossKind::kl);
    const auto start = one.evaluate(Assignment::constant(4, 1));
    const auto out = greedy_hill_climb(one, start);
    CHECK(out.assignment == start.assignment);
    CHECK(out.loss == start.loss);
  }
}

TEST_CASE("incremental losses equal fresh evaluations") {
  Rng rng(77);
  for (int t = 0; t < 10; ++t) {
    const auto est = test::random_dataset(24, 2, 10 + t, 3.0);
    const auto val = test::random_dataset(16, 2, 20 + t, 3.0);
    for (auto est_kind : {EstimatorKind::gaussian, EstimatorKind::product_kde}) {
      for (auto loss : {LossKind::kl, LossKind::l2}) {
        const PartitionObjective obj(est, val, 3, est_kind, loss);
        const auto start = obj.evaluate(kmeans_init(est, 3, t));
        const auto g = greedy_hill_climb(obj, start);
        CHECK(g.loss == obj.loss(g.assignment));
        PerturbSchedule s;
        s.rates = {0.3, 0.1};
        s.patience = 5;
        s.width = 4;
        const auto p = perturbation_climb(obj, start, s, 5 + t);
        CHECK(std::abs(p.loss - obj.loss(p.assignment)) <= 1e-10 * std::max(1.0, std::abs(p.loss)));
        CHECK(p.loss <= start.loss);
      }
    }
  }
}

TEST_CASE("perturbation climb") {
  const auto obj = four_point();
  const auto opt = exhaustive_pmode(obj);

  SUBCASE("optimum start is returned unchanged") {
    const auto out = perturbation_climb(obj, opt, PerturbSchedule{}, 1);
    CHECK(out.assignment == opt.assignment);
    CHECK(out.accepted_losses.size() == 1);
  }
  SUBCASE("full resampling finds the optimum") {
    PerturbSchedule s;
    s.rates = {1.0};
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto out = perturbation_climb(obj, obj.evaluate(Assignment({0, 1, 0, 1}, 2)), s, seed);
      if (out.loss <= opt.loss) ++hits;
    }
    CHECK(hits == 100);
  }
  SUBCASE("deterministic for any thread count") {
    const auto est = test::random_dataset(60, 3, 3, 2.0);
    const auto val = test::random_dataset(40, 3, 4, 2.0);
    const PartitionObjective big(est, val, 4, EstimatorKind::product_kde, LossKind::kl);
    const auto start = big.evaluate(kmeans_init(est, 4, 1));
    PerturbSchedule s;
    s.max_rounds = 60;
    s.rates = {0.2, 0.05};
    s.patience = 10;
    setenv("PMODE_THREADS", "1", 1);
    const auto a = perturbation_climb(big, start, s, 11);
    setenv("PMODE_THREADS", "4", 1);
    const auto b = perturbation_climb(big, start, s, 11);
    unsetenv("PMODE_THREADS");
    CHECK(a.assignment == b.assignment);
    CHECK(a.loss == b.loss);
    CHECK(a.accepted_losses == b.accepted_losses);
    for (std::size_t t = 1; t < a.accepted_losses.size(); ++t)
      CHECK(a.accepted_losses[t] < a.accepted_losses[t - 1]);
  }
  SUBCASE("zero budget returns the start") {
    PerturbSchedule s;
    s.budget_secs = 0.0;
    const auto start = obj.evaluate(Assignment({0, 1, 0, 1}, 2));
    const auto out = perturbation_climb(obj, start, s, 1);
    CHECK(out.assignment == start.assignment);
  }
}

TEST_CASE("schedule validation") {
  PerturbSchedule s;
  CHECK_NOTHROW(s.validate());
  s.rates = {0.1, 0.2};
  CHECK_THROWS_AS(s.validate(), InvalidConfig);
  s.rates = {1.5};
  CHECK_THROWS_AS(s.validate(), InvalidConfig);
  s.rates = {};
  CHECK_THROWS_AS(s.validate(), InvalidConfig);
  s = {};
  s.patience = 0;
  CHECK_THROWS_AS(s.validate(), InvalidConfig);
  s = {};
  s.width = 0;
  CHECK_THROWS_AS(s.validate(), InvalidConfig);
}

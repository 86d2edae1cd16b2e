#include <doctest.h>

#include <algorithm>
#include <random>

#include "logseg/error.hpp"
#include "logseg/metrics.hpp"
#include "logseg/preprocess.hpp"
#include "logseg/synthgen.hpp"
#include "oracles.hpp"

using namespace logseg;

TEST_CASE("worked confusion example") {
  const std::vector<bool> pred{true, true, false, false, true};
  const std::vector<bool> truth{true, false, true, false, true};
  const Metrics m = evaluate(pred, truth);
  CHECK(m.tp == 2);
  CHECK(m.fp == 1);
  CHECK(m.fn == 1);
  CHECK(m.tn == 1);
  CHECK(m.precision == doctest::Approx(2.0 / 3.0));
  CHECK(m.recall == doctest::Approx(2.0 / 3.0));
  CHECK(m.iou == doctest::Approx(0.5));
}

TEST_CASE("perfect and empty predictions") {
  const std::vector<bool> truth{true, true, false};
  const Metrics perfect = evaluate(truth, truth);
  CHECK(perfect.iou == 1.0);
  CHECK(perfect.precision == 1.0);
  const Metrics none = evaluate({false, false, false}, truth);
  CHECK(none.iou == 0.0);
  CHECK(none.precision_undefined);
  CHECK_FALSE(none.recall_undefined);
  const Metrics nothing = evaluate({false, false}, {false, false});
  CHECK(nothing.iou_undefined);
  CHECK(nothing.iou == 0.0);
}

TEST_CASE("length mismatch") {
  try {
    evaluate({true}, {true, false});
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::LengthMismatch);
  }
}

TEST_CASE("every mask pair of length 10 agrees with enumeration") {
  // 2^10 predictions against a handful of truths keeps this under a second.
  for (unsigned t : {0u, 1u, 0x155u, 0x3F0u, 0x3FFu}) {
    std::vector<bool> truth(10);
    for (int i = 0; i < 10; ++i) truth[i] = (t >> i) & 1u;
    for (unsigned p = 0; p < 1024; ++p) {
      std::vector<bool> pred(10);
      for (int i = 0; i < 10; ++i) pred[i] = (p >> i) & 1u;
      const Metrics got = evaluate(pred, truth), want = oracle::enumerate_metrics(pred, truth);
      CHECK(got.tp == want.tp);
      CHECK(got.fp == want.fp);
      CHECK(got.fn == want.fn);
      CHECK(got.tn == want.tn);
      CHECK(got.precision == want.precision);
      CHECK(got.recall == want.recall);
      CHECK(got.iou == want.iou);
      CHECK(got.total() == 10);
      CHECK(got.iou <= got.precision);
      CHECK(got.iou <= got.recall);
    }
  }
}

TEST_CASE("metrics ignore point order") {
  std::mt19937_64 rng(4);
  std::bernoulli_distribution coin(0.6);
  std::vector<bool> pred(500), truth(500);
  for (std::size_t i = 0; i < 500; ++i) {
    pred[i] = coin(rng);
    truth[i] = coin(rng);
  }
  std::vector<std::size_t> perm(500);
  for (std::size_t i = 0; i < 500; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<bool> p2(500), t2(500);
  for (std::size_t i = 0; i < 500; ++i) {
    p2[i] = pred[perm[i]];
    t2[i] = truth[perm[i]];
  }
  const Metrics a = evaluate(pred, truth), b = evaluate(p2, t2);
  CHECK(a.iou == b.iou);
  CHECK(a.precision == b.precision);
}

TEST_CASE("macro and micro averages differ on unequal clouds") {
  std::vector<CloudMetrics> rows{{"a", "g1", metrics_from_counts(90, 10, 0, 0)},
                                 {"b", "g2", metrics_from_counts(1, 9, 0, 0)}};
  const MeanMetrics macro = aggregate(rows, Averaging::Macro);
  const MeanMetrics micro = aggregate(rows, Averaging::Micro);
  CHECK(macro.iou == doctest::Approx((0.9 + 0.1) / 2));
  CHECK(micro.iou == doctest::Approx(91.0 / 110.0));
  CHECK(macro.clouds == 2);

  const EvalReport report = make_report(rows);
  REQUIRE(report.by_group.size() == 2);
  CHECK(report.by_group[0].first == "g1");
  CHECK(report.by_group[0].second.iou == doctest::Approx(0.9));
  CHECK(aggregate({}).clouds == 0);
}

TEST_CASE("ablation combinations run from no optional term to all of them") {
  const auto combos = ablation_combinations();
  CHECK(combos.front().label() == "none");
  CHECK_FALSE(combos.front().deviation);
  CHECK(combos[1].normal);
  CHECK_FALSE(combos[1].plane);
  CHECK(combos[4].deviation);
  CHECK_FALSE(combos[4].normal);
  CHECK((combos.back().deviation && combos.back().plane && combos.back().normal));

  const LossWeights w = combos.front().apply(LossWeights{});
  CHECK(w.sigma == 0.0);
  CHECK(w.plane == 0.0);
  CHECK(w.normal == 0.0);
  CHECK(w.fit == LossWeights{}.fit);  // no renormalization
}

TEST_CASE("small ablation run") {
  std::vector<SuiteCloud> suite;
  for (const SuiteEntry& e : default_suite(400)) {
    if (e.spec.seed > 1) break;
    const NormalizedCloud n = prepare(generate(e.spec).cloud, true);
    suite.push_back({e.spec.id, to_string(e.outliers), n.cloud});
  }
  OptimizerConfig config;
  config.max_steps = 60;
  config.k = 16;
  const auto rows = run_ablation(suite, LossWeights{}, config);
  REQUIRE(rows.size() == 8);
  for (const AblationRow& r : rows) {
    CHECK(r.per_cloud.size() == 2);
    CHECK(r.mean.clouds == 2);
    CHECK(r.mean.iou > 0.5);
  }
  const std::string csv = ablation_csv(rows);
  CHECK(csv.rfind("deviation,plane,normal,cloud,group,tp,fp,fn,tn,precision,recall,iou\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
  CHECK(ablation_table(rows).find("IoU") != std::string::npos);

  try {
    run_ablation({}, LossWeights{}, config);
    FAIL("expected InvalidArgument");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidArgument);
  }
}

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "emfe/dataset.hpp"
#include "emfe/evaluation.hpp"
#include "../support/expect_error.hpp"
#include "../support/synthetic.hpp"

using namespace emfe;
using emfe::testing::code_of;

namespace {

struct Data {
  Matrix X;
  std::vector<Label> y;
};

Data two_feature_data(std::size_t per_class, std::uint64_t seed) {
  const auto table = testing::synthetic_table(per_class, seed);
  Data d{design_matrix(table, FeatureSet::Two), {}};
  for (const auto& s : table.samples) d.y.push_back(s.label);
  return d;
}

bool within_rounding(double reported, double exact) { return std::abs(reported - exact) <= 0.005 + 1e-9; }

}  // namespace

TEST_CASE("confusion counts and length checks") {
  const std::vector<Label> truth{Label::Parasitized, Label::Parasitized, Label::Uninfected, Label::Uninfected,
                                 Label::Parasitized};
  const std::vector<Label> pred{Label::Parasitized, Label::Uninfected, Label::Parasitized, Label::Uninfected,
                                Label::Parasitized};
  CHECK(confusion(truth, pred) == ConfusionMatrix{2, 1, 1, 1});
  const std::vector<Label> shorter(2, Label::Parasitized);
  CHECK(code_of([&] { confusion(truth, shorter); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("half-up rounding to two decimals") {
  CHECK(round2(94.795) == doctest::Approx(94.80));
  CHECK(round2(97.5290) == doctest::Approx(97.53));
  CHECK(round2(0.125) == doctest::Approx(0.13));
  CHECK(round2(100.0) == 100.0);
}

TEST_CASE("reference confusion matrices reproduce their two-decimal metrics") {
  const auto lr = report(ConfusionMatrix{2013, 164, 51, 1905});
  CHECK(lr.parasitized.precision == doctest::Approx(97.53));
  CHECK(lr.parasitized.recall == doctest::Approx(92.47));
  CHECK(lr.parasitized.f1 == doctest::Approx(94.93));
  CHECK(lr.accuracy == doctest::Approx(94.80));
  CHECK(lr.total == 4133);
  CHECK(lr.parasitized.support == 2177);
  CHECK(lr.uninfected.support == 1956);

  const auto rf = report(ConfusionMatrix{2140, 37, 190, 1766});
  CHECK(rf.parasitized.precision == doctest::Approx(91.85));
  CHECK(rf.parasitized.recall == doctest::Approx(98.30));
}

TEST_CASE("report metrics match their definitions on random matrices") {
  Rng rng(21);
  for (int trial = 0; trial < 2000; ++trial) {
    const ConfusionMatrix cm{1 + rng.index(500), rng.index(500), rng.index(500), 1 + rng.index(500)};
    const auto r = report(cm);
    const double n = static_cast<double>(cm.total());
    CHECK(within_rounding(r.accuracy, 100.0 * static_cast<double>(cm.tp + cm.tn) / n));
    const double rec = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    CHECK(within_rounding(r.parasitized.recall, 100.0 * rec));
    const double spec = static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp);
    CHECK(within_rounding(r.uninfected.recall, 100.0 * spec));
    const double prec = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
    CHECK(within_rounding(r.parasitized.precision, 100.0 * prec));
    CHECK(within_rounding(r.parasitized.f1, 100.0 * 2 * prec * rec / (prec + rec)));
    const double npv = static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fn);
    CHECK(within_rounding(r.macro.recall, 50.0 * (rec + spec)));
    const double wp = static_cast<double>(cm.tp + cm.fn) / n;
    CHECK(within_rounding(r.weighted.precision, 100.0 * (wp * prec + (1 - wp) * npv)));
    CHECK_FALSE(r.any_undefined());
  }
}

TEST_CASE("perfect and degenerate predictions") {
  const auto perfect = report(ConfusionMatrix{10, 0, 0, 10});
  CHECK(perfect.accuracy == 100.0);
  CHECK(perfect.parasitized.f1 == 100.0);
  CHECK(perfect.uninfected.f1 == 100.0);
  CHECK_FALSE(perfect.any_undefined());

  // Everything called Parasitized: no negative predictions to take a precision over.
  const auto all_positive = report(ConfusionMatrix{5, 0, 5, 0});
  CHECK(all_positive.parasitized.recall == 100.0);
  CHECK(all_positive.uninfected.precision_undefined);
  CHECK(all_positive.uninfected.recall == 0.0);
  CHECK(all_positive.any_undefined());

  // No positive class at all.
  const auto no_positives = report(ConfusionMatrix{0, 0, 0, 7});
  CHECK(no_positives.parasitized.precision_undefined);
  CHECK(no_positives.parasitized.recall_undefined);
  CHECK(no_positives.accuracy == 100.0);

  CHECK(code_of([] { report(ConfusionMatrix{}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("fold summary uses the population standard deviation") {
  const auto cv = summarize_folds({90.0, 92.0, 94.0, 96.0});
  CHECK(cv.mean == doctest::Approx(93.0));
  CHECK(cv.std == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("cross validation follows its fold and seed contract") {
  const auto d = two_feature_data(120, 3);
  const ModelSpec spec = ForestParams{20, 5, 2, 1, MaxFeatures::Sqrt, Criterion::Gini, true};
  const std::size_t k = 4;
  const std::uint64_t seed = 17;
  const auto cv = cross_validate(spec, d.X, d.y, k, seed);
  REQUIRE(cv.fold_accuracies.size() == k);

  std::vector<std::size_t> all(d.y.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto folds = kfold_indices(all, d.y, k, seed);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<bool> held(d.y.size(), false);
    for (const auto i : folds[f]) held[i] = true;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < d.y.size(); ++i) {
      if (!held[i]) rest.push_back(i);
    }
    const Model m = train(spec, d.X.take_rows(rest), take(std::span<const Label>(d.y), rest), seed + f);
    std::size_t hits = 0;
    for (const auto i : folds[f]) hits += predict(m, d.X.row(i)) == d.y[i];
    CHECK(cv.fold_accuracies[f] == doctest::Approx(100.0 * static_cast<double>(hits) / static_cast<double>(folds[f].size())));
  }

  const auto threaded = cross_validate(spec, d.X, d.y, k, seed, 3);
  CHECK(threaded.fold_accuracies == cv.fold_accuracies);
}

TEST_CASE("cross validation of an uninformative feature sits at chance") {
  // Identical rows: the forest can only vote by class balance, which is even.
  Matrix X(80, 1, 1.0);
  std::vector<Label> y(80);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 2 == 0 ? Label::Parasitized : Label::Uninfected;
  ForestParams params;
  params.n_estimators = 1;
  params.bootstrap = false;
  const auto cv = cross_validate(params, X, y, 4);
  CHECK(cv.mean == doctest::Approx(50.0));
  CHECK(cv.std == doctest::Approx(0.0));
}

TEST_CASE("cross validation reports the failing fold") {
  const auto d = two_feature_data(20, 1);
  KnnParams params;
  params.n_neighbors = 39;  // larger than any fold's training part
  try {
    cross_validate(params, d.X, d.y, 5);
    FAIL("expected KTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::KTooLarge);
    CHECK(std::string(e.what()).find("fold 0") != std::string::npos);
  }
}

TEST_CASE("search grids have the documented sizes") {
  CHECK(default_search_space(ModelKind::LogisticRegression).size() == 20);
  CHECK(default_search_space(ModelKind::RandomForest).size() == 432);
  CHECK(default_search_space(ModelKind::Knn).size() == 120);
  CHECK(default_search_space(ModelKind::SvmRbf).empty());
  CHECK(default_search_space(ModelKind::TwoStageEnsemble).empty());
}

TEST_CASE("random search is deterministic and picks the best mean") {
  const auto d = two_feature_data(80, 5);
  const auto space = default_search_space(ModelKind::Knn);
  const auto a = random_search(space, d.X, d.y, 12, 3, 9);
  const auto b = random_search(space, d.X, d.y, 12, 3, 9, 3);
  REQUIRE(a.samples.size() == 12);
  for (std::size_t s = 0; s < a.samples.size(); ++s) {
    CHECK(a.samples[s].spec == b.samples[s].spec);
    CHECK(a.samples[s].cv.fold_accuracies == b.samples[s].cv.fold_accuracies);
  }
  std::size_t best = 0;
  for (std::size_t s = 1; s < a.samples.size(); ++s) {
    const auto& cv = a.samples[s].cv;
    const auto& top = a.samples[best].cv;
    if (cv.mean > top.mean || (cv.mean == top.mean && cv.std < top.std)) best = s;
  }
  CHECK(a.best == best);
  CHECK(a.best == b.best);

  // Draws are without replacement.
  for (std::size_t s = 0; s < a.samples.size(); ++s) {
    for (std::size_t t = s + 1; t < a.samples.size(); ++t) CHECK_FALSE(a.samples[s].spec == a.samples[t].spec);
  }

  // A single-point space reduces to plain cross validation on the same folds.
  const SearchSpace one{LogRegParams{}};
  const auto single = random_search(one, d.X, d.y, 25, 3, 9);
  REQUIRE(single.samples.size() == 1);
  CHECK(single.best_sample().cv.fold_accuracies == cross_validate(LogRegParams{}, d.X, d.y, 3, 9).fold_accuracies);

  CHECK(code_of([&] { random_search({}, d.X, d.y); }) == ErrorCode::EmptySpace);
  CHECK(code_of([&] { random_search(default_search_space(ModelKind::SvmRbf), d.X, d.y); }) == ErrorCode::EmptySpace);
}

TEST_CASE("threshold sweep is bracketed, monotone and picks the largest qualifying threshold") {
  const auto d = two_feature_data(150, 8);
  const auto model = train_logreg(d.X, d.y, LogRegParams{});
  const auto sweep = threshold_sweep(model, d.X, d.y, 0.9);
  REQUIRE(sweep.points.size() >= 3);
  CHECK(sweep.points.front().threshold == 0.0);
  CHECK(sweep.points.back().threshold == 1.0);
  CHECK(sweep.points.front().recall == 100.0);
  CHECK(sweep.points.back().cm.tp == 0);

  std::uint64_t positives = 0;
  for (const Label l : d.y) positives += l == Label::Parasitized;
  std::optional<double> expected;
  for (std::size_t i = 0; i < sweep.points.size(); ++i) {
    const auto& p = sweep.points[i];
    CHECK(p.cm.total() == d.y.size());
    if (i > 0) {
      CHECK(p.threshold > sweep.points[i - 1].threshold);
      CHECK(p.cm.tp <= sweep.points[i - 1].cm.tp);
      CHECK(p.cm.fp <= sweep.points[i - 1].cm.fp);
    }
    std::uint64_t tp = 0;
    for (std::size_t r = 0; r < d.y.size(); ++r) {
      tp += d.y[r] == Label::Parasitized && predict_proba(model, d.X.row(r)) > p.threshold;
    }
    CHECK(p.cm.tp == tp);
    if (static_cast<double>(tp) / static_cast<double>(positives) >= 0.9) expected = p.threshold;
  }
  REQUIRE(sweep.selected.has_value());
  CHECK(*sweep.selected == *expected);
  CHECK(to_json(sweep).contains("selected_threshold"));
}

TEST_CASE("paired t-test and McNemar against hand-computed values") {
  const std::vector<double> treatment{1, 2, 3, 4, 5}, baseline{0, 0, 0, 0, 0};
  const auto t = paired_t_test(treatment, baseline);
  CHECK(t.mean_difference == doctest::Approx(3.0));
  CHECK(t.t_statistic == doctest::Approx(4.242640687));
  CHECK(t.df == 4);
  CHECK(t.p_value == doctest::Approx(0.013236).epsilon(1e-4));

  const std::vector<double> same{2, 2, 2};
  CHECK(paired_t_test(same, same).p_value == 1.0);
  CHECK(code_of([&] { paired_t_test(same, treatment); }) == ErrorCode::LengthMismatch);

  std::vector<Label> y(40, Label::Parasitized), a(40, Label::Parasitized), b(40, Label::Parasitized);
  for (int i = 0; i < 10; ++i) b[i] = Label::Uninfected;       // ensemble alone right
  for (int i = 10; i < 12; ++i) a[i] = Label::Uninfected;      // baseline alone right
  const auto m = mcnemar_test(y, a, b);
  CHECK(m.ensemble_only_correct == 10);
  CHECK(m.baseline_only_correct == 2);
  CHECK(m.statistic == doctest::Approx(49.0 / 12.0));
  CHECK(m.p_value == doctest::Approx(0.043308).epsilon(1e-4));

  const auto none = mcnemar_test(y, y, y);
  CHECK(none.statistic == 0.0);
  CHECK(none.p_value == 1.0);
}

TEST_CASE("ensemble cross validation keeps the short-circuit subset property") {
  const auto d = two_feature_data(120, 13);
  EnsembleParams params;
  params.stage2.n_estimators = 15;
  const auto r = evaluate_ensemble_cv(d.X, d.y, params, 4, 3);
  CHECK(r.logreg.fold_accuracies.size() == 4);
  CHECK(r.pooled_ensemble.total() == d.y.size());
  CHECK(r.pooled_logreg.total() == d.y.size());
  // The ensemble can only call Parasitized where the screen already did.
  CHECK(r.pooled_ensemble.tp + r.pooled_ensemble.fp <= r.pooled_logreg.tp + r.pooled_logreg.fp);
  const ModelKind best = r.forest.mean > r.logreg.mean ? ModelKind::RandomForest : ModelKind::LogisticRegression;
  CHECK(r.best_single == best);
  CHECK(r.paired.df == 3);
  const auto j = to_json(r);
  CHECK(j["cv"].contains("ensemble"));
  CHECK(j["significance"].contains("mcnemar"));
}

TEST_CASE("a screen that never fires makes the ensemble all-negative") {
  const auto d = two_feature_data(40, 2);
  TwoStageEnsembleModel model;
  model.stage1.standardizer = Standardizer{{0.0, 0.0}, {1.0, 1.0}};
  model.stage1.weights = {0.0, 0.0};
  model.stage1.bias = -50.0;
  model.stage2 = train_random_forest(d.X, d.y, ForestParams{});
  for (std::size_t r = 0; r < d.X.rows(); ++r) CHECK(predict(model, d.X.row(r)) == Label::Uninfected);
}

TEST_CASE("row order barely moves logistic coefficients") {
  const auto d = two_feature_data(200, 4);
  const auto s = coefficient_stability(d.X, d.y, LogRegParams{}, 10, 42);
  CHECK(s.weights.size() == 10);
  CHECK(s.overall_max_deviation() < 1e-6);
  CHECK(s.always_positive[0]);
  const auto j = to_json(s, {"foreground", "holes"});
  CHECK(j["coefficients"][0]["feature"] == "foreground");
  CHECK(j["runs"] == 10);
}

TEST_CASE("report JSON carries every section") {
  const auto j = to_json(report(ConfusionMatrix{3, 1, 2, 4}));
  for (const char* key : {"parasitized", "uninfected", "macro_avg", "weighted_avg", "accuracy", "total"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["parasitized"].contains("support"));
  CHECK_FALSE(report_text(report(ConfusionMatrix{3, 1, 2, 4})).empty());
}

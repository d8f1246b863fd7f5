#pragma once

#include <cstdint>
#include <span>

#include "emfe/logistic_regression.hpp"
#include "emfe/random_forest.hpp"

namespace emfe {

struct EnsembleParams {
  LogRegParams stage1;
  ForestParams stage2;

  friend bool operator==(const EnsembleParams&, const EnsembleParams&) = default;
};

/// Logistic regression screens every sample; only its positives are
/// re-judged by the forest, whose verdict is final for that subset.
struct TwoStageEnsembleModel {
  LogisticRegressionModel stage1;
  RandomForestModel stage2;

  friend bool operator==(const TwoStageEnsembleModel&, const TwoStageEnsembleModel&) = default;
};

/// The sequential rule on already-computed stage outputs.
constexpr Label combine_stages(Label stage1, Label stage2) {
  return stage1 == Label::Uninfected ? Label::Uninfected : stage2;
}

/// Both stages see the identical feature matrix.
TwoStageEnsembleModel train_ensemble(const Matrix& X, std::span<const Label> y, const EnsembleParams& params,
                                     std::uint64_t seed = 42, std::size_t threads = 1);

Label predict(const TwoStageEnsembleModel& model, std::span<const double> x);
/// Stage-1 probability when it screens negative, otherwise the forest's vote fraction.
double predict_proba(const TwoStageEnsembleModel& model, std::span<const double> x);

}  // namespace emfe

#include "emfe/ensemble.hpp"

namespace emfe {

TwoStageEnsembleModel train_ensemble(const Matrix& X, std::span<const Label> y, const EnsembleParams& params,
                                     std::uint64_t seed, std::size_t threads) {
  return TwoStageEnsembleModel{train_logreg(X, y, params.stage1, seed),
                               train_random_forest(X, y, params.stage2, seed, threads)};
}

Label predict(const TwoStageEnsembleModel& model, std::span<const double> x) {
  const Label first = predict(model.stage1, x);
  if (first == Label::Uninfected) return Label::Uninfected;
  return combine_stages(first, predict(model.stage2, x));
}

double predict_proba(const TwoStageEnsembleModel& model, std::span<const double> x) {
  const double p = predict_proba(model.stage1, x);
  return p > 0.5 ? predict_proba(model.stage2, x) : p;
}

}  // namespace emfe

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "emfe/ensemble.hpp"
#include "emfe/knn.hpp"
#include "emfe/logistic_regression.hpp"
#include "emfe/random_forest.hpp"
#include "emfe/svm.hpp"

namespace emfe {

enum class ModelKind : std::uint8_t {
  LogisticRegression = 1,
  RandomForest = 2,
  Knn = 3,
  SvmRbf = 4,
  TwoStageEnsemble = 5,
};

/// CLI family names: logreg, rf, knn, svm, ensemble.
std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

using Model = std::variant<LogisticRegressionModel, RandomForestModel, KnnModel, SvmRbfModel, TwoStageEnsembleModel>;

/// Hyperparameters for one family; training a spec yields the matching Model.
using ModelSpec = std::variant<LogRegParams, ForestParams, KnnParams, SvmParams, EnsembleParams>;

ModelKind kind_of(const Model& model);
ModelKind kind_of(const ModelSpec& spec);
std::size_t feature_count(const Model& model);
ModelSpec spec_of(const Model& model);
ModelSpec default_spec(ModelKind kind);

Model train(const ModelSpec& spec, const Matrix& X, std::span<const Label> y, std::uint64_t seed = 42,
            std::size_t threads = 1);

Label predict(const Model& model, std::span<const double> x);
/// Score in [0, 1], higher = more Parasitized.
double predict_proba(const Model& model, std::span<const double> x);
std::vector<Label> predict_all(const Model& model, const Matrix& X);

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(ModelKind kind, const nlohmann::json& json);

}  // namespace emfe

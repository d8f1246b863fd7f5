#include "emfe/model.hpp"

#include <string>

namespace emfe {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::LogisticRegression: return "logreg";
    case ModelKind::RandomForest: return "rf";
    case ModelKind::Knn: return "knn";
    case ModelKind::SvmRbf: return "svm";
    case ModelKind::TwoStageEnsemble: return "ensemble";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "logreg") return ModelKind::LogisticRegression;
  if (text == "rf") return ModelKind::RandomForest;
  if (text == "knn") return ModelKind::Knn;
  if (text == "svm") return ModelKind::SvmRbf;
  if (text == "ensemble") return ModelKind::TwoStageEnsemble;
  throw Error(ErrorCode::InvalidArgument, "unknown model family '" + std::string(text) + "'");
}

ModelKind kind_of(const Model& model) { return static_cast<ModelKind>(model.index() + 1); }
ModelKind kind_of(const ModelSpec& spec) { return static_cast<ModelKind>(spec.index() + 1); }

std::size_t feature_count(const Model& model) {
  return std::visit(overloaded{
                        [](const LogisticRegressionModel& m) { return m.weights.size(); },
                        [](const RandomForestModel& m) { return m.n_features; },
                        [](const KnnModel& m) { return m.points.cols(); },
                        [](const SvmRbfModel& m) { return m.standardizer.size(); },
                        [](const TwoStageEnsembleModel& m) { return m.stage1.weights.size(); },
                    },
                    model);
}

ModelSpec spec_of(const Model& model) {
  return std::visit(overloaded{
                        [](const LogisticRegressionModel& m) -> ModelSpec { return m.params; },
                        [](const RandomForestModel& m) -> ModelSpec { return m.params; },
                        [](const KnnModel& m) -> ModelSpec { return m.params; },
                        [](const SvmRbfModel& m) -> ModelSpec { return m.params; },
                        [](const TwoStageEnsembleModel& m) -> ModelSpec {
                          return EnsembleParams{m.stage1.params, m.stage2.params};
                        },
                    },
                    model);
}

ModelSpec default_spec(ModelKind kind) {
  switch (kind) {
    case ModelKind::LogisticRegression: return LogRegParams{};
    case ModelKind::RandomForest: return ForestParams{};
    case ModelKind::Knn: return KnnParams{};
    case ModelKind::SvmRbf: return SvmParams{};
    case ModelKind::TwoStageEnsemble: return EnsembleParams{};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model kind");
}

Model train(const ModelSpec& spec, const Matrix& X, std::span<const Label> y, std::uint64_t seed, std::size_t threads) {
  return std::visit(overloaded{
                        [&](const LogRegParams& p) -> Model { return train_logreg(X, y, p, seed); },
                        [&](const ForestParams& p) -> Model { return train_random_forest(X, y, p, seed, threads); },
                        [&](const KnnParams& p) -> Model { return train_knn(X, y, p); },
                        [&](const SvmParams& p) -> Model { return train_svm_rbf(X, y, p, seed); },
                        [&](const EnsembleParams& p) -> Model { return train_ensemble(X, y, p, seed, threads); },
                    },
                    spec);
}

Label predict(const Model& model, std::span<const double> x) {
  return std::visit([&](const auto& m) { return predict(m, x); }, model);
}

double predict_proba(const Model& model, std::span<const double> x) {
  return std::visit([&](const auto& m) { return predict_proba(m, x); }, model);
}

std::vector<Label> predict_all(const Model& model, const Matrix& X) {
  std::vector<Label> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = predict(model, X.row(r));
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json to_json(const LogRegParams& p) {
  return {{"penalty", std::string(to_string(p.penalty))}, {"C", p.C}, {"max_iter", p.max_iter}, {"tol", p.tol}};
}

nlohmann::json to_json(const ForestParams& p) {
  nlohmann::json j{{"n_estimators", p.n_estimators},
                   {"max_depth", nullptr},
                   {"min_samples_split", p.min_samples_split},
                   {"min_samples_leaf", p.min_samples_leaf},
                   {"max_features", std::string(to_string(p.max_features))},
                   {"criterion", std::string(to_string(p.criterion))},
                   {"bootstrap", p.bootstrap}};
  if (p.max_depth) j["max_depth"] = *p.max_depth;
  return j;
}

nlohmann::json to_json(const KnnParams& p) {
  return {{"n_neighbors", p.n_neighbors}, {"metric", to_string(p.metric)}};
}

nlohmann::json to_json(const SvmParams& p) {
  nlohmann::json j{{"C", p.C},
                   {"gamma", nullptr},
                   {"tol", p.tol},
                   {"max_passes", p.max_passes},
                   {"max_sweeps", p.max_sweeps},
                   {"max_rows", p.max_rows}};
  if (p.gamma) j["gamma"] = *p.gamma;
  return j;
}

nlohmann::json to_json(const EnsembleParams& p) { return {{"stage1", to_json(p.stage1)}, {"stage2", to_json(p.stage2)}}; }

LogRegParams logreg_from_json(const nlohmann::json& j) {
  LogRegParams p;
  p.penalty = parse_penalty(j.value("penalty", std::string(to_string(p.penalty))));
  p.C = j.value("C", p.C);
  p.max_iter = j.value("max_iter", p.max_iter);
  p.tol = j.value("tol", p.tol);
  return p;
}

ForestParams forest_from_json(const nlohmann::json& j) {
  ForestParams p;
  p.n_estimators = j.value("n_estimators", p.n_estimators);
  if (j.contains("max_depth") && !j["max_depth"].is_null()) p.max_depth = j["max_depth"].get<std::uint32_t>();
  p.min_samples_split = j.value("min_samples_split", p.min_samples_split);
  p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
  p.max_features = parse_max_features(j.value("max_features", std::string(to_string(p.max_features))));
  p.criterion = parse_criterion(j.value("criterion", std::string(to_string(p.criterion))));
  p.bootstrap = j.value("bootstrap", p.bootstrap);
  return p;
}

KnnParams knn_from_json(const nlohmann::json& j) {
  KnnParams p;
  p.n_neighbors = j.value("n_neighbors", p.n_neighbors);
  p.metric = parse_metric(j.value("metric", to_string(p.metric)));
  return p;
}

SvmParams svm_from_json(const nlohmann::json& j) {
  SvmParams p;
  p.C = j.value("C", p.C);
  if (j.contains("gamma") && !j["gamma"].is_null()) p.gamma = j["gamma"].get<double>();
  p.tol = j.value("tol", p.tol);
  p.max_passes = j.value("max_passes", p.max_passes);
  p.max_sweeps = j.value("max_sweeps", p.max_sweeps);
  p.max_rows = j.value("max_rows", p.max_rows);
  return p;
}

}  // namespace

nlohmann::json spec_to_json(const ModelSpec& spec) {
  return std::visit([](const auto& p) { return to_json(p); }, spec);
}

ModelSpec spec_from_json(ModelKind kind, const nlohmann::json& json) {
  try {
    switch (kind) {
      case ModelKind::LogisticRegression: return logreg_from_json(json);
      case ModelKind::RandomForest: return forest_from_json(json);
      case ModelKind::Knn: return knn_from_json(json);
      case ModelKind::SvmRbf: return svm_from_json(json);
      case ModelKind::TwoStageEnsemble:
        return EnsembleParams{logreg_from_json(json.value("stage1", nlohmann::json::object())),
                              forest_from_json(json.value("stage2", nlohmann::json::object()))};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad hyperparameter JSON: ") + e.what());
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model kind");
}

}  // namespace emfe

#include "emfe/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "emfe/bench.hpp"
#include "emfe/dataset.hpp"
#include "emfe/evaluation.hpp"
#include "emfe/model_io.hpp"
#include "emfe/parallel.hpp"

namespace emfe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Options {
  std::string data;
  std::string out = "emfe-out";
  std::string table;
  std::vector<std::string> model_files;
  std::string params;
  std::uint64_t seed = 42;
  double test_fraction = 0.2;
  std::string polarity = "paper";
  int connectivity = 8;
  std::string features = "two";
  std::string model = "logreg";
  std::size_t n_samples = 25;
  std::size_t folds = 0;  // 0: the command's own default
  double threshold_target = 0.95;
  std::size_t subsample = 0;
  std::string debug_dir;
  std::size_t iterations = 1000;
  std::size_t repeats = 3;
  std::size_t runs = 10;
};

// ---------------------------------------------------------------------------
// File helpers

fs::path output_dir(const Options& o) {
  const fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// --params takes inline JSON or a path to a JSON file.
json params_json(const std::string& text) {
  if (text.empty()) return json::object();
  const bool inline_json = text.find_first_not_of(" \t\n") != std::string::npos &&
                           text[text.find_first_not_of(" \t\n")] == '{';
  const std::string body = inline_json ? text : read_text(text);
  try {
    json j = json::parse(body);
    // a tune result's best_params.json wraps the parameters
    if (j.contains("params") && j["params"].is_object()) return j["params"];
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("cannot parse --params: ") + e.what());
  }
}

ModelSpec resolve_spec(ModelKind kind, const Options& o) { return spec_from_json(kind, params_json(o.params)); }

std::string require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorCode::InvalidArgument, std::string(flag) + " is required");
  return value;
}

// ---------------------------------------------------------------------------
// Data preparation

struct Prepared {
  FeatureTable table;
  FeatureSet set = FeatureSet::Two;
  SplitAssignment split;
  Matrix X_train, X_test;
  std::vector<Label> y_train, y_test;
};

Prepared prepare(const Options& o, FeatureSet set) {
  Prepared p;
  p.table = load_table(require(o.table, "--table"));
  p.set = set;
  p.split = stratified_split(p.table, o.test_fraction, o.seed);
  const auto labels = p.table.labels();
  p.X_train = design_matrix(p.table, p.split.train, set);
  p.X_test = design_matrix(p.table, p.split.test, set);
  p.y_train = take(std::span<const Label>(labels), std::span<const std::size_t>(p.split.train));
  p.y_test = take(std::span<const Label>(labels), std::span<const std::size_t>(p.split.test));
  return p;
}

FeatureSet set_for(const Model& model) {
  switch (feature_count(model)) {
    case 2: return FeatureSet::Two;
    case 3: return FeatureSet::Three;
    default: throw Error(ErrorCode::InvalidArgument, "model feature count is neither 2 nor 3");
  }
}

json base_config(const std::string& command, const Options& o) {
  return {{"command", command}, {"version", kVersion}, {"seed", o.seed}, {"test_fraction", o.test_fraction}};
}

json split_json(const Prepared& p) {
  return {{"train", p.split.train.size()}, {"test", p.split.test.size()}, {"features", feature_names(p.set)}};
}

double accuracy_of(const Model& model, const Matrix& X, std::span<const Label> y) {
  return report(confusion(y, predict_all(model, X))).accuracy;
}

void save_model_with_sidecar(const fs::path& dir, const std::string& stem, const Model& model, FeatureSet set) {
  save_model(dir / (stem + ".emfe"), model);
  save_sidecar(dir / (stem + ".json"), model, feature_names(set));
}

json evaluation_json(std::span<const Label> truth, std::span<const Label> predicted) {
  const ConfusionMatrix cm = confusion(truth, predicted);
  return {{"confusion", to_json(cm)}, {"report", to_json(report(cm))}};
}

std::string evaluation_text(const std::string& title, std::span<const Label> truth, std::span<const Label> predicted) {
  const ConfusionMatrix cm = confusion(truth, predicted);
  return title + "\n" + confusion_text(cm) + "\n" + report_text(report(cm));
}

// ---------------------------------------------------------------------------
// Commands

int cmd_extract(const Options& o, std::ostream& out) {
  IngestOptions opts;
  opts.polarity = parse_polarity(o.polarity);
  opts.connectivity = parse_connectivity(o.connectivity);
  opts.seed = o.seed;
  opts.threads = thread_budget();
  if (o.subsample > 0) opts.subsample = o.subsample;
  if (!o.debug_dir.empty()) opts.debug = fs::path(o.debug_dir);

  const fs::path dir = output_dir(o);
  const IngestResult result = ingest(require(o.data, "--data"), opts);
  save_table(dir / "features.csv", result.table);

  std::size_t parasitized = 0;
  for (const auto& s : result.table.samples) parasitized += s.label == Label::Parasitized ? 1 : 0;
  const std::size_t uninfected = result.table.size() - parasitized;

  std::string log;
  for (const auto& f : result.failures) log += "FAILED " + f.path + ": " + f.message + "\n";
  const std::string summary = "extracted " + std::to_string(result.table.size()) + " images (Parasitized " +
                              std::to_string(parasitized) + ", Uninfected " + std::to_string(uninfected) +
                              "), failures " + std::to_string(result.failures.size());

  try {
    const CorrelationMatrix corr = pearson_correlation_matrix(result.table);
    write_text(dir / "correlation.csv", correlation_csv(corr));
    write_text(dir / "correlation.txt", correlation_text(corr));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConstantColumn && e.code() != ErrorCode::TooFewSamples) throw;
    log += "correlation skipped: " + e.detail() + "\n";
  }

  json stats = json::object();
  for (const Label label : {Label::Parasitized, Label::Uninfected}) {
    std::vector<FeatureVector> group;
    for (const auto& s : result.table.samples) {
      if (s.label == label) group.push_back(s.features);
    }
    if (group.empty()) continue;
    const FeatureStatistics fs_ = feature_statistics(group);
    const auto summary_json = [](const Summary& s) {
      return json{{"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
    };
    stats[std::string(class_dir_name(label))] = {{"foreground", summary_json(fs_.foreground)},
                                                 {"background", summary_json(fs_.background)},
                                                 {"holes", summary_json(fs_.holes)}};
  }
  write_json(dir / "feature_stats.json", stats);

  log += summary + "\n";
  write_text(dir / "extraction.log", log);

  json config = base_config("extract", o);
  config.update({{"data", o.data},
                 {"polarity", o.polarity},
                 {"connectivity", o.connectivity},
                 {"subsample", o.subsample > 0 ? json(o.subsample) : json(nullptr)},
                 {"debug_dir", o.debug_dir.empty() ? json(nullptr) : json(o.debug_dir)}});
  config.erase("test_fraction");
  write_json(dir / "config.json", config);
  out << summary << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const ModelKind kind = parse_model_kind(o.model);
  const ModelSpec spec = resolve_spec(kind, o);
  const Prepared p = prepare(o, parse_feature_set(o.features));
  const fs::path dir = output_dir(o);

  const Model model = train(spec, p.X_train, p.y_train, o.seed, thread_budget());
  save_model_with_sidecar(dir, "model", model, p.set);

  json config = base_config("train", o);
  config.update({{"table", o.table}, {"model", o.model}, {"params", spec_to_json(spec)}, {"split", split_json(p)}});
  write_json(dir / "config.json", config);

  out << "trained " << o.model << " on " << p.X_train.rows() << " rows; train accuracy "
      << accuracy_of(model, p.X_train, p.y_train) << "%, test accuracy " << accuracy_of(model, p.X_test, p.y_test)
      << "%\n";
  return kExitOk;
}

int cmd_cv(const Options& o, std::ostream& out) {
  const ModelKind kind = parse_model_kind(o.model);
  const ModelSpec spec = resolve_spec(kind, o);
  const Prepared p = prepare(o, parse_feature_set(o.features));
  const std::size_t k = o.folds > 0 ? o.folds : 5;
  const fs::path dir = output_dir(o);

  const CvResult cv = cross_validate(spec, p.X_train, p.y_train, k, o.seed, thread_budget());
  write_json(dir / "cv.json", {{"model", o.model}, {"params", spec_to_json(spec)}, {"folds", k}, {"cv", to_json(cv)}});
  const std::pair<std::string, CvResult> rows[] = {{o.model, cv}};
  const std::string text = cv_text(rows);
  write_text(dir / "cv.txt", text);

  json config = base_config("cv", o);
  config.update({{"table", o.table}, {"model", o.model}, {"folds", k}, {"split", split_json(p)}});
  write_json(dir / "config.json", config);
  out << text;
  return kExitOk;
}

int cmd_tune(const Options& o, std::ostream& out) {
  const ModelKind kind = parse_model_kind(o.model);
  const SearchSpace space = default_search_space(kind);
  if (space.empty()) throw Error(ErrorCode::EmptySpace, "no tuning grid for model family '" + o.model + "'");
  const Prepared p = prepare(o, parse_feature_set(o.features));
  const std::size_t k = o.folds > 0 ? o.folds : 5;
  const std::size_t threads = thread_budget();
  const fs::path dir = output_dir(o);

  const SearchResult search = random_search(space, p.X_train, p.y_train, o.n_samples, k, o.seed, threads);
  const CvResult baseline = cross_validate(default_spec(kind), p.X_train, p.y_train, k, o.seed, threads);
  const ModelSpec& best = search.best_sample().spec;

  json result = to_json(search);
  result["model"] = o.model;
  result["grid_size"] = space.size();
  result["default_cv"] = to_json(baseline);
  write_json(dir / "search.json", result);
  write_json(dir / "best_params.json", {{"model", o.model}, {"params", spec_to_json(best)}});
  write_text(dir / "search.txt", search_text(search));

  const Model model = train(best, p.X_train, p.y_train, o.seed, threads);
  save_model_with_sidecar(dir, "model", model, p.set);

  json config = base_config("tune", o);
  config.update({{"table", o.table},
                 {"model", o.model},
                 {"n_samples", o.n_samples},
                 {"folds", k},
                 {"split", split_json(p)}});
  write_json(dir / "config.json", config);

  out << "searched " << search.samples.size() << " of " << space.size() << " configurations; best CV mean "
      << round2(search.best_sample().cv.mean) << "% (default " << round2(baseline.mean) << "%)\n"
      << "best params: " << spec_to_json(best).dump() << "\n";
  return kExitOk;
}

const LogisticRegressionModel* logistic_part(const Model& model) {
  if (const auto* lr = std::get_if<LogisticRegressionModel>(&model)) return lr;
  if (const auto* e = std::get_if<TwoStageEnsembleModel>(&model)) return &e->stage1;
  return nullptr;
}

std::string require_single_model(const Options& o) {
  if (o.model_files.size() != 1) throw Error(ErrorCode::InvalidArgument, "exactly one --model-file is required");
  return o.model_files.front();
}

int cmd_eval(const Options& o, std::ostream& out) {
  const Model model = load_model(require_single_model(o));
  const Prepared p = prepare(o, set_for(model));
  const fs::path dir = output_dir(o);

  const auto predicted = predict_all(model, p.X_test);
  json result = evaluation_json(p.y_test, predicted);
  result["model_kind"] = std::string(to_string(kind_of(model)));
  result["split"] = split_json(p);
  std::string text = evaluation_text("Held-out test split (" + std::to_string(p.y_test.size()) + " samples)", p.y_test,
                                     predicted);

  if (const LogisticRegressionModel* lr = logistic_part(model)) {
    const ThresholdSweep sweep = threshold_sweep(*lr, p.X_test, p.y_test, o.threshold_target);
    result["threshold_sweep"] = to_json(sweep);
    result["threshold_sweep"]["warning"] =
        "thresholds are swept on the test split for reporting only; choose an operating threshold on a "
        "validation subset of the training data";
    text += "\nThreshold sweep (logistic stage): target recall " + std::to_string(o.threshold_target * 100.0) + "%\n";
    if (sweep.selected) {
      const auto it = std::find_if(sweep.points.begin(), sweep.points.end(),
                                   [&](const ThresholdPoint& pt) { return pt.threshold == *sweep.selected; });
      text += "  largest qualifying threshold " + std::to_string(*sweep.selected) + ": precision " +
              std::to_string(it->precision) + "%, recall " + std::to_string(it->recall) + "%\n";
    } else {
      text += "  no threshold reaches the target\n";
    }
    text += "  warning: reported on the test split; select thresholds on validation data\n";
  }
  write_json(dir / "eval.json", result);
  write_text(dir / "eval.txt", text);

  json config = base_config("eval", o);
  config.update({{"table", o.table}, {"model_file", o.model_files.front()}, {"threshold_target", o.threshold_target}});
  write_json(dir / "config.json", config);
  out << text;
  return kExitOk;
}

int cmd_ensemble(const Options& o, std::ostream& out) {
  const auto spec = resolve_spec(ModelKind::TwoStageEnsemble, o);
  const EnsembleParams& params = std::get<EnsembleParams>(spec);
  const Prepared p = prepare(o, parse_feature_set(o.features));
  const std::size_t k = o.folds > 0 ? o.folds : 10;
  const std::size_t threads = thread_budget();
  const fs::path dir = output_dir(o);

  const EnsembleCvResult cv = evaluate_ensemble_cv(p.X_train, p.y_train, params, k, o.seed, threads);
  const TwoStageEnsembleModel model = train_ensemble(p.X_train, p.y_train, params, o.seed, threads);
  save_model_with_sidecar(dir, "ensemble", Model(model), p.set);

  std::vector<Label> lr_pred, rf_pred, ens_pred;
  for (std::size_t r = 0; r < p.X_test.rows(); ++r) {
    lr_pred.push_back(predict(model.stage1, p.X_test.row(r)));
    rf_pred.push_back(predict(model.stage2, p.X_test.row(r)));
    ens_pred.push_back(combine_stages(lr_pred.back(), rf_pred.back()));
  }
  json result = to_json(cv);
  result["folds"] = k;
  result["params"] = spec_to_json(spec);
  result["test"] = {{"logreg", evaluation_json(p.y_test, lr_pred)},
                    {"rf", evaluation_json(p.y_test, rf_pred)},
                    {"ensemble", evaluation_json(p.y_test, ens_pred)}};
  write_json(dir / "ensemble.json", result);
  const std::string text = std::to_string(k) + "-fold cross-validation on the training split\n" + ensemble_text(cv) +
                           "\n" + evaluation_text("Held-out test split, ensemble", p.y_test, ens_pred);
  write_text(dir / "ensemble.txt", text);

  json config = base_config("ensemble", o);
  config.update({{"table", o.table}, {"folds", k}, {"params", spec_to_json(spec)}, {"split", split_json(p)}});
  write_json(dir / "config.json", config);
  out << text;
  return kExitOk;
}

int cmd_bench(const Options& o, std::ostream& out) {
  if (o.model_files.empty()) throw Error(ErrorCode::InvalidArgument, "at least one --model-file is required");
  const fs::path dir = output_dir(o);
  const HostDescriptor host = host_descriptor();
  std::vector<BenchReport> reports;
  json items = json::array();
  for (const std::string& file : o.model_files) {
    const Model model = load_model(file);
    const Prepared p = prepare(o, set_for(model));
    BenchReport r;
    r.kind = kind_of(model);
    r.host = host;
    r.model_bytes = bench_size(file);
    r.training_seconds = bench_training(spec_of(model), p.X_train, p.y_train, o.repeats, o.seed);
    r.model_only = bench_inference(model, p.X_test, o.iterations);
    if (!o.data.empty()) {
      std::vector<fs::path> images;
      for (std::size_t i = 0; i < p.split.test.size() && images.size() < 200; ++i) {
        images.push_back(fs::path(o.data) / p.table.samples[p.split.test[i]].path);
      }
      r.end_to_end = bench_end_to_end(model, images, p.table.metadata.polarity, p.table.metadata.connectivity,
                                      o.iterations);
    }
    json item = to_json(r);
    item["model_file"] = file;
    items.push_back(item);
    reports.push_back(r);
  }
  write_json(dir / "bench.json", {{"reports", items}});
  const std::string text = bench_text(reports);
  write_text(dir / "bench.txt", text);

  json config = base_config("bench", o);
  config.update({{"table", o.table},
                 {"model_files", o.model_files},
                 {"data", o.data.empty() ? json(nullptr) : json(o.data)},
                 {"iterations", o.iterations},
                 {"repeats", o.repeats}});
  write_json(dir / "config.json", config);
  out << text;
  return kExitOk;
}

int cmd_explain(const Options& o, std::ostream& out) {
  const Model model = load_model(require_single_model(o));
  const LogisticRegressionModel* lr = logistic_part(model);
  if (lr == nullptr) throw Error(ErrorCode::InvalidArgument, "explain needs a logistic regression or ensemble model");
  const FeatureSet set = set_for(model);
  const auto names = feature_names(set);
  const fs::path dir = output_dir(o);

  json coefficients = json::array();
  std::string text = "Coefficient     Weight (standardized)   Feature mean   Feature std\n";
  char line[160];
  for (std::size_t c = 0; c < lr->weights.size(); ++c) {
    coefficients.push_back({{"feature", names[c]},
                            {"weight", lr->weights[c]},
                            {"feature_mean", lr->standardizer.means[c]},
                            {"feature_std", lr->standardizer.stds[c]}});
    std::snprintf(line, sizeof line, "%-15s %+21.4f %14.2f %13.2f\n", names[c].c_str(), lr->weights[c],
                  lr->standardizer.means[c], lr->standardizer.stds[c]);
    text += line;
  }
  std::snprintf(line, sizeof line, "%-15s %+21.4f\n", "bias", lr->bias);
  text += line;
  json result{{"model_kind", std::string(to_string(kind_of(model)))},
              {"coefficients", coefficients},
              {"bias", lr->bias},
              {"stability", nullptr}};

  if (!o.table.empty()) {
    const Prepared p = prepare(o, set);
    const StabilityReport stability = coefficient_stability(p.X_train, p.y_train, lr->params, o.runs, o.seed);
    result["stability"] = to_json(stability, names);
    text += "\nStability across " + std::to_string(o.runs) + " reshuffled runs\n" + stability_text(stability, names);
  }
  write_json(dir / "explain.json", result);
  write_text(dir / "explain.txt", text);

  json config = base_config("explain", o);
  config.update({{"model_file", o.model_files.front()},
                 {"table", o.table.empty() ? json(nullptr) : json(o.table)},
                 {"runs", o.runs}});
  write_json(dir / "config.json", config);
  out << text;
  return kExitOk;
}

int cmd_corr(const Options& o, std::ostream& out) {
  const FeatureTable table = load_table(require(o.table, "--table"));
  const fs::path dir = output_dir(o);
  const CorrelationMatrix corr = pearson_correlation_matrix(table);
  write_text(dir / "correlation.csv", correlation_csv(corr));
  const std::string text = correlation_text(corr);
  write_text(dir / "correlation.txt", text);
  json config = base_config("corr", o);
  config.erase("test_fraction");
  config["table"] = o.table;
  write_json(dir / "config.json", config);
  out << text;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Argument wiring

void add_out(CLI::App* sub, Options& o) { sub->add_option("--out", o.out, "Output directory")->capture_default_str(); }
void add_seed(CLI::App* sub, Options& o) { sub->add_option("--seed", o.seed, "Seed for every random draw")->capture_default_str(); }
void add_table(CLI::App* sub, Options& o, bool required) {
  auto* opt = sub->add_option("--table", o.table, "Feature CSV written by extract");
  if (required) opt->required();
}
void add_split(CLI::App* sub, Options& o) {
  sub->add_option("--test-fraction", o.test_fraction, "Held-out fraction per class")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
}
void add_features(CLI::App* sub, Options& o) {
  sub->add_option("--features", o.features, "Feature set")->check(CLI::IsMember({"two", "three"}))->capture_default_str();
}
void add_model(CLI::App* sub, Options& o, std::vector<std::string> families) {
  sub->add_option("--model", o.model, "Model family")->check(CLI::IsMember(families))->capture_default_str();
}
void add_params(CLI::App* sub, Options& o) {
  sub->add_option("--params", o.params, "Hyperparameters as inline JSON or a JSON file");
}
void add_model_file(CLI::App* sub, Options& o, bool many) {
  auto* opt = sub->add_option("--model-file", o.model_files, "Serialized model")->required();
  if (!many) opt->expected(1);
}
void add_folds(CLI::App* sub, Options& o, std::size_t fallback) {
  sub->add_option("--folds", o.folds, "Cross-validation folds (default " + std::to_string(fallback) + ")")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000}));
}

json error_json(const std::string& code, const std::string& message, int exit_code) {
  return {{"error", {{"code", code}, {"message", message}, {"exit_code", exit_code}}}};
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError: return kExitIo;
    case ErrorCode::InvalidArgument:
    case ErrorCode::EmptySpace: return kExitUsage;
    default: return kExitData;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Morphological feature pipeline for malaria cell classification", "emfe"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto* extract = app.add_subcommand("extract", "Extract features from a Parasitized/Uninfected image tree");
  extract->add_option("--data", o.data, "Dataset root")->required();
  add_out(extract, o);
  add_seed(extract, o);
  extract->add_option("--polarity", o.polarity, "Foreground polarity")
      ->check(CLI::IsMember({"paper", "auto", "light"}))
      ->capture_default_str();
  extract->add_option("--connectivity", o.connectivity, "Pixel adjacency for hole counting")
      ->check(CLI::IsMember({4, 8}))
      ->capture_default_str();
  extract->add_option("--subsample", o.subsample, "Stratified cap on the number of images (0 = all)");
  extract->add_option("--debug-dir", o.debug_dir, "Write intermediate PGM/PBM images here");

  const std::vector<std::string> all_families{"logreg", "rf", "knn", "svm", "ensemble"};

  auto* train_cmd = app.add_subcommand("train", "Train one model on the training split");
  add_table(train_cmd, o, true);
  add_model(train_cmd, o, all_families);
  add_params(train_cmd, o);
  add_features(train_cmd, o);
  add_split(train_cmd, o);
  add_seed(train_cmd, o);
  add_out(train_cmd, o);

  auto* cv_cmd = app.add_subcommand("cv", "Stratified k-fold accuracy on the training split");
  add_table(cv_cmd, o, true);
  add_model(cv_cmd, o, all_families);
  add_params(cv_cmd, o);
  add_folds(cv_cmd, o, 5);
  add_features(cv_cmd, o);
  add_split(cv_cmd, o);
  add_seed(cv_cmd, o);
  add_out(cv_cmd, o);

  auto* tune = app.add_subcommand("tune", "Randomized hyperparameter search with k-fold CV");
  add_table(tune, o, true);
  add_model(tune, o, all_families);
  tune->add_option("--n-samples", o.n_samples, "Configurations to draw")->check(CLI::PositiveNumber)->capture_default_str();
  add_folds(tune, o, 5);
  add_features(tune, o);
  add_split(tune, o);
  add_seed(tune, o);
  add_out(tune, o);

  auto* eval = app.add_subcommand("eval", "Confusion matrix, report and threshold sweep on the test split");
  add_model_file(eval, o, false);
  add_table(eval, o, true);
  eval->add_option("--threshold-target", o.threshold_target, "Parasitized recall target for the sweep")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  add_split(eval, o);
  add_seed(eval, o);
  add_out(eval, o);

  auto* ensemble = app.add_subcommand("ensemble", "Two-stage ensemble: k-fold validation, final model, test report");
  add_table(ensemble, o, true);
  add_params(ensemble, o);
  add_folds(ensemble, o, 10);
  add_features(ensemble, o);
  add_split(ensemble, o);
  add_seed(ensemble, o);
  add_out(ensemble, o);

  auto* bench = app.add_subcommand("bench", "Training time, inference latency and model size");
  add_model_file(bench, o, true);
  add_table(bench, o, true);
  bench->add_option("--data", o.data, "Dataset root; enables end-to-end timing");
  bench->add_option("--iterations", o.iterations, "Timed calls per mode")
      ->check(CLI::Range(std::size_t{1000}, std::size_t{100000000}))
      ->capture_default_str();
  bench->add_option("--repeats", o.repeats, "Training repeats")->check(CLI::PositiveNumber)->capture_default_str();
  add_split(bench, o);
  add_seed(bench, o);
  add_out(bench, o);

  auto* explain = app.add_subcommand("explain", "Logistic coefficients and their stability");
  add_model_file(explain, o, false);
  add_table(explain, o, false);
  explain->add_option("--runs", o.runs, "Reshuffled retraining runs")->check(CLI::PositiveNumber)->capture_default_str();
  add_split(explain, o);
  add_seed(explain, o);
  add_out(explain, o);

  auto* corr = app.add_subcommand("corr", "Pearson correlation of features and label");
  add_table(corr, o, true);
  add_out(corr, o);

  try {
    std::vector<std::string> reversed;
    if (args.size() > 1) reversed.assign(args.rbegin(), args.rend() - 1);
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << error_json("UsageError", e.what(), kExitUsage).dump() << "\n";
    return kExitUsage;
  }

  try {
    if (*extract) return cmd_extract(o, out);
    if (*train_cmd) return cmd_train(o, out);
    if (*cv_cmd) return cmd_cv(o, out);
    if (*tune) return cmd_tune(o, out);
    if (*eval) return cmd_eval(o, out);
    if (*ensemble) return cmd_ensemble(o, out);
    if (*bench) return cmd_bench(o, out);
    if (*explain) return cmd_explain(o, out);
    if (*corr) return cmd_corr(o, out);
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    err << error_json(std::string(to_string(e.code())), e.detail(), code).dump() << "\n";
    return code;
  } catch (const fs::filesystem_error& e) {
    err << error_json("IoError", e.what(), kExitIo).dump() << "\n";
    return kExitIo;
  } catch (const json::exception& e) {
    err << error_json("InvalidArgument", e.what(), kExitUsage).dump() << "\n";
    return kExitUsage;
  }
  err << error_json("UsageError", "no subcommand", kExitUsage).dump() << "\n";
  return kExitUsage;
}

}  // namespace emfe::cli

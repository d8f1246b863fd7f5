#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "emfe/cli.hpp"
#include "emfe/dataset.hpp"
#include "emfe/evaluation.hpp"
#include "emfe/imaging.hpp"
#include "emfe/model_io.hpp"
#include "emfe/morphology.hpp"

namespace py = pybind11;

namespace {

emfe::Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  emfe::Matrix X(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw emfe::Error(emfe::ErrorCode::LengthMismatch, "ragged feature rows");
    for (std::size_t c = 0; c < cols; ++c) X(r, c) = rows[r][c];
  }
  return X;
}

emfe::BinaryMask to_mask(const std::vector<std::vector<bool>>& rows) {
  const std::size_t w = rows.empty() ? 0 : rows.front().size();
  emfe::BinaryMask mask(w, rows.size());
  for (std::size_t y = 0; y < rows.size(); ++y) {
    if (rows[y].size() != w) throw emfe::Error(emfe::ErrorCode::LengthMismatch, "ragged mask rows");
    for (std::size_t x = 0; x < w; ++x) mask.set(x, y, rows[y][x]);
  }
  return mask;
}

py::dict features_dict(const emfe::FeatureVector& f) {
  py::dict d;
  d["foreground"] = f.foreground;
  d["background"] = f.background;
  d["holes"] = f.holes;
  return d;
}

// Holder so the variant is bound as one opaque class rather than through the
// std::variant caster.
struct PyModel {
  emfe::Model model;
};

py::object json_to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_emfe, m) {
  m.doc() = "Morphological feature pipeline: masks, features, classical models and metrics";

  py::register_exception<emfe::Error>(m, "EmfeError", PyExc_RuntimeError);

  m.def("otsu_cut", [](const std::vector<std::uint64_t>& histogram) { return emfe::otsu_cut(histogram); },
        py::arg("histogram"));

  m.def(
      "count_holes",
      [](const std::vector<std::vector<bool>>& mask, int connectivity) {
        return emfe::count_holes(to_mask(mask), emfe::parse_connectivity(connectivity));
      },
      py::arg("mask"), py::arg("connectivity") = 8);

  m.def(
      "extract_file",
      [](const std::string& path, const std::string& polarity, int connectivity) {
        return features_dict(
            emfe::extract_file(path, emfe::parse_polarity(polarity), emfe::parse_connectivity(connectivity)));
      },
      py::arg("path"), py::arg("polarity") = "paper", py::arg("connectivity") = 8);

  m.def(
      "mask_of",
      [](const std::string& path, const std::string& polarity) {
        const auto pre = emfe::preprocess(emfe::load_rgb(path), emfe::parse_polarity(polarity));
        std::vector<std::vector<bool>> rows(pre.mask.height, std::vector<bool>(pre.mask.width));
        for (std::size_t y = 0; y < pre.mask.height; ++y) {
          for (std::size_t x = 0; x < pre.mask.width; ++x) rows[y][x] = pre.mask.at(x, y);
        }
        return py::make_tuple(pre.threshold, rows);
      },
      py::arg("path"), py::arg("polarity") = "paper", "Otsu threshold and the 128x128 mask of a PNG");

  m.def(
      "load_table",
      [](const std::string& path) {
        const auto table = emfe::load_table(path);
        py::list rows;
        for (const auto& s : table.samples) {
          py::dict d = features_dict(s.features);
          d["path"] = s.path;
          d["label"] = static_cast<int>(s.label);
          rows.append(d);
        }
        return rows;
      },
      py::arg("path"));

  m.def(
      "report",
      [](std::uint64_t tp, std::uint64_t fn, std::uint64_t fp, std::uint64_t tn) {
        return json_to_python(emfe::to_json(emfe::report(emfe::ConfusionMatrix{tp, fn, fp, tn})));
      },
      py::arg("tp"), py::arg("fn"), py::arg("fp"), py::arg("tn"));

  py::class_<PyModel>(m, "Model")
      .def_property_readonly("kind", [](const PyModel& p) { return std::string(emfe::to_string(emfe::kind_of(p.model))); })
      .def_property_readonly("n_features", [](const PyModel& p) { return emfe::feature_count(p.model); })
      .def("predict",
           [](const PyModel& p, const std::vector<std::vector<double>>& X) {
             std::vector<int> out;
             for (const auto& row : X) out.push_back(static_cast<int>(emfe::predict(p.model, row)));
             return out;
           })
      .def("predict_proba",
           [](const PyModel& p, const std::vector<std::vector<double>>& X) {
             std::vector<double> out;
             for (const auto& row : X) out.push_back(emfe::predict_proba(p.model, row));
             return out;
           })
      .def("save", [](const PyModel& p, const std::string& path) { emfe::save_model(path, p.model); })
      .def("to_bytes",
           [](const PyModel& p) {
             const auto bytes = emfe::serialize_model(p.model);
             return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
           })
      .def("sidecar", [](const PyModel& p, const std::vector<std::string>& names) {
        return json_to_python(emfe::model_sidecar(p.model, names));
      });

  m.def(
      "train",
      [](const std::string& family, const std::vector<std::vector<double>>& X, const std::vector<int>& y,
         const std::string& params, std::uint64_t seed) {
        const auto kind = emfe::parse_model_kind(family);
        const auto spec = emfe::spec_from_json(kind, params.empty() ? nlohmann::json::object() : nlohmann::json::parse(params));
        return PyModel{emfe::train(spec, to_matrix(X), emfe::to_labels(y), seed)};
      },
      py::arg("family"), py::arg("X"), py::arg("y"), py::arg("params") = "", py::arg("seed") = 42);

  m.def("load_model", [](const std::string& path) { return PyModel{emfe::load_model(path)}; }, py::arg("path"));
  m.def(
      "model_from_bytes",
      [](const py::bytes& data) {
        const std::string raw = data;
        return PyModel{emfe::deserialize_model(
            std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()))};
      },
      py::arg("data"));

  m.def(
      "cross_validate",
      [](const std::string& family, const std::vector<std::vector<double>>& X, const std::vector<int>& y,
         std::size_t k, std::uint64_t seed) {
        const auto spec = emfe::default_spec(emfe::parse_model_kind(family));
        return json_to_python(emfe::to_json(emfe::cross_validate(spec, to_matrix(X), emfe::to_labels(y), k, seed)));
      },
      py::arg("family"), py::arg("X"), py::arg("y"), py::arg("k") = 5, py::arg("seed") = 42);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> full{"emfe"};
        full.insert(full.end(), args.begin(), args.end());
        std::ostringstream out, err;
        const int code = emfe::cli::run(full, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a CLI command in-process; returns (exit_code, stdout, stderr)");
}

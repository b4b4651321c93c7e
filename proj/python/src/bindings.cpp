#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "owdisc/assignment.hpp"
#include "owdisc/errors.hpp"
#include "owdisc/evaluation.hpp"
#include "owdisc/io.hpp"
#include "owdisc/kmeans.hpp"
#include "owdisc/matching.hpp"
#include "owdisc/pipeline.hpp"
#include "owdisc/serialize.hpp"
#include "owdisc/synthgen.hpp"
#include "owdisc/version.hpp"

namespace py = pybind11;
using namespace owdisc;

namespace {

// Reports cross the boundary as JSON text; the Python side parses them.
template <typename T>
std::string dump(const T& value) {
  return nlohmann::json(value).dump();
}

ClassCountSpec class_spec(const py::object& classes) {
  if (py::isinstance<py::int_>(classes)) return classes.cast<std::size_t>();
  const auto range = classes.cast<std::tuple<std::size_t, std::size_t, std::string>>();
  return EstimateRange{std::get<0>(range), std::get<1>(range), parse_estimate_mode(std::get<2>(range))};
}

py::tuple prediction_tuple(const PredictionSet& p) { return py::make_tuple(p.assignments, p.confidences); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Open-world class discovery on precomputed embeddings";
  m.attr("__version__") = kVersion;

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);

  py::class_<EmbeddingSet>(m, "EmbeddingSet")
      .def(py::init([](const FloatMatrix& vectors, std::optional<Labels> labels) {
             return EmbeddingSet(vectors, std::move(labels));
           }),
           py::arg("vectors"), py::arg("labels") = py::none())
      .def_property_readonly("count", &EmbeddingSet::count)
      .def_property_readonly("dim", &EmbeddingSet::dim)
      .def_property_readonly("vectors", &EmbeddingSet::vectors)
      .def_property_readonly("labels",
                             [](const EmbeddingSet& s) { return s.has_labels() ? py::cast(s.labels()) : py::none(); })
      .def("__len__", &EmbeddingSet::count)
      .def("__eq__", [](const EmbeddingSet& a, const EmbeddingSet& b) { return a == b; });

  py::class_<PrototypeBank>(m, "PrototypeBank")
      .def_property_readonly("columns", &PrototypeBank::columns)
      .def_property_readonly("count", &PrototypeBank::count)
      .def_property_readonly("kind", [](const PrototypeBank& b) { return std::string(to_string(b.kind())); });

  py::class_<DiscoveryConfig>(m, "DiscoveryConfig")
      .def(py::init<>())
      .def_readwrite("tau", &DiscoveryConfig::tau)
      .def_readwrite("lambda_", &DiscoveryConfig::lambda)
      .def_readwrite("temperature", &DiscoveryConfig::temperature)
      .def_readwrite("iterations", &DiscoveryConfig::iterations)
      .def_readwrite("batch_size", &DiscoveryConfig::batch_size)
      .def_readwrite("lr_head", &DiscoveryConfig::lr_head)
      .def_readwrite("lr_adapter", &DiscoveryConfig::lr_adapter)
      .def_readwrite("seed", &DiscoveryConfig::seed)
      .def_readwrite("kmeans_max_iter", &DiscoveryConfig::kmeans_max_iter)
      .def_readwrite("kmeans_tol", &DiscoveryConfig::kmeans_tol)
      .def_readwrite("kmeans_restarts", &DiscoveryConfig::kmeans_restarts)
      .def_readwrite("full_set_regularizer", &DiscoveryConfig::full_set_regularizer)
      .def_readwrite("supervised_full_softmax", &DiscoveryConfig::supervised_full_softmax)
      .def_property(
          "adapter", [](const DiscoveryConfig& c) { return std::string(to_string(c.adapter_kind)); },
          [](DiscoveryConfig& c, const std::string& kind) { c.adapter_kind = parse_adapter_kind(kind); })
      .def("validate", &DiscoveryConfig::validate)
      .def("to_json", [](const DiscoveryConfig& c) { return dump(c); });

  m.def("load_embeddings", &load_embeddings, py::arg("path"));
  m.def("save_embeddings", &save_embeddings, py::arg("set"), py::arg("path"));

  m.def(
      "generate",
      [](const std::string& preset_name, std::optional<std::uint64_t> seed) {
        Scenario s = preset(preset_name);
        if (seed) s.seed = *seed;
        ScenarioData data = generate(s);
        return py::make_tuple(data.source, data.target, data.target_truth, s.seen_count, s.target_class_count());
      },
      py::arg("preset") = "s1", py::arg("seed") = py::none());
  m.def("preset_names", &preset_names);

  m.def(
      "solve_assignment",
      [](const Eigen::MatrixXd& cost) {
        const AssignmentResult r = solve_assignment(cost);
        return py::make_tuple(r.mapping, r.total_cost);
      },
      py::arg("cost"));

  m.def(
      "kmeans",
      [](const FloatMatrix& points, std::size_t k, std::uint64_t seed, std::size_t restarts) {
        const KMeansResult r = kmeans_fit(points, k, {.seed = seed, .restarts = restarts});
        return py::make_tuple(r.centroids, r.assignments, r.inertia);
      },
      py::arg("points"), py::arg("k"), py::arg("seed") = 0, py::arg("restarts") = 1);

  m.def(
      "match_from_cooccurrence",
      [](const CountMatrix& gamma, double tau) { return dump(match_from_cooccurrence(gamma, tau)); },
      py::arg("cooccurrence"), py::arg("tau") = 0.3);

  m.def("h_score", &h_score, py::arg("seen"), py::arg("unseen"));
  m.def(
      "evaluate",
      [](const std::vector<std::uint32_t>& predictions, const Labels& truth, std::size_t seen_count) {
        PredictionSet p{predictions, std::vector<float>(predictions.size(), 1.0f)};
        return dump(evaluate(p, truth, ClassCatalog{seen_count, std::nullopt}));
      },
      py::arg("predictions"), py::arg("truth"), py::arg("seen_count"));

  m.def(
      "crow_discover",
      [](const EmbeddingSet& source, const EmbeddingSet& target, const py::object& classes,
         const DiscoveryConfig& config, const Labels& truth) {
        const ClassCountSpec spec = class_spec(classes);
        DiscoveryRun run;
        {
          py::gil_scoped_release release;
          run = crow_discover(source, target, spec, config, truth);
        }
        return py::make_tuple(prediction_tuple(run.predictions), dump(run.report));
      },
      py::arg("source"), py::arg("target"), py::arg("classes"), py::arg("config") = DiscoveryConfig{},
      py::arg("truth") = Labels{});

  m.def(
      "simple_baseline",
      [](const EmbeddingSet& source, const EmbeddingSet& target, std::size_t target_class_count,
         const DiscoveryConfig& config, double threshold, const Labels& truth) {
        BaselineRun run;
        {
          py::gil_scoped_release release;
          run = simple_baseline(source, target, target_class_count, config, threshold, truth);
        }
        return py::make_tuple(prediction_tuple(run.predictions), dump(run.report));
      },
      py::arg("source"), py::arg("target"), py::arg("target_class_count"), py::arg("config"),
      py::arg("entropy_threshold"), py::arg("truth") = Labels{});
  m.def("simple_threshold_grid", &simple_threshold_grid, py::arg("seen_count"));

  m.def(
      "kmeans_baseline",
      [](const EmbeddingSet& target, std::size_t k, const Labels& truth, const DiscoveryConfig& config) {
        const KMeansBaselineResult r = kmeans_baseline(target, k, truth, config);
        return py::make_tuple(r.clusters, r.accuracy.accuracy);
      },
      py::arg("target"), py::arg("k"), py::arg("truth"), py::arg("config") = DiscoveryConfig{});

  m.def(
      "estimate_num_classes",
      [](const EmbeddingSet& source, const EmbeddingSet& target, std::size_t k_min, std::size_t k_max,
         const std::string& mode, const DiscoveryConfig& config) {
        return dump(estimate_num_classes(source, target, {k_min, k_max, parse_estimate_mode(mode)}, config));
      },
      py::arg("source"), py::arg("target"), py::arg("k_min"), py::arg("k_max"), py::arg("mode") = "union",
      py::arg("config") = DiscoveryConfig{});
}

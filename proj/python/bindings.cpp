// SPDX-License-Identifier: Apache-2.0
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "codesynth/cli.hpp"
#include "codesynth/dataset.hpp"
#include "codesynth/diversity.hpp"
#include "codesynth/error.hpp"
#include "codesynth/instruction.hpp"
#include "codesynth/parsers.hpp"
#include "codesynth/persona_store.hpp"
#include "codesynth/pointing.hpp"
#include "codesynth/prompt.hpp"
#include "codesynth/registry.hpp"

namespace py = pybind11;
using namespace codesynth;

namespace {

py::tuple triplet_tuple(const InstructionTriplet& t) { return py::make_tuple(t.question, t.explanation, t.answer); }

InstructionTriplet triplet_of(const py::tuple& t) {
  if (t.size() != 3) throw py::value_error("triplet must have three fields");
  return {t[0].cast<std::string>(), t[1].cast<std::string>(), t[2].cast<std::string>()};
}

TrainingStyle style_of(const std::string& s) {
  if (s == "cot") return TrainingStyle::kCoT;
  if (s == "short_answer") return TrainingStyle::kShortAnswer;
  throw py::value_error("style must be 'cot' or 'short_answer'");
}

}  // namespace

PYBIND11_MODULE(_codesynth, m) {
  m.doc() = "codesynth core bindings";

  static py::exception<Error> error_type(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  m.def("parse_topics", &parse_topics, py::arg("text"), py::arg("expected"));
  m.def("parse_json_payload", [](const std::string& text) { return parse_json_payload(text).payload.dump(); },
        "First JSON object in the text, re-serialized with key order kept.");
  m.def("extract_code_block", [](const std::string& text, const std::string& tag) {
    const auto b = extract_code_block(text, tag);
    return py::make_tuple(b.source, b.tag, b.tag_mismatch);
  });
  m.def("parse_qa_triplets", [](const std::string& text) {
    const auto r = parse_qa_triplets(text);
    py::list out;
    for (const auto& t : r.triplets) out.append(triplet_tuple(t));
    return py::make_tuple(out, r.dropped);
  });
  m.def("format_qa_triplets", [](const std::vector<py::tuple>& ts) {
    std::vector<InstructionTriplet> v;
    for (const auto& t : ts) v.push_back(triplet_of(t));
    return format_qa_triplets(v);
  });
  m.def("format_training_example", [](const py::tuple& t, const std::string& style) {
    const auto ex = format_training_example(triplet_of(t), style_of(style));
    return py::make_tuple(ex.prompt, ex.target);
  });

  m.def("render_template", [](const std::string& body, const std::map<std::string, std::string>& bindings) {
    Bindings b(bindings.begin(), bindings.end());
    return render_template(PromptTemplate(Stage::kTopic, body), b);
  });

  m.def("mean_pairwise_cosine_distance", [](const std::vector<std::vector<double>>& vs) {
    std::vector<FeatureVector> fv;
    for (const auto& v : vs) fv.emplace_back(v);
    return mean_pairwise_cosine_distance(fv);
  });

  m.def("normalize_coords", &normalize_coords, py::arg("px"), py::arg("py"), py::arg("width"), py::arg("height"));
  m.def(
      "extract_points",
      [](const std::filesystem::path& png, std::array<int, 3> color, double tolerance, int min_area) {
        MarkerSpec spec;
        spec.color = {static_cast<std::uint8_t>(color[0]), static_cast<std::uint8_t>(color[1]),
                      static_cast<std::uint8_t>(color[2])};
        spec.match_tolerance = tolerance;
        spec.min_component_area = min_area;
        spec.validate();
        py::list out;
        for (const auto& p : extract_points(read_png(png), spec)) out.append(py::make_tuple(p.x, p.y, p.area));
        return out;
      },
      py::arg("png"), py::arg("color") = std::array<int, 3>{255, 0, 255}, py::arg("tolerance") = 30.0,
      py::arg("min_area") = 4);

  m.def("registry_summary", [](const std::filesystem::path& path) {
    const auto r = load_registry(path);
    py::dict d;
    d["qa_pipelines"] = r.qa_spec_count();
    d["qa_categories"] = r.qa_category_count();
    d["tools"] = r.tool_count();
    d["pointing_pipelines"] = r.pointing_spec_count();
    py::list pairs;
    for (const auto& s : r.specs())
      pairs.append(py::make_tuple(s.id, std::string(to_string(s.category)), std::string(to_string(s.tool))));
    d["pipelines"] = pairs;
    return d;
  });
  m.def(
      "select_pipelines",
      [](const std::filesystem::path& registry, const std::string& text, const std::string& category, int count,
         std::uint64_t seed) {
        const auto r = load_registry(registry);
        py::list out;
        for (const auto& a : select_pipelines({text, category, count, seed}, r)) out.append(py::make_tuple(a.spec->id, a.count));
        return out;
      },
      py::arg("registry"), py::arg("text"), py::arg("category") = "auto", py::arg("count") = 1, py::arg("seed") = 0);
  m.def("resolve_category", [](const std::string& text) { return std::string(to_string(resolve_category(text))); });

  m.def("sample_persona", [](const std::vector<std::string>& personas, std::uint64_t seed) {
    const PersonaStore store(personas);
    const auto& p = sample_persona(store, seed);
    return py::make_tuple(p.id, p.text);
  });

  m.def("validate_shard", [](const std::filesystem::path& dir) {
    py::list out;
    for (const auto& v : validate_shard(dir)) out.append(py::make_tuple(v.kind, v.record_id, v.detail));
    return out;
  });

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      "Runs the command line tool in-process; returns (exit code, stdout, stderr).");
}

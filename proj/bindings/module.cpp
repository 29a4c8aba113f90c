#include <pybind11/pybind11.h>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "provsumm/errors.hpp"
#include "provsumm/relstore.hpp"
#include "provsumm/runner.hpp"
#include "provsumm/sqlgen.hpp"

namespace py = pybind11;
using json = nlohmann::ordered_json;

namespace {

py::object to_py(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return py::none();
    case json::value_t::boolean: return py::bool_(j.get<bool>());
    case json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
    case json::value_t::number_unsigned:
      return py::int_(j.get<std::uint64_t>());
    case json::value_t::number_float: return py::float_(j.get<double>());
    case json::value_t::string: return py::str(j.get<std::string>());
    case json::value_t::array: {
      py::list out;
      for (const auto& v : j) out.append(to_py(v));
      return out;
    }
    case json::value_t::object: {
      py::dict out;
      for (auto it = j.begin(); it != j.end(); ++it)
        out[py::str(it.key())] = to_py(it.value());
      return out;
    }
    default: return py::none();
  }
}

json from_py(py::handle h) {
  if (h.is_none()) return nullptr;
  if (py::isinstance<py::bool_>(h)) return h.cast<bool>();
  if (py::isinstance<py::int_>(h)) return h.cast<std::int64_t>();
  if (py::isinstance<py::float_>(h)) return h.cast<double>();
  if (py::isinstance<py::str>(h)) return h.cast<std::string>();
  if (py::isinstance<py::list>(h) || py::isinstance<py::tuple>(h)) {
    json arr = json::array();
    for (auto item : h.cast<py::sequence>()) arr.push_back(from_py(item));
    return arr;
  }
  if (py::isinstance<py::dict>(h)) {
    json obj = json::object();
    for (auto item : h.cast<py::dict>())
      obj[item.first.cast<std::string>()] = from_py(item.second);
    return obj;
  }
  throw py::type_error("report values must be JSON-like");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) provsumm::fail(provsumm::ErrorCode::io, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

provsumm::RunMode parse_mode(const std::string& mode) {
  if (mode == "sample") return provsumm::RunMode::sample;
  if (mode == "full") return provsumm::RunMode::full;
  throw py::value_error("mode must be 'sample' or 'full'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "pattern-based summaries of why and why-not provenance over "
      "CSV-backed union-of-conjunctive-query programs";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const provsumm::EngineError& e) {
      std::string msg =
          std::string(provsumm::error_code_name(e.code())) + ": " + e.what();
      PyErr_SetString(PyExc_ValueError, msg.c_str());
    }
  });

  m.def(
      "run",
      [](const std::string& rules, const std::string& data,
         const std::string& schema, const std::string& question, std::size_t k,
         std::size_t sample_size, double success_prob, std::uint64_t seed,
         const std::string& mode, const std::string& domains,
         const std::string& emit_sql, bool universal_domain) {
        provsumm::RunConfig cfg;
        cfg.rules_path = rules;
        cfg.data_dir = data;
        cfg.schema_path = schema;
        cfg.question_text = question;
        cfg.k = k;
        cfg.sample_size = sample_size;
        cfg.success_prob = success_prob;
        cfg.seed = seed;
        cfg.mode = parse_mode(mode);
        cfg.domains_path = domains;
        cfg.emit_sql_path = emit_sql;
        cfg.universal_domain = universal_domain;
        return to_py(provsumm::run_summarize(cfg));
      },
      py::arg("rules"), py::arg("data"), py::arg("schema"),
      py::arg("question"), py::arg("k") = 3, py::arg("sample_size") = 1000,
      py::arg("success_prob") = 0.999, py::arg("seed") = 1,
      py::arg("mode") = "sample", py::arg("domains") = std::string(),
      py::arg("emit_sql") = std::string(),
      py::arg("universal_domain") = false,
      "Run the summarization pipeline and return the report as nested "
      "dicts and lists.");

  m.def(
      "render_text",
      [](py::dict report) { return provsumm::render_text(from_py(report)); },
      py::arg("report"),
      "Human-readable rendering of a report produced by run().");

  m.def(
      "pipeline_sql",
      [](const std::string& rules, const std::string& data,
         const std::string& schema, const std::string& question) {
        provsumm::Database db = provsumm::load_database(data, schema);
        provsumm::Query q = provsumm::parse_program(slurp(rules));
        provsumm::validate_query(q, db);
        return provsumm::emit_sql(q, db, provsumm::parse_question(question));
      },
      py::arg("rules"), py::arg("data"), py::arg("schema"),
      py::arg("question"),
      "Render the WHYNOT sampling pipeline as parameterized SQL text.");
}

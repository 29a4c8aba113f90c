#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "provsumm/errors.hpp"

namespace provsumm {

enum class RunMode { sample, full };
enum class OutputFormat { json, text };

struct RunConfig {
  std::string rules_path;
  std::string data_dir;
  std::string schema_path;
  std::string question_text;
  std::size_t k = 3;
  std::size_t sample_size = 1000;
  double success_prob = 0.999;
  std::uint64_t seed = 1;
  RunMode mode = RunMode::sample;
  OutputFormat output_format = OutputFormat::json;
  std::string domains_path;       // optional domain override file
  std::string emit_sql_path;      // optional; write the pipeline SQL here
  bool universal_domain = false;  // one shared domain per value type
};

// Whole pipeline: load, parse, sample or enumerate, candidate generation,
// search. Returns the report. For a fixed config the report is reproducible
// byte for byte except for the timings_ms subtree.
nlohmann::ordered_json run_summarize(const RunConfig& cfg);

// Human-readable rendering of a run_summarize report.
std::string render_text(const nlohmann::ordered_json& report);

nlohmann::ordered_json error_json(const EngineError& err);

}  // namespace provsumm

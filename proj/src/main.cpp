#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "provsumm/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "summarizes why and why-not provenance of a union of conjunctive "
      "queries over CSV relations"};

  provsumm::RunConfig cfg;
  std::string mode = "sample";
  std::string output = "json";

  app.add_option("--rules", cfg.rules_path, "rule file, one rule per line")
      ->required();
  app.add_option("--data", cfg.data_dir,
                 "directory holding one <relation>.csv per declared relation")
      ->required();
  app.add_option("--schema", cfg.schema_path, "schema declaration file")
      ->required();
  app.add_option("--question", cfg.question_text,
                 "provenance question, e.g. \"WHYNOT Q(X, 4)\"")
      ->required();
  app.add_option("--k", cfg.k, "number of patterns in the summary")
      ->capture_default_str();
  app.add_option("--sample-size", cfg.sample_size,
                 "target number of sampled derivations")
      ->capture_default_str();
  app.add_option("--success-prob", cfg.success_prob,
                 "probability that oversampling reaches the target size")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  app.add_option("--mode", mode, "sample | full")
      ->check(CLI::IsMember({"sample", "full"}))
      ->capture_default_str();
  app.add_option("--output", output, "json | text")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();
  app.add_option("--domains", cfg.domains_path,
                 "domain override file (attr/var directives)");
  app.add_option("--emit-sql", cfg.emit_sql_path,
                 "write the sampling pipeline as SQL to this path");
  app.add_flag("--universal-domain", cfg.universal_domain,
               "sample every variable from one shared per-type domain");

  CLI11_PARSE(app, argc, argv);
  cfg.mode = mode == "full" ? provsumm::RunMode::full
                            : provsumm::RunMode::sample;
  cfg.output_format = output == "text" ? provsumm::OutputFormat::text
                                       : provsumm::OutputFormat::json;

  try {
    nlohmann::ordered_json report = provsumm::run_summarize(cfg);
    if (cfg.output_format == provsumm::OutputFormat::json)
      std::cout << report.dump(2) << "\n";
    else
      std::cout << provsumm::render_text(report);
  } catch (const provsumm::EngineError& e) {
    std::cerr << provsumm::error_json(e).dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::ordered_json{
                     {"error", {{"code", "E_INTERNAL"}, {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 2;
  }
  return 0;
}

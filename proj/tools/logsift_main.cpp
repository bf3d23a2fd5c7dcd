#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "logsift/pipeline.hpp"
#include "logsift/version.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> head;
  std::optional<std::string> input_path;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path,
                  "pipeline config file (JSON)");
  cmd->add_option("-o,--output-dir", args.output_dir,
                  "override the configured output directory");
  cmd->add_option("--seed", args.seed, "override the configured seed");
  cmd->add_option("--threads", args.threads, "cap worker threads");
  cmd->add_option("--head", args.head,
                  "keep only the first N raw input lines");
  cmd->add_option("-i,--input", args.input_path, "override input.path");
}

logsift::PipelineConfig resolve(const CommonArgs& args) {
  logsift::PipelineConfig cfg =
      args.config_path.empty()
          ? logsift::pipeline_config_from_json(nlohmann::json::object())
          : logsift::load_pipeline_config(args.config_path);
  if (args.output_dir) cfg.output_dir = *args.output_dir;
  if (args.seed) cfg.seed = *args.seed;
  if (args.threads) cfg.threads = std::max<std::size_t>(1, *args.threads);
  if (args.head) cfg.head = *args.head;
  if (args.input_path) cfg.input_path = *args.input_path;
  return cfg;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"log template mining, anomaly taxonomy, PU weak-label "
               "training and root-cause window analysis"};
  app.set_version_flag("--version", std::string(logsift::kToolName) + " " +
                                        std::string(logsift::kVersion));
  app.require_subcommand(1);

  CommonArgs generate_args, parse_args, taxonomy_args, label_args, rca_args,
      evaluate_args;
  auto* cmd_generate =
      app.add_subcommand("generate", "generate a synthetic corpus");
  add_common(cmd_generate, generate_args);
  auto* cmd_parse =
      app.add_subcommand("parse", "mine templates and export the parsed corpus");
  add_common(cmd_parse, parse_args);
  auto* cmd_taxonomy =
      app.add_subcommand("taxonomy", "score and classify anomaly types");
  add_common(cmd_taxonomy, taxonomy_args);
  auto* cmd_label = app.add_subcommand(
      "label", "assign weak labels, train the PU model and label every line");
  add_common(cmd_label, label_args);
  auto* cmd_rca = app.add_subcommand(
      "rca", "cluster failure windows, balance and rank root-cause lines");
  add_common(cmd_rca, rca_args);
  auto* cmd_evaluate = app.add_subcommand(
      "evaluate", "compare a scores export against ground truth");
  add_common(cmd_evaluate, evaluate_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_generate->parsed()) logsift::run_generate(resolve(generate_args));
    if (cmd_parse->parsed()) logsift::run_parse(resolve(parse_args));
    if (cmd_taxonomy->parsed()) logsift::run_taxonomy(resolve(taxonomy_args));
    if (cmd_label->parsed()) logsift::run_label(resolve(label_args));
    if (cmd_rca->parsed()) logsift::run_rca(resolve(rca_args));
    if (cmd_evaluate->parsed()) logsift::run_evaluate(resolve(evaluate_args));
  } catch (const logsift::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

/*
 * Copyright 2026 The cdiag Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end.
//
// Usage example:
//   cdiag diagnose --input data.jsonl --out report.json
//   cdiag sample --input data.jsonl --out plan.jsonl --template image
//
#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "cdiag/cli.hpp"

namespace {

void add_input_flags(CLI::App* cmd, cdiag::cli::InputArgs& in) {
  cmd->add_option("--input", in.input, "Dataset file (JSONL or CSV)")->required();
  cmd->add_option("--format", in.format, "jsonl, csv or auto (by extension)")
      ->check(CLI::IsMember({"jsonl", "csv", "auto"}));
  cmd->add_option("--vocab", in.vocabulary,
                  "Vocabulary file {\"classes\":[...],\"concepts\":[...]}");
  cmd->add_flag("--lenient", in.lenient, "Drop invalid records instead of failing");
  cmd->add_flag("--json-errors", in.json_errors, "Print errors as JSON on stderr");
}

void add_diagnose_flags(CLI::App* cmd, cdiag::cli::DiagnoseArgs& d,
                        std::optional<double>& tau, std::optional<uint64_t>& cap) {
  add_input_flags(cmd, d.in);
  cmd->add_option("--k-max", d.k_max, "Largest concept clique size")->capture_default_str();
  cmd->add_option("--min-support", d.min_support, "Minimum co-occurrence for an edge")
      ->capture_default_str();
  cmd->add_option("--min-class-fraction", tau,
                  "Relaxed common cliques: present in at least this fraction of classes");
  cmd->add_option("--template", d.template_name, "Prompt template: photo or image")
      ->capture_default_str();
  cmd->add_option("--clip-threshold", d.clip_threshold,
                  "CLIP score threshold passed to the generator")
      ->capture_default_str();
  cmd->add_option("--cap", cap, "Upper bound on any single query's count");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = cdiag::cli;
  CLI::App app{"Concept co-occurrence bias diagnosis and rebalance planning"};
  app.set_version_flag("--version", std::string(cdiag::kToolVersion));
  app.require_subcommand(1);

  cli::DiagnoseArgs diagnose;
  std::optional<double> diagnose_tau;
  std::optional<uint64_t> diagnose_cap;
  auto* diagnose_cmd = app.add_subcommand("diagnose", "Write a diagnosis report (JSON)");
  add_diagnose_flags(diagnose_cmd, diagnose, diagnose_tau, diagnose_cap);
  diagnose_cmd->add_option("--out", diagnose.out, "Report path ('-' for stdout)");

  cli::SampleArgs sample;
  std::optional<double> sample_tau;
  std::optional<uint64_t> sample_cap;
  auto* sample_cmd = app.add_subcommand("sample", "Write the generation plan (JSONL)");
  add_diagnose_flags(sample_cmd, sample.diag, sample_tau, sample_cap);
  sample_cmd->add_option("--out", sample.diag.out, "Plan path")->required();
  sample_cmd->add_option("--report", sample.report_out, "Also write the diagnosis report");

  cli::ExportGraphArgs graph;
  auto* graph_cmd = app.add_subcommand("export-graph", "Write the concept graph");
  add_input_flags(graph_cmd, graph.in);
  graph_cmd->add_option("--min-support", graph.min_support)->capture_default_str();
  graph_cmd->add_option("--graph-format", graph.graph_format, "dot or json")
      ->capture_default_str();
  graph_cmd->add_option("--out", graph.out, "Output path ('-' for stdout)");

  cli::SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a biased synthetic dataset");
  synth_cmd->add_option("--spec", synth.spec, "Bias spec JSON")->required();
  synth_cmd->add_option("--out", synth.out, "Output JSONL path")->required();
  synth_cmd->add_flag("--json-errors", synth.json_errors);

  cli::StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Print dataset statistics");
  add_input_flags(stats_cmd, stats.in);
  stats_cmd->add_option("--top", stats.top, "Number of class-concept pairs to list")
      ->capture_default_str();

  cli::ApplyPlanArgs apply;
  auto* apply_cmd =
      app.add_subcommand("apply-plan", "Extend a dataset with a plan's synthetic records");
  add_input_flags(apply_cmd, apply.in);
  apply_cmd->add_option("--plan", apply.plan, "Generation plan JSONL")->required();
  apply_cmd->add_option("--out", apply.out, "Output JSONL path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kInvalidInput;
  }

  diagnose.min_class_fraction = diagnose_tau;
  diagnose.cap = diagnose_cap;
  sample.diag.min_class_fraction = sample_tau;
  sample.diag.cap = sample_cap;

  if (*diagnose_cmd) return cli::cmd_diagnose(diagnose, std::cout, std::cerr);
  if (*sample_cmd) return cli::cmd_sample(sample, std::cout, std::cerr);
  if (*graph_cmd) return cli::cmd_export_graph(graph, std::cout, std::cerr);
  if (*synth_cmd) return cli::cmd_synth(synth, std::cout, std::cerr);
  if (*stats_cmd) return cli::cmd_stats(stats, std::cout, std::cerr);
  if (*apply_cmd) return cli::cmd_apply_plan(apply, std::cout, std::cerr);
  return cli::kInvalidInput;
}

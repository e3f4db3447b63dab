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

// Subcommand implementations behind the `cdiag` binary. Each takes its
// parsed arguments plus output/error streams and returns the process exit
// code:
//
//   0  success
//   1  invalid input (validation errors, bad flags, bad spec)
//   2  I/O failure
//
// Output files are written atomically; a failing command leaves no file.

#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cdiag/dataset.hpp"
#include "cdiag/diagnosis.hpp"
#include "cdiag/error.hpp"
#include "cdiag/graph.hpp"
#include "cdiag/ingest.hpp"
#include "cdiag/rebalance.hpp"
#include "cdiag/report.hpp"
#include "cdiag/synth.hpp"

namespace cdiag::cli {

enum ExitCode : int { kOk = 0, kInvalidInput = 1, kIoFailure = 2 };

struct InputArgs {
  std::string input;
  std::string format = "auto";  // jsonl | csv | auto (by extension)
  std::string vocabulary;       // optional vocabulary file
  bool lenient = false;
  bool json_errors = false;
};

struct DiagnoseArgs {
  InputArgs in;
  std::size_t k_max = kDefaultMaxCliqueSize;
  uint64_t min_support = 1;
  std::optional<double> min_class_fraction;
  std::string template_name = "photo";
  double clip_threshold = kDefaultClipThreshold;
  std::optional<uint64_t> cap;
  std::string out;
};

struct SampleArgs {
  DiagnoseArgs diag;
  std::string report_out;  // optional: also write the diagnosis report
};

struct ExportGraphArgs {
  InputArgs in;
  uint64_t min_support = 1;
  std::string graph_format = "json";
  std::string out;
};

struct SynthArgs {
  std::string spec;
  std::string out;
  bool json_errors = false;
};

struct StatsArgs {
  InputArgs in;
  std::size_t top = 20;
};

struct ApplyPlanArgs {
  InputArgs in;
  std::string plan;
  std::string out;
};

namespace detail {

struct Failure {
  int code;
  std::vector<ValidationIssue> issues;
};

inline void emit_failure(const Failure& f, bool json_errors, std::ostream& err) {
  if (json_errors) {
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& i : f.issues)
      errors.push_back({{"line", i.line},
                        {"record_id", i.record_id},
                        {"rule", i.rule},
                        {"message", i.message}});
    err << nlohmann::json{{"exit_code", f.code}, {"errors", std::move(errors)}}.dump()
        << "\n";
    return;
  }
  for (const auto& i : f.issues) err << "error: " << i.message << "\n";
}

inline Failure failure(int code, std::string rule, std::string message) {
  return {code, {{0, "", std::move(rule), std::move(message)}}};
}

struct Loaded {
  std::optional<Dataset> dataset;
  std::string digest;
  std::optional<Failure> failure;
};

inline Loaded load_dataset(const InputArgs& args, std::ostream& err) {
  Loaded result;
  std::string format = args.format;
  if (format == "auto")
    format = std::filesystem::path(args.input).extension() == ".csv" ? "csv" : "jsonl";
  if (format != "jsonl" && format != "csv") {
    result.failure = failure(kInvalidInput, "bad_flag", "unknown format '" + format + "'");
    return result;
  }
  std::string content;
  std::optional<Vocabulary> vocab;
  try {
    content = read_file(args.input);
    if (!args.vocabulary.empty()) {
      std::istringstream vin(read_file(args.vocabulary));
      vocab = parse_vocabulary(vin);
    }
  } catch (const IoError& e) {
    result.failure = failure(kIoFailure, "io", e.what());
    return result;
  } catch (const InvalidArgument& e) {
    result.failure = failure(kInvalidInput, "vocabulary", e.what());
    return result;
  }
  ParseOptions options;
  options.mode = args.lenient ? ParseMode::Lenient : ParseMode::Strict;
  options.vocabulary = vocab ? &*vocab : nullptr;
  ParseResult parsed =
      format == "csv" ? parse_csv(content, options) : parse_jsonl(content, options);
  if (!args.json_errors)
    for (const auto& w : parsed.report.warnings) err << "warning: " << w.message << "\n";
  if (!parsed.dataset) {
    result.failure = Failure{kInvalidInput, parsed.report.errors};
    return result;
  }
  if (!parsed.report.ok() && !args.json_errors)
    for (const auto& e : parsed.report.errors)
      err << "warning: rejected: " << e.message << "\n";
  result.dataset = std::move(parsed.dataset);
  result.digest = content_digest(content);
  return result;
}

inline std::optional<SamplingConfig> sampling_config(const DiagnoseArgs& args,
                                                     Failure& fail) {
  SamplingConfig cfg;
  auto t = parse_template(args.template_name);
  if (!t) {
    fail = failure(kInvalidInput, "bad_flag", "unknown template '" + args.template_name + "'");
    return std::nullopt;
  }
  cfg.prompt_template = *t;
  cfg.clip_threshold = args.clip_threshold;
  cfg.per_query_cap = args.cap;
  cfg.k_max = args.k_max;
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    fail = failure(kInvalidInput, "bad_flag", e.what());
    return std::nullopt;
  }
  return cfg;
}

struct Pipeline {
  std::optional<Dataset> dataset;
  std::string digest;
  std::optional<Diagnosis> diagnosis;
  std::optional<RebalancePlan> plan;
  ReportConfig config;
};

inline std::optional<Failure> run_pipeline(const DiagnoseArgs& args, Pipeline& p,
                                           std::ostream& err) {
  Failure fail{};
  auto sampling = sampling_config(args, fail);
  if (!sampling) return fail;
  if (args.k_max < 1) return failure(kInvalidInput, "bad_flag", "--k-max must be >= 1");
  if (args.min_support < 1)
    return failure(kInvalidInput, "bad_flag", "--min-support must be >= 1");
  if (args.min_class_fraction &&
      !(*args.min_class_fraction > 0.0 && *args.min_class_fraction <= 1.0))
    return failure(kInvalidInput, "bad_flag", "--min-class-fraction must be in (0, 1]");

  auto loaded = load_dataset(args.in, err);
  if (loaded.failure) return loaded.failure;
  p.dataset = std::move(loaded.dataset);
  p.digest = std::move(loaded.digest);

  DiagnosisOptions options;
  options.graph.min_support = args.min_support;
  options.k_max = args.k_max;
  options.common.min_class_fraction = args.min_class_fraction;
  p.diagnosis = diagnose(*p.dataset, options);
  p.plan = rebalance(p.diagnosis->table, *sampling);
  p.config = {args.min_support, args.k_max, args.min_class_fraction, *sampling};
  return std::nullopt;
}

template <typename F>
int guarded(bool json_errors, std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const IoError& e) {
    emit_failure(failure(kIoFailure, "io", e.what()), json_errors, err);
    return kIoFailure;
  } catch (const Error& e) {
    emit_failure(failure(kInvalidInput, "invalid", e.what()), json_errors, err);
    return kInvalidInput;
  }
}

}  // namespace detail

inline int cmd_diagnose(const DiagnoseArgs& args, std::ostream& out, std::ostream& err) {
  return detail::guarded(args.in.json_errors, err, [&] {
    detail::Pipeline p;
    if (auto f = detail::run_pipeline(args, p, err)) {
      detail::emit_failure(*f, args.in.json_errors, err);
      return f->code;
    }
    const auto report = dump_canonical(
        diagnosis_report(*p.dataset, *p.diagnosis, *p.plan, p.config, p.digest));
    if (args.out.empty() || args.out == "-")
      out << report;
    else
      write_file_atomic(args.out, report);
    return int{kOk};
  });
}

inline int cmd_sample(const SampleArgs& args, std::ostream& out, std::ostream& err) {
  return detail::guarded(args.diag.in.json_errors, err, [&] {
    if (args.diag.out.empty()) {
      detail::emit_failure(detail::failure(kInvalidInput, "bad_flag", "--out is required"),
                           args.diag.in.json_errors, err);
      return int{kInvalidInput};
    }
    detail::Pipeline p;
    if (auto f = detail::run_pipeline(args.diag, p, err)) {
      detail::emit_failure(*f, args.diag.in.json_errors, err);
      return f->code;
    }
    write_file_atomic(args.diag.out, plan_to_jsonl(p.plan->queries));
    if (!args.report_out.empty())
      write_file_atomic(args.report_out,
                        dump_canonical(diagnosis_report(*p.dataset, *p.diagnosis,
                                                        *p.plan, p.config, p.digest)));
    const auto& s = p.plan->summary;
    out << "queries: " << s.total_queries << "\n";
    out << "samples: " << s.total_samples << "\n";
    out << "per class:\n";
    for (const auto& name : p.dataset->classes()) {
      auto it = s.samples_per_class.find(name);
      out << "  " << name << "\t" << (it == s.samples_per_class.end() ? 0 : it->second)
          << "\n";
    }
    if (!s.uniform)
      out << "note: " << s.clamped_cliques.size()
          << " clique(s) clamped by --cap; plan is not uniform\n";
    return int{kOk};
  });
}

inline int cmd_export_graph(const ExportGraphArgs& args, std::ostream& out,
                            std::ostream& err) {
  return detail::guarded(args.in.json_errors, err, [&] {
    if (args.graph_format != "dot" && args.graph_format != "json") {
      detail::emit_failure(detail::failure(kInvalidInput, "bad_flag",
                                           "unknown graph format '" + args.graph_format + "'"),
                           args.in.json_errors, err);
      return int{kInvalidInput};
    }
    if (args.min_support < 1) {
      detail::emit_failure(
          detail::failure(kInvalidInput, "bad_flag", "--min-support must be >= 1"),
          args.in.json_errors, err);
      return int{kInvalidInput};
    }
    auto loaded = detail::load_dataset(args.in, err);
    if (loaded.failure) {
      detail::emit_failure(*loaded.failure, args.in.json_errors, err);
      return loaded.failure->code;
    }
    const auto graph = build_graph(*loaded.dataset, {args.min_support});
    const std::string body = args.graph_format == "dot"
                                 ? graph_to_dot(graph)
                                 : dump_canonical(graph_to_json(graph));
    if (args.out.empty() || args.out == "-")
      out << body;
    else
      write_file_atomic(args.out, body);
    return int{kOk};
  });
}

inline int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err) {
  return detail::guarded(args.json_errors, err, [&] {
    if (args.out.empty()) {
      detail::emit_failure(detail::failure(kInvalidInput, "bad_flag", "--out is required"),
                           args.json_errors, err);
      return int{kInvalidInput};
    }
    const std::string text = read_file(args.spec);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("spec: malformed JSON: ") + e.what());
    }
    const BiasSpec spec = parse_bias_spec(doc);
    const auto synth = generate_biased(spec);
    std::ostringstream body;
    std::size_t cross = 0;
    for (const auto& s : synth) {
      nlohmann::ordered_json line;
      line["id"] = s.record.id;
      line["label"] = s.record.label;
      line["concepts"] = s.record.concepts;
      body << line.dump() << '\n';
      cross += s.source_group != s.record.label;
    }
    write_file_atomic(args.out, body.str());
    out << nlohmann::json{{"records", synth.size()},
                          {"cross_group_records", cross},
                          {"seed", spec.seed},
                          {"prng", kSynthPrng}}
               .dump()
        << "\n";
    return int{kOk};
  });
}

inline int cmd_stats(const StatsArgs& args, std::ostream& out, std::ostream& err) {
  return detail::guarded(args.in.json_errors, err, [&] {
    auto loaded = detail::load_dataset(args.in, err);
    if (loaded.failure) {
      detail::emit_failure(*loaded.failure, args.in.json_errors, err);
      return loaded.failure->code;
    }
    out << stats_to_text(dataset_stats(*loaded.dataset, args.top));
    return int{kOk};
  });
}

// Writes the input dataset extended by a generation plan (metadata only) as
// JSONL, so the result can be fed back into `diagnose`.
inline int cmd_apply_plan(const ApplyPlanArgs& args, std::ostream& out,
                          std::ostream& err) {
  return detail::guarded(args.in.json_errors, err, [&] {
    if (args.out.empty()) {
      detail::emit_failure(detail::failure(kInvalidInput, "bad_flag", "--out is required"),
                           args.in.json_errors, err);
      return int{kInvalidInput};
    }
    auto loaded = detail::load_dataset(args.in, err);
    if (loaded.failure) {
      detail::emit_failure(*loaded.failure, args.in.json_errors, err);
      return loaded.failure->code;
    }
    std::istringstream plan_in(read_file(args.plan));
    const auto queries = parse_plan_jsonl(plan_in);
    const Dataset extended = apply_virtual(*loaded.dataset, queries);
    std::ostringstream body;
    write_jsonl(extended, body);
    write_file_atomic(args.out, body.str());
    out << "records: " << extended.size() << " (+"
        << extended.size() - loaded.dataset->size() << ")\n";
    return int{kOk};
  });
}

}  // namespace cdiag::cli

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

// Serialization of diagnosis results: report JSON, graph export (DOT and
// JSON), generation-plan JSONL and dataset statistics.
//
// Everything written here is canonical. Object keys are sorted, arrays
// follow the canonical node/clique order and lines end in LF, so identical
// input gives byte-identical files.

#pragma once

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unistd.h>
#include <vector>

#include "cdiag/dataset.hpp"
#include "cdiag/diagnosis.hpp"
#include "cdiag/error.hpp"
#include "cdiag/graph.hpp"
#include "cdiag/rebalance.hpp"

namespace cdiag {

inline constexpr const char* kToolName = "cdiag";
inline constexpr const char* kToolVersion = "0.1.0";

// "sha256:<hex>" of `bytes`.
inline std::string content_digest(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 digest failed");
  std::ostringstream hex;
  hex << "sha256:" << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) hex << std::setw(2) << static_cast<int>(md[i]);
  return hex.str();
}

// Writes `content` to `path` through a temporary file in the same directory
// followed by a rename, so readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path,
                              std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw IoError("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot move output into place at '" + path.string() +
                  "': " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read from '" + path.string() + "' failed");
  return buf.str();
}

inline std::string_view kind_name(NodeKind k) {
  return k == NodeKind::Class ? "class" : "concept";
}

// ---------------------------------------------------------------------------
// Graph export

inline nlohmann::json graph_to_json(const ConceptGraph& graph) {
  nlohmann::json nodes = nlohmann::json::array();
  for (NodeId n : graph.nodes())
    nodes.push_back({{"name", graph.name(n)}, {"kind", kind_name(n.kind)}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : graph.edges())
    edges.push_back({{"a", graph.name(e.a)}, {"b", graph.name(e.b)}, {"w", e.weight}});
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

namespace detail {

inline std::string dot_id(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline std::string graph_to_dot(const ConceptGraph& graph) {
  std::ostringstream out;
  out << "graph concept_graph {\n";
  for (NodeId n : graph.nodes())
    out << "  " << detail::dot_id(graph.name(n)) << " [kind=" << kind_name(n.kind)
        << "];\n";
  for (const auto& e : graph.edges())
    out << "  " << detail::dot_id(graph.name(e.a)) << " -- "
        << detail::dot_id(graph.name(e.b)) << " [weight=" << e.weight << "];\n";
  out << "}\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Diagnosis report

struct ReportConfig {
  uint64_t min_support = 1;
  std::size_t k_max = kDefaultMaxCliqueSize;
  std::optional<double> min_class_fraction;
  SamplingConfig sampling;
};

inline nlohmann::json clique_names(const CliqueFrequencyTable& table,
                                   const ConceptClique& q) {
  return table.names_of(q);
}

inline nlohmann::json imbalance_to_json(const CliqueFrequencyTable& table,
                                        const ImbalanceEntry& e) {
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t y = 0; y < e.per_class.size(); ++y)
    per_class[table.class_names.at(y)] = e.per_class[y];
  nlohmann::json deficits = nlohmann::json::object();
  nlohmann::json under = nlohmann::json::array();
  for (const auto& [y, d] : e.deficits) {
    deficits[table.class_names.at(y)] = d;
    under.push_back(table.class_names.at(y));
  }
  return {{"concepts", clique_names(table, e.clique)},
          {"size", e.clique.size()},
          {"per_class", std::move(per_class)},
          {"max", e.max_count},
          {"deficits", std::move(deficits)},
          {"under_represented", std::move(under)}};
}

inline nlohmann::json plan_summary_to_json(const PlanSummary& s) {
  nlohmann::json per_level = nlohmann::json::object();
  for (const auto& [k, t] : s.per_level)
    per_level[std::to_string(k)] = {{"queries", t.queries}, {"samples", t.samples}};
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [name, n] : s.samples_per_class) per_class[name] = n;
  return {{"total_queries", s.total_queries},
          {"total_samples", s.total_samples},
          {"samples_per_class", std::move(per_class)},
          {"per_level", std::move(per_level)},
          {"uniform", s.uniform}};
}

inline nlohmann::json diagnosis_report(const Dataset& dataset, const Diagnosis& diagnosis,
                                       const RebalancePlan& plan,
                                       const ReportConfig& config,
                                       std::string_view input_digest) {
  using nlohmann::json;
  json cfg = {{"min_support", config.min_support},
              {"k_max", config.k_max},
              {"template", template_name(config.sampling.prompt_template)},
              {"clip_threshold", config.sampling.clip_threshold},
              {"min_class_fraction", nullptr},
              {"per_query_cap", nullptr}};
  if (config.min_class_fraction) cfg["min_class_fraction"] = *config.min_class_fraction;
  if (config.sampling.per_query_cap) cfg["per_query_cap"] = *config.sampling.per_query_cap;

  json common = json::object();
  for (const auto& [k, cliques] : diagnosis.common.levels) {
    json level = json::array();
    for (const auto& q : cliques) level.push_back(clique_names(diagnosis.table, q));
    common[std::to_string(k)] = std::move(level);
  }
  json imbalances = json::array();
  for (const auto& e : diagnosis.imbalances)
    imbalances.push_back(imbalance_to_json(diagnosis.table, e));

  return {{"tool", {{"name", kToolName}, {"version", kToolVersion}}},
          {"input", {{"digest", input_digest}, {"records", dataset.size()}}},
          {"config", std::move(cfg)},
          {"vocabulary",
           {{"classes", dataset.num_classes()}, {"concepts", dataset.num_concepts()}}},
          {"common_cliques", std::move(common)},
          {"imbalances", std::move(imbalances)},
          {"plan", plan_summary_to_json(plan.summary)}};
}

inline std::string dump_canonical(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Generation plan JSONL

inline std::string plan_to_jsonl(std::span<const GenerationQuery> queries) {
  std::string out;
  for (const auto& q : queries) {
    nlohmann::ordered_json line;
    line["class"] = q.class_name;
    line["concepts"] = q.concepts;
    line["count"] = q.count;
    line["prompt"] = q.prompt;
    line["clip_threshold"] = q.clip_threshold;
    if (q.clamped) line["clamped"] = true;
    out += line.dump();
    out += '\n';
  }
  return out;
}

inline std::vector<GenerationQuery> parse_plan_jsonl(std::istream& in) {
  std::vector<GenerationQuery> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      const auto doc = nlohmann::json::parse(line);
      GenerationQuery q;
      q.class_name = doc.at("class").get<std::string>();
      q.concepts = doc.at("concepts").get<std::vector<std::string>>();
      q.count = doc.at("count").get<uint64_t>();
      q.prompt = doc.at("prompt").get<std::string>();
      q.clip_threshold = doc.at("clip_threshold").get<double>();
      q.clamped = doc.value("clamped", false);
      if (q.count < 1) throw InvalidArgument("count must be positive");
      out.push_back(std::move(q));
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument("plan line " + std::to_string(number) + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("plan line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset statistics

struct PairCount {
  std::string class_name;
  std::string concept_name;
  uint64_t weight = 0;
};

struct DatasetStats {
  std::size_t records = 0;
  std::vector<std::pair<std::string, uint64_t>> class_histogram;    // by name
  std::vector<std::pair<std::string, uint64_t>> concept_histogram;  // by name
  std::vector<PairCount> top_pairs;  // by weight desc, then names
};

inline DatasetStats dataset_stats(const Dataset& dataset, std::size_t top_n = 20) {
  DatasetStats s;
  s.records = dataset.size();
  std::vector<uint64_t> per_class(dataset.num_classes()), per_concept(dataset.num_concepts());
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    ++per_class[dataset.label_of(r)];
    for (uint32_t c : dataset.concepts_of(r)) ++per_concept[c];
  }
  for (std::size_t i = 0; i < per_class.size(); ++i)
    s.class_histogram.emplace_back(dataset.classes()[i], per_class[i]);
  for (std::size_t i = 0; i < per_concept.size(); ++i)
    s.concept_histogram.emplace_back(dataset.concepts()[i], per_concept[i]);

  const ConceptGraph graph = build_graph(dataset);
  for (const auto& e : graph.edges())
    if (e.a.kind == NodeKind::Class)
      s.top_pairs.push_back({graph.name(e.a), graph.name(e.b), e.weight});
  std::stable_sort(s.top_pairs.begin(), s.top_pairs.end(),
                   [](const PairCount& a, const PairCount& b) {
                     if (a.weight != b.weight) return a.weight > b.weight;
                     if (a.class_name != b.class_name) return a.class_name < b.class_name;
                     return a.concept_name < b.concept_name;
                   });
  if (s.top_pairs.size() > top_n) s.top_pairs.resize(top_n);
  return s;
}

inline std::string stats_to_text(const DatasetStats& s) {
  std::ostringstream out;
  out << "records: " << s.records << "\n";
  out << "classes (" << s.class_histogram.size() << "):\n";
  for (const auto& [name, n] : s.class_histogram) out << "  " << name << "\t" << n << "\n";
  out << "concepts (" << s.concept_histogram.size() << "):\n";
  for (const auto& [name, n] : s.concept_histogram) out << "  " << name << "\t" << n << "\n";
  out << "top class-concept pairs:\n";
  for (const auto& p : s.top_pairs)
    out << "  " << p.class_name << "\t" << p.concept_name << "\t" << p.weight << "\n";
  return out.str();
}

}  // namespace cdiag

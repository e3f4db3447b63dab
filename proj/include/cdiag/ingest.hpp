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

// Readers and writers for concept-annotated datasets.
//
// Two line-oriented input formats are accepted:
//
//   JSONL  {"id": "r1", "label": "A", "concepts": ["x", "y"]}
//   CSV    id,label,concepts        (header row, concepts ';'-separated)
//
// Both go through the same validation pass, so semantically equal inputs
// produce equal Datasets. Strict mode (the default) refuses to build a
// Dataset when any error is found; lenient mode drops offending records.

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cdiag/dataset.hpp"
#include "cdiag/error.hpp"
#include "cdiag/text.hpp"

namespace cdiag {

enum class ParseMode { Strict, Lenient };

struct ParseOptions {
  ParseMode mode = ParseMode::Strict;
  const Vocabulary* vocabulary = nullptr;
};

struct ValidationIssue {
  std::size_t line = 0;  // 1-based; 0 when not tied to a line
  std::string record_id;
  std::string rule;  // machine-readable rule name, e.g. "duplicate_id"
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationIssue> warnings;
  std::size_t records_parsed = 0;
  std::size_t records_rejected = 0;
  std::size_t distinct_classes = 0;
  std::size_t distinct_concepts = 0;

  bool ok() const { return errors.empty(); }
};

struct ParseResult {
  std::optional<Dataset> dataset;
  ValidationReport report;
};

namespace detail {

struct RawRecord {
  std::size_t line = 0;
  std::string id;
  std::string label;
  std::vector<std::string> concepts;
  bool rejected = false;
};

inline void add_issue(std::vector<ValidationIssue>& into, std::size_t line,
                      std::string id, std::string rule, std::string message) {
  into.push_back(
      {line, std::move(id), std::move(rule), std::move(message)});
}

inline std::string at_line(std::size_t line) {
  return "line " + std::to_string(line);
}

// Reads `in` into (line number, text) pairs, dropping blank lines, a leading
// UTF-8 BOM and CR of CRLF endings.
inline std::vector<std::pair<std::size_t, std::string>> read_lines(
    std::istream& in) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (number == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    lines.emplace_back(number, std::move(line));
  }
  return lines;
}

// Normalizes names, applies the per-record and cross-record rules and, if
// the outcome allows it, builds the Dataset.
inline ParseResult finalize(std::vector<RawRecord> raw,
                            const ParseOptions& options,
                            ValidationReport report) {
  const bool strict = options.mode == ParseMode::Strict;
  auto reject = [&](RawRecord& r, std::string rule, std::string message) {
    add_issue(report.errors, r.line, r.id, std::move(rule),
              at_line(r.line) + ": " + std::move(message));
    r.rejected = true;
  };

  for (auto& r : raw) {
    auto id = text::normalize_name(r.id);
    auto label = text::normalize_name(r.label);
    if (!id || !label) {
      reject(r, "invalid_utf8", "id or label is not valid UTF-8");
      continue;
    }
    r.id = std::move(*id);
    r.label = std::move(*label);
    if (r.id.empty()) {
      reject(r, "empty_id", "record id is empty");
      continue;
    }
    if (r.label.empty()) {
      reject(r, "empty_label", "record '" + r.id + "' has an empty label");
      continue;
    }

    std::vector<std::string> concepts;
    bool bad = false;
    for (const auto& c : r.concepts) {
      auto name = text::normalize_name(c);
      if (!name) {
        reject(r, "invalid_utf8", "concept is not valid UTF-8");
        bad = true;
        break;
      }
      if (name->empty()) {
        add_issue(report.warnings, r.line, r.id, "empty_concept",
                  at_line(r.line) + ": empty concept name dropped");
        continue;
      }
      concepts.push_back(std::move(*name));
    }
    if (bad) continue;
    const std::size_t before = concepts.size();
    concepts = sorted_unique(std::move(concepts));
    if (concepts.size() != before) {
      add_issue(report.warnings, r.line, r.id, "duplicate_concept",
                at_line(r.line) + ": " + std::to_string(before - concepts.size()) +
                    " duplicate concept(s) removed");
    }
    if (concepts.empty()) {
      add_issue(report.warnings, r.line, r.id, "empty_concepts",
                at_line(r.line) + ": record '" + r.id + "' has no concepts");
    }
    r.concepts = std::move(concepts);
  }

  // Duplicate ids: the first occurrence wins.
  std::unordered_map<std::string, std::size_t> first_id_line;
  for (auto& r : raw) {
    if (r.rejected) continue;
    auto [it, inserted] = first_id_line.emplace(r.id, r.line);
    if (!inserted)
      reject(r, "duplicate_id",
             "duplicate id '" + r.id + "' (first seen on line " +
                 std::to_string(it->second) + ")");
  }

  // Class/concept collisions, checked against every label in the file.
  std::map<std::string, std::pair<std::string, std::size_t>> label_site;
  for (const auto& r : raw)
    if (!r.rejected) label_site.emplace(r.label, std::make_pair(r.id, r.line));
  for (auto& r : raw) {
    if (r.rejected) continue;
    for (const auto& c : r.concepts) {
      auto it = label_site.find(c);
      if (it == label_site.end()) continue;
      reject(r, "class_concept_collision",
             "class/concept collision: '" + c + "' is the label of record '" +
                 it->second.first + "' (line " +
                 std::to_string(it->second.second) +
                 ") and a concept of record '" + r.id + "' (line " +
                 std::to_string(r.line) + ")");
      break;
    }
  }

  if (const Vocabulary* vocab = options.vocabulary) {
    const auto classes = sorted_unique(vocab->classes);
    const auto concepts = sorted_unique(vocab->concepts);
    for (auto& r : raw) {
      if (r.rejected) continue;
      if (!find_sorted(classes, r.label)) {
        reject(r, "unknown_class",
               "label '" + r.label + "' is not in the vocabulary");
        continue;
      }
      for (const auto& c : r.concepts) {
        if (!find_sorted(concepts, c)) {
          reject(r, "unknown_concept",
                 "concept '" + c + "' is not in the vocabulary");
          break;
        }
      }
    }
  }

  std::vector<AnnotationRecord> kept;
  for (auto& r : raw) {
    if (r.rejected) {
      ++report.records_rejected;
      continue;
    }
    kept.push_back({std::move(r.id), std::move(r.label), std::move(r.concepts)});
  }

  ParseResult result;
  if (kept.empty())
    add_issue(report.errors, 0, "", "no_records",
              report.records_parsed == 0 ? "no records" : "no valid records");
  if (kept.empty() || (strict && !report.errors.empty())) {
    result.report = std::move(report);
    return result;
  }
  try {
    result.dataset.emplace(std::move(kept), options.vocabulary);
  } catch (const InvalidArgument& e) {
    add_issue(report.errors, 0, "", "invalid_dataset", e.what());
  }
  if (result.dataset) {
    report.distinct_classes = result.dataset->num_classes();
    report.distinct_concepts = result.dataset->num_concepts();
  }
  result.report = std::move(report);
  return result;
}

// Splits one CSV line into fields. Supports RFC 4180 double-quoted fields
// (no embedded newlines). Returns nullopt on an unterminated quote.
inline std::optional<std::vector<std::string>> split_csv(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) return std::nullopt;
  return fields;
}

inline std::string csv_field(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline ParseResult parse_jsonl(std::istream& in, const ParseOptions& options = {}) {
  using nlohmann::json;
  ValidationReport report;
  std::vector<detail::RawRecord> raw;
  for (auto& [number, line] : detail::read_lines(in)) {
    ++report.records_parsed;
    auto fail = [&](std::string rule, std::string message, std::string id = {}) {
      detail::add_issue(report.errors, number, std::move(id), std::move(rule),
                        detail::at_line(number) + ": " + std::move(message));
      ++report.records_rejected;
    };
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      fail("malformed_json", std::string("malformed JSON (") + e.what() + ")");
      continue;
    }
    if (!obj.is_object()) {
      fail("malformed_json", "expected a JSON object");
      continue;
    }
    std::string id_hint;
    if (auto it = obj.find("id"); it != obj.end() && it->is_string())
      id_hint = it->get<std::string>();

    detail::RawRecord r;
    r.line = number;
    bool ok = true;
    for (const char* field : {"id", "label", "concepts"}) {
      auto it = obj.find(field);
      if (it == obj.end()) {
        fail("missing_field", std::string("missing field \"") + field + "\"",
             id_hint);
        ok = false;
        break;
      }
      const bool is_list = std::string_view(field) == "concepts";
      const bool good_type =
          is_list ? it->is_array() &&
                        std::all_of(it->begin(), it->end(),
                                    [](const json& v) { return v.is_string(); })
                  : it->is_string();
      if (!good_type) {
        fail("wrong_type",
             std::string("field \"") + field + "\" must be " +
                 (is_list ? "an array of strings" : "a string"),
             id_hint);
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    r.id = obj["id"].get<std::string>();
    r.label = obj["label"].get<std::string>();
    r.concepts = obj["concepts"].get<std::vector<std::string>>();
    raw.push_back(std::move(r));
  }
  return detail::finalize(std::move(raw), options, std::move(report));
}

inline ParseResult parse_csv(std::istream& in, const ParseOptions& options = {}) {
  ValidationReport report;
  std::vector<detail::RawRecord> raw;
  auto lines = detail::read_lines(in);
  auto fail = [&](std::size_t number, std::string rule, std::string message) {
    detail::add_issue(report.errors, number, "", std::move(rule),
                      detail::at_line(number) + ": " + std::move(message));
  };

  if (lines.empty()) return detail::finalize({}, options, std::move(report));
  {
    auto header = detail::split_csv(lines.front().second);
    std::vector<std::string> cols;
    if (header)
      for (auto& h : *header) cols.emplace_back(text::trim(h));
    if (cols != std::vector<std::string>{"id", "label", "concepts"}) {
      fail(lines.front().first, "bad_header",
           "expected header \"id,label,concepts\"");
      return {std::nullopt, std::move(report)};
    }
  }

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [number, line] = lines[i];
    ++report.records_parsed;
    auto fields = detail::split_csv(line);
    if (!fields) {
      fail(number, "malformed_csv", "unterminated quoted field");
      ++report.records_rejected;
      continue;
    }
    if (fields->size() != 3) {
      fail(number, "column_count",
           "expected 3 columns, found " + std::to_string(fields->size()));
      ++report.records_rejected;
      continue;
    }
    detail::RawRecord r;
    r.line = number;
    r.id = (*fields)[0];
    r.label = (*fields)[1];
    std::string_view cell = (*fields)[2];
    if (!text::trim(cell).empty()) {
      std::size_t start = 0;
      while (true) {
        const std::size_t semi = cell.find(';', start);
        r.concepts.emplace_back(cell.substr(start, semi - start));
        if (semi == std::string_view::npos) break;
        start = semi + 1;
      }
    }
    raw.push_back(std::move(r));
  }
  return detail::finalize(std::move(raw), options, std::move(report));
}

inline ParseResult parse_jsonl(std::string_view content,
                               const ParseOptions& options = {}) {
  std::istringstream in{std::string(content)};
  return parse_jsonl(in, options);
}

inline ParseResult parse_csv(std::string_view content,
                             const ParseOptions& options = {}) {
  std::istringstream in{std::string(content)};
  return parse_csv(in, options);
}

// Parses a vocabulary file: {"classes": [...], "concepts": [...]}.
inline Vocabulary parse_vocabulary(std::istream& in) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("vocabulary: malformed JSON: ") + e.what());
  }
  Vocabulary vocab;
  for (auto [key, into] : {std::pair{"classes", &vocab.classes},
                           std::pair{"concepts", &vocab.concepts}}) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_array())
      throw InvalidArgument(std::string("vocabulary: \"") + key +
                            "\" must be an array of strings");
    for (const auto& v : *it) {
      if (!v.is_string())
        throw InvalidArgument(std::string("vocabulary: \"") + key +
                              "\" must be an array of strings");
      auto name = text::normalize_name(v.get<std::string>());
      if (!name || name->empty())
        throw InvalidArgument(std::string("vocabulary: bad entry in \"") + key +
                              "\"");
      into->push_back(std::move(*name));
    }
  }
  return vocab;
}

inline void write_jsonl(const Dataset& dataset, std::ostream& out) {
  for (const auto& r : dataset.records()) {
    nlohmann::ordered_json line;
    line["id"] = r.id;
    line["label"] = r.label;
    line["concepts"] = r.concepts;
    out << line.dump() << '\n';
  }
}

// Throws InvalidArgument if a concept contains ';', which CSV cannot carry.
inline void write_csv(const Dataset& dataset, std::ostream& out) {
  out << "id,label,concepts\n";
  for (const auto& r : dataset.records()) {
    std::string cell;
    for (std::size_t i = 0; i < r.concepts.size(); ++i) {
      if (r.concepts[i].find(';') != std::string::npos)
        throw InvalidArgument("concept '" + r.concepts[i] +
                              "' contains ';' and cannot be written as CSV");
      if (i) cell += ';';
      cell += r.concepts[i];
    }
    out << detail::csv_field(r.id) << ',' << detail::csv_field(r.label) << ','
        << detail::csv_field(cell) << '\n';
  }
}

}  // namespace cdiag

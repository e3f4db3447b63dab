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

// Rebalance sampling: turns a clique frequency table into a list of
// generation queries (class, concepts, count, prompt).
//
// Levels are processed from the largest clique size down to 1. Within a
// level every class below the clique's maximum count gets a query for the
// difference. A generated image carries exactly the queried concepts, so
// once a level is done its scheduled counts are added to every proper
// sub-combination already in the table for the same class. Smaller cliques
// therefore only ask for what the larger queries did not already supply.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "cdiag/dataset.hpp"
#include "cdiag/diagnosis.hpp"
#include "cdiag/error.hpp"

namespace cdiag {

enum class PromptTemplate {
  PhotoStyle,  // "a photo of x, y, and z"
  ImageStyle,  // "An image of a x, a y, and a z"
};

inline constexpr double kDefaultClipThreshold = 0.6;

inline std::string_view template_name(PromptTemplate t) {
  return t == PromptTemplate::PhotoStyle ? "photo" : "image";
}

inline std::optional<PromptTemplate> parse_template(std::string_view name) {
  if (name == "photo") return PromptTemplate::PhotoStyle;
  if (name == "image") return PromptTemplate::ImageStyle;
  return std::nullopt;
}

struct SamplingConfig {
  PromptTemplate prompt_template = PromptTemplate::PhotoStyle;
  // Passed through to the downstream generator; never evaluated here.
  double clip_threshold = kDefaultClipThreshold;
  std::optional<uint64_t> per_query_cap;
  std::size_t k_max = kDefaultMaxCliqueSize;

  void validate() const {
    if (!(clip_threshold >= 0.0 && clip_threshold <= 1.0))
      throw InvalidArgument("threshold out of range: clip_threshold must be in [0, 1]");
    if (per_query_cap && *per_query_cap < 1)
      throw InvalidArgument("per_query_cap must be at least 1");
    if (k_max < 1) throw InvalidArgument("k_max must be at least 1");
  }
};

// Renders the generation prompt for a sorted, non-empty concept list.
inline std::string build_prompt(std::span<const std::string> concepts,
                                PromptTemplate style) {
  if (concepts.empty()) throw InvalidArgument("prompt needs at least one concept");
  const bool photo = style == PromptTemplate::PhotoStyle;
  const std::string article = photo ? "" : "a ";
  std::string out = photo ? "a photo of " : "An image of ";
  const std::size_t n = concepts.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      if (n == 2)
        out += " and ";
      else
        out += i + 1 == n ? ", and " : ", ";
    }
    out += article;
    out += concepts[i];
  }
  return out;
}

inline std::string build_prompt(std::initializer_list<std::string> concepts,
                                PromptTemplate style) {
  const std::vector<std::string> v(concepts);
  return build_prompt(std::span<const std::string>(v), style);
}

struct GenerationQuery {
  std::string class_name;
  std::vector<std::string> concepts;
  uint64_t count = 0;
  std::string prompt;
  double clip_threshold = kDefaultClipThreshold;
  // Set when per_query_cap cut the count below the class's deficit.
  bool clamped = false;

  friend bool operator==(const GenerationQuery&, const GenerationQuery&) = default;
};

struct LevelTotals {
  std::size_t queries = 0;
  uint64_t samples = 0;

  friend bool operator==(const LevelTotals&, const LevelTotals&) = default;
};

struct PlanSummary {
  std::size_t total_queries = 0;
  uint64_t total_samples = 0;
  std::map<std::string, uint64_t> samples_per_class;
  std::map<std::size_t, LevelTotals> per_level;
  // False when any query was clamped; the adjusted table is then not uniform
  // for the cliques listed in clamped_cliques.
  bool uniform = true;
  std::vector<ConceptClique> clamped_cliques;
};

struct RebalancePlan {
  std::vector<GenerationQuery> queries;
  CliqueFrequencyTable adjusted_table;
  PlanSummary summary;
};

namespace detail {

// Adds `count` to every proper, non-empty sub-combination of `clique` that
// has a row in `table`, for class `y`.
inline void propagate_to_subsets(CliqueFrequencyTable& table,
                                 const ConceptClique& clique, uint32_t y,
                                 uint64_t count) {
  const std::size_t k = clique.size();
  if (k < 2) return;
  if (k >= 63) throw InvalidArgument("clique too large for subset update");
  const uint64_t full = (uint64_t{1} << k) - 1;
  ConceptClique sub;
  for (uint64_t mask = 1; mask < full; ++mask) {
    sub.concepts.clear();
    for (std::size_t i = 0; i < k; ++i)
      if (mask & (uint64_t{1} << i)) sub.concepts.push_back(clique.concepts[i]);
    auto level = table.levels.find(sub.size());
    if (level == table.levels.end()) continue;
    if (CliqueRow* row = level->second.find(sub)) row->counts.at(y) += count;
  }
}

}  // namespace detail

inline RebalancePlan rebalance(const CliqueFrequencyTable& table,
                               const SamplingConfig& config = {}) {
  config.validate();
  if (table.any_adjusted()) throw InvalidArgument("already balanced");

  RebalancePlan plan;
  plan.adjusted_table = table;
  for (auto& [k, level] : plan.adjusted_table.levels)
    level.provenance = Provenance::Adjusted;

  struct Scheduled {
    ConceptClique clique;
    uint32_t class_index;
    uint64_t count;
  };

  auto& levels = plan.adjusted_table.levels;
  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    const std::size_t k = it->first;
    std::vector<Scheduled> scheduled;
    for (CliqueRow& row : it->second.rows) {
      if (row.counts.empty()) continue;
      const uint64_t m = *std::max_element(row.counts.begin(), row.counts.end());
      bool clamped_here = false;
      for (std::size_t y = 0; y < row.counts.size(); ++y) {
        if (row.counts[y] >= m) continue;
        const uint64_t deficit = m - row.counts[y];
        uint64_t count = deficit;
        if (config.per_query_cap && count > *config.per_query_cap) {
          count = *config.per_query_cap;
          clamped_here = true;
        }
        const auto names = table.names_of(row.clique);
        GenerationQuery q{table.class_names.at(y), names, count,
                          build_prompt(names, config.prompt_template),
                          config.clip_threshold, count < deficit};
        plan.queries.push_back(std::move(q));
        row.counts[y] += count;
        scheduled.push_back({row.clique, static_cast<uint32_t>(y), count});

        plan.summary.total_queries += 1;
        plan.summary.total_samples += count;
        plan.summary.samples_per_class[table.class_names[y]] += count;
        plan.summary.per_level[k].queries += 1;
        plan.summary.per_level[k].samples += count;
      }
      if (clamped_here) {
        plan.summary.uniform = false;
        plan.summary.clamped_cliques.push_back(row.clique);
      }
    }
    // Other level-k rows are never subsets of a level-k clique, so the
    // update can wait until the level is finished.
    for (const auto& s : scheduled)
      detail::propagate_to_subsets(plan.adjusted_table, s.clique, s.class_index,
                                   s.count);
  }
  return plan;
}

// Dataset extended with `count` metadata-only records per query, labeled
// with the query's class and carrying exactly its concepts. Ids are
// "synthetic-<n>" with n counting up from 1, skipping ids already in use.
inline Dataset apply_virtual(const Dataset& dataset,
                             std::span<const GenerationQuery> queries) {
  std::vector<AnnotationRecord> records(dataset.records().begin(),
                                        dataset.records().end());
  std::unordered_set<std::string> ids;
  for (const auto& r : records) ids.insert(r.id);
  uint64_t seq = 0;
  for (const auto& q : queries) {
    if (!dataset.class_index(q.class_name))
      throw InvalidArgument("query references unknown class '" + q.class_name + "'");
    if (q.concepts.empty()) throw InvalidArgument("query has no concepts");
    for (const auto& c : q.concepts)
      if (!dataset.concept_index(c))
        throw InvalidArgument("query references unknown concept '" + c + "'");
    for (uint64_t i = 0; i < q.count; ++i) {
      std::string id;
      do {
        id = "synthetic-" + std::to_string(++seq);
      } while (ids.count(id));
      ids.insert(id);
      records.push_back({std::move(id), q.class_name, q.concepts});
    }
  }
  const Vocabulary vocab{dataset.classes(), dataset.concepts()};
  return Dataset(std::move(records), &vocab);
}

}  // namespace cdiag

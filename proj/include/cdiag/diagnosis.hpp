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

// Clique-based bias diagnosis.
//
//   1. class_clique_set:  for one class, every concept set S (|S| <= k_max)
//      such that {class} u S is a complete subgraph of the concept graph.
//   2. common_clique_set: the cliques every class has (optionally: at least
//      a given fraction of classes).
//   3. frequency_table:   per common clique and class, the number of records
//      of that class carrying all of the clique's concepts at once.
//   4. imbalance_set:     the common cliques whose per-class counts differ,
//      with each class's deficit against the per-clique maximum.

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cdiag/dataset.hpp"
#include "cdiag/error.hpp"
#include "cdiag/graph.hpp"

namespace cdiag {

inline constexpr std::size_t kDefaultMaxCliqueSize = 4;

// A set of concepts, stored as ascending concept indices.
struct ConceptClique {
  std::vector<uint32_t> concepts;

  std::size_t size() const { return concepts.size(); }

  friend bool operator==(const ConceptClique&, const ConceptClique&) = default;
  friend auto operator<=>(const ConceptClique&, const ConceptClique&) = default;
};

using CliqueLevels = std::map<std::size_t, std::vector<ConceptClique>>;

struct ClassCliqueSet {
  uint32_t class_index = 0;
  std::size_t k_max = 0;
  uint64_t graph_fingerprint = 0;
  // Keys 1..k_max are always present; each vector is sorted and unique.
  CliqueLevels by_size;
  // Largest k with a non-empty level, 0 if the class has no concept neighbour.
  std::size_t max_k = 0;
};

namespace detail {

inline void clear_through(Bitset& bits, std::size_t last) {
  auto words = bits.words();
  const std::size_t full = (last + 1) / 64;
  for (std::size_t w = 0; w < full && w < words.size(); ++w) words[w] = 0;
  if (full < words.size()) {
    const std::size_t rem = (last + 1) % 64;
    if (rem) words[full] &= ~((uint64_t{1} << rem) - 1);
  }
}

inline void expand_cliques(const ConceptGraph& graph, std::vector<uint32_t>& current,
                           const Bitset& candidates, std::size_t k_max,
                           CliqueLevels& out) {
  candidates.for_each([&](std::size_t c) {
    current.push_back(static_cast<uint32_t>(c));
    out[current.size()].push_back(ConceptClique{current});
    if (current.size() < k_max) {
      Bitset next = candidates;
      clear_through(next, c);
      next &= graph.concept_row(static_cast<uint32_t>(c));
      if (next.count() > 0) expand_cliques(graph, current, next, k_max, out);
    }
    current.pop_back();
  });
}

inline void finish_levels(ClassCliqueSet& set) {
  for (std::size_t k = 1; k <= set.k_max; ++k) set.by_size[k];
  set.max_k = 0;
  for (const auto& [k, cliques] : set.by_size)
    if (!cliques.empty()) set.max_k = std::max(set.max_k, k);
}

}  // namespace detail

// Enumerates the concept cliques anchored at `class_index` by depth-first
// expansion over the class's concept neighbours in ascending index order.
// Each level comes out in lexicographic order.
inline ClassCliqueSet class_clique_set(const ConceptGraph& graph, uint32_t class_index,
                                       std::size_t k_max = kDefaultMaxCliqueSize) {
  if (class_index >= graph.num_classes())
    throw InvalidArgument("not a class node: #" + std::to_string(class_index));
  if (k_max < 1) throw InvalidArgument("k_max must be at least 1");
  ClassCliqueSet set;
  set.class_index = class_index;
  set.k_max = k_max;
  set.graph_fingerprint = graph.fingerprint();
  std::vector<uint32_t> current;
  detail::expand_cliques(graph, current, graph.class_row(class_index), k_max,
                         set.by_size);
  detail::finish_levels(set);
  return set;
}

inline ClassCliqueSet class_clique_set(const ConceptGraph& graph, NodeId node,
                                       std::size_t k_max = kDefaultMaxCliqueSize) {
  if (node.kind != NodeKind::Class || !graph.contains(node))
    throw InvalidArgument("not a class node");
  return class_clique_set(graph, node.index, k_max);
}

inline std::vector<ClassCliqueSet> all_class_clique_sets(
    const ConceptGraph& graph, std::size_t k_max = kDefaultMaxCliqueSize) {
  std::vector<ClassCliqueSet> sets;
  sets.reserve(graph.num_classes());
  for (uint32_t y = 0; y < graph.num_classes(); ++y)
    sets.push_back(class_clique_set(graph, y, k_max));
  return sets;
}

struct CommonCliqueOptions {
  // When set, a clique is common if it belongs to at least this fraction of
  // the classes' clique sets, instead of to all of them. Must be in (0, 1].
  std::optional<double> min_class_fraction;
};

struct CommonCliques {
  std::size_t k_max = 0;
  uint64_t graph_fingerprint = 0;
  std::optional<double> min_class_fraction;
  // Keys 1..k_max always present; vectors sorted.
  CliqueLevels levels;

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& [k, v] : levels) n += v.size();
    return n;
  }
};

inline CommonCliques common_clique_set(std::span<const ClassCliqueSet> sets,
                                       CommonCliqueOptions options = {}) {
  if (sets.empty()) throw InvalidArgument("no class clique sets given");
  const auto& first = sets.front();
  std::vector<uint32_t> seen;
  for (const auto& s : sets) {
    if (s.k_max != first.k_max)
      throw InvalidArgument("class clique sets disagree on k_max");
    if (s.graph_fingerprint != first.graph_fingerprint)
      throw InvalidArgument("class clique sets come from different graphs");
    seen.push_back(s.class_index);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw InvalidArgument("more than one clique set for the same class");

  std::size_t needed = sets.size();
  if (options.min_class_fraction) {
    const double tau = *options.min_class_fraction;
    if (!(tau > 0.0 && tau <= 1.0))
      throw InvalidArgument("min_class_fraction must be in (0, 1]");
    needed = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(tau * static_cast<double>(sets.size()) - 1e-9)));
  }

  CommonCliques common;
  common.k_max = first.k_max;
  common.graph_fingerprint = first.graph_fingerprint;
  common.min_class_fraction = options.min_class_fraction;
  for (std::size_t k = 1; k <= first.k_max; ++k) {
    auto& level = common.levels[k];
    if (needed == sets.size()) {
      level = first.by_size.at(k);
      for (std::size_t i = 1; i < sets.size() && !level.empty(); ++i) {
        const auto& other = sets[i].by_size.at(k);
        std::vector<ConceptClique> kept;
        std::set_intersection(level.begin(), level.end(), other.begin(),
                              other.end(), std::back_inserter(kept));
        level = std::move(kept);
      }
    } else {
      std::map<ConceptClique, std::size_t> votes;
      for (const auto& s : sets)
        for (const auto& q : s.by_size.at(k)) ++votes[q];
      for (auto& [q, n] : votes)
        if (n >= needed) level.push_back(q);
    }
  }
  return common;
}

enum class Provenance { Original, Adjusted };

struct CliqueRow {
  ConceptClique clique;
  std::vector<uint64_t> counts;  // indexed by class index

  friend bool operator==(const CliqueRow&, const CliqueRow&) = default;
};

struct FrequencyLevel {
  Provenance provenance = Provenance::Original;
  std::vector<CliqueRow> rows;  // sorted by clique

  const CliqueRow* find(const ConceptClique& q) const {
    auto it = std::lower_bound(
        rows.begin(), rows.end(), q,
        [](const CliqueRow& r, const ConceptClique& c) { return r.clique < c; });
    return it != rows.end() && it->clique == q ? &*it : nullptr;
  }
  CliqueRow* find(const ConceptClique& q) {
    return const_cast<CliqueRow*>(std::as_const(*this).find(q));
  }

  friend bool operator==(const FrequencyLevel&, const FrequencyLevel&) = default;
};

// Per-level, per-(clique, class) co-occurrence counts. Carries the class and
// concept names so downstream consumers need not keep the Dataset around.
struct CliqueFrequencyTable {
  std::vector<std::string> class_names;
  std::vector<std::string> concept_names;
  std::size_t k_max = 0;
  std::map<std::size_t, FrequencyLevel> levels;

  uint64_t count(const ConceptClique& q, uint32_t class_index) const {
    auto it = levels.find(q.size());
    if (it == levels.end()) throw InvalidArgument("no such clique level");
    const CliqueRow* row = it->second.find(q);
    if (row == nullptr) throw InvalidArgument("clique not in table");
    return row->counts.at(class_index);
  }

  bool any_adjusted() const {
    return std::any_of(levels.begin(), levels.end(), [](const auto& kv) {
      return kv.second.provenance == Provenance::Adjusted;
    });
  }

  std::vector<std::string> names_of(const ConceptClique& q) const {
    std::vector<std::string> out;
    out.reserve(q.size());
    for (uint32_t c : q.concepts) out.push_back(concept_names.at(c));
    return out;
  }

  friend bool operator==(const CliqueFrequencyTable&,
                         const CliqueFrequencyTable&) = default;
};

// Vertical layout of a dataset: one record-membership bitset per concept and
// per class. A clique's count for a class is popcount(AND of its concept
// rows & the class row).
class RecordIndex {
 public:
  explicit RecordIndex(const Dataset& dataset)
      : concept_rows_(dataset.num_concepts(), Bitset(dataset.size())),
        class_rows_(dataset.num_classes(), Bitset(dataset.size())) {
    for (std::size_t r = 0; r < dataset.size(); ++r) {
      class_rows_[dataset.label_of(r)].set(r);
      for (uint32_t c : dataset.concepts_of(r)) concept_rows_[c].set(r);
    }
  }

  std::size_t num_classes() const { return class_rows_.size(); }
  std::size_t num_concepts() const { return concept_rows_.size(); }

  std::vector<uint64_t> counts(const ConceptClique& q) const {
    Bitset members = concept_rows_.at(q.concepts.front());
    for (std::size_t i = 1; i < q.concepts.size(); ++i)
      members &= concept_rows_.at(q.concepts[i]);
    std::vector<uint64_t> out(class_rows_.size());
    for (std::size_t y = 0; y < class_rows_.size(); ++y)
      out[y] = members.count_and(class_rows_[y]);
    return out;
  }

 private:
  std::vector<Bitset> concept_rows_;
  std::vector<Bitset> class_rows_;
};

inline CliqueFrequencyTable frequency_table(const Dataset& dataset,
                                            const CommonCliques& common) {
  const RecordIndex index(dataset);
  CliqueFrequencyTable table;
  table.class_names = dataset.classes();
  table.concept_names = dataset.concepts();
  table.k_max = common.k_max;
  for (const auto& [k, cliques] : common.levels) {
    FrequencyLevel level;
    level.provenance = Provenance::Original;
    level.rows.reserve(cliques.size());
    for (const auto& q : cliques) {
      if (q.concepts.empty() || q.size() != k)
        throw InvalidArgument("clique size does not match its level");
      if (q.concepts.back() >= dataset.num_concepts())
        throw InvalidArgument("clique references a concept outside the dataset");
      level.rows.push_back({q, index.counts(q)});
    }
    table.levels.emplace(k, std::move(level));
  }
  return table;
}

struct ImbalanceEntry {
  ConceptClique clique;
  std::vector<uint64_t> per_class;  // indexed by class index
  uint64_t max_count = 0;
  // (class index, max_count - count) for every class below the maximum,
  // ascending by class index.
  std::vector<std::pair<uint32_t, uint64_t>> deficits;

  uint64_t max_deficit() const {
    uint64_t d = 0;
    for (const auto& [y, v] : deficits) d = std::max(d, v);
    return d;
  }

  std::vector<uint32_t> under_represented() const {
    std::vector<uint32_t> out;
    for (const auto& [y, v] : deficits) out.push_back(y);
    return out;
  }

  friend bool operator==(const ImbalanceEntry&, const ImbalanceEntry&) = default;
};

// Imbalance for one row; nullopt if every class has the same count.
inline std::optional<ImbalanceEntry> imbalance_of(const CliqueRow& row) {
  ImbalanceEntry e;
  e.clique = row.clique;
  e.per_class = row.counts;
  e.max_count = row.counts.empty()
                    ? 0
                    : *std::max_element(row.counts.begin(), row.counts.end());
  for (std::size_t y = 0; y < row.counts.size(); ++y)
    if (row.counts[y] < e.max_count)
      e.deficits.emplace_back(static_cast<uint32_t>(y), e.max_count - row.counts[y]);
  if (e.deficits.empty()) return std::nullopt;
  return e;
}

// Sorted by descending max deficit, then ascending clique size, then clique.
inline std::vector<ImbalanceEntry> imbalance_set(const CliqueFrequencyTable& table) {
  if (table.any_adjusted())
    throw InvalidArgument("imbalance_set needs a table of original counts");
  std::vector<ImbalanceEntry> out;
  for (const auto& [k, level] : table.levels)
    for (const auto& row : level.rows)
      if (auto e = imbalance_of(row)) out.push_back(std::move(*e));
  std::stable_sort(out.begin(), out.end(),
                   [](const ImbalanceEntry& a, const ImbalanceEntry& b) {
                     const uint64_t da = a.max_deficit(), db = b.max_deficit();
                     if (da != db) return da > db;
                     if (a.clique.size() != b.clique.size())
                       return a.clique.size() < b.clique.size();
                     return a.clique < b.clique;
                   });
  return out;
}

struct DiagnosisOptions {
  GraphOptions graph;
  std::size_t k_max = kDefaultMaxCliqueSize;
  CommonCliqueOptions common;
};

// The whole pipeline from a Dataset to the imbalance list.
struct Diagnosis {
  ConceptGraph graph;
  std::vector<ClassCliqueSet> class_cliques;
  CommonCliques common;
  CliqueFrequencyTable table;
  std::vector<ImbalanceEntry> imbalances;
};

inline Diagnosis diagnose(const Dataset& dataset, const DiagnosisOptions& options = {}) {
  Diagnosis d{build_graph(dataset, options.graph), {}, {}, {}, {}};
  d.class_cliques = all_class_clique_sets(d.graph, options.k_max);
  d.common = common_clique_set(d.class_cliques, options.common);
  d.table = frequency_table(dataset, d.common);
  d.imbalances = imbalance_set(d.table);
  return d;
}

}  // namespace cdiag

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

// Exhaustive reference for class_clique_set: tests every subset of the
// concept vocabulary against the clique condition through edge_weight only.
// Exponential in the vocabulary size; meant for tests.

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <vector>

#include "cdiag/diagnosis.hpp"
#include "cdiag/graph.hpp"

namespace cdiag {

inline constexpr std::size_t kBruteForceMaxConcepts = 20;

inline ClassCliqueSet brute_force_class_cliques(const ConceptGraph& graph,
                                                uint32_t class_index,
                                                std::size_t k_max) {
  if (class_index >= graph.num_classes())
    throw InvalidArgument("not a class node: #" + std::to_string(class_index));
  if (k_max < 1) throw InvalidArgument("k_max must be at least 1");
  const std::size_t n = graph.num_concepts();
  if (n > kBruteForceMaxConcepts)
    throw InvalidArgument("concept vocabulary too large for brute force (" +
                          std::to_string(n) + " > " +
                          std::to_string(kBruteForceMaxConcepts) + ")");

  ClassCliqueSet set;
  set.class_index = class_index;
  set.k_max = k_max;
  set.graph_fingerprint = graph.fingerprint();
  const NodeId cls = NodeId::of_class(class_index);
  for (uint32_t mask = 1; mask < (uint32_t{1} << n); ++mask) {
    const auto k = static_cast<std::size_t>(std::popcount(mask));
    if (k > k_max) continue;
    std::vector<uint32_t> members;
    for (uint32_t c = 0; c < n; ++c)
      if (mask & (uint32_t{1} << c)) members.push_back(c);
    bool clique = true;
    for (std::size_t i = 0; i < members.size() && clique; ++i) {
      const NodeId a = NodeId::of_concept(members[i]);
      clique = graph.edge_weight(cls, a) > 0;
      for (std::size_t j = i + 1; j < members.size() && clique; ++j)
        clique = graph.edge_weight(a, NodeId::of_concept(members[j])) > 0;
    }
    if (clique) set.by_size[k].push_back(ConceptClique{members});
  }
  for (auto& [k, cliques] : set.by_size) std::sort(cliques.begin(), cliques.end());
  detail::finish_levels(set);
  return set;
}

}  // namespace cdiag

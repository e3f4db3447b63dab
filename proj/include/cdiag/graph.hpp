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

// Weighted co-occurrence graph over class nodes and concept nodes.
//
// A record "contains" its own label node and each of its concept nodes; the
// weight of an unordered node pair is the number of records containing both.
// Class-class pairs never co-occur (one label per record), so the graph is
// bipartite between classes and concepts plus a concept-concept part.

#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdiag/dataset.hpp"
#include "cdiag/error.hpp"

namespace cdiag {

enum class NodeKind : uint8_t { Class = 0, Concept = 1 };

// Canonical order: all classes before all concepts, each by index (which is
// lexicographic by name).
struct NodeId {
  NodeKind kind = NodeKind::Class;
  uint32_t index = 0;

  static constexpr NodeId of_class(uint32_t i) { return {NodeKind::Class, i}; }
  static constexpr NodeId of_concept(uint32_t i) {
    return {NodeKind::Concept, i};
  }

  friend constexpr bool operator==(NodeId, NodeId) = default;
  friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

struct WeightedEdge {
  NodeId a;  // a < b in canonical order
  NodeId b;
  uint64_t weight = 0;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

struct GraphOptions {
  // Pairs with weight below this are not edges.
  uint64_t min_support = 1;
};

// Dense bitset over a fixed universe; used for concept adjacency rows and
// record membership lists.
class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(std::size_t bits) : bits_(bits), words_((bits + 63) / 64) {}

  std::size_t size() const { return bits_; }
  void set(std::size_t i) { words_[i >> 6] |= uint64_t{1} << (i & 63); }
  bool test(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & uint64_t{1};
  }
  std::span<const uint64_t> words() const { return words_; }
  std::span<uint64_t> words() { return words_; }

  std::size_t count() const {
    std::size_t n = 0;
    for (uint64_t w : words_) n += static_cast<std::size_t>(__builtin_popcountll(w));
    return n;
  }

  Bitset& operator&=(const Bitset& other) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= other.words_[i];
    return *this;
  }

  // Number of set bits in (*this & other) without materializing it.
  std::size_t count_and(const Bitset& other) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < words_.size(); ++i)
      n += static_cast<std::size_t>(__builtin_popcountll(words_[i] & other.words_[i]));
    return n;
  }

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      uint64_t word = words_[w];
      while (word) {
        f(w * 64 + static_cast<std::size_t>(__builtin_ctzll(word)));
        word &= word - 1;
      }
    }
  }

  friend bool operator==(const Bitset&, const Bitset&) = default;

 private:
  std::size_t bits_ = 0;
  std::vector<uint64_t> words_;
};

class ConceptGraph {
 public:
  static ConceptGraph build(const Dataset& dataset, GraphOptions options = {}) {
    if (options.min_support == 0)
      throw InvalidArgument("min_support must be at least 1");
    ConceptGraph g;
    g.min_support_ = options.min_support;
    g.classes_ = dataset.classes();
    g.concepts_ = dataset.concepts();
    g.num_records_ = dataset.size();
    const std::size_t nc = g.concepts_.size();
    g.class_concept_.assign(g.classes_.size() * nc, 0);
    g.concept_concept_.assign(nc * nc, 0);

    for (std::size_t r = 0; r < dataset.size(); ++r) {
      const uint32_t label = dataset.label_of(r);
      const auto concepts = dataset.concepts_of(r);
      for (std::size_t i = 0; i < concepts.size(); ++i) {
        ++g.class_concept_[label * nc + concepts[i]];
        for (std::size_t j = i + 1; j < concepts.size(); ++j)
          ++g.concept_concept_[concepts[i] * nc + concepts[j]];
      }
    }
    // Mirror the upper triangle so lookups need no ordering.
    for (std::size_t i = 0; i < nc; ++i)
      for (std::size_t j = i + 1; j < nc; ++j)
        g.concept_concept_[j * nc + i] = g.concept_concept_[i * nc + j];

    g.concept_adjacency_.assign(nc, Bitset(nc));
    for (std::size_t i = 0; i < nc; ++i)
      for (std::size_t j = 0; j < nc; ++j)
        if (i != j && g.concept_concept_[i * nc + j] >= g.min_support_)
          g.concept_adjacency_[i].set(j);
    g.class_adjacency_.assign(g.classes_.size(), Bitset(nc));
    for (std::size_t y = 0; y < g.classes_.size(); ++y)
      for (std::size_t c = 0; c < nc; ++c)
        if (g.class_concept_[y * nc + c] >= g.min_support_)
          g.class_adjacency_[y].set(c);

    g.fingerprint_ = g.compute_fingerprint();
    return g;
  }

  std::size_t num_classes() const { return classes_.size(); }
  std::size_t num_concepts() const { return concepts_.size(); }
  std::size_t num_nodes() const { return num_classes() + num_concepts(); }
  std::size_t num_records() const { return num_records_; }
  uint64_t min_support() const { return min_support_; }
  const std::vector<std::string>& class_names() const { return classes_; }
  const std::vector<std::string>& concept_names() const { return concepts_; }

  // Identifies the graph's content (vocabulary, weights, threshold). Used to
  // detect clique sets built from different graphs.
  uint64_t fingerprint() const { return fingerprint_; }

  bool contains(NodeId n) const {
    return n.index < (n.kind == NodeKind::Class ? num_classes() : num_concepts());
  }

  const std::string& name(NodeId n) const {
    require(n);
    return n.kind == NodeKind::Class ? classes_[n.index] : concepts_[n.index];
  }

  // Resolves a name to its node. Classes and concepts never share a name.
  std::optional<NodeId> find(std::string_view name) const {
    if (auto i = detail::find_sorted(classes_, name)) return NodeId::of_class(*i);
    if (auto i = detail::find_sorted(concepts_, name))
      return NodeId::of_concept(*i);
    return std::nullopt;
  }

  NodeId node(std::string_view name) const {
    if (auto n = find(name)) return *n;
    throw InvalidArgument("unknown node '" + std::string(name) + "'");
  }

  std::vector<NodeId> nodes() const {
    std::vector<NodeId> out;
    out.reserve(num_nodes());
    for (uint32_t i = 0; i < num_classes(); ++i) out.push_back(NodeId::of_class(i));
    for (uint32_t i = 0; i < num_concepts(); ++i)
      out.push_back(NodeId::of_concept(i));
    return out;
  }

  // w_ij if (i, j) is an edge, else 0.
  uint64_t edge_weight(NodeId i, NodeId j) const {
    require(i);
    require(j);
    if (i == j) throw InvalidArgument("self-pair: '" + name(i) + "'");
    const uint64_t w = raw_weight(i, j);
    return w >= min_support_ ? w : 0;
  }

  uint64_t edge_weight(std::string_view i, std::string_view j) const {
    return edge_weight(node(i), node(j));
  }

  bool adjacent(NodeId i, NodeId j) const {
    return i != j && edge_weight(i, j) > 0;
  }

  std::vector<NodeId> neighbors(NodeId n) const {
    require(n);
    std::vector<NodeId> out;
    if (n.kind == NodeKind::Class) {
      class_adjacency_[n.index].for_each(
          [&](std::size_t c) { out.push_back(NodeId::of_concept(static_cast<uint32_t>(c))); });
      return out;
    }
    for (uint32_t y = 0; y < num_classes(); ++y)
      if (class_adjacency_[y].test(n.index)) out.push_back(NodeId::of_class(y));
    concept_adjacency_[n.index].for_each(
        [&](std::size_t c) { out.push_back(NodeId::of_concept(static_cast<uint32_t>(c))); });
    return out;
  }

  // All edges, sorted by (a, b) in canonical node order.
  std::vector<WeightedEdge> edges() const {
    std::vector<WeightedEdge> out;
    const std::size_t nc = num_concepts();
    for (uint32_t y = 0; y < num_classes(); ++y)
      for (uint32_t c = 0; c < nc; ++c)
        if (class_adjacency_[y].test(c))
          out.push_back({NodeId::of_class(y), NodeId::of_concept(c),
                         class_concept_[y * nc + c]});
    for (uint32_t i = 0; i < nc; ++i)
      for (uint32_t j = i + 1; j < nc; ++j)
        if (concept_adjacency_[i].test(j))
          out.push_back({NodeId::of_concept(i), NodeId::of_concept(j),
                         concept_concept_[i * nc + j]});
    return out;
  }

  // Concept neighbours of a class, as a bitset over concept indices.
  const Bitset& class_row(uint32_t class_index) const {
    return class_adjacency_.at(class_index);
  }
  // Concept neighbours of a concept, as a bitset over concept indices.
  const Bitset& concept_row(uint32_t concept_index) const {
    return concept_adjacency_.at(concept_index);
  }

 private:
  void require(NodeId n) const {
    if (!contains(n))
      throw InvalidArgument(std::string("unknown node: ") +
                            (n.kind == NodeKind::Class ? "class" : "concept") +
                            " #" + std::to_string(n.index));
  }

  uint64_t raw_weight(NodeId i, NodeId j) const {
    if (i.kind == NodeKind::Class && j.kind == NodeKind::Class) return 0;
    const std::size_t nc = num_concepts();
    if (i.kind == NodeKind::Class) return class_concept_[i.index * nc + j.index];
    if (j.kind == NodeKind::Class) return class_concept_[j.index * nc + i.index];
    return concept_concept_[i.index * nc + j.index];
  }

  uint64_t compute_fingerprint() const {
    // FNV-1a over a canonical byte serialization.
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t n) {
      const auto* p = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
      }
    };
    auto mix_u64 = [&](uint64_t v) { mix(&v, sizeof v); };
    mix_u64(min_support_);
    for (const auto* names : {&classes_, &concepts_}) {
      mix_u64(names->size());
      for (const auto& s : *names) {
        mix_u64(s.size());
        mix(s.data(), s.size());
      }
    }
    for (uint64_t w : class_concept_) mix_u64(w);
    for (uint64_t w : concept_concept_) mix_u64(w);
    return h;
  }

  uint64_t min_support_ = 1;
  std::size_t num_records_ = 0;
  uint64_t fingerprint_ = 0;
  std::vector<std::string> classes_;
  std::vector<std::string> concepts_;
  std::vector<uint64_t> class_concept_;    // classes x concepts, row-major
  std::vector<uint64_t> concept_concept_;  // concepts x concepts, symmetric
  std::vector<Bitset> class_adjacency_;
  std::vector<Bitset> concept_adjacency_;
};

inline ConceptGraph build_graph(const Dataset& dataset, GraphOptions options = {}) {
  return ConceptGraph::build(dataset, options);
}

namespace detail {

// Is sorted `needle` a subset of sorted `haystack`? Linear merge.
inline bool sorted_includes(std::span<const uint32_t> haystack,
                            std::span<const uint32_t> needle) {
  return std::includes(haystack.begin(), haystack.end(), needle.begin(),
                       needle.end());
}

}  // namespace detail

// Number of records labeled `class_index` whose concept set includes every
// concept in `combination` (sorted, distinct concept indices). Record scan.
inline uint64_t cooccurrence_count(const Dataset& dataset, uint32_t class_index,
                                   std::span<const uint32_t> combination) {
  uint64_t n = 0;
  for (std::size_t r = 0; r < dataset.size(); ++r)
    if (dataset.label_of(r) == class_index &&
        detail::sorted_includes(dataset.concepts_of(r), combination))
      ++n;
  return n;
}

inline uint64_t cooccurrence_count(const Dataset& dataset,
                                   std::string_view class_name,
                                   std::span<const std::string> combination) {
  const auto y = dataset.class_index(class_name);
  if (!y) throw InvalidArgument("unknown class '" + std::string(class_name) + "'");
  if (combination.empty())
    throw InvalidArgument("concept combination must be non-empty");
  std::vector<uint32_t> ids;
  for (const auto& c : combination) {
    const auto i = dataset.concept_index(c);
    if (!i) throw InvalidArgument("unknown concept '" + c + "'");
    ids.push_back(*i);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw InvalidArgument("concept combination has duplicates");
  return cooccurrence_count(dataset, *y, ids);
}

inline uint64_t cooccurrence_count(const Dataset& dataset,
                                   std::string_view class_name,
                                   std::initializer_list<std::string> combination) {
  const std::vector<std::string> v(combination);
  return cooccurrence_count(dataset, class_name, std::span<const std::string>(v));
}

}  // namespace cdiag

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

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cdiag/error.hpp"

namespace cdiag {

// One image's metadata. `concepts` is sorted and duplicate-free once the
// record is part of a Dataset.
struct AnnotationRecord {
  std::string id;
  std::string label;
  std::vector<std::string> concepts;

  friend bool operator==(const AnnotationRecord&,
                         const AnnotationRecord&) = default;
  friend auto operator<=>(const AnnotationRecord&,
                          const AnnotationRecord&) = default;
};

// Explicit label/concept universe loaded from a vocabulary file. Concepts
// listed here but absent from every record become isolated graph nodes.
struct Vocabulary {
  std::vector<std::string> classes;
  std::vector<std::string> concepts;
};

namespace detail {

inline std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline std::optional<uint32_t> find_sorted(
    const std::vector<std::string>& names, std::string_view name) {
  auto it = std::lower_bound(names.begin(), names.end(), name);
  if (it == names.end() || *it != name) return std::nullopt;
  return static_cast<uint32_t>(it - names.begin());
}

}  // namespace detail

// Immutable labeled, concept-annotated dataset.
//
// Besides the string records it keeps an interned view: every record's
// label as an index into classes() and its concepts as a sorted run of
// indices into concepts(). Indices follow lexicographic name order, so
// comparing index sequences is the same as comparing name sequences.
class Dataset {
 public:
  // Throws InvalidArgument if the records break any Dataset invariant.
  explicit Dataset(std::vector<AnnotationRecord> records,
                   const Vocabulary* vocabulary = nullptr)
      : records_(std::move(records)) {
    if (records_.empty()) throw InvalidArgument("dataset has no records");

    std::unordered_set<std::string_view> ids;
    std::vector<std::string> labels;
    std::vector<std::string> concepts;
    for (auto& r : records_) {
      if (r.id.empty()) throw InvalidArgument("record with empty id");
      if (r.label.empty())
        throw InvalidArgument("record '" + r.id + "' has an empty label");
      if (!ids.insert(r.id).second)
        throw InvalidArgument("duplicate record id '" + r.id + "'");
      r.concepts = detail::sorted_unique(std::move(r.concepts));
      labels.push_back(r.label);
      concepts.insert(concepts.end(), r.concepts.begin(), r.concepts.end());
    }
    classes_ = detail::sorted_unique(std::move(labels));
    concepts_ = detail::sorted_unique(std::move(concepts));

    if (vocabulary != nullptr) {
      const auto vocab_classes = detail::sorted_unique(vocabulary->classes);
      const auto vocab_concepts = detail::sorted_unique(vocabulary->concepts);
      for (const auto& c : classes_)
        if (!detail::find_sorted(vocab_classes, c))
          throw InvalidArgument("class '" + c + "' missing from vocabulary");
      for (const auto& c : concepts_)
        if (!detail::find_sorted(vocab_concepts, c))
          throw InvalidArgument("concept '" + c + "' missing from vocabulary");
      concepts_ = vocab_concepts;
    }

    for (const auto& c : classes_)
      if (detail::find_sorted(concepts_, c))
        throw InvalidArgument("class/concept collision on '" + c + "'");

    label_ids_.reserve(records_.size());
    offsets_.reserve(records_.size() + 1);
    offsets_.push_back(0);
    for (const auto& r : records_) {
      label_ids_.push_back(*detail::find_sorted(classes_, r.label));
      for (const auto& c : r.concepts)
        concept_ids_.push_back(*detail::find_sorted(concepts_, c));
      offsets_.push_back(concept_ids_.size());
    }
  }

  std::span<const AnnotationRecord> records() const { return records_; }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<std::string>& concepts() const { return concepts_; }
  std::size_t size() const { return records_.size(); }
  std::size_t num_classes() const { return classes_.size(); }
  std::size_t num_concepts() const { return concepts_.size(); }

  std::optional<uint32_t> class_index(std::string_view name) const {
    return detail::find_sorted(classes_, name);
  }
  std::optional<uint32_t> concept_index(std::string_view name) const {
    return detail::find_sorted(concepts_, name);
  }

  uint32_t label_of(std::size_t record) const { return label_ids_[record]; }
  std::span<const uint32_t> concepts_of(std::size_t record) const {
    return std::span<const uint32_t>(concept_ids_)
        .subspan(offsets_[record], offsets_[record + 1] - offsets_[record]);
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.records_ == b.records_ && a.classes_ == b.classes_ &&
           a.concepts_ == b.concepts_;
  }

 private:
  std::vector<AnnotationRecord> records_;
  std::vector<std::string> classes_;
  std::vector<std::string> concepts_;
  std::vector<uint32_t> label_ids_;
  std::vector<uint32_t> concept_ids_;
  std::vector<std::size_t> offsets_;
};

// Sorted class list and sorted concept list of `dataset`.
inline std::pair<std::vector<std::string>, std::vector<std::string>>
vocabulary(const Dataset& dataset) {
  return {dataset.classes(), dataset.concepts()};
}

}  // namespace cdiag

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

// Seeded generator for datasets with a known class/concept bias.
//
// Every class owns a "native" concept group. A record of class y draws its
// concepts from y's group with probability `correlation`, otherwise from a
// uniformly chosen group of another class, and then takes between lo and hi
// distinct concepts uniformly from that group.
//
// Randomness comes from std::mt19937_64, whose output sequence is fixed by
// the C++ standard. The standard distributions are not, so the bounded and
// real-valued draws below are done by hand to keep files identical across
// toolchains.

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cdiag/dataset.hpp"
#include "cdiag/error.hpp"

namespace cdiag {

inline constexpr const char* kSynthPrng = "mt19937_64";

struct BiasSpec {
  std::vector<std::string> classes;
  std::map<std::string, std::vector<std::string>> concept_groups;
  double correlation = 0.95;
  uint64_t per_class_n = 0;
  uint64_t min_concepts = 1;
  uint64_t max_concepts = 1;
  uint64_t seed = 0;

  // Throws InvalidArgument naming the offending field.
  void validate() const {
    if (classes.size() < 2)
      throw InvalidArgument("classes: at least two classes are required");
    std::set<std::string> class_set(classes.begin(), classes.end());
    if (class_set.size() != classes.size())
      throw InvalidArgument("classes: duplicate class name");
    for (const auto& c : classes)
      if (c.empty()) throw InvalidArgument("classes: empty class name");
    std::set<std::string> all_concepts;
    for (const auto& c : classes) {
      auto it = concept_groups.find(c);
      if (it == concept_groups.end() || it->second.empty())
        throw InvalidArgument("concept_groups: no concepts for class '" + c + "'");
      for (const auto& concept_name : it->second) {
        if (concept_name.empty())
          throw InvalidArgument("concept_groups: empty concept name");
        if (class_set.count(concept_name))
          throw InvalidArgument("concept_groups: '" + concept_name +
                                "' is also a class name");
        if (!all_concepts.insert(concept_name).second)
          throw InvalidArgument("concept_groups: '" + concept_name +
                                "' appears more than once");
      }
      if (max_concepts > it->second.size())
        throw InvalidArgument("concepts_per_image: upper bound exceeds the size "
                              "of the group for class '" + c + "'");
    }
    for (const auto& [name, group] : concept_groups)
      if (!class_set.count(name))
        throw InvalidArgument("concept_groups: unknown class '" + name + "'");
    if (!(correlation > 0.5 && correlation <= 1.0))
      throw InvalidArgument("correlation: must be in (0.5, 1.0]");
    if (per_class_n < 1) throw InvalidArgument("per_class_n: must be positive");
    if (min_concepts < 1) throw InvalidArgument("concepts_per_image: lower bound must be >= 1");
    if (max_concepts < min_concepts)
      throw InvalidArgument("concepts_per_image: upper bound below lower bound");
  }
};

// {"classes": [...], "concept_groups": {class: [...]}, "correlation": 0.95,
//  "per_class_n": 1000, "concepts_per_image": [1, 3], "seed": 7}
inline BiasSpec parse_bias_spec(const nlohmann::json& doc) {
  auto field = [&](const char* name) -> const nlohmann::json& {
    auto it = doc.find(name);
    if (it == doc.end()) throw InvalidArgument(std::string(name) + ": missing");
    return *it;
  };
  BiasSpec spec;
  try {
    if (!doc.is_object()) throw InvalidArgument("spec: expected a JSON object");
    spec.classes = field("classes").get<std::vector<std::string>>();
    spec.concept_groups =
        field("concept_groups").get<std::map<std::string, std::vector<std::string>>>();
    spec.correlation = field("correlation").get<double>();
    const auto& n = field("per_class_n");
    if (!n.is_number_integer() || n.get<int64_t>() < 1)
      throw InvalidArgument("per_class_n: must be a positive integer");
    spec.per_class_n = n.get<uint64_t>();
    const auto& range = field("concepts_per_image");
    if (!range.is_array() || range.size() != 2 || !range[0].is_number_integer() ||
        !range[1].is_number_integer() || range[0].get<int64_t>() < 1 ||
        range[1].get<int64_t>() < 1)
      throw InvalidArgument("concepts_per_image: expected [lo, hi] with lo >= 1");
    spec.min_concepts = range[0].get<uint64_t>();
    spec.max_concepts = range[1].get<uint64_t>();
    const auto& seed = field("seed");
    if (!seed.is_number_integer())
      throw InvalidArgument("seed: must be an integer");
    spec.seed = seed.is_number_unsigned() ? seed.get<uint64_t>()
                                          : static_cast<uint64_t>(seed.get<int64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("spec: wrong field type (") + e.what() + ")");
  }
  spec.validate();
  return spec;
}

// Portable draws on top of mt19937_64.
class SynthRng {
 public:
  explicit SynthRng(uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n), n >= 1, by rejection of the biased low range.
  uint64_t below(uint64_t n) {
    const uint64_t threshold = (0 - n) % n;
    while (true) {
      const uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

 private:
  std::mt19937_64 engine_;
};

struct SynthRecord {
  AnnotationRecord record;
  // Class whose group supplied the concepts; equals record.label unless the
  // record is a cross-group draw.
  std::string source_group;
};

inline std::vector<SynthRecord> generate_biased(const BiasSpec& spec) {
  spec.validate();
  SynthRng rng(spec.seed);
  const std::size_t width = std::to_string(spec.per_class_n).size();
  std::vector<SynthRecord> out;
  out.reserve(spec.classes.size() * spec.per_class_n);
  for (std::size_t ci = 0; ci < spec.classes.size(); ++ci) {
    const std::string& label = spec.classes[ci];
    for (uint64_t i = 0; i < spec.per_class_n; ++i) {
      std::size_t group = ci;
      if (rng.uniform01() >= spec.correlation) {
        const uint64_t pick = rng.below(spec.classes.size() - 1);
        group = pick < ci ? pick : pick + 1;
      }
      std::vector<std::string> pool = spec.concept_groups.at(spec.classes[group]);
      const uint64_t count =
          spec.min_concepts + rng.below(spec.max_concepts - spec.min_concepts + 1);
      for (uint64_t j = 0; j < count; ++j) {
        const uint64_t swap_with = j + rng.below(pool.size() - j);
        std::swap(pool[j], pool[swap_with]);
      }
      std::vector<std::string> concepts(pool.begin(),
                                        pool.begin() + static_cast<std::ptrdiff_t>(count));
      std::sort(concepts.begin(), concepts.end());

      std::string seq = std::to_string(i + 1);
      seq.insert(0, width - seq.size(), '0');
      out.push_back({{label + "-" + seq, label, std::move(concepts)},
                     spec.classes[group]});
    }
  }
  return out;
}

inline std::vector<AnnotationRecord> records_of(std::vector<SynthRecord> synth) {
  std::vector<AnnotationRecord> out;
  out.reserve(synth.size());
  for (auto& s : synth) out.push_back(std::move(s.record));
  return out;
}

}  // namespace cdiag

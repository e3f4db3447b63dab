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

// Seeded property tests. Every property runs over kSeeds random datasets and
// compares against the string-level oracles in test_support.hpp.

#include <gtest/gtest.h>

#include <sstream>

#include "cdiag/brute_force.hpp"
#include "cdiag/ingest.hpp"
#include "cdiag/rebalance.hpp"
#include "cdiag/report.hpp"
#include "test_support.hpp"

namespace cdiag {
namespace {

using testing::NameSet;
using testing::random_records;

constexpr uint64_t kSeeds = 120;

NameSet name_set(const CliqueFrequencyTable& t, const ConceptClique& q) {
  const auto v = t.names_of(q);
  return NameSet(v.begin(), v.end());
}

std::vector<std::string> observed_concepts(const std::vector<AnnotationRecord>& records) {
  NameSet all;
  for (const auto& r : records) all.insert(r.concepts.begin(), r.concepts.end());
  return {all.begin(), all.end()};
}

std::vector<std::string> observed_classes(const std::vector<AnnotationRecord>& records) {
  NameSet all;
  for (const auto& r : records) all.insert(r.label);
  return {all.begin(), all.end()};
}

TEST(Properties, GraphWeightsMatchNaiveScan) {
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto records = random_records(seed);
    const auto g = build_graph(Dataset(records));
    for (NodeId a : g.nodes())
      for (NodeId b : g.nodes()) {
        if (a == b) continue;
        const uint64_t w = g.edge_weight(a, b);
        ASSERT_EQ(w, testing::naive_pair_count(records, g.name(a), g.name(b)))
            << "seed " << seed << " " << g.name(a) << "-" << g.name(b);
        ASSERT_EQ(w, g.edge_weight(b, a));
        if (a.kind == NodeKind::Class && b.kind == NodeKind::Class) {
          ASSERT_EQ(w, 0u);
        }
      }
  }
}

TEST(Properties, EdgeWeightBoundedByOccurrence) {
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto records = random_records(seed);
    const auto g = build_graph(Dataset(records));
    std::map<std::string, uint64_t> occ;
    for (const auto& r : records) {
      ++occ[r.label];
      for (const auto& c : r.concepts) ++occ[c];
    }
    for (const auto& e : g.edges()) {
      ASSERT_LE(e.weight, std::min(occ[g.name(e.a)], occ[g.name(e.b)]));
      ASSERT_LE(e.weight, records.size());
    }
  }
}

TEST(Properties, CooccurrenceMatchesNaiveAndPartitionsByClass) {
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto records = random_records(seed);
    const Dataset d(records);
    const auto concepts = observed_concepts(records);
    if (concepts.empty()) continue;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    for (int trial = 0; trial < 10; ++trial) {
      NameSet q;
      const std::size_t size = 1 + rng() % std::min<std::size_t>(3, concepts.size());
      while (q.size() < size) q.insert(concepts[rng() % concepts.size()]);
      const std::vector<std::string> qv(q.begin(), q.end());

      uint64_t total = 0;
      for (const auto& r : records) {
        NameSet have(r.concepts.begin(), r.concepts.end());
        total += std::includes(have.begin(), have.end(), q.begin(), q.end());
      }
      uint64_t sum = 0;
      for (const auto& y : d.classes()) {
        const uint64_t n = cooccurrence_count(d, y, qv);
        ASSERT_EQ(n, testing::naive_count(records, y, q)) << "seed " << seed;
        sum += n;
        // Anti-monotone in the concept set.
        for (const auto& extra : concepts) {
          if (q.count(extra)) continue;
          auto bigger = qv;
          bigger.push_back(extra);
          ASSERT_LE(cooccurrence_count(d, y, bigger), n);
        }
      }
      ASSERT_EQ(sum, total);
    }
  }
}

TEST(Properties, ClassCliquesMatchBruteForceUpToTwelveConcepts) {
  testing::RandomDatasetShape shape;
  shape.max_concepts = 12;
  shape.max_concepts_per_record = 5;
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto g = build_graph(Dataset(random_records(seed, shape)));
    for (std::size_t k_max : {1u, 2u, 4u}) {
      for (uint32_t y = 0; y < g.num_classes(); ++y) {
        const auto fast = class_clique_set(g, y, k_max);
        const auto slow = brute_force_class_cliques(g, y, k_max);
        ASSERT_EQ(fast.by_size, slow.by_size) << "seed " << seed << " k_max " << k_max;
        ASSERT_EQ(fast.max_k, slow.max_k);
      }
    }
  }
}

TEST(Properties, ClassCliquesMatchNaiveOracle) {
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto records = random_records(seed);
    const auto g = build_graph(Dataset(records));
    const auto concepts = observed_concepts(records);
    for (const auto& label : observed_classes(records)) {
      const auto set = class_clique_set(g, g.node(label), 3);
      const auto naive = testing::naive_class_cliques(records, label, concepts, 3);
      for (std::size_t k = 1; k <= 3; ++k) {
        std::set<NameSet> got;
        for (const auto& q : set.by_size.at(k)) {
          NameSet s;
          for (uint32_t c : q.concepts) s.insert(g.concept_names()[c]);
          got.insert(s);
        }
        const auto it = naive.find(k);
        ASSERT_EQ(got, it == naive.end() ? std::set<NameSet>{} : it->second)
            << "seed " << seed << " class " << label << " k " << k;
      }
    }
  }
}

TEST(Properties, CliqueSetsAreDownwardClosed) {
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto g = build_graph(Dataset(random_records(seed)));
    for (const auto& set : all_class_clique_sets(g, 4)) {
      for (std::size_t k = 2; k <= 4; ++k)
        for (const auto& q : set.by_size.at(k))
          for (std::size_t drop = 0; drop < k; ++drop) {
            ConceptClique sub = q;
            sub.concepts.erase(sub.concepts.begin() + drop);
            const auto& below = set.by_size.at(k - 1);
            ASSERT_TRUE(std::binary_search(below.begin(), below.end(), sub));
          }
    }
  }
}

// Common cliques, per-class frequencies and imbalance entries, all rebuilt
// from strings and compared as sets.
TEST(Properties, CommonCliquesAndImbalancesMatchNaive) {
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto records = random_records(seed);
    const Dataset d(records);
    const auto diag = diagnose(d, testing::with_k_max(3));
    const auto concepts = observed_concepts(records);
    const auto classes = observed_classes(records);

    std::map<std::size_t, std::set<NameSet>> common;
    for (std::size_t i = 0; i < classes.size(); ++i) {
      auto mine = testing::naive_class_cliques(records, classes[i], concepts, 3);
      for (std::size_t k = 1; k <= 3; ++k) {
        if (i == 0) {
          common[k] = mine[k];
          continue;
        }
        std::set<NameSet> kept;
        for (const auto& s : common[k])
          if (mine[k].count(s)) kept.insert(s);
        common[k] = kept;
      }
    }
    for (std::size_t k = 1; k <= 3; ++k) {
      std::set<NameSet> got;
      for (const auto& q : diag.common.levels.at(k)) got.insert(name_set(diag.table, q));
      ASSERT_EQ(got, common[k]) << "seed " << seed << " k " << k;
      for (const auto& set : diag.class_cliques)
        for (const auto& q : diag.common.levels.at(k))
          ASSERT_TRUE(std::binary_search(set.by_size.at(k).begin(), set.by_size.at(k).end(), q));
    }

    std::vector<testing::NaiveImbalance> expected;
    for (const auto& [k, sets] : common)
      for (const auto& s : sets) {
        testing::NaiveImbalance e;
        e.concepts = s;
        for (const auto& y : classes) {
          e.per_class[y] = testing::naive_count(records, y, s);
          e.max = std::max(e.max, e.per_class[y]);
        }
        for (const auto& [y, n] : e.per_class)
          if (n < e.max) e.deficits[y] = e.max - n;
        if (!e.deficits.empty()) expected.push_back(e);
      }

    std::vector<testing::NaiveImbalance> got;
    for (const auto& entry : diag.imbalances) {
      testing::NaiveImbalance e;
      e.concepts = name_set(diag.table, entry.clique);
      for (uint32_t y = 0; y < entry.per_class.size(); ++y)
        e.per_class[diag.table.class_names[y]] = entry.per_class[y];
      e.max = entry.max_count;
      for (const auto& [y, v] : entry.deficits) e.deficits[diag.table.class_names[y]] = v;
      got.push_back(e);
    }
    auto by_concepts = [](const auto& a, const auto& b) { return a.concepts < b.concepts; };
    std::sort(expected.begin(), expected.end(), by_concepts);
    std::sort(got.begin(), got.end(), by_concepts);
    ASSERT_EQ(got, expected) << "seed " << seed;

    for (std::size_t i = 1; i < diag.imbalances.size(); ++i) {
      const auto& a = diag.imbalances[i - 1];
      const auto& b = diag.imbalances[i];
      ASSERT_GE(a.max_deficit(), b.max_deficit());
      if (a.max_deficit() == b.max_deficit()) {
        ASSERT_LE(a.clique.size(), b.clique.size());
        if (a.clique.size() == b.clique.size()) {
          ASSERT_LT(a.clique, b.clique);
        }
      }
    }
  }
}

TEST(Properties, TableSingletonsAndSupportAntiMonotone) {
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto diag = diagnose(Dataset(random_records(seed)), testing::with_k_max(3));
    const auto& t = diag.table;
    for (const auto& row : t.levels.at(1).rows)
      for (uint32_t y = 0; y < t.class_names.size(); ++y)
        ASSERT_EQ(row.counts[y], diag.graph.edge_weight(NodeId::of_class(y),
                                                         NodeId::of_concept(row.clique.concepts[0])));
    for (std::size_t k = 1; k < 3; ++k)
      for (const auto& big : t.levels.at(k + 1).rows)
        for (const auto& small : t.levels.at(k).rows) {
          if (!std::includes(big.clique.concepts.begin(), big.clique.concepts.end(),
                             small.clique.concepts.begin(), small.clique.concepts.end()))
            continue;
          for (uint32_t y = 0; y < t.class_names.size(); ++y)
            ASSERT_GE(small.counts[y], big.counts[y]);
        }
  }
}

TEST(Properties, TwoClassReduction) {
  testing::RandomDatasetShape shape;
  shape.max_classes = 2;
  std::size_t checked = 0;
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto diag = diagnose(Dataset(random_records(seed, shape)), testing::with_k_max(3));
    if (diag.table.class_names.size() != 2) continue;
    for (const auto& e : diag.imbalances) {
      const uint64_t f0 = e.per_class[0], f1 = e.per_class[1];
      ASSERT_EQ(e.max_deficit(), f0 > f1 ? f0 - f1 : f1 - f0);
      ASSERT_EQ(e.under_represented(), std::vector<uint32_t>{f0 < f1 ? 0u : 1u});
      ++checked;
    }
  }
  EXPECT_GT(checked, 0u);
}

TEST(Properties, DiagnosisIsDeterministic) {
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto records = random_records(seed);
    auto render = [&] {
      const Dataset d(records);
      const auto diag = diagnose(d, testing::with_k_max(3));
      const auto plan = rebalance(diag.table);
      ReportConfig cfg;
      cfg.k_max = 3;
      return dump_canonical(diagnosis_report(d, diag, plan, cfg, "sha256:x")) +
             plan_to_jsonl(plan.queries);
    };
    ASSERT_EQ(render(), render());
  }
}

// --- ingest -----------------------------------------------------------------

// Names that need CSV quoting or NFC handling survive both formats.
std::vector<AnnotationRecord> awkward_records(uint64_t seed) {
  auto records = random_records(seed);
  auto rename = [](std::string& s) {
    if (s == "c1") s = "c,1";
    else if (s == "c2") s = "c\"2";
    else if (s == "C0") s = "Caf\xc3\xa9";
  };
  for (auto& r : records) {
    rename(r.label);
    for (auto& c : r.concepts) rename(c);
    std::sort(r.concepts.begin(), r.concepts.end());
  }
  return records;
}

TEST(Properties, JsonlAndCsvAgreeAndRoundTrip) {
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const Dataset d(awkward_records(seed));
    std::ostringstream jsonl, csv;
    write_jsonl(d, jsonl);
    write_csv(d, csv);
    const auto a = parse_jsonl(jsonl.str());
    const auto b = parse_csv(csv.str());
    ASSERT_TRUE(a.report.ok()) << "seed " << seed;
    ASSERT_TRUE(b.report.ok()) << "seed " << seed << "\n" << csv.str();
    ASSERT_EQ(*a.dataset, d);
    ASSERT_EQ(*b.dataset, d);
  }
}

TEST(Properties, LenientDropsExactlyTheBadLines) {
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const Dataset d(random_records(seed));
    std::ostringstream good;
    write_jsonl(d, good);
    std::istringstream lines(good.str());
    std::mt19937_64 rng(seed);
    const char* broken[] = {"{not json", R"({"id":"zz","concepts":[]})",
                            R"({"id":"zy","label":7,"concepts":[]})", "[]"};
    std::string mixed, line;
    std::size_t total = 0, bad = 0;
    while (std::getline(lines, line)) {
      if (rng() % 4 == 0) {
        mixed += std::string(broken[rng() % 4]) + "\n";
        ++total;
        ++bad;
      }
      mixed += line + "\n";
      ++total;
    }
    const auto lenient = parse_jsonl(mixed, {ParseMode::Lenient, nullptr});
    ASSERT_TRUE(lenient.dataset.has_value());
    ASSERT_EQ(lenient.dataset->size(), total - bad) << "seed " << seed;
    ASSERT_EQ(lenient.report.records_rejected, bad);
    ASSERT_EQ(*lenient.dataset, d);
    if (bad > 0) {
      const auto strict = parse_jsonl(mixed);
      ASSERT_FALSE(strict.report.ok());
      ASSERT_FALSE(strict.dataset.has_value());
    }
  }
}

// --- rebalance --------------------------------------------------------------

TEST(Properties, PostBalanceClosure) {
  std::size_t nonempty = 0;
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const Dataset d(random_records(seed));
    const auto diag = diagnose(d, testing::with_k_max(3));
    const auto plan = rebalance(diag.table);
    ASSERT_TRUE(plan.summary.uniform);
    nonempty += !plan.queries.empty();

    // No over-generation: the adjusted table is already level.
    ASSERT_THROW(rebalance(plan.adjusted_table), InvalidArgument);
    auto relabeled = plan.adjusted_table;
    for (auto& [k, level] : relabeled.levels) level.provenance = Provenance::Original;
    ASSERT_TRUE(rebalance(relabeled).queries.empty()) << "seed " << seed;

    const Dataset extended = apply_virtual(d, plan.queries);
    const auto again = diagnose(extended, testing::with_k_max(3));
    ASSERT_TRUE(again.imbalances.empty()) << "seed " << seed;
    ASSERT_EQ(again.common.levels, diag.common.levels);
    // Recomputed counts equal the planned ones.
    auto expected = plan.adjusted_table;
    for (auto& [k, level] : expected.levels) level.provenance = Provenance::Original;
    ASSERT_EQ(again.table, expected) << "seed " << seed;
  }
  EXPECT_GT(nonempty, kSeeds / 2);
}

TEST(Properties, ConservationAndMonotoneSafety) {
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto diag = diagnose(Dataset(random_records(seed)), testing::with_k_max(3));
    const auto& t = diag.table;
    const auto plan = rebalance(t);

    auto scheduled = [&](const std::string& y, const NameSet& c, std::size_t above) {
      uint64_t n = 0;
      for (const auto& q : plan.queries) {
        if (q.class_name != y || q.concepts.size() <= above) continue;
        const NameSet have(q.concepts.begin(), q.concepts.end());
        n += std::includes(have.begin(), have.end(), c.begin(), c.end()) ? q.count : 0;
      }
      return n;
    };

    for (const auto& [k, level] : t.levels)
      for (const auto& row : level.rows) {
        const NameSet c = name_set(t, row.clique);
        const auto* adjusted = plan.adjusted_table.levels.at(k).find(row.clique);
        uint64_t level_max = 0;
        std::vector<uint64_t> before(t.class_names.size());
        for (uint32_t y = 0; y < t.class_names.size(); ++y) {
          ASSERT_EQ(adjusted->counts[y],
                    row.counts[y] + scheduled(t.class_names[y], c, k - 1));
          before[y] = row.counts[y] + scheduled(t.class_names[y], c, k);
          level_max = std::max(level_max, before[y]);
        }
        for (const auto& q : plan.queries) {
          if (NameSet(q.concepts.begin(), q.concepts.end()) != c) continue;
          const auto y = std::find(t.class_names.begin(), t.class_names.end(), q.class_name) -
                         t.class_names.begin();
          ASSERT_GT(q.count, 0u);
          ASSERT_LT(before[y], level_max);
          ASSERT_EQ(q.count, level_max - before[y]);
        }
      }
  }
}

TEST(Properties, TwoClassAgreementAtTopLevel) {
  testing::RandomDatasetShape shape;
  shape.max_classes = 2;
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto diag = diagnose(Dataset(random_records(seed, shape)), testing::with_k_max(3));
    if (diag.table.class_names.size() != 2) continue;
    const auto plan = rebalance(diag.table);
    const std::size_t top = diag.table.k_max;
    for (const auto& row : diag.table.levels.at(top).rows) {
      const auto names = diag.table.names_of(row.clique);
      uint64_t emitted = 0;
      for (const auto& q : plan.queries)
        if (q.concepts == names) emitted += q.count;
      const uint64_t f0 = row.counts[0], f1 = row.counts[1];
      ASSERT_EQ(emitted, f0 > f1 ? f0 - f1 : f1 - f0);
    }
  }
}

TEST(Properties, CapClampsEveryQuery) {
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto diag = diagnose(Dataset(random_records(seed)), testing::with_k_max(3));
    SamplingConfig cfg;
    cfg.per_query_cap = 2;
    const auto plan = rebalance(diag.table, cfg);
    bool clamped = false;
    for (const auto& q : plan.queries) {
      ASSERT_LE(q.count, 2u);
      clamped = clamped || q.clamped;
    }
    ASSERT_EQ(plan.summary.uniform, !clamped);
    ASSERT_EQ(plan.summary.clamped_cliques.empty(), !clamped);
  }
}

}  // namespace
}  // namespace cdiag

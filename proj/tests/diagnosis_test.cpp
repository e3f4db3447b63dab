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

#include <gtest/gtest.h>

#include "cdiag/brute_force.hpp"
#include "cdiag/diagnosis.hpp"
#include "test_support.hpp"

namespace cdiag {
namespace {

using testing::d4;

// Concept cliques rendered as name lists, for readable expectations.
std::vector<std::vector<std::string>> names(const ConceptGraph& g,
                                            const std::vector<ConceptClique>& cliques) {
  std::vector<std::vector<std::string>> out;
  for (const auto& q : cliques) {
    std::vector<std::string> n;
    for (uint32_t c : q.concepts) n.push_back(g.concept_names()[c]);
    out.push_back(n);
  }
  return out;
}

using Names = std::vector<std::vector<std::string>>;

TEST(ClassCliqueSet, D4ClassA) {
  const auto g = build_graph(d4());
  const auto set = class_clique_set(g, g.node("A"), 2);
  EXPECT_EQ(names(g, set.by_size.at(1)), (Names{{"x"}, {"y"}}));
  EXPECT_EQ(names(g, set.by_size.at(2)), (Names{{"x", "y"}}));
  EXPECT_EQ(set.max_k, 2u);
}

TEST(ClassCliqueSet, MissingConceptEdgeBreaksPair) {
  // Same class-concept edges as D4, but x and y never co-occur.
  const Dataset d({{"r1", "A", {"x"}}, {"r2", "A", {"y"}}, {"r3", "B", {"x"}},
                   {"r4", "B", {"y"}}});
  const auto g = build_graph(d);
  const auto set = class_clique_set(g, g.node("A"), 2);
  EXPECT_EQ(set.by_size.at(1).size(), 2u);
  EXPECT_TRUE(set.by_size.at(2).empty());
  EXPECT_EQ(set.max_k, 1u);
}

TEST(ClassCliqueSet, ClassWithoutConceptNeighbours) {
  const Dataset d({{"r1", "A", {"x"}}, {"r2", "B", {}}});
  const auto g = build_graph(d);
  const auto set = class_clique_set(g, g.node("B"), 3);
  EXPECT_TRUE(set.by_size.at(1).empty());
  EXPECT_EQ(set.max_k, 0u);
}

TEST(ClassCliqueSet, RejectsConceptNodeAndZeroK) {
  const auto g = build_graph(d4());
  EXPECT_THROW(class_clique_set(g, g.node("x"), 2), InvalidArgument);
  EXPECT_THROW(class_clique_set(g, 7u, 2), InvalidArgument);
  EXPECT_THROW(class_clique_set(g, g.node("A"), 0), InvalidArgument);
}

TEST(ClassCliqueSet, LevelsBoundedByKMax) {
  const Dataset d({{"r1", "A", {"p", "q", "r", "s"}}});
  const auto g = build_graph(d);
  const auto set = class_clique_set(g, 0u, 3);
  EXPECT_EQ(set.by_size.size(), 3u);
  EXPECT_EQ(set.by_size.at(1).size(), 4u);
  EXPECT_EQ(set.by_size.at(2).size(), 6u);
  EXPECT_EQ(set.by_size.at(3).size(), 4u);
  EXPECT_EQ(set.max_k, 3u);
}

TEST(BruteForce, MatchesEnumerationOnD4) {
  const auto g = build_graph(d4());
  for (uint32_t y = 0; y < g.num_classes(); ++y) {
    const auto a = class_clique_set(g, y, 2);
    const auto b = brute_force_class_cliques(g, y, 2);
    EXPECT_EQ(a.by_size, b.by_size);
    EXPECT_EQ(a.max_k, b.max_k);
  }
}

TEST(BruteForce, KMaxOneIsNeighbourSingletons) {
  const auto g = build_graph(d4());
  const auto b = brute_force_class_cliques(g, g.node("B").index, 1);
  EXPECT_EQ(names(g, b.by_size.at(1)), (Names{{"x"}, {"y"}}));
  EXPECT_EQ(b.by_size.size(), 1u);
}

TEST(BruteForce, GuardsVocabularySize) {
  std::vector<std::string> many;
  for (int i = 0; i < 21; ++i) many.push_back("c" + std::to_string(i));
  const auto g = build_graph(Dataset({{"r1", "A", many}}));
  EXPECT_THROW(brute_force_class_cliques(g, 0u, 2), InvalidArgument);
}

TEST(CommonCliques, D4) {
  const auto g = build_graph(d4());
  const auto sets = all_class_clique_sets(g, 2);
  const auto common = common_clique_set(sets);
  EXPECT_EQ(names(g, common.levels.at(1)), (Names{{"x"}, {"y"}}));
  EXPECT_EQ(names(g, common.levels.at(2)), (Names{{"x", "y"}}));
}

TEST(CommonCliques, SingleClassIsItsOwnSet) {
  const Dataset d({{"r1", "A", {"x", "y"}}, {"r2", "A", {"z"}}});
  const auto g = build_graph(d);
  const auto sets = all_class_clique_sets(g, 3);
  EXPECT_EQ(common_clique_set(sets).levels, sets[0].by_size);
}

TEST(CommonCliques, DisjointNeighbourhoodsGiveEmptyLevels) {
  const Dataset d({{"r1", "A", {"x", "y"}}, {"r2", "B", {"p", "q"}}});
  const auto g = build_graph(d);
  const auto common = common_clique_set(all_class_clique_sets(g, 2));
  ASSERT_EQ(common.levels.size(), 2u);
  EXPECT_TRUE(common.levels.at(1).empty());
  EXPECT_TRUE(common.levels.at(2).empty());
}

TEST(CommonCliques, MismatchedInputsRejected) {
  const auto g = build_graph(d4());
  const std::vector<ClassCliqueSet> mixed_k{class_clique_set(g, 0u, 2),
                                            class_clique_set(g, 1u, 3)};
  EXPECT_THROW(common_clique_set(mixed_k), InvalidArgument);

  const auto other = build_graph(d4(), {2});
  const std::vector<ClassCliqueSet> mixed_graph{class_clique_set(g, 0u, 2),
                                                class_clique_set(other, 1u, 2)};
  EXPECT_THROW(common_clique_set(mixed_graph), InvalidArgument);

  const std::vector<ClassCliqueSet> dup{class_clique_set(g, 0u, 2),
                                        class_clique_set(g, 0u, 2)};
  EXPECT_THROW(common_clique_set(dup), InvalidArgument);
  EXPECT_THROW(common_clique_set(std::span<const ClassCliqueSet>{}), InvalidArgument);
}

TEST(CommonCliques, RelaxedFraction) {
  // {x} is in A's and B's sets, {y} only in A's, {z} only in C's.
  const Dataset d({{"r1", "A", {"x", "y"}}, {"r2", "B", {"x"}}, {"r3", "C", {"z"}}});
  const auto g = build_graph(d);
  const auto sets = all_class_clique_sets(g, 1);
  EXPECT_TRUE(common_clique_set(sets).levels.at(1).empty());
  const auto two_thirds = common_clique_set(sets, {0.6});
  EXPECT_EQ(names(g, two_thirds.levels.at(1)), (Names{{"x"}}));
  const auto any = common_clique_set(sets, {0.3});
  EXPECT_EQ(names(g, any.levels.at(1)), (Names{{"x"}, {"y"}, {"z"}}));
  EXPECT_EQ(common_clique_set(sets, {1.0}).levels, common_clique_set(sets).levels);
  EXPECT_THROW(common_clique_set(sets, {0.0}), InvalidArgument);
  EXPECT_THROW(common_clique_set(sets, {1.5}), InvalidArgument);
}

TEST(FrequencyTable, D4) {
  const Dataset d = d4();
  const auto g = build_graph(d);
  const auto table = frequency_table(d, common_clique_set(all_class_clique_sets(g, 2)));
  const ConceptClique x{{0}}, y{{1}}, xy{{0, 1}};
  EXPECT_EQ(table.levels.at(1).find(x)->counts, (std::vector<uint64_t>{2, 1}));
  EXPECT_EQ(table.levels.at(1).find(y)->counts, (std::vector<uint64_t>{1, 2}));
  EXPECT_EQ(table.levels.at(2).find(xy)->counts, (std::vector<uint64_t>{1, 1}));
  EXPECT_EQ(table.levels.at(1).provenance, Provenance::Original);
}

TEST(FrequencyTable, ZeroCountClassStillKeyed) {
  // Relaxed common cliques can hold a clique some class never shows.
  const Dataset d({{"r1", "A", {"x"}}, {"r2", "B", {"y"}}});
  const auto g = build_graph(d);
  const auto common = common_clique_set(all_class_clique_sets(g, 1), {0.5});
  const auto table = frequency_table(d, common);
  EXPECT_EQ(table.levels.at(1).find(ConceptClique{{0}})->counts,
            (std::vector<uint64_t>{1, 0}));
}

TEST(FrequencyTable, Idempotent) {
  const Dataset d = d4();
  const auto common = common_clique_set(all_class_clique_sets(build_graph(d), 3));
  EXPECT_EQ(frequency_table(d, common), frequency_table(d, common));
}

TEST(ImbalanceSet, D4) {
  const auto diag = diagnose(d4(), testing::with_k_max(2));
  ASSERT_EQ(diag.imbalances.size(), 2u);
  const auto& first = diag.imbalances[0];
  EXPECT_EQ(first.clique, ConceptClique{{0}});  // {x}
  EXPECT_EQ(first.max_count, 2u);
  EXPECT_EQ(first.deficits, (std::vector<std::pair<uint32_t, uint64_t>>{{1, 1}}));
  const auto& second = diag.imbalances[1];
  EXPECT_EQ(second.clique, ConceptClique{{1}});  // {y}
  EXPECT_EQ(second.max_count, 2u);
  EXPECT_EQ(second.deficits, (std::vector<std::pair<uint32_t, uint64_t>>{{0, 1}}));
}

CliqueFrequencyTable hand_table(std::vector<uint64_t> counts) {
  CliqueFrequencyTable t;
  t.concept_names = {"q"};
  for (std::size_t i = 0; i < counts.size(); ++i)
    t.class_names.push_back(std::string(1, static_cast<char>('A' + i)));
  t.k_max = 1;
  t.levels[1].rows.push_back({ConceptClique{{0}}, std::move(counts)});
  return t;
}

TEST(ImbalanceSet, UniformTableIsEmpty) {
  EXPECT_TRUE(imbalance_set(hand_table({4, 4, 4})).empty());
}

TEST(ImbalanceSet, ThreeClassMaxRule) {
  const auto entries = imbalance_set(hand_table({5, 5, 2}));
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].max_count, 5u);
  EXPECT_EQ(entries[0].deficits, (std::vector<std::pair<uint32_t, uint64_t>>{{2, 3}}));
  EXPECT_EQ(entries[0].under_represented(), (std::vector<uint32_t>{2}));
}

TEST(ImbalanceSet, TiesBelowMaxEachGetDeficit) {
  const auto entries = imbalance_set(hand_table({1, 7, 1}));
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].deficits,
            (std::vector<std::pair<uint32_t, uint64_t>>{{0, 6}, {2, 6}}));
}

TEST(ImbalanceSet, OrderingRule) {
  CliqueFrequencyTable t;
  t.class_names = {"A", "B"};
  t.concept_names = {"a", "b", "c"};
  t.k_max = 2;
  t.levels[1].rows = {{ConceptClique{{0}}, {3, 1}},
                      {ConceptClique{{1}}, {0, 5}},
                      {ConceptClique{{2}}, {2, 0}}};
  t.levels[2].rows = {{ConceptClique{{0, 1}}, {0, 2}}, {ConceptClique{{1, 2}}, {9, 4}}};
  const auto entries = imbalance_set(t);
  std::vector<ConceptClique> order;
  for (const auto& e : entries) order.push_back(e.clique);
  // deficits: {a}:2 {b}:5 {c}:2 {a,b}:2 {b,c}:5
  EXPECT_EQ(order, (std::vector<ConceptClique>{{{1}}, {{1, 2}}, {{0}}, {{2}}, {{0, 1}}}));
}

TEST(ImbalanceSet, RejectsAdjustedTable) {
  auto t = hand_table({1, 2});
  t.levels[1].provenance = Provenance::Adjusted;
  EXPECT_THROW(imbalance_set(t), InvalidArgument);
}

}  // namespace
}  // namespace cdiag

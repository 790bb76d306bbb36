/*
 * Copyright 2026 The crowdctl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "crowdctl/common/error.hpp"
#include "crowdctl/orchestrator/workloads.hpp"
#include "crowdctl/workflow/codec.hpp"
#include "crowdctl/workflow/factorial.hpp"
#include "crowdctl/workflow/graph.hpp"
#include "support.hpp"

using namespace crowdctl;
using namespace crowdctl::workflow;
using crowdctl::fixture::chain_def;
using crowdctl::fixture::lambda_block;

namespace {

bool has_code(const Violations& vs, const std::string& code) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.code == code; });
}

WorkflowDef lambda_graph(int n, const std::vector<Edge>& edges) {
  WorkflowDef def;
  def.id = "g";
  def.name = "g";
  for (int i = 0; i < n; ++i) def.blocks.push_back(lambda_block("n" + std::to_string(i), "concat"));
  def.edges = edges;
  return def;
}

// Independent cycle check: iterative DFS with three colours.
bool has_cycle(int n, const std::vector<Edge>& edges) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& e : edges) adj[e.from].push_back(e.to);
  std::map<std::string, int> colour;
  std::function<bool(const std::string&)> visit = [&](const std::string& v) {
    colour[v] = 1;
    for (const auto& w : adj[v]) {
      if (colour[w] == 1) return true;
      if (colour[w] == 0 && visit(w)) return true;
    }
    colour[v] = 2;
    return false;
  };
  for (int i = 0; i < n; ++i) {
    const auto v = "n" + std::to_string(i);
    if (colour[v] == 0 && visit(v)) return true;
  }
  return false;
}

}  // namespace

TEST(ValidateWorkflow, MinimalDoLambdaChainIsValid) {
  const auto res = validate_workflow(chain_def(), {"title"});
  EXPECT_TRUE(res.ok()) << (res.ok() ? "" : res.violations.front().message);
}

TEST(ValidateWorkflow, TwoNodeCycleIsReported) {
  auto def = lambda_graph(0, {{"A", "B"}, {"B", "A"}});
  def.blocks = {lambda_block("A", "concat"), lambda_block("B", "concat")};
  const auto res = validate_workflow(def, {});
  ASSERT_TRUE(has_code(res.violations, "cycle"));
  const auto it = std::find_if(res.violations.begin(), res.violations.end(),
                               [](const Violation& v) { return v.code == "cycle"; });
  EXPECT_EQ(it->message, "cycle: A,B");
  EXPECT_EQ(cyclic_blocks(def), (std::vector<std::string>{"A", "B"}));
}

TEST(ValidateWorkflow, MisspelledBindingIsUnresolved) {
  auto def = chain_def();
  std::get<DoBlock>(def.blocks[0].payload).task.elements[0].field = "abstrct";
  const auto res = validate_workflow(def, {"title", "abstract"});
  ASSERT_TRUE(has_code(res.violations, "unresolved-binding"));
  EXPECT_NE(res.violations.front().message.find("abstrct"), std::string::npos);
}

TEST(ValidateWorkflow, CollectsEveryViolation) {
  auto def = chain_def();
  std::get<DoBlock>(def.blocks[0].payload).votes_per_unit = 0;
  std::get<DoBlock>(def.blocks[0].payload).group = "nope";
  def.edges.push_back({"B", "missing"});
  const auto res = validate_workflow(def, {"title"});
  EXPECT_TRUE(has_code(res.violations, "votes"));
  EXPECT_TRUE(has_code(res.violations, "unknown-group"));
  EXPECT_TRUE(has_code(res.violations, "unknown-endpoint"));
}

TEST(ValidateWorkflow, MapFieldOutputsResolveBindings) {
  auto def = chain_def();
  def.blocks.insert(def.blocks.begin(), lambda_block("M", "map-field", {{"from", "title"}, {"to", "heading"}}));
  def.edges.insert(def.edges.begin(), Edge{"M", "A"});
  std::get<DoBlock>(def.blocks[1].payload).task.elements[0].field = "heading";
  EXPECT_TRUE(validate_workflow(def, {"title"}).ok());
}

TEST(ValidateWorkflow, RandomGraphsAreAcceptedIffAcyclic) {
  std::mt19937_64 rng(20260302);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    std::vector<Edge> edges;
    std::set<std::pair<int, int>> used;
    const int m = static_cast<int>(rng() % (n * 2 + 1));
    for (int k = 0; k < m; ++k) {
      const int a = static_cast<int>(rng() % n);
      const int b = static_cast<int>(rng() % n);
      if (a == b || !used.insert({a, b}).second) continue;
      edges.push_back({"n" + std::to_string(a), "n" + std::to_string(b)});
    }
    const auto def = lambda_graph(n, edges);
    const bool cyclic = has_cycle(n, edges);
    const auto res = validate_workflow(def, {});
    EXPECT_EQ(has_code(res.violations, "cycle"), cyclic) << "trial " << trial;
    EXPECT_EQ(res.ok(), !cyclic) << "trial " << trial;
    if (!cyclic) {
      const auto order = topological_order(def);
      ASSERT_EQ(order.size(), static_cast<std::size_t>(n));
      std::map<std::string, std::size_t> pos;
      for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
      for (const auto& e : edges) EXPECT_LT(pos[e.from], pos[e.to]);
    } else {
      EXPECT_THROW(topological_order(def), Error);
    }
  }
}

TEST(TopologicalOrder, Chain) {
  const auto def = lambda_graph(0, {{"A", "B"}, {"B", "C"}});
  auto d = def;
  d.blocks = {lambda_block("C", "concat"), lambda_block("B", "concat"), lambda_block("A", "concat")};
  EXPECT_EQ(topological_order(d), (std::vector<std::string>{"A", "B", "C"}));
}

TEST(TopologicalOrder, DiamondUsesIdTieRule) {
  WorkflowDef d = lambda_graph(0, {{"A", "B"}, {"A", "C"}, {"B", "D"}, {"C", "D"}});
  d.blocks = {lambda_block("D", "concat"), lambda_block("C", "concat"), lambda_block("B", "concat"),
              lambda_block("A", "concat")};
  EXPECT_EQ(topological_order(d), (std::vector<std::string>{"A", "B", "C", "D"}));
}

TEST(TopologicalOrder, SingleNode) {
  WorkflowDef d = lambda_graph(0, {});
  d.blocks = {lambda_block("only", "concat")};
  EXPECT_EQ(topological_order(d), (std::vector<std::string>{"only"}));
}

TEST(Factorial, ThreeByThreeBySixGivesFiftyFourBlocks) {
  FactorialDesign design{{{"dataset", {"d1", "d2", "d3"}},
                          {"size", {"short", "medium", "long"}},
                          {"condition", {"c1", "c2", "c3", "c4", "c5", "c6"}}}};
  const auto x = expand_factorial(design, fixture::simple_task(), "{dataset}/{size}/{condition}");
  EXPECT_EQ(x.blocks.size(), 54u);
  std::set<std::string> groups;
  for (const auto& g : x.groups) groups.insert(g.id);
  EXPECT_EQ(groups.size(), 54u);
}

TEST(Factorial, SingleLevelIsIdentity) {
  const auto x = expand_factorial(FactorialDesign{{{"only", {"x"}}}}, fixture::simple_task());
  ASSERT_EQ(x.blocks.size(), 1u);
  EXPECT_EQ(x.groups[0].id, "only=x");
}

TEST(Factorial, TwoByThreeEnumeratesTheProduct) {
  const auto x = expand_factorial(FactorialDesign{{{"a", {"1", "2"}}, {"b", {"x", "y", "z"}}}},
                                  fixture::simple_task());
  std::vector<std::string> ids;
  for (const auto& g : x.groups) ids.push_back(g.id);
  EXPECT_EQ(ids, (std::vector<std::string>{"a=1/b=x", "a=1/b=y", "a=1/b=z", "a=2/b=x", "a=2/b=y",
                                           "a=2/b=z"}));
  for (std::size_t i = 0; i < x.blocks.size(); ++i) EXPECT_EQ(x.blocks[i].as_do()->group, ids[i]);
}

TEST(Factorial, NoFactorsIsRejected) {
  try {
    expand_factorial(FactorialDesign{}, fixture::simple_task());
    FAIL() << "expected no-factors";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::no_factors);
  }
}

TEST(Factorial, SizeIsProductOfLevelCountsProperty) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    FactorialDesign design;
    std::size_t product = 1;
    const int factors = 1 + static_cast<int>(rng() % 4);
    for (int f = 0; f < factors; ++f) {
      Factor fac{"f" + std::to_string(f), {}};
      const int levels = 1 + static_cast<int>(rng() % 4);
      for (int l = 0; l < levels; ++l) fac.levels.push_back("l" + std::to_string(l));
      product *= static_cast<std::size_t>(levels);
      design.factors.push_back(fac);
    }
    const auto x = expand_factorial(design, fixture::simple_task());
    EXPECT_EQ(x.blocks.size(), product);
    std::set<std::string> ids;
    for (const auto& g : x.groups) ids.insert(g.id);
    EXPECT_EQ(ids.size(), product);
  }
}

TEST(Codec, RoundTripOfBuiltInWorkloads) {
  for (const auto& def : {orchestrator::highlight_study().def, orchestrator::crash_workload().def,
                          chain_def()}) {
    EXPECT_EQ(parse_workflow(serialize_workflow(def)), def) << def.id;
  }
}

TEST(Codec, RoundTripOfRandomGraphsProperty) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    std::vector<Edge> edges;
    for (int i = 1; i < n; ++i) {
      edges.push_back({"n" + std::to_string(rng() % i), "n" + std::to_string(i)});
    }
    auto def = lambda_graph(n, edges);
    def.version = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) {
      def.display["n" + std::to_string(i)] = Position{static_cast<double>(rng() % 500), 10.5 * i};
    }
    EXPECT_EQ(parse_workflow(serialize_workflow(def)), def);
  }
}

TEST(Codec, UnknownFieldsAreRejected) {
  Json j = to_json(chain_def());
  j["colour"] = "blue";
  try {
    workflow_from_json(j);
    FAIL() << "expected parse-error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::parse_error);
    EXPECT_NE(std::string(e.what()).find("colour"), std::string::npos);
  }
}

TEST(ValidateUnits, GoldMustBeALegalAnswer) {
  auto us = fixture::units(2, 1);
  us.back().gold->expected_answer = "maybe";
  const auto vs = validate_units(chain_def(), us);
  EXPECT_TRUE(has_code(vs, "illegal-gold"));
  EXPECT_TRUE(validate_units(chain_def(), fixture::units(2, 1)).empty());
}

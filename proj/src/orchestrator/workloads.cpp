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

#include "crowdctl/orchestrator/workloads.hpp"

#include <cstdio>

namespace crowdctl::orchestrator {

using workflow::BlockDef;
using workflow::ConditionKind;
using workflow::DataUnit;
using workflow::DoBlock;
using workflow::Edge;
using workflow::ExperimentGroup;
using workflow::LambdaBlock;
using workflow::TransformSpec;
using workflow::UiElement;
using workflow::UiKind;

namespace {

const std::vector<std::string> kSizes = {"short", "medium", "long"};

std::string unit_id(const std::string& size, int i, bool gold) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s-%s-%03d", gold ? "gold" : "doc", size.c_str(), i);
  return buf;
}

std::vector<DataUnit> make_units(const std::vector<std::string>& sizes, int plain, int gold) {
  std::vector<DataUnit> out;
  for (const auto& size : sizes) {
    for (int i = 0; i < plain + gold; ++i) {
      const bool is_gold = i >= plain;
      DataUnit u;
      u.id = unit_id(size, is_gold ? i - plain : i, is_gold);
      u.payload["title"] = "Article " + u.id;
      u.payload["abstract"] = "Abstract of " + u.id + " (" + size + ")";
      u.payload["size"] = size;
      if (is_gold) {
        // Alternate expected answers so gold items are not all "in".
        u.gold = workflow::Gold{(i % 2 == 0) ? "in" : "out", "screening criteria"};
      }
      out.push_back(std::move(u));
    }
  }
  return out;
}

BlockDef lambda(std::string id, std::string op, Json params) {
  return BlockDef{std::move(id), LambdaBlock{TransformSpec{std::move(op), std::move(params)}}};
}

BlockDef do_block(std::string id, const std::string& group, int votes) {
  DoBlock d;
  d.task = highlight_template();
  d.platform = "sim";
  d.reward_minor = 10;
  d.votes_per_unit = votes;
  d.group = group;
  return BlockDef{std::move(id), d};
}

}  // namespace

workflow::TaskTemplate highlight_template() {
  workflow::TaskTemplate t;
  t.title = "Screen articles for a literature review";
  t.instructions =
      "Read the title and abstract. Highlight the passages that support your decision, then say "
      "whether the article meets the inclusion criteria.";
  UiElement title;
  title.kind = UiKind::text;
  title.field = "title";
  UiElement abstract;
  abstract.kind = UiKind::highlightable_text;
  abstract.field = "abstract";
  UiElement answer;
  answer.kind = UiKind::single_choice;
  answer.literal = "Does the article meet the inclusion criteria?";
  answer.options = {"in", "out"};
  answer.required = true;
  t.elements = {title, abstract, answer};
  t.paging = workflow::Paging{3, 1, true, 6};
  return t;
}

Workload highlight_study(int plain_per_size, int gold_per_size, int votes_per_unit) {
  Workload w;
  auto& def = w.def;
  def.id = "highlight-study";
  def.name = "Highlighting support in article screening";
  const std::vector<std::pair<std::string, ConditionKind>> conditions = {
      {"baseline", ConditionKind::base},         {"bad-0", ConditionKind::bad_support},
      {"bad-33", ConditionKind::bad_support},    {"good-66", ConditionKind::good_support},
      {"good-100", ConditionKind::good_support}, {"aggregated", ConditionKind::support},
  };
  const std::vector<std::string> colors = {"#4c78a8", "#f58518", "#e45756",
                                           "#72b7b2", "#54a24b", "#b279a2"};
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    def.groups.push_back(
        ExperimentGroup{conditions[i].first, conditions[i].first, colors[i], conditions[i].second});
  }
  for (const auto& size : kSizes) {
    def.blocks.push_back(lambda("split:" + size, "partition", Json{{"field", "size"}, {"key", size}}));
  }
  for (const auto& size : kSizes) {
    for (const auto& [cond, kind] : conditions) {
      const std::string id = "do:" + cond + ":" + size;
      def.blocks.push_back(do_block(id, cond, votes_per_unit));
      def.edges.push_back(Edge{"split:" + size, id});
    }
  }
  for (const auto& size : kSizes) {
    const std::string agg = "vote:" + size;
    def.blocks.push_back(lambda(agg, "aggregate-majority", Json{{"field", "answer"}}));
    for (const auto& [cond, kind] : conditions) def.edges.push_back(Edge{"do:" + cond + ":" + size, agg});
    def.edges.push_back(Edge{agg, "results"});
  }
  def.blocks.push_back(lambda("results", "concat", Json::object()));
  w.units = make_units(kSizes, plain_per_size, gold_per_size);
  return w;
}

Workload crash_workload(int plain_per_size, int gold_per_size, int votes_per_unit) {
  Workload w;
  auto& def = w.def;
  def.id = "crash-ten";
  def.name = "Ten-block crash workload";
  def.groups = {ExperimentGroup{"A", "condition A", "#4c78a8", ConditionKind::base},
                ExperimentGroup{"B", "condition B", "#f58518", ConditionKind::support}};
  const std::vector<std::string> sizes = {"short", "long"};
  for (const auto& size : sizes) {
    def.blocks.push_back(lambda("split:" + size, "partition", Json{{"field", "size"}, {"key", size}}));
    for (const std::string g : {"A", "B"}) {
      const std::string id = "do:" + g + ":" + size;
      def.blocks.push_back(do_block(id, g, votes_per_unit));
      def.edges.push_back(Edge{"split:" + size, id});
    }
    const std::string agg = "vote:" + size;
    def.blocks.push_back(lambda(agg, "aggregate-majority", Json::object()));
    def.edges.push_back(Edge{"do:A:" + size, agg});
    def.edges.push_back(Edge{"do:B:" + size, agg});
    def.edges.push_back(Edge{agg, "all"});
  }
  def.blocks.push_back(lambda("all", "concat", Json::object()));
  def.blocks.push_back(lambda("clear", "filter", Json{{"field", "tie"}, {"value", false}}));
  def.edges.push_back(Edge{"all", "clear"});
  w.units = make_units(sizes, plain_per_size, gold_per_size);
  return w;
}

platform::PopulationProfile two_country_profile(double heavy_per_hour, double ratio) {
  platform::PopulationProfile p = platform::default_profile();
  p.countries = {
      platform::CountryProfile{"GB", heavy_per_hour, 0, platform::day_only_diurnal()},
      platform::CountryProfile{"NZ", heavy_per_hour / ratio, 12, platform::day_only_diurnal()},
  };
  return p;
}

}  // namespace crowdctl::orchestrator

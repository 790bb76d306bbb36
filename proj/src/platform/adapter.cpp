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

#include "crowdctl/platform/adapter.hpp"

#include "crowdctl/common/digest.hpp"
#include "crowdctl/common/error.hpp"

namespace crowdctl::platform {

Json to_json(const TaskHandle& h) {
  return Json{{"adapter", h.adapter_id},
              {"taskId", h.platform_task_id},
              {"createdAt", format_utc(h.created_at)}};
}

TaskHandle task_handle_from_json(const Json& j) {
  ObjectReader r(j, "handle");
  TaskHandle h{r.required<std::string>("adapter"), r.required<std::string>("taskId"),
               parse_utc(r.required<std::string>("createdAt"))};
  r.finish();
  return h;
}

std::set<workflow::UiKind> all_ui_kinds() {
  using workflow::UiKind;
  return {UiKind::text,         UiKind::image,           UiKind::text_input,
          UiKind::single_choice, UiKind::multi_choice,   UiKind::highlightable_text,
          UiKind::highlightable_image};
}

void AdapterRegistry::add(std::shared_ptr<Adapter> adapter) {
  std::lock_guard lock(mu_);
  adapters_[adapter->id()] = std::move(adapter);
}

std::shared_ptr<Adapter> AdapterRegistry::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = adapters_.find(id);
  if (it == adapters_.end()) throw Error(errc::not_found, "unknown adapter '" + id + "'");
  return it->second;
}

bool AdapterRegistry::contains(const std::string& id) const {
  std::lock_guard lock(mu_);
  return adapters_.contains(id);
}

std::string hook_token(const std::string& run_secret, const std::string& run_id) {
  return hmac_sha256_hex(run_secret, run_id);
}

namespace {

Json fragment(const workflow::UiElement& e, std::size_t index) {
  using workflow::UiKind;
  Json f{{"index", index}, {"required", e.required}};
  if (e.field) f["bind"] = Json{{"field", *e.field}};
  if (e.literal) f["bind"] = Json{{"literal", *e.literal}};
  switch (e.kind) {
    case UiKind::text:
      f["type"] = "display";
      f["media"] = "text";
      break;
    case UiKind::image:
      f["type"] = "display";
      f["media"] = "image";
      break;
    case UiKind::text_input:
      f["type"] = "input";
      f["input"] = "text";
      break;
    case UiKind::single_choice:
      f["type"] = "choice";
      f["multiple"] = false;
      f["options"] = e.options;
      break;
    case UiKind::multi_choice:
      f["type"] = "choice";
      f["multiple"] = true;
      f["options"] = e.options;
      break;
    case UiKind::highlightable_text:
      f["type"] = "display";
      f["media"] = "text";
      f["selectableSpans"] = true;
      break;
    case UiKind::highlightable_image:
      f["type"] = "display";
      f["media"] = "image";
      f["selectableRegions"] = true;
      break;
  }
  return f;
}

}  // namespace

Json translate_template(const workflow::TaskTemplate& t, const Adapter& adapter,
                        const EligibilityHook& hook) {
  const auto caps = adapter.capabilities();
  Json fragments = Json::array();
  for (std::size_t i = 0; i < t.elements.size(); ++i) {
    const auto& e = t.elements[i];
    if (!caps.contains(e.kind)) {
      throw Error(errc::unsupported_element, "adapter '" + adapter.id() + "' cannot render element " +
                                                 std::to_string(i) + " (" +
                                                 std::string(to_string(e.kind)) + ")");
    }
    fragments.push_back(fragment(e, i));
  }
  return Json{{"adapter", adapter.id()},
              {"title", t.title},
              {"instructions", t.instructions},
              {"fragments", fragments},
              {"paging",
               {{"unitsPerPage", t.paging.units_per_page},
                {"goldPerPage", t.paging.gold_per_page},
                {"firstPageAllGold", t.paging.first_page_all_gold},
                {"maxPages", t.paging.max_pages}}},
              {"eligibilityHook", {{"url", hook.url}, {"token", hook.token}}}};
}

}  // namespace crowdctl::platform

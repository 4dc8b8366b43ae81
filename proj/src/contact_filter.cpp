/*
 * Copyright 2026 The Tagrank Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "tagrank/contact_filter.hpp"

#include "tagrank/error.hpp"

namespace tagrank {

ContactSet contact_set(const ContactGraph& graph, const std::string& user, int level,
                       bool include_self) {
  if (level != 1 && level != 2) {
    throw ConfigError("contact level must be 1 or 2, got " + std::to_string(level));
  }
  ContactSet result;
  result.level = level;
  result.source_user = user;
  const auto& direct = graph.contacts_of(user);
  result.members = direct;
  if (level == 2) {
    for (const auto& contact : direct) {
      const auto& second = graph.contacts_of(contact);
      result.members.insert(second.begin(), second.end());
    }
  }
  if (include_self) {
    result.members.insert(user);
  } else {
    result.members.erase(user);
  }
  return result;
}

std::vector<Image> filter_by_contacts(const std::vector<Image>& images,
                                      const ContactSet& contacts) {
  std::vector<Image> kept;
  for (const auto& image : images) {
    if (contacts.contains(image.owner)) {
      kept.push_back(image);
    }
  }
  return kept;
}

}  // namespace tagrank

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

#pragma once

#include <set>
#include <string>
#include <vector>

#include "tagrank/corpus.hpp"

namespace tagrank {

struct ContactSet {
  std::set<std::string> members;
  int level = 1;
  std::string source_user;

  bool contains(const std::string& user) const { return members.count(user) > 0; }
};

/// Level 1: direct out-contacts of `user`. Level 2: those plus their
/// out-contacts. The source user is removed unless include_self is set,
/// in which case it is added. Unknown users yield an empty set.
/// Throws ConfigError for a level other than 1 or 2.
ContactSet contact_set(const ContactGraph& graph, const std::string& user, int level,
                       bool include_self = false);

/// Order-preserving subsequence of images owned by members of the set.
std::vector<Image> filter_by_contacts(const std::vector<Image>& images,
                                      const ContactSet& contacts);

}  // namespace tagrank

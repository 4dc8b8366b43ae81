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

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tagrank {

/// One annotated image: owner plus deduplicated tag and group sets.
/// Tags and groups keep their first-seen order so downstream index
/// assignment is reproducible.
struct Image {
  std::string id;
  std::string owner;
  std::vector<std::string> tags;
  std::vector<std::string> groups;

  bool has_tag(std::string_view tag) const;
  friend bool operator==(const Image&, const Image&) = default;
};

class Corpus {
 public:
  Corpus() = default;

  /// Throws InputError on an empty or duplicate id.
  void add(Image image);

  const std::vector<Image>& images() const { return images_; }
  std::size_t size() const { return images_.size(); }
  bool empty() const { return images_.empty(); }

  /// Indices into images(), in ingestion order. Empty span for unknown users.
  const std::vector<std::size_t>& owned_by(const std::string& user) const;
  const std::map<std::string, std::vector<std::size_t>>& by_owner() const {
    return by_owner_;
  }
  bool has_user(const std::string& user) const { return by_owner_.count(user) > 0; }
  const Image* find(const std::string& id) const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.images_ == b.images_;
  }

 private:
  std::vector<Image> images_;
  std::map<std::string, std::vector<std::size_t>> by_owner_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Dense bidirectional string <-> index map. Indices are assigned in
/// insertion order.
class IndexMap {
 public:
  std::size_t add(const std::string& name);
  std::optional<std::size_t> index_of(std::string_view name) const;
  const std::string& name_of(std::size_t index) const { return names_.at(index); }
  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::vector<std::string>& names() const { return names_; }

  friend bool operator==(const IndexMap& a, const IndexMap& b) {
    return a.names_ == b.names_;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Vocabulary {
  IndexMap tags;
  IndexMap groups;
  IndexMap users;

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

/// Tag -> positive count (or weight).
using TagHistogram = std::map<std::string, double>;

/// Directed user -> contacts adjacency.
struct ContactGraph {
  std::map<std::string, std::set<std::string>> edges;

  const std::set<std::string>& contacts_of(const std::string& user) const;
};

enum class Label { relevant, not_relevant, undecided };

/// Image id -> label, plus the file order of ids (the plain-search order).
struct RelevanceLabels {
  std::map<std::string, Label> labels;
  std::vector<std::string> order;

  std::optional<Label> find(const std::string& id) const;
  std::size_t count(Label label) const;
};

/// Counters for recoverable problems seen while loading.
struct LoadReport {
  std::size_t duplicate_tags = 0;
  std::size_t empty_annotations = 0;
  std::size_t self_loops = 0;
  std::size_t warnings() const { return duplicate_tags + empty_annotations + self_loops; }
};

/// Tags are trimmed and lowercased; groups are trimmed only.
std::string normalize_tag(std::string_view raw);
std::string trim(std::string_view raw);

Corpus load_corpus(std::istream& in, LoadReport* report = nullptr);
Corpus load_corpus(const std::filesystem::path& path, LoadReport* report = nullptr);
void save_corpus(const Corpus& corpus, std::ostream& out);

/// First-occurrence index assignment over images, then tags, then groups.
Vocabulary build_vocabulary(const Corpus& corpus);

/// Tags co-occurring with query_tag on the user's own images, query_tag
/// included. Empty if the user never used query_tag.
TagHistogram related_tags(const Corpus& corpus, const std::string& user,
                          const std::string& query_tag);
TagHistogram user_tag_histogram(const Corpus& corpus, const std::string& user);

ContactGraph load_contacts(std::istream& in, LoadReport* report = nullptr);
ContactGraph load_contacts(const std::filesystem::path& path, LoadReport* report = nullptr);

RelevanceLabels load_labels(std::istream& in);
RelevanceLabels load_labels(const std::filesystem::path& path);
/// Throws InputError naming the first id that is not in the corpus.
void check_labels_against(const RelevanceLabels& labels, const Corpus& corpus);

const char* label_name(Label label);
Label parse_label(std::string_view text);

struct UserProfile {
  std::string user;
  TagHistogram tag_counts;
};

UserProfile load_profile(std::istream& in);
UserProfile load_profile(const std::filesystem::path& path);

}  // namespace tagrank

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

#include "tagrank/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "tagrank/error.hpp"
#include "tagrank/io.hpp"

namespace tagrank {

namespace {

const std::vector<std::size_t> kNoImages;
const std::set<std::string> kNoContacts;

std::string at_line(std::size_t line_no) {
  return "line " + std::to_string(line_no) + ": ";
}

// Appends normalized, non-empty, previously unseen entries.
void add_annotations(const nlohmann::json& array, bool lowercase,
                     std::vector<std::string>& out, LoadReport& report,
                     std::size_t line_no, const char* field) {
  if (!array.is_array()) {
    throw InputError(at_line(line_no) + "'" + field + "' must be an array");
  }
  for (const auto& item : array) {
    if (!item.is_string()) {
      throw InputError(at_line(line_no) + "'" + field + "' entries must be strings");
    }
    const auto raw = item.get<std::string>();
    auto value = lowercase ? normalize_tag(raw) : trim(raw);
    if (value.empty()) {
      ++report.empty_annotations;
      continue;
    }
    if (std::find(out.begin(), out.end(), value) != out.end()) {
      ++report.duplicate_tags;
      continue;
    }
    out.push_back(std::move(value));
  }
}

}  // namespace

bool Image::has_tag(std::string_view tag) const {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

void Corpus::add(Image image) {
  if (image.id.empty()) {
    throw InputError("image id must be nonempty");
  }
  if (by_id_.count(image.id) > 0) {
    throw InputError("duplicate image id \"" + image.id + "\"");
  }
  const auto index = images_.size();
  by_id_.emplace(image.id, index);
  by_owner_[image.owner].push_back(index);
  images_.push_back(std::move(image));
}

const std::vector<std::size_t>& Corpus::owned_by(const std::string& user) const {
  const auto it = by_owner_.find(user);
  return it == by_owner_.end() ? kNoImages : it->second;
}

const Image* Corpus::find(const std::string& id) const {
  const auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &images_[it->second];
}

std::size_t IndexMap::add(const std::string& name) {
  const auto [it, inserted] = index_.emplace(name, names_.size());
  if (inserted) {
    names_.push_back(name);
  }
  return it->second;
}

std::optional<std::size_t> IndexMap::index_of(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    return std::nullopt;
  }
  return it->second;
}

const std::set<std::string>& ContactGraph::contacts_of(const std::string& user) const {
  const auto it = edges.find(user);
  return it == edges.end() ? kNoContacts : it->second;
}

std::optional<Label> RelevanceLabels::find(const std::string& id) const {
  const auto it = labels.find(id);
  if (it == labels.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::size_t RelevanceLabels::count(Label label) const {
  return static_cast<std::size_t>(std::count_if(
      labels.begin(), labels.end(), [label](const auto& kv) { return kv.second == label; }));
}

std::string trim(std::string_view raw) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!raw.empty() && is_space(raw.front())) raw.remove_prefix(1);
  while (!raw.empty() && is_space(raw.back())) raw.remove_suffix(1);
  return std::string(raw);
}

std::string normalize_tag(std::string_view raw) {
  auto out = trim(raw);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

Corpus load_corpus(std::istream& in, LoadReport* report) {
  LoadReport local;
  auto& rep = report != nullptr ? *report : local;
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(at_line(line_no) + "malformed record: " + e.what());
    }
    if (!record.is_object() || !record.contains("id") || !record.contains("owner") ||
        !record["id"].is_string() || !record["owner"].is_string()) {
      throw InputError(at_line(line_no) + "record needs string fields 'id' and 'owner'");
    }
    Image image;
    image.id = record["id"].get<std::string>();
    image.owner = trim(record["owner"].get<std::string>());
    if (image.id.empty() || image.owner.empty()) {
      throw InputError(at_line(line_no) + "empty id or owner");
    }
    if (record.contains("tags")) {
      add_annotations(record["tags"], true, image.tags, rep, line_no, "tags");
    }
    if (record.contains("groups")) {
      add_annotations(record["groups"], false, image.groups, rep, line_no, "groups");
    }
    try {
      corpus.add(std::move(image));
    } catch (const InputError& e) {
      throw InputError(at_line(line_no) + e.what());
    }
  }
  if (in.bad()) {
    throw InputError("read error in corpus stream");
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, LoadReport* report) {
  auto in = io::open_input(path);
  try {
    return load_corpus(in, report);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void save_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& image : corpus.images()) {
    nlohmann::ordered_json record;
    record["id"] = image.id;
    record["owner"] = image.owner;
    record["tags"] = image.tags;
    record["groups"] = image.groups;
    out << record.dump() << '\n';
  }
}

Vocabulary build_vocabulary(const Corpus& corpus) {
  Vocabulary vocab;
  for (const auto& image : corpus.images()) {
    vocab.users.add(image.owner);
    for (const auto& tag : image.tags) vocab.tags.add(tag);
    for (const auto& group : image.groups) vocab.groups.add(group);
  }
  return vocab;
}

TagHistogram related_tags(const Corpus& corpus, const std::string& user,
                          const std::string& query_tag) {
  if (!corpus.has_user(user)) {
    throw InputError("unknown user \"" + user + "\"");
  }
  TagHistogram hist;
  for (const auto index : corpus.owned_by(user)) {
    const auto& image = corpus.images()[index];
    if (!image.has_tag(query_tag)) {
      continue;
    }
    for (const auto& tag : image.tags) {
      hist[tag] += 1.0;
    }
  }
  return hist;
}

TagHistogram user_tag_histogram(const Corpus& corpus, const std::string& user) {
  if (!corpus.has_user(user)) {
    throw InputError("unknown user \"" + user + "\"");
  }
  TagHistogram hist;
  for (const auto index : corpus.owned_by(user)) {
    for (const auto& tag : corpus.images()[index].tags) {
      hist[tag] += 1.0;
    }
  }
  return hist;
}

ContactGraph load_contacts(std::istream& in, LoadReport* report) {
  LoadReport local;
  auto& rep = report != nullptr ? *report : local;
  ContactGraph graph;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto fields = io::split_csv_line(line);
    if (fields.size() != 2) {
      throw InputError(at_line(line_no) + "expected 'user,contact'");
    }
    const auto user = trim(fields[0]);
    const auto contact = trim(fields[1]);
    if (!header_seen) {
      header_seen = true;
      if (user == "user" && contact == "contact") {
        continue;
      }
      throw InputError(at_line(line_no) + "missing header 'user,contact'");
    }
    if (user.empty() || contact.empty()) {
      throw InputError(at_line(line_no) + "empty user or contact");
    }
    if (user == contact) {
      ++rep.self_loops;
      continue;
    }
    graph.edges[user].insert(contact);
  }
  return graph;
}

ContactGraph load_contacts(const std::filesystem::path& path, LoadReport* report) {
  auto in = io::open_input(path);
  try {
    return load_contacts(in, report);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

const char* label_name(Label label) {
  switch (label) {
    case Label::relevant:
      return "relevant";
    case Label::not_relevant:
      return "not_relevant";
    case Label::undecided:
      return "undecided";
  }
  return "undecided";
}

Label parse_label(std::string_view text) {
  if (text == "relevant") return Label::relevant;
  if (text == "not_relevant") return Label::not_relevant;
  if (text == "undecided") return Label::undecided;
  throw InputError("unknown label \"" + std::string(text) + "\"");
}

RelevanceLabels load_labels(std::istream& in) {
  RelevanceLabels labels;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto fields = io::split_csv_line(line);
    if (fields.size() != 2) {
      throw InputError(at_line(line_no) + "expected 'image_id,label'");
    }
    const auto id = trim(fields[0]);
    const auto value = trim(fields[1]);
    if (!header_seen) {
      header_seen = true;
      if (id == "image_id" && value == "label") {
        continue;
      }
      throw InputError(at_line(line_no) + "missing header 'image_id,label'");
    }
    Label label;
    try {
      label = parse_label(value);
    } catch (const InputError& e) {
      throw InputError(at_line(line_no) + e.what());
    }
    if (!labels.labels.emplace(id, label).second) {
      throw InputError(at_line(line_no) + "duplicate label for \"" + id + "\"");
    }
    labels.order.push_back(id);
  }
  return labels;
}

RelevanceLabels load_labels(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  try {
    return load_labels(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void check_labels_against(const RelevanceLabels& labels, const Corpus& corpus) {
  for (const auto& id : labels.order) {
    if (corpus.find(id) == nullptr) {
      throw InputError("labeled image \"" + id + "\" is not in the corpus");
    }
  }
}

UserProfile load_profile(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("malformed profile: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("user") || !doc["user"].is_string() ||
      !doc.contains("tag_counts") || !doc["tag_counts"].is_object()) {
    throw InputError("profile needs 'user' and an object 'tag_counts'");
  }
  UserProfile profile;
  profile.user = doc["user"].get<std::string>();
  for (const auto& [raw, count] : doc["tag_counts"].items()) {
    if (!count.is_number() || count.get<double>() <= 0.0) {
      throw InputError("profile count for \"" + raw + "\" must be a positive number");
    }
    const auto tag = normalize_tag(raw);
    if (!tag.empty()) {
      profile.tag_counts[tag] += count.get<double>();
    }
  }
  return profile;
}

UserProfile load_profile(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  try {
    return load_profile(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace tagrank

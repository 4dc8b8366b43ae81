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

#include "tagrank/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "tagrank/error.hpp"
#include "tagrank/io.hpp"
#include "tagrank/model_json.hpp"

namespace tagrank {

namespace {

constexpr std::size_t kRetryCap = 1000;

std::string padded(const char* prefix, std::size_t index, std::size_t count) {
  const auto width = std::to_string(count > 0 ? count - 1 : 0).size();
  auto digits = std::to_string(index);
  return prefix + std::string(width - std::min(width, digits.size()), '0') + digits;
}

double unit_interval(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(unit_interval(rng) * static_cast<double>(n));
}

// Draws an index from column `col` of `m` by inverse CDF.
std::size_t sample_column(const Matrix& m, std::size_t col, std::mt19937_64& rng) {
  const double target = unit_interval(rng) * m.column_sum(col);
  double cumulative = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    cumulative += m(r, col);
    if (target < cumulative) return r;
  }
  // Rounding left target at the total; take the last row with mass.
  for (std::size_t r = m.rows(); r-- > 0;) {
    if (m(r, col) > 0.0) return r;
  }
  return m.rows() - 1;
}

// Blend of a block-diagonal assignment (item j belongs to topic j*k/size)
// and the uniform distribution.
Matrix blocked_topics(std::size_t size, std::size_t k, double separation) {
  Matrix m(size, k);
  std::vector<std::size_t> block_size(k, 0);
  for (std::size_t j = 0; j < size; ++j) ++block_size[j * k / size];
  for (std::size_t j = 0; j < size; ++j) {
    const auto owner = j * k / size;
    for (std::size_t z = 0; z < k; ++z) {
      const double block = z == owner ? 1.0 / static_cast<double>(block_size[z]) : 0.0;
      m(j, z) = separation * block + (1.0 - separation) / static_cast<double>(size);
    }
  }
  return m;
}

std::vector<std::size_t> draw_slots(std::size_t count, const Matrix& p_x_given_z,
                                    const Matrix& p_z_given_u, std::size_t user,
                                    std::mt19937_64& rng, std::vector<std::size_t>& items) {
  std::vector<std::size_t> topics;
  for (std::size_t slot = 0; slot < count; ++slot) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < kRetryCap && !placed; ++attempt) {
      const auto z = sample_column(p_z_given_u, user, rng);
      const auto x = sample_column(p_x_given_z, z, rng);
      if (std::find(items.begin(), items.end(), x) == items.end()) {
        items.push_back(x);
        topics.push_back(z);
        placed = true;
      }
    }
    if (!placed) {
      throw ConfigError("could not draw a distinct annotation within the retry cap");
    }
  }
  return topics;
}

}  // namespace

void SynthSpec::validate() const {
  if (k == 0 || users == 0 || images == 0 || vocab_size_tags == 0) {
    throw ConfigError("synthetic spec counts must be at least 1");
  }
  if (tags_min == 0 || tags_min > tags_max) {
    throw ConfigError("tags per image must be a nonempty range starting at 1 or more");
  }
  if (groups_min > groups_max) {
    throw ConfigError("groups per image range is inverted");
  }
  if (!(topic_separation >= 0.0 && topic_separation <= 1.0)) {
    throw ConfigError("topic separation must be in [0, 1]");
  }
  if (!(dominant_weight >= 0.0 && dominant_weight <= 1.0)) {
    throw ConfigError("dominant weight must be in [0, 1]");
  }
  if (tags_max > vocab_size_tags) {
    throw ConfigError("tags per image exceeds the tag vocabulary");
  }
  if (vocab_size_tags < k) {
    throw ConfigError("need at least one tag per topic");
  }
  if (groups_max > 0) {
    if (vocab_size_groups == 0 || groups_max > vocab_size_groups) {
      throw ConfigError("groups per image exceeds the group vocabulary");
    }
    if (vocab_size_groups < k) {
      throw ConfigError("need at least one group per topic");
    }
  }
}

std::optional<std::size_t> PlantedTruth::majority_topic(std::size_t image) const {
  std::vector<std::size_t> votes(model.k(), 0);
  bool any = false;
  for (const auto z : tag_topics.at(image)) {
    ++votes[z];
    any = true;
  }
  if (image < group_topics.size()) {
    for (const auto z : group_topics[image]) {
      ++votes[z];
      any = true;
    }
  }
  if (!any) return std::nullopt;
  // A tie for the top count has no majority topic.
  const auto best = std::max_element(votes.begin(), votes.end());
  if (std::count(votes.begin(), votes.end(), *best) > 1) return std::nullopt;
  return static_cast<std::size_t>(best - votes.begin());
}

std::size_t PlantedTruth::dominant_topic(std::size_t user) const {
  const auto col = model.p_z_given_u.cols();
  if (user >= col) throw InputError("user index out of range");
  std::size_t best = 0;
  for (std::size_t z = 1; z < model.k(); ++z) {
    if (model.p_z_given_u(z, user) > model.p_z_given_u(best, user)) best = z;
  }
  return best;
}

SynthResult generate(const SynthSpec& spec) {
  spec.validate();
  const auto k = spec.k;
  const bool with_groups = spec.groups_max > 0;

  PlantedTruth truth;
  auto& model = truth.model;
  model.config.k = k;
  model.config.use_groups = with_groups;
  model.config.seed = spec.seed;
  for (std::size_t t = 0; t < spec.vocab_size_tags; ++t) {
    model.vocab.tags.add(padded("tag", t, spec.vocab_size_tags));
  }
  if (with_groups) {
    for (std::size_t g = 0; g < spec.vocab_size_groups; ++g) {
      model.vocab.groups.add(padded("group", g, spec.vocab_size_groups));
    }
  }
  for (std::size_t u = 0; u < spec.users; ++u) {
    model.vocab.users.add(padded("user", u, spec.users));
  }
  model.p_t_given_z = blocked_topics(spec.vocab_size_tags, k, spec.topic_separation);
  if (with_groups) {
    model.p_g_given_z = blocked_topics(spec.vocab_size_groups, k, spec.topic_separation);
  }
  model.p_z_given_u = Matrix(k, spec.users);
  for (std::size_t u = 0; u < spec.users; ++u) {
    for (std::size_t z = 0; z < k; ++z) {
      if (k == 1) {
        model.p_z_given_u(z, u) = 1.0;
      } else if (z == u % k) {
        model.p_z_given_u(z, u) = spec.dominant_weight;
      } else {
        model.p_z_given_u(z, u) = (1.0 - spec.dominant_weight) / static_cast<double>(k - 1);
      }
    }
  }
  model.p_u.assign(spec.users, 1.0 / static_cast<double>(spec.users));

  std::mt19937_64 rng(spec.seed);
  SynthResult result;
  for (std::size_t i = 0; i < spec.images; ++i) {
    const auto user = uniform_index(rng, spec.users);
    const auto n_tags = spec.tags_min + uniform_index(rng, spec.tags_max - spec.tags_min + 1);
    const auto n_groups =
        spec.groups_min + uniform_index(rng, spec.groups_max - spec.groups_min + 1);
    Image image;
    image.id = padded("img", i, spec.images);
    image.owner = model.vocab.users.name_of(user);
    std::vector<std::size_t> tag_items;
    truth.tag_topics.push_back(
        draw_slots(n_tags, model.p_t_given_z, model.p_z_given_u, user, rng, tag_items));
    for (const auto t : tag_items) image.tags.push_back(model.vocab.tags.name_of(t));
    std::vector<std::size_t> group_items;
    if (with_groups) {
      truth.group_topics.push_back(
          draw_slots(n_groups, model.p_g_given_z, model.p_z_given_u, user, rng, group_items));
    } else {
      truth.group_topics.emplace_back();
    }
    for (const auto g : group_items) image.groups.push_back(model.vocab.groups.name_of(g));
    result.corpus.add(std::move(image));
  }
  result.truth = std::move(truth);
  return result;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InvariantError("distribution lengths differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return 0.5 * sum;
}

TopicMatch match_topics(const PlantedTruth& planted, const TopicModel& learned) {
  const auto k = planted.model.k();
  if (learned.k() != k) {
    throw ConfigError("planted and learned topic counts differ");
  }
  // Union of tag names: planted order first, then learned-only tags.
  IndexMap names = planted.model.vocab.tags;
  for (const auto& tag : learned.vocab.tags.names()) names.add(tag);
  const auto column = [&names](const TopicModel& m, std::size_t z) {
    std::vector<double> col(names.size(), 0.0);
    for (std::size_t t = 0; t < m.vocab.tags.size(); ++t) {
      col[*names.index_of(m.vocab.tags.name_of(t))] = m.p_t_given_z(t, z);
    }
    return col;
  };
  Matrix cost(k, k);
  for (std::size_t a = 0; a < k; ++a) {
    const auto pa = column(planted.model, a);
    for (std::size_t b = 0; b < k; ++b) cost(a, b) = total_variation(pa, column(learned, b));
  }

  TopicMatch match;
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  if (k <= 8) {
    double best = std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (std::size_t a = 0; a < k; ++a) total += cost(a, perm[a]);
      if (total < best) {
        best = total;
        match.permutation = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    match.permutation.assign(k, k);
    std::vector<bool> used_planted(k, false), used_learned(k, false);
    for (std::size_t step = 0; step < k; ++step) {
      std::size_t best_a = k, best_b = k;
      for (std::size_t a = 0; a < k; ++a) {
        if (used_planted[a]) continue;
        for (std::size_t b = 0; b < k; ++b) {
          if (used_learned[b]) continue;
          if (best_a == k || cost(a, b) < cost(best_a, best_b)) {
            best_a = a;
            best_b = b;
          }
        }
      }
      used_planted[best_a] = used_learned[best_b] = true;
      match.permutation[best_a] = best_b;
    }
  }
  for (std::size_t a = 0; a < k; ++a) match.distances.push_back(cost(a, match.permutation[a]));
  return match;
}

void save_truth(const PlantedTruth& truth, const Corpus& corpus, std::ostream& out) {
  auto doc = model_to_json(truth.model);
  doc["planted"] = true;
  auto assignments = nlohmann::json::array();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    assignments.push_back({{"image", corpus.images()[i].id},
                           {"tag_topics", truth.tag_topics.at(i)},
                           {"group_topics", truth.group_topics.at(i)}});
  }
  doc["assignments"] = std::move(assignments);
  out << doc.dump(1) << '\n';
}

void save_truth(const PlantedTruth& truth, const Corpus& corpus,
                const std::filesystem::path& path) {
  io::write_file_atomic(path, [&](std::ostream& out) { save_truth(truth, corpus, out); });
}

PlantedTruth load_truth(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("malformed truth file: ") + e.what());
  }
  if (!doc.value("planted", false)) {
    throw InputError("truth file lacks the 'planted: true' marker");
  }
  PlantedTruth truth;
  truth.model = model_from_json(doc);
  try {
    for (const auto& a : doc.at("assignments")) {
      truth.tag_topics.push_back(a.at("tag_topics").get<std::vector<std::size_t>>());
      truth.group_topics.push_back(a.at("group_topics").get<std::vector<std::size_t>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed truth assignments: ") + e.what());
  }
  return truth;
}

PlantedTruth load_truth(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  try {
    return load_truth(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace tagrank

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

#include "tagrank/personalization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "tagrank/error.hpp"
#include "tagrank/io.hpp"

namespace tagrank {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_or_neg_inf(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

}  // namespace

const char* profile_mode_name(ProfileMode mode) {
  return mode == ProfileMode::all_tags ? "all_tags" : "related_tags";
}

std::vector<double> topic_prior(const TopicModel& model) {
  std::vector<double> prior(model.k(), 0.0);
  for (std::size_t u = 0; u < model.p_u.size(); ++u) {
    for (std::size_t z = 0; z < model.k(); ++z) {
      prior[z] += model.p_z_given_u(z, u) * model.p_u[u];
    }
  }
  return prior;
}

UserTopicVector user_topic_vector(const TopicModel& model, const TagHistogram& histogram) {
  const auto k = model.k();
  const auto prior = topic_prior(model);
  UserTopicVector result;
  result.weights.assign(k, 0.0);
  std::vector<double> p_z_given_t(k);
  bool any_known = false;
  for (const auto& [tag, count] : histogram) {
    const auto t = model.vocab.tags.index_of(tag);
    if (!t || !(count > 0.0)) {
      ++result.dropped_tags;
      continue;
    }
    double norm = 0.0;
    for (std::size_t z = 0; z < k; ++z) {
      p_z_given_t[z] = model.p_t_given_z(*t, z) * prior[z];
      norm += p_z_given_t[z];
    }
    if (!(norm > 0.0)) {
      ++result.dropped_tags;
      continue;
    }
    any_known = true;
    for (std::size_t z = 0; z < k; ++z) {
      result.weights[z] += count * (p_z_given_t[z] / norm);
    }
  }
  if (!any_known) {
    throw ColdUserError(histogram.empty()
                            ? "user profile is empty"
                            : "no profile tag is known to the model");
  }
  double total = 0.0;
  for (const auto w : result.weights) total += w;
  for (auto& w : result.weights) w /= total;
  return result;
}

double ImageScore::score() const { return std::exp(log_score); }

ImageScore score_image(const TopicModel& model, const Image& image,
                       const UserTopicVector& user_vec) {
  const auto k = model.k();
  if (user_vec.weights.size() != k) {
    throw InvariantError("user topic vector length does not match the model");
  }
  const auto owner = model.vocab.users.index_of(image.owner);
  if (!owner) {
    throw InputError("owner \"" + image.owner + "\" of image \"" + image.id +
                     "\" is not in the model");
  }
  ImageScore result;
  std::vector<std::size_t> tags;
  for (const auto& tag : image.tags) {
    if (const auto t = model.vocab.tags.index_of(tag)) {
      tags.push_back(*t);
    } else {
      ++result.skipped_annotations;
    }
  }
  std::vector<std::size_t> groups;
  if (model.has_groups()) {
    for (const auto& group : image.groups) {
      if (const auto g = model.vocab.groups.index_of(group)) {
        groups.push_back(*g);
      } else {
        ++result.skipped_annotations;
      }
    }
  }

  std::vector<double> per_topic(k);
  const double log_owner = log_or_neg_inf(model.p_u[*owner]);
  for (std::size_t z = 0; z < k; ++z) {
    double lz = log_owner + log_or_neg_inf(model.p_z_given_u(z, *owner)) +
                log_or_neg_inf(user_vec.weights[z]);
    for (const auto t : tags) lz += log_or_neg_inf(model.p_t_given_z(t, z));
    for (const auto g : groups) lz += log_or_neg_inf(model.p_g_given_z(g, z));
    per_topic[z] = lz;
  }
  const double shift = *std::max_element(per_topic.begin(), per_topic.end());
  if (shift == kNegInf) {
    result.log_score = kNegInf;
    return result;
  }
  double sum = 0.0;
  for (const auto lz : per_topic) sum += std::exp(lz - shift);
  result.log_score = shift + std::log(sum);
  return result;
}

double image_score(const TopicModel& model, const Image& image,
                   const UserTopicVector& user_vec) {
  return score_image(model, image, user_vec).score();
}

std::vector<std::string> RankedResult::ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.image_id);
  return out;
}

RankedResult rank_images(const TopicModel& model, const std::vector<Image>& candidates,
                         const UserTopicVector& user_vec, std::size_t top_n,
                         ProfileMode mode) {
  if (top_n == 0) {
    throw ConfigError("top_n must be at least 1");
  }
  RankedResult result;
  result.profile_mode = mode;
  result.threshold_n = top_n;
  for (const auto& image : candidates) {
    if (!model.vocab.users.index_of(image.owner)) {
      ++result.skipped_unknown_owner;
      continue;
    }
    const auto scored = score_image(model, image, user_vec);
    result.skipped_annotations += scored.skipped_annotations;
    result.entries.push_back({image.id, scored.score(), scored.log_score});
  }
  // Log scores order images whose linear scores underflow to zero.
  std::sort(result.entries.begin(), result.entries.end(),
            [](const RankedEntry& a, const RankedEntry& b) {
              if (a.log_score != b.log_score) return a.log_score > b.log_score;
              return a.image_id < b.image_id;
            });
  if (result.entries.size() > top_n) {
    result.entries.resize(top_n);
  }
  return result;
}

void write_ranking_csv(const RankedResult& ranked, std::ostream& out) {
  out << "rank,image_id,score\n";
  for (std::size_t r = 0; r < ranked.entries.size(); ++r) {
    out << (r + 1) << ',' << ranked.entries[r].image_id << ','
        << io::format_double(ranked.entries[r].score) << '\n';
  }
}

}  // namespace tagrank

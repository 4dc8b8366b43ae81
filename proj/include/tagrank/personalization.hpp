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
#include <iosfwd>
#include <string>
#include <vector>

#include "tagrank/corpus.hpp"
#include "tagrank/topic_model.hpp"

namespace tagrank {

enum class ProfileMode { all_tags, related_tags };

const char* profile_mode_name(ProfileMode mode);

/// A querying user's interest distribution over topics.
struct UserTopicVector {
  std::vector<double> weights;
  /// Histogram tags that were not in the model vocabulary.
  std::size_t dropped_tags = 0;
};

/// Topic marginal p(z) = sum_u p(z|u) p(u).
std::vector<double> topic_prior(const TopicModel& model);

/// p(z|u') proportional to sum_t n(t) p(z|t), with p(z|t) obtained from
/// p(t|z) and the topic marginal by Bayes' rule. Throws ColdUserError when
/// no histogram tag is known to the model.
UserTopicVector user_topic_vector(const TopicModel& model, const TagHistogram& histogram);

struct ImageScore {
  /// Natural log of the score; -inf for a zero score.
  double log_score = 0.0;
  std::size_t skipped_annotations = 0;

  double score() const;
};

/// sum_z p(u_i) p(z|u_i) prod_t p(t|z) prod_g p(g|z) * user_vec[z], evaluated
/// in log space. Tags and groups missing from the model are skipped and
/// counted. Throws InputError when the owner is unknown to the model.
ImageScore score_image(const TopicModel& model, const Image& image,
                       const UserTopicVector& user_vec);
double image_score(const TopicModel& model, const Image& image,
                   const UserTopicVector& user_vec);

struct RankedEntry {
  std::string image_id;
  double score = 0.0;
  double log_score = 0.0;

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

struct RankedResult {
  std::vector<RankedEntry> entries;
  ProfileMode profile_mode = ProfileMode::all_tags;
  std::size_t threshold_n = 0;
  std::size_t skipped_unknown_owner = 0;
  std::size_t skipped_annotations = 0;

  std::vector<std::string> ids() const;
};

/// Scores every candidate, orders by descending score (ties by image id)
/// and keeps the first top_n. Candidates with an owner unknown to the model
/// are skipped and counted. Throws ConfigError if top_n is 0.
RankedResult rank_images(const TopicModel& model, const std::vector<Image>& candidates,
                         const UserTopicVector& user_vec, std::size_t top_n,
                         ProfileMode mode = ProfileMode::all_tags);

/// CSV `rank,image_id,score`, scores in shortest round-trip form.
void write_ranking_csv(const RankedResult& ranked, std::ostream& out);

}  // namespace tagrank

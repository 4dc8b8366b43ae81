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
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "tagrank/corpus.hpp"
#include "tagrank/topic_model.hpp"

namespace tagrank {

struct SynthSpec {
  std::size_t k = 3;
  std::size_t users = 10;
  std::size_t images = 1000;
  std::size_t tags_min = 2;
  std::size_t tags_max = 5;
  std::size_t groups_min = 0;
  std::size_t groups_max = 0;
  std::size_t vocab_size_tags = 30;
  std::size_t vocab_size_groups = 1;
  /// 1.0 gives disjoint per-topic tag blocks, 0.0 identical uniform topics.
  double topic_separation = 0.9;
  /// Mass each user puts on its dominant topic (user index mod k); the
  /// rest is spread evenly over the other topics.
  double dominant_weight = 0.9;
  std::uint64_t seed = 0;

  /// Throws ConfigError for zero counts, inverted ranges, out-of-range
  /// knobs, or a spec that cannot honour per-image deduplication.
  void validate() const;
};

/// Generating parameters plus the topic drawn for every annotation slot.
struct PlantedTruth {
  TopicModel model;
  std::vector<std::vector<std::size_t>> tag_topics;
  std::vector<std::vector<std::size_t>> group_topics;

  /// Most frequent slot topic of an image; nullopt on a tie for the top
  /// count or for an image without annotations.
  std::optional<std::size_t> majority_topic(std::size_t image) const;
  std::size_t dominant_topic(std::size_t user) const;
};

struct SynthResult {
  Corpus corpus;
  PlantedTruth truth;
};

/// Samples a corpus from the generative story: owner uniform, then per slot
/// z ~ p(z|u) and t ~ p(t|z), redrawing duplicates within an image up to
/// 1000 times. Deterministic in spec.seed.
SynthResult generate(const SynthSpec& spec);

struct TopicMatch {
  /// permutation[planted topic] = learned topic
  std::vector<std::size_t> permutation;
  /// Total-variation distance between each planted topic and its match.
  std::vector<double> distances;
};

/// Aligns tags by name and pairs planted with learned p(t|z) columns to
/// minimise the summed total-variation distance: exhaustive for k <= 8,
/// greedy above. Throws ConfigError when the topic counts differ.
TopicMatch match_topics(const PlantedTruth& planted, const TopicModel& learned);

double total_variation(const std::vector<double>& a, const std::vector<double>& b);

/// Model-format JSON with `planted: true` and per-image slot topics.
void save_truth(const PlantedTruth& truth, const Corpus& corpus, std::ostream& out);
void save_truth(const PlantedTruth& truth, const Corpus& corpus,
                const std::filesystem::path& path);
PlantedTruth load_truth(std::istream& in);
PlantedTruth load_truth(const std::filesystem::path& path);

}  // namespace tagrank

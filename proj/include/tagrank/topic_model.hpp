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
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "tagrank/corpus.hpp"

namespace tagrank {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  double column_sum(std::size_t c) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct ModelConfig {
  std::size_t k = 10;
  bool use_groups = true;
  std::size_t max_iters = 500;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;
  double prob_floor = 1e-12;
  /// Worker threads for the E-step and likelihood. Results do not depend
  /// on this value.
  std::size_t threads = 1;

  /// Throws ConfigError when k == 0, max_iters == 0, rel_tol <= 0 or the
  /// floor is negative.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Learned parameters. Layouts:
///   p_t_given_z  [tags x k]    column z is p(. | z)
///   p_g_given_z  [groups x k]  empty when use_groups is false
///   p_z_given_u  [k x users]   column u is p(. | u)
///   p_u          [users]
struct TopicModel {
  Vocabulary vocab;
  ModelConfig config;
  Matrix p_t_given_z;
  Matrix p_g_given_z;
  Matrix p_z_given_u;
  std::vector<double> p_u;

  std::size_t k() const { return config.k; }
  bool has_groups() const { return config.use_groups && !p_g_given_z.empty(); }

  /// Throws InvariantError if any distribution is off by more than tol or
  /// has a negative entry.
  void check_invariants(double tol = 1e-9) const;

  friend bool operator==(const TopicModel&, const TopicModel&) = default;
};

/// Topic posteriors per (image, annotation), stored image by image:
/// tag[i] holds |T_i| consecutive rows of k values, group[i] likewise.
struct EMPosteriors {
  std::size_t k = 0;
  std::vector<std::vector<double>> tag;
  std::vector<std::vector<double>> group;

  std::span<const double> tag_posterior(std::size_t image, std::size_t slot) const {
    return {tag[image].data() + slot * k, k};
  }
  std::span<const double> group_posterior(std::size_t image, std::size_t slot) const {
    return {group[image].data() + slot * k, k};
  }
};

struct TrainStats {
  std::size_t iterations = 0;
  std::vector<double> log_likelihood_trace;
  bool converged = false;
  std::uint64_t seed = 0;
};

/// Seeded uniform-positive initialisation; p(u) is the fraction of images
/// each user owns. Throws InputError for an empty user or tag vocabulary.
TopicModel init_params(const Vocabulary& vocab, const Corpus& corpus,
                       const ModelConfig& config);

EMPosteriors e_step(const TopicModel& model, const Corpus& corpus);

TopicModel m_step(const EMPosteriors& posteriors, const Corpus& corpus,
                  const Vocabulary& vocab, const ModelConfig& config);

/// log p(I) summed over images; inner mixtures are floored at prob_floor.
double log_likelihood(const TopicModel& model, const Corpus& corpus);

/// EM from init_params until the relative log-likelihood change drops below
/// rel_tol or max_iters is reached. Throws InputError on an empty corpus.
std::pair<TopicModel, TrainStats> train(const Corpus& corpus, const Vocabulary& vocab,
                                        const ModelConfig& config);

struct TopTag {
  std::size_t topic;
  std::string tag;
  double probability;
};

/// Up to n tags per topic by descending p(t|z); ties by tag index.
std::vector<TopTag> top_tags_per_topic(const TopicModel& model, std::size_t n);

constexpr int kModelFormatVersion = 1;

/// JSON document with format_version, config, vocabulary and row-major
/// matrices. Doubles are written in shortest round-trip form, so a
/// save/load cycle is lossless.
void save_model(const TopicModel& model, std::ostream& out);
void save_model(const TopicModel& model, const std::filesystem::path& path);
TopicModel load_model(std::istream& in);
TopicModel load_model(const std::filesystem::path& path);

}  // namespace tagrank

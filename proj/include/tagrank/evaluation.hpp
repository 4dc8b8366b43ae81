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
#include <optional>
#include <string>
#include <vector>

#include "tagrank/corpus.hpp"
#include "tagrank/personalization.hpp"

namespace tagrank {

// all_retrieved divides by the result-list length; labeled_only divides by
// relevant + not_relevant. Undecided (or unlabeled) ids never count as
// relevant.
enum class DenominatorRule { all_retrieved, labeled_only };

struct EvalCounts {
  std::size_t relevant = 0;
  std::size_t not_relevant = 0;
  std::size_t undecided = 0;
};

EvalCounts count_labels(const std::vector<std::string>& results, const RelevanceLabels& labels);

double precision(const std::vector<std::string>& results, const RelevanceLabels& labels,
                 DenominatorRule rule);
double recall(const std::vector<std::string>& results, const RelevanceLabels& labels,
              std::size_t total_relevant);
/// Precision of the first total_relevant entries under all_retrieved.
double r_precision(const std::vector<std::string>& ranked, const RelevanceLabels& labels,
                   std::size_t total_relevant);
double r_precision(const RankedResult& ranked, const RelevanceLabels& labels,
                   std::size_t total_relevant);

/// Percent change over the baseline, rounded half-up to an integer.
int improvement(double personalized, double baseline);

struct EvalConfig {
  DenominatorRule rule = DenominatorRule::labeled_only;
  std::optional<double> baseline_precision;
  /// Defaults to the number of relevant labels.
  std::optional<std::size_t> total_relevant;
  /// Plain-search baselines report no recall.
  bool with_recall = true;
  /// Compute R-precision when the list is at least R long.
  bool ranked = false;
};

struct EvalReport {
  std::size_t relevant_count = 0;
  std::size_t not_relevant_count = 0;
  std::size_t undecided_count = 0;
  double precision = 0.0;
  std::optional<double> recall;
  std::optional<double> r_precision;
  std::optional<int> improvement_pct;
};

/// Throws InputError when the label set is empty.
EvalReport eval_report(const std::vector<std::string>& results, const RelevanceLabels& labels,
                       const EvalConfig& config);

void write_report_csv(const EvalReport& report, std::ostream& out);
void write_report_table(const EvalReport& report, std::ostream& out);

}  // namespace tagrank

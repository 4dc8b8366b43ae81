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

#include "tagrank/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "tagrank/error.hpp"
#include "tagrank/io.hpp"

namespace tagrank {

EvalCounts count_labels(const std::vector<std::string>& results, const RelevanceLabels& labels) {
  EvalCounts counts;
  for (const auto& id : results) {
    switch (labels.find(id).value_or(Label::undecided)) {
      case Label::relevant:
        ++counts.relevant;
        break;
      case Label::not_relevant:
        ++counts.not_relevant;
        break;
      case Label::undecided:
        ++counts.undecided;
        break;
    }
  }
  return counts;
}

double precision(const std::vector<std::string>& results, const RelevanceLabels& labels,
                 DenominatorRule rule) {
  if (results.empty()) {
    throw InputError("precision of an empty result set is undefined");
  }
  const auto counts = count_labels(results, labels);
  if (rule == DenominatorRule::all_retrieved) {
    return static_cast<double>(counts.relevant) / static_cast<double>(results.size());
  }
  const auto judged = counts.relevant + counts.not_relevant;
  if (judged == 0) {
    throw InputError("precision is undefined: no result is labeled relevant or not relevant");
  }
  return static_cast<double>(counts.relevant) / static_cast<double>(judged);
}

double recall(const std::vector<std::string>& results, const RelevanceLabels& labels,
              std::size_t total_relevant) {
  if (total_relevant == 0) {
    throw InputError("recall needs at least one relevant item");
  }
  return static_cast<double>(count_labels(results, labels).relevant) /
         static_cast<double>(total_relevant);
}

double r_precision(const std::vector<std::string>& ranked, const RelevanceLabels& labels,
                   std::size_t total_relevant) {
  if (total_relevant == 0) {
    throw InputError("R-precision needs at least one relevant item");
  }
  if (ranked.size() < total_relevant) {
    throw InputError("ranking has " + std::to_string(ranked.size()) +
                     " entries, fewer than R = " + std::to_string(total_relevant));
  }
  std::size_t hits = 0;
  for (std::size_t r = 0; r < total_relevant; ++r) {
    if (labels.find(ranked[r]) == Label::relevant) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total_relevant);
}

double r_precision(const RankedResult& ranked, const RelevanceLabels& labels,
                   std::size_t total_relevant) {
  return r_precision(ranked.ids(), labels, total_relevant);
}

int improvement(double personalized, double baseline) {
  if (!(baseline > 0.0)) {
    throw InputError("baseline precision must be positive");
  }
  const double pct = (personalized - baseline) / baseline * 100.0;
  // Half-up; the epsilon keeps ties such as 12.5 from landing below the
  // boundary through representation error.
  return static_cast<int>(std::floor(pct + 0.5 + 1e-9));
}

EvalReport eval_report(const std::vector<std::string>& results, const RelevanceLabels& labels,
                       const EvalConfig& config) {
  if (labels.labels.empty()) {
    throw InputError("no relevance labels");
  }
  if (config.baseline_precision &&
      !(*config.baseline_precision > 0.0 && *config.baseline_precision <= 1.0)) {
    throw ConfigError("baseline precision must be in (0, 1]");
  }
  const auto counts = count_labels(results, labels);
  EvalReport report;
  report.relevant_count = counts.relevant;
  report.not_relevant_count = counts.not_relevant;
  report.undecided_count = counts.undecided;
  report.precision = precision(results, labels, config.rule);
  const auto total_relevant = config.total_relevant.value_or(labels.count(Label::relevant));
  if (config.with_recall && total_relevant > 0) {
    report.recall = recall(results, labels, total_relevant);
  }
  if (config.ranked && total_relevant > 0 && results.size() >= total_relevant) {
    report.r_precision = r_precision(results, labels, total_relevant);
  }
  if (config.baseline_precision) {
    report.improvement_pct = improvement(report.precision, *config.baseline_precision);
  }
  return report;
}

namespace {

std::string optional_cell(const std::optional<double>& v) {
  return v ? io::format_double(*v) : std::string();
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "relevant,not_relevant,precision,recall,r_precision,improvement_pct\n";
  out << report.relevant_count << ',' << report.not_relevant_count << ','
      << io::format_double(report.precision) << ',' << optional_cell(report.recall) << ','
      << optional_cell(report.r_precision) << ','
      << (report.improvement_pct ? std::to_string(*report.improvement_pct) : "") << '\n';
}

void write_report_table(const EvalReport& report, std::ostream& out) {
  const auto cell = [](const std::optional<double>& v) { return v ? fixed4(*v) : "-"; };
  char line[256];
  std::snprintf(line, sizeof(line), "%10s %12s %10s %10s %12s %16s\n", "relevant",
                "not_relevant", "precision", "recall", "r_precision", "improvement_pct");
  out << line;
  const auto improv =
      report.improvement_pct ? std::to_string(*report.improvement_pct) + "%" : std::string("-");
  std::snprintf(line, sizeof(line), "%10zu %12zu %10s %10s %12s %16s\n", report.relevant_count,
                report.not_relevant_count, fixed4(report.precision).c_str(),
                cell(report.recall).c_str(), cell(report.r_precision).c_str(), improv.c_str());
  out << line;
}

}  // namespace tagrank

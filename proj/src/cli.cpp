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

#include "tagrank/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tagrank/contact_filter.hpp"
#include "tagrank/corpus.hpp"
#include "tagrank/error.hpp"
#include "tagrank/evaluation.hpp"
#include "tagrank/io.hpp"
#include "tagrank/personalization.hpp"
#include "tagrank/synthgen.hpp"
#include "tagrank/topic_model.hpp"

namespace tagrank::cli {

namespace {

struct Context {
  std::ostream& out;
  std::ostream& err;
  bool quiet = false;

  void progress(const std::string& message) const {
    if (!quiet) err << message << '\n';
  }
};

// Sends output to `path` atomically, or to the context's stdout when empty.
void emit(const Context& ctx, const std::string& path,
          const std::function<void(std::ostream&)>& writer) {
  if (path.empty()) {
    writer(ctx.out);
  } else {
    io::write_file_atomic(path, writer);
  }
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& text, const char* flag) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) {
      const auto v = std::stoul(text);
      return {v, v};
    }
    return {std::stoul(text.substr(0, colon)), std::stoul(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw ConfigError(std::string(flag) + " expects N or MIN:MAX, got \"" + text + "\"");
  }
}

// ---------------------------------------------------------------- ingest-check

struct IngestArgs {
  std::string corpus, contacts, labels;
};

void ingest_check(const Context& ctx, const IngestArgs& args) {
  LoadReport report;
  const auto corpus = load_corpus(args.corpus, &report);
  const auto vocab = build_vocabulary(corpus);
  ctx.out << "images," << corpus.size() << '\n'
          << "users," << vocab.users.size() << '\n'
          << "tags," << vocab.tags.size() << '\n'
          << "groups," << vocab.groups.size() << '\n'
          << "duplicate_annotations," << report.duplicate_tags << '\n'
          << "empty_annotations," << report.empty_annotations << '\n';
  if (!args.contacts.empty()) {
    LoadReport contact_report;
    const auto graph = load_contacts(args.contacts, &contact_report);
    std::size_t edges = 0;
    for (const auto& [user, contacts] : graph.edges) edges += contacts.size();
    ctx.out << "contact_edges," << edges << '\n'
            << "self_loops_dropped," << contact_report.self_loops << '\n';
  }
  if (!args.labels.empty()) {
    const auto labels = load_labels(args.labels);
    check_labels_against(labels, corpus);
    ctx.out << "relevant," << labels.count(Label::relevant) << '\n'
            << "not_relevant," << labels.count(Label::not_relevant) << '\n'
            << "undecided," << labels.count(Label::undecided) << '\n';
  }
}

// ----------------------------------------------------------------------- train

struct TrainArgs {
  std::string corpus, out;
  std::size_t topics = 10;
  std::uint64_t seed = 0;
  std::size_t max_iters = 500;
  double rel_tol = 1e-6;
  double prob_floor = 1e-12;
  bool no_groups = false;
  std::size_t threads = 1;
};

void train_cmd(const Context& ctx, const TrainArgs& args) {
  ModelConfig config;
  config.k = args.topics;
  config.seed = args.seed;
  config.max_iters = args.max_iters;
  config.rel_tol = args.rel_tol;
  config.prob_floor = args.prob_floor;
  config.use_groups = !args.no_groups;
  config.threads = args.threads == 0 ? 1 : args.threads;
  config.validate();
  const auto corpus = load_corpus(args.corpus);
  const auto vocab = build_vocabulary(corpus);
  ctx.progress("training k=" + std::to_string(config.k) + " on " +
               std::to_string(corpus.size()) + " images");
  const auto [model, stats] = train(corpus, vocab, config);
  model.check_invariants();
  save_model(model, args.out);
  ctx.out << "iterations," << stats.iterations << '\n'
          << "converged," << (stats.converged ? "true" : "false") << '\n'
          << "log_likelihood,"
          << io::format_double(stats.log_likelihood_trace.empty()
                                   ? 0.0
                                   : stats.log_likelihood_trace.back())
          << '\n';
}

// ---------------------------------------------------------------------- topics

struct TopicsArgs {
  std::string model, format = "csv", out;
  std::size_t top = 25;
};

void topics_cmd(const Context& ctx, const TopicsArgs& args) {
  if (args.format != "csv" && args.format != "table") {
    throw ConfigError("--format must be csv or table");
  }
  const auto model = load_model(args.model);
  const auto rows = top_tags_per_topic(model, args.top);
  emit(ctx, args.out, [&](std::ostream& os) {
    if (args.format == "csv") {
      os << "topic,rank,tag,probability\n";
      std::size_t rank = 0, last_topic = rows.empty() ? 0 : rows.front().topic;
      for (const auto& row : rows) {
        if (row.topic != last_topic) {
          rank = 0;
          last_topic = row.topic;
        }
        os << row.topic << ',' << ++rank << ',' << row.tag << ','
           << io::format_double(row.probability) << '\n';
      }
      return;
    }
    // One column per topic, one line per rank.
    std::vector<std::vector<const TopTag*>> columns(model.k());
    for (const auto& row : rows) columns[row.topic].push_back(&row);
    std::size_t depth = 0, width = 8;
    for (const auto& col : columns) {
      depth = std::max(depth, col.size());
      for (const auto* r : col) width = std::max(width, r->tag.size() + 2);
    }
    for (std::size_t z = 0; z < columns.size(); ++z) {
      const auto head = "topic" + std::to_string(z + 1);
      os << head << std::string(width - std::min(width, head.size()), ' ');
    }
    os << '\n';
    for (std::size_t r = 0; r < depth; ++r) {
      for (const auto& col : columns) {
        const std::string cell = r < col.size() ? col[r]->tag : "";
        os << cell << std::string(width - cell.size(), ' ');
      }
      os << '\n';
    }
  });
}

// ------------------------------------------------------------------------ rank

struct RankArgs {
  std::string model, corpus, user, profile_mode = "all", query_tag, profile, candidates, out;
  std::size_t top = 0;
};

void rank_cmd(const Context& ctx, const RankArgs& args) {
  ProfileMode mode;
  if (args.profile_mode == "all") {
    mode = ProfileMode::all_tags;
  } else if (args.profile_mode == "related") {
    mode = ProfileMode::related_tags;
  } else {
    throw ConfigError("--profile-mode must be all or related");
  }
  const auto query = normalize_tag(args.query_tag);
  if (mode == ProfileMode::related_tags && query.empty() && args.profile.empty()) {
    throw ConfigError("--profile-mode related needs --query-tag");
  }
  if (args.profile.empty() && args.user.empty()) {
    throw ConfigError("rank needs --user or --profile");
  }
  const auto model = load_model(args.model);
  const auto corpus = load_corpus(args.corpus);

  TagHistogram histogram;
  if (!args.profile.empty()) {
    histogram = load_profile(args.profile).tag_counts;
  } else {
    if (!corpus.has_user(args.user)) {
      throw ColdUserError("user \"" + args.user + "\" owns no images in the corpus");
    }
    histogram = mode == ProfileMode::all_tags ? user_tag_histogram(corpus, args.user)
                                              : related_tags(corpus, args.user, query);
  }
  const auto user_vec = user_topic_vector(model, histogram);
  if (user_vec.dropped_tags > 0) {
    ctx.progress("profile tags not in the model: " + std::to_string(user_vec.dropped_tags));
  }

  std::vector<Image> candidates;
  if (!args.candidates.empty()) {
    candidates = load_corpus(args.candidates).images();
  } else {
    for (const auto& image : corpus.images()) {
      if (query.empty() || image.has_tag(query)) candidates.push_back(image);
    }
  }
  const auto top = args.top == 0 ? std::max<std::size_t>(1, candidates.size()) : args.top;
  const auto ranked = rank_images(model, candidates, user_vec, top, mode);
  if (ranked.skipped_unknown_owner > 0) {
    ctx.progress("candidates skipped for unknown owner: " +
                 std::to_string(ranked.skipped_unknown_owner));
  }
  emit(ctx, args.out, [&](std::ostream& os) { write_ranking_csv(ranked, os); });
}

// ------------------------------------------------------------- filter-contacts

struct FilterArgs {
  std::string contacts, corpus, user, query_tag, out;
  int level = 1;
  bool include_self = false;
};

void filter_cmd(const Context& ctx, const FilterArgs& args) {
  if (args.level != 1 && args.level != 2) {
    throw ConfigError("--level must be 1 or 2");
  }
  const auto graph = load_contacts(args.contacts);
  const auto corpus = load_corpus(args.corpus);
  const auto query = normalize_tag(args.query_tag);
  std::vector<Image> results;
  for (const auto& image : corpus.images()) {
    if (query.empty() || image.has_tag(query)) results.push_back(image);
  }
  const auto set = contact_set(graph, args.user, args.level, args.include_self);
  const auto kept = filter_by_contacts(results, set);
  ctx.progress("contacts in set: " + std::to_string(set.members.size()));
  emit(ctx, args.out, [&](std::ostream& os) {
    os << "image_id,owner\n";
    for (const auto& image : kept) os << image.id << ',' << image.owner << '\n';
  });
}

// ------------------------------------------------------------------------ eval

struct EvalArgs {
  std::string labels, results, rule, format = "csv", out;
  std::optional<double> baseline_precision;
  std::optional<std::size_t> total_relevant;
  std::size_t top = 0;
};

struct ResultList {
  std::vector<std::string> ids;
  bool ranked = false;
};

ResultList read_results(const std::string& path) {
  auto in = io::open_input(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw InputError(path + ": empty results file");
  }
  const auto header = io::split_csv_line(line);
  const auto id_col = std::find(header.begin(), header.end(), "image_id");
  if (id_col == header.end()) {
    throw InputError(path + ": header has no image_id column");
  }
  const auto column = static_cast<std::size_t>(id_col - header.begin());
  ResultList list;
  list.ranked = std::find(header.begin(), header.end(), "rank") != header.end();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = io::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw InputError(path + ": line " + std::to_string(line_no) + ": wrong field count");
    }
    list.ids.push_back(trim(fields[column]));
  }
  return list;
}

void eval_cmd(const Context& ctx, const EvalArgs& args) {
  if (args.format != "csv" && args.format != "table") {
    throw ConfigError("--format must be csv or table");
  }
  const auto labels = load_labels(args.labels);
  EvalConfig config;
  config.baseline_precision = args.baseline_precision;
  config.total_relevant = args.total_relevant;
  ResultList results;
  if (args.results.empty()) {
    // Plain search: the labeled list itself, in file order.
    results.ids = labels.order;
    config.rule = DenominatorRule::all_retrieved;
    config.with_recall = false;
  } else {
    results = read_results(args.results);
    config.rule = DenominatorRule::labeled_only;
  }
  if (args.rule == "all") {
    config.rule = DenominatorRule::all_retrieved;
  } else if (args.rule == "labeled") {
    config.rule = DenominatorRule::labeled_only;
  } else if (!args.rule.empty()) {
    throw ConfigError("--rule must be all or labeled");
  }
  config.ranked = results.ranked;
  if (args.top > 0 && results.ids.size() > args.top) {
    // R-precision needs the full ranking; cut afterwards.
    const auto full = eval_report(results.ids, labels, config);
    results.ids.resize(args.top);
    auto report = eval_report(results.ids, labels, config);
    report.r_precision = full.r_precision;
    emit(ctx, args.out, [&](std::ostream& os) {
      args.format == "csv" ? write_report_csv(report, os) : write_report_table(report, os);
    });
    return;
  }
  const auto report = eval_report(results.ids, labels, config);
  emit(ctx, args.out, [&](std::ostream& os) {
    args.format == "csv" ? write_report_csv(report, os) : write_report_table(report, os);
  });
}

// ----------------------------------------------------------------------- synth

struct SynthArgs {
  std::string out_corpus, out_truth, tags_per_image = "2:5", groups_per_image = "0:0";
  SynthSpec spec;
};

void synth_cmd(const Context& ctx, SynthArgs args) {
  std::tie(args.spec.tags_min, args.spec.tags_max) =
      parse_range(args.tags_per_image, "--tags-per-image");
  std::tie(args.spec.groups_min, args.spec.groups_max) =
      parse_range(args.groups_per_image, "--groups-per-image");
  const auto result = generate(args.spec);
  io::write_file_atomic(args.out_corpus,
                        [&](std::ostream& os) { save_corpus(result.corpus, os); });
  if (!args.out_truth.empty()) {
    save_truth(result.truth, result.corpus, args.out_truth);
  }
  ctx.progress("wrote " + std::to_string(result.corpus.size()) + " images");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Personalized tag-search ranking with a user/tag/group topic model", "tagrank"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("--quiet", quiet, "Suppress progress messages");

  IngestArgs ingest;
  auto* ingest_app = app.add_subcommand("ingest-check", "Validate and summarise input files");
  ingest_app->add_option("--corpus", ingest.corpus, "Corpus JSONL")->required();
  ingest_app->add_option("--contacts", ingest.contacts, "Contacts CSV");
  ingest_app->add_option("--labels", ingest.labels, "Relevance labels CSV");

  TrainArgs train_args;
  auto* train_app = app.add_subcommand("train", "Fit the topic model by EM");
  train_app->add_option("--corpus", train_args.corpus, "Corpus JSONL")->required();
  train_app->add_option("--out", train_args.out, "Model output file")->required();
  train_app->add_option("--topics", train_args.topics, "Number of topics")->capture_default_str();
  train_app->add_option("--seed", train_args.seed, "Initialisation seed")->capture_default_str();
  train_app->add_option("--max-iters", train_args.max_iters)->capture_default_str();
  train_app->add_option("--rel-tol", train_args.rel_tol, "Relative log-likelihood tolerance")
      ->capture_default_str();
  train_app->add_option("--prob-floor", train_args.prob_floor)->capture_default_str();
  train_app->add_flag("--no-groups", train_args.no_groups, "Ignore image groups");
  train_app->add_option("--threads", train_args.threads, "E-step worker threads")
      ->capture_default_str();

  TopicsArgs topics_args;
  auto* topics_app = app.add_subcommand("topics", "List top tags per topic");
  topics_app->add_option("--model", topics_args.model)->required();
  topics_app->add_option("--top", topics_args.top, "Tags per topic")->capture_default_str();
  topics_app->add_option("--format", topics_args.format, "csv or table")->capture_default_str();
  topics_app->add_option("--out", topics_args.out);

  RankArgs rank_args;
  auto* rank_app = app.add_subcommand("rank", "Rank search results for a user");
  rank_app->add_option("--model", rank_args.model)->required();
  rank_app->add_option("--corpus", rank_args.corpus)->required();
  rank_app->add_option("--user", rank_args.user);
  rank_app->add_option("--profile-mode", rank_args.profile_mode, "all or related")
      ->capture_default_str();
  rank_app->add_option("--query-tag", rank_args.query_tag, "Search tag");
  rank_app->add_option("--profile", rank_args.profile, "Profile JSON instead of corpus tags");
  rank_app->add_option("--candidates", rank_args.candidates, "Candidate images JSONL");
  rank_app->add_option("--top", rank_args.top, "Keep the first N (0 keeps all)");
  rank_app->add_option("--out", rank_args.out);

  FilterArgs filter_args;
  auto* filter_app = app.add_subcommand("filter-contacts", "Restrict results to a user's contacts");
  filter_app->add_option("--contacts", filter_args.contacts)->required();
  filter_app->add_option("--corpus", filter_args.corpus)->required();
  filter_app->add_option("--user", filter_args.user)->required();
  filter_app->add_option("--level", filter_args.level, "1 or 2")->capture_default_str();
  filter_app->add_option("--query-tag", filter_args.query_tag);
  filter_app->add_flag("--include-self", filter_args.include_self);
  filter_app->add_option("--out", filter_args.out);

  EvalArgs eval_args;
  auto* eval_app = app.add_subcommand("eval", "Precision, recall and R-precision");
  eval_app->add_option("--labels", eval_args.labels)->required();
  eval_app->add_option("--results", eval_args.results, "rank or filter-contacts output");
  eval_app->add_option("--rule", eval_args.rule, "all or labeled");
  eval_app->add_option("--baseline-precision", eval_args.baseline_precision);
  eval_app->add_option("--total-relevant", eval_args.total_relevant);
  eval_app->add_option("--top", eval_args.top, "Evaluate only the first N results");
  eval_app->add_option("--format", eval_args.format, "csv or table")->capture_default_str();
  eval_app->add_option("--out", eval_args.out);

  SynthArgs synth_args;
  auto* synth_app = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth_app->add_option("--out-corpus", synth_args.out_corpus)->required();
  synth_app->add_option("--out-truth", synth_args.out_truth);
  synth_app->add_option("--topics", synth_args.spec.k)->capture_default_str();
  synth_app->add_option("--users", synth_args.spec.users)->capture_default_str();
  synth_app->add_option("--images", synth_args.spec.images)->capture_default_str();
  synth_app->add_option("--tags-per-image", synth_args.tags_per_image, "N or MIN:MAX")
      ->capture_default_str();
  synth_app->add_option("--groups-per-image", synth_args.groups_per_image, "N or MIN:MAX")
      ->capture_default_str();
  synth_app->add_option("--vocab-tags", synth_args.spec.vocab_size_tags)->capture_default_str();
  synth_app->add_option("--vocab-groups", synth_args.spec.vocab_size_groups)
      ->capture_default_str();
  synth_app->add_option("--separation", synth_args.spec.topic_separation)->capture_default_str();
  synth_app->add_option("--dominant-weight", synth_args.spec.dominant_weight)
      ->capture_default_str();
  synth_app->add_option("--seed", synth_args.spec.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  Context ctx{out, err, quiet};
  try {
    if (*ingest_app) ingest_check(ctx, ingest);
    else if (*train_app) train_cmd(ctx, train_args);
    else if (*topics_app) topics_cmd(ctx, topics_args);
    else if (*rank_app) rank_cmd(ctx, rank_args);
    else if (*filter_app) filter_cmd(ctx, filter_args);
    else if (*eval_app) eval_cmd(ctx, eval_args);
    else if (*synth_app) synth_cmd(ctx, synth_args);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 5;
  }
  return 0;
}

}  // namespace tagrank::cli

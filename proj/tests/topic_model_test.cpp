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

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "tagrank/error.hpp"
#include "tagrank/synthgen.hpp"
#include "tagrank/topic_model.hpp"

using namespace tagrank;

namespace {

Corpus corpus_of(std::initializer_list<Image> images) {
  Corpus c;
  for (const auto& i : images) c.add(i);
  return c;
}

ModelConfig config_k(std::size_t k, std::uint64_t seed = 1) {
  ModelConfig c;
  c.k = k;
  c.seed = seed;
  return c;
}

// Two tags with hand-set parameters; one user.
TopicModel hand_model() {
  TopicModel m;
  m.config = config_k(2);
  m.config.use_groups = false;
  m.vocab.tags.add("t");
  m.vocab.tags.add("s");
  m.vocab.users.add("u");
  m.p_t_given_z = Matrix(2, 2);
  m.p_t_given_z(0, 0) = 0.9;
  m.p_t_given_z(0, 1) = 0.1;
  m.p_t_given_z(1, 0) = 0.1;
  m.p_t_given_z(1, 1) = 0.9;
  m.p_z_given_u = Matrix(2, 1, 0.5);
  m.p_u = {1.0};
  return m;
}

void expect_params_near(const TopicModel& model, const oracle::Params& ref, double tol) {
  for (std::size_t t = 0; t < model.vocab.tags.size(); ++t) {
    for (std::size_t z = 0; z < model.k(); ++z) {
      ASSERT_NEAR(model.p_t_given_z(t, z), ref.p_t_given_z.at(model.vocab.tags.name_of(t))[z], tol);
    }
  }
  if (model.has_groups()) {
    for (std::size_t g = 0; g < model.vocab.groups.size(); ++g) {
      for (std::size_t z = 0; z < model.k(); ++z) {
        ASSERT_NEAR(model.p_g_given_z(g, z),
                    ref.p_g_given_z.at(model.vocab.groups.name_of(g))[z], tol);
      }
    }
  }
  for (std::size_t u = 0; u < model.vocab.users.size(); ++u) {
    const auto& name = model.vocab.users.name_of(u);
    for (std::size_t z = 0; z < model.k(); ++z) {
      ASSERT_NEAR(model.p_z_given_u(z, u), ref.p_z_given_u.at(name)[z], tol);
    }
    ASSERT_NEAR(model.p_u[u], ref.p_u.at(name), tol);
  }
}

Corpus small_random_corpus(std::uint64_t seed, std::size_t images = 200) {
  SynthSpec spec;
  spec.k = 3;
  spec.users = 5;
  spec.images = images;
  spec.vocab_size_tags = 20;
  spec.tags_min = 1;
  spec.tags_max = 4;
  spec.groups_min = 0;
  spec.groups_max = 2;
  spec.vocab_size_groups = 6;
  spec.topic_separation = 0.6;
  spec.seed = seed;
  return generate(spec).corpus;
}

}  // namespace

TEST(InitParams, SingleTopicColumnsAreExactlyOne) {
  const auto corpus = corpus_of({{"1", "a", {"x", "y"}, {}}, {"2", "b", {"y"}, {}}});
  const auto model = init_params(build_vocabulary(corpus), corpus, config_k(1));
  for (std::size_t u = 0; u < model.p_z_given_u.cols(); ++u) {
    EXPECT_EQ(model.p_z_given_u(0, u), 1.0);
  }
  model.check_invariants();
}

TEST(InitParams, SeedDeterminismAndEmpiricalUserPrior) {
  const auto corpus = corpus_of({{"1", "a", {"x"}, {}},
                                 {"2", "a", {"y"}, {"g"}},
                                 {"3", "b", {"x"}, {}},
                                 {"4", "a", {}, {}}});
  const auto vocab = build_vocabulary(corpus);
  const auto m1 = init_params(vocab, corpus, config_k(3, 99));
  const auto m2 = init_params(vocab, corpus, config_k(3, 99));
  EXPECT_EQ(m1, m2);
  EXPECT_NE(m1.p_t_given_z, init_params(vocab, corpus, config_k(3, 100)).p_t_given_z);
  EXPECT_EQ(m1.p_u, (std::vector<double>{0.75, 0.25}));
  m1.check_invariants();
}

TEST(InitParams, Errors) {
  EXPECT_THROW(init_params(Vocabulary{}, Corpus{}, config_k(2)), InputError);
  const auto no_tags = corpus_of({{"1", "a", {}, {}}});
  EXPECT_THROW(init_params(build_vocabulary(no_tags), no_tags, config_k(2)), InputError);
  EXPECT_THROW(init_params(build_vocabulary(no_tags), no_tags, config_k(0)), ConfigError);
  auto bad = config_k(2);
  bad.rel_tol = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(EStep, HandEvaluatedPosterior) {
  // p(z|u) = [0.5, 0.5], p(t|z) = [0.9, 0.1]: 0.45 / (0.45 + 0.05) = 0.9.
  const auto model = hand_model();
  const auto corpus = corpus_of({{"1", "u", {"t"}, {}}});
  const auto post = e_step(model, corpus);
  const auto p = post.tag_posterior(0, 0);
  EXPECT_NEAR(p[0], 0.9, 1e-15);
  EXPECT_NEAR(p[1], 0.1, 1e-15);
}

TEST(EStep, SingleTopicPosteriorIsOne) {
  const auto corpus = small_random_corpus(3, 30);
  const auto model = init_params(build_vocabulary(corpus), corpus, config_k(1));
  const auto post = e_step(model, corpus);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (const auto v : post.tag[i]) EXPECT_EQ(v, 1.0);
    for (const auto v : post.group[i]) EXPECT_EQ(v, 1.0);
  }
}

TEST(EStep, PosteriorsAreDistributions) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto corpus = small_random_corpus(seed, 40);
    const auto model = init_params(build_vocabulary(corpus), corpus, config_k(4, seed));
    const auto post = e_step(model, corpus);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      for (std::size_t s = 0; s < corpus.images()[i].tags.size(); ++s) {
        double sum = 0.0;
        for (const auto v : post.tag_posterior(i, s)) sum += v;
        ASSERT_NEAR(sum, 1.0, 1e-9);
      }
      for (std::size_t s = 0; s < corpus.images()[i].groups.size(); ++s) {
        double sum = 0.0;
        for (const auto v : post.group_posterior(i, s)) sum += v;
        ASSERT_NEAR(sum, 1.0, 1e-9);
      }
    }
  }
}

TEST(EStep, ZeroMassFallsBackToUniform) {
  auto model = hand_model();
  model.p_t_given_z(0, 0) = 0.0;
  model.p_t_given_z(0, 1) = 0.0;
  const auto post = e_step(model, corpus_of({{"1", "u", {"t"}, {}}}));
  EXPECT_EQ(post.tag_posterior(0, 0)[0], 0.5);
  EXPECT_EQ(post.tag_posterior(0, 0)[1], 0.5);
}

TEST(MStep, SingleTopicGivesEmpiricalIncidence) {
  const auto corpus = corpus_of({{"1", "a", {"x", "y"}, {}},
                                 {"2", "b", {"x"}, {}},
                                 {"3", "a", {"x", "z"}, {}}});
  const auto vocab = build_vocabulary(corpus);
  const auto config = config_k(1);
  const auto model = m_step(e_step(init_params(vocab, corpus, config), corpus), corpus, vocab,
                            config);
  EXPECT_NEAR(model.p_t_given_z(*vocab.tags.index_of("x"), 0), 3.0 / 5.0, 1e-15);
  EXPECT_NEAR(model.p_t_given_z(*vocab.tags.index_of("y"), 0), 1.0 / 5.0, 1e-15);
  EXPECT_NEAR(model.p_t_given_z(*vocab.tags.index_of("z"), 0), 1.0 / 5.0, 1e-15);
}

TEST(MStep, ZeroMassEntryIsFloored) {
  const auto corpus = corpus_of({{"1", "u", {"a"}, {}}, {"2", "u", {"b"}, {}}});
  const auto vocab = build_vocabulary(corpus);
  EMPosteriors post;
  post.k = 2;
  post.tag = {{1.0, 0.0}, {0.0, 1.0}};
  post.group = {{}, {}};
  const auto model = m_step(post, corpus, vocab, config_k(2));
  EXPECT_NEAR(model.p_t_given_z(0, 1), 1e-12, 1e-15);
  EXPECT_GT(model.p_t_given_z(0, 1), 0.0);
  EXPECT_NEAR(model.p_t_given_z(0, 0), 1.0, 1e-11);
  model.check_invariants();
}

TEST(MStep, FourImageCorpusMatchesBruteForce) {
  const auto corpus = corpus_of({{"1", "ann", {"beetle", "insect"}, {"bugs"}},
                                 {"2", "ann", {"beetle", "macro"}, {}},
                                 {"3", "bob", {"beetle", "car", "vw"}, {"cars"}},
                                 {"4", "bob", {"vw"}, {"cars", "bugs"}}});
  const auto vocab = build_vocabulary(corpus);
  const auto config = config_k(2, 17);
  const auto start = init_params(vocab, corpus, config);
  const auto next = m_step(e_step(start, corpus), corpus, vocab, config);
  expect_params_near(next, oracle::em_iteration(corpus, oracle::from_model(start)), 1e-12);
  next.check_invariants();
}

TEST(MStep, SweepMatchesBruteForce) {
  std::mt19937_64 rng(7);
  for (std::size_t k = 1; k <= 3; ++k) {
    for (std::size_t images = 1; images <= 5; ++images) {
      for (std::size_t tags = 1; tags <= 6; ++tags) {
        for (std::size_t groups = 0; groups <= 2; ++groups) {
          const auto corpus = oracle::random_tiny_corpus(rng, images, tags, groups, 3);
          const auto vocab = build_vocabulary(corpus);
          auto config = config_k(k, rng());
          config.use_groups = groups > 0;
          const auto start = init_params(vocab, corpus, config);
          const auto next = m_step(e_step(start, corpus), corpus, vocab, config);
          expect_params_near(next, oracle::em_iteration(corpus, oracle::from_model(start)),
                             1e-10);
        }
      }
    }
  }
}

TEST(LogLikelihood, DegenerateCorpusIsZero) {
  const auto corpus = corpus_of({{"1", "u", {"t"}, {}}});
  const auto vocab = build_vocabulary(corpus);
  const auto model = init_params(vocab, corpus, config_k(1));
  EXPECT_EQ(model.p_t_given_z(0, 0), 1.0);
  EXPECT_EQ(log_likelihood(model, corpus), 0.0);
}

TEST(LogLikelihood, MatchesDirectProduct) {
  const auto corpus = corpus_of({{"1", "a", {"x", "y"}, {"g1"}},
                                 {"2", "b", {"y"}, {"g1", "g2"}},
                                 {"3", "a", {"z"}, {}}});
  const auto vocab = build_vocabulary(corpus);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto model = init_params(vocab, corpus, config_k(3, seed));
    EXPECT_NEAR(log_likelihood(model, corpus),
                oracle::log_likelihood(corpus, oracle::from_model(model)), 1e-12);
  }
}

TEST(LogLikelihood, NonPositive) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto corpus = small_random_corpus(seed, 50);
    const auto model = init_params(build_vocabulary(corpus), corpus, config_k(3, seed));
    EXPECT_LE(log_likelihood(model, corpus), 0.0);
  }
}

TEST(Train, TraceIsMonotone) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto corpus = small_random_corpus(100 + seed);
    auto config = config_k(3, seed);
    config.max_iters = 200;
    const auto [model, stats] = train(corpus, build_vocabulary(corpus), config);
    ASSERT_FALSE(stats.log_likelihood_trace.empty());
    for (std::size_t i = 1; i < stats.log_likelihood_trace.size(); ++i) {
      ASSERT_GE(stats.log_likelihood_trace[i], stats.log_likelihood_trace[i - 1] - 1e-9);
    }
    model.check_invariants();
  }
}

TEST(Train, SingleTopicConvergesImmediately) {
  const auto corpus = small_random_corpus(1);
  const auto [model, stats] = train(corpus, build_vocabulary(corpus), config_k(1));
  EXPECT_TRUE(stats.converged);
  EXPECT_LE(stats.iterations, 2u);
}

TEST(Train, EmptyCorpus) {
  EXPECT_THROW(train(Corpus{}, Vocabulary{}, config_k(2)), InputError);
}

TEST(Train, SeedAndThreadDeterminism) {
  const auto corpus = small_random_corpus(4);
  const auto vocab = build_vocabulary(corpus);
  auto config = config_k(4, 77);
  config.max_iters = 50;
  const auto [m1, s1] = train(corpus, vocab, config);
  const auto [m2, s2] = train(corpus, vocab, config);
  EXPECT_EQ(m1, m2);
  EXPECT_EQ(s1.log_likelihood_trace, s2.log_likelihood_trace);
  config.threads = 4;
  const auto [m3, s3] = train(corpus, vocab, config);
  EXPECT_EQ(m1.p_t_given_z, m3.p_t_given_z);
  EXPECT_EQ(m1.p_z_given_u, m3.p_z_given_u);
  EXPECT_EQ(s1.log_likelihood_trace, s3.log_likelihood_trace);
}

TEST(Train, GroupToggleIsVacuousWithoutGroups) {
  SynthSpec spec;
  spec.images = 150;
  spec.seed = 9;
  const auto corpus = generate(spec).corpus;
  const auto vocab = build_vocabulary(corpus);
  ASSERT_TRUE(vocab.groups.empty());
  auto with = config_k(3, 5);
  with.max_iters = 40;
  auto without = with;
  without.use_groups = false;
  const auto [a, sa] = train(corpus, vocab, with);
  const auto [b, sb] = train(corpus, vocab, without);
  EXPECT_EQ(a.p_t_given_z, b.p_t_given_z);
  EXPECT_EQ(a.p_z_given_u, b.p_z_given_u);
  EXPECT_EQ(a.p_u, b.p_u);
  EXPECT_EQ(sa.log_likelihood_trace, sb.log_likelihood_trace);
}

TEST(Train, TagRelabelingKeepsParameters) {
  const auto corpus = small_random_corpus(12, 80);
  Corpus renamed;
  for (auto image : corpus.images()) {
    for (auto& t : image.tags) t = "renamed_" + t;
    renamed.add(image);
  }
  auto config = config_k(3, 3);
  config.max_iters = 30;
  const auto [a, sa] = train(corpus, build_vocabulary(corpus), config);
  const auto [b, sb] = train(renamed, build_vocabulary(renamed), config);
  EXPECT_EQ(a.p_t_given_z, b.p_t_given_z);
  EXPECT_EQ(a.p_z_given_u, b.p_z_given_u);
  EXPECT_EQ(sa.log_likelihood_trace, sb.log_likelihood_trace);
  for (std::size_t t = 0; t < a.vocab.tags.size(); ++t) {
    EXPECT_EQ("renamed_" + a.vocab.tags.name_of(t), b.vocab.tags.name_of(t));
  }
}

TEST(Train, RecoversTwoPlantedDisjointTopics) {
  SynthSpec spec;
  spec.k = 2;
  spec.users = 20;
  spec.images = 2000;
  spec.vocab_size_tags = 12;
  spec.tags_min = 1;
  spec.tags_max = 3;
  spec.topic_separation = 1.0;
  spec.dominant_weight = 1.0;
  spec.seed = 31;
  const auto synth = generate(spec);
  auto config = config_k(2, 8);
  config.use_groups = false;
  const auto [model, stats] = train(synth.corpus, build_vocabulary(synth.corpus), config);
  const auto match = match_topics(synth.truth, model);
  for (const auto d : match.distances) EXPECT_LT(d, 0.05);
}

TEST(TopTags, SingleTopicOrdersByFrequency) {
  const auto corpus = corpus_of({{"1", "u", {"c", "a", "b"}, {}},
                                 {"2", "u", {"a", "b"}, {}},
                                 {"3", "u", {"a"}, {}}});
  const auto vocab = build_vocabulary(corpus);
  const auto [model, stats] = train(corpus, vocab, config_k(1));
  const auto rows = top_tags_per_topic(model, 10);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].tag, "a");
  EXPECT_EQ(rows[1].tag, "b");
  EXPECT_EQ(rows[2].tag, "c");
  const auto top1 = top_tags_per_topic(model, 1);
  ASSERT_EQ(top1.size(), 1u);
  EXPECT_EQ(top1[0].tag, "a");
  EXPECT_THROW(top_tags_per_topic(model, 0), ConfigError);
}

TEST(TopTags, TiesByIndexAndBoundedMass) {
  const auto corpus = small_random_corpus(21, 100);
  auto config = config_k(3, 2);
  config.max_iters = 20;
  const auto [model, stats] = train(corpus, build_vocabulary(corpus), config);
  const auto rows = top_tags_per_topic(model, 5);
  ASSERT_EQ(rows.size(), 15u);
  for (std::size_t z = 0; z < 3; ++z) {
    double sum = 0.0;
    for (std::size_t r = 0; r < 5; ++r) {
      sum += rows[z * 5 + r].probability;
      if (r > 0) EXPECT_GE(rows[z * 5 + r - 1].probability, rows[z * 5 + r].probability);
    }
    EXPECT_LE(sum, 1.0 + 1e-12);
  }
  // Equal probabilities keep vocabulary order.
  auto flat = model;
  for (auto& v : flat.p_t_given_z.data()) v = 1.0 / static_cast<double>(flat.p_t_given_z.rows());
  const auto tied = top_tags_per_topic(flat, 3);
  EXPECT_EQ(tied[0].tag, flat.vocab.tags.name_of(0));
  EXPECT_EQ(tied[1].tag, flat.vocab.tags.name_of(1));
}

TEST(ModelFile, RoundTripIsLossless) {
  const auto corpus = small_random_corpus(5, 60);
  auto config = config_k(3, 4);
  config.max_iters = 10;
  const auto [model, stats] = train(corpus, build_vocabulary(corpus), config);
  std::stringstream buf;
  save_model(model, buf);
  const auto loaded = load_model(buf);
  EXPECT_EQ(loaded.p_t_given_z, model.p_t_given_z);
  EXPECT_EQ(loaded.p_g_given_z, model.p_g_given_z);
  EXPECT_EQ(loaded.p_z_given_u, model.p_z_given_u);
  EXPECT_EQ(loaded.p_u, model.p_u);
  EXPECT_EQ(loaded.vocab, model.vocab);
  EXPECT_EQ(loaded.config, model.config);
}

TEST(ModelFile, RejectsOtherVersionsAndGarbage) {
  const auto corpus = corpus_of({{"1", "u", {"t"}, {}}});
  const auto model = init_params(build_vocabulary(corpus), corpus, config_k(1));
  std::stringstream buf;
  save_model(model, buf);
  auto text = buf.str();
  text.replace(text.find("\"format_version\": 1"), 19, "\"format_version\": 2");
  std::istringstream bad(text);
  EXPECT_THROW(load_model(bad), InputError);
  std::istringstream garbage("{\"format_version\": 1}");
  EXPECT_THROW(load_model(garbage), InputError);
}

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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "tagrank/cli.hpp"
#include "tagrank/corpus.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "tagrank");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = tagrank::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tagrank_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Small hand corpus: two photographers and a car fan searching "newborn"/"beetle".
  void write_fixture() {
    write(path("corpus.jsonl"),
          R"({"id": "p1", "owner": "ann", "tags": ["newborn", "baby", "portrait"]})" "\n"
          R"({"id": "p2", "owner": "ann", "tags": ["newborn", "baby"]})" "\n"
          R"({"id": "p3", "owner": "bob", "tags": ["newborn", "kitten", "cat"]})" "\n"
          R"({"id": "p4", "owner": "bob", "tags": ["cat", "kitten"]})" "\n"
          R"({"id": "p5", "owner": "cy", "tags": ["beetle", "vw", "car"]})" "\n"
          R"({"id": "p6", "owner": "cy", "tags": ["car", "vw"], "groups": ["cars"]})" "\n"
          R"({"id": "p7", "owner": "dee", "tags": ["newborn", "baby", "family"]})" "\n");
    write(path("contacts.csv"), "user,contact\nann,dee\ndee,bob\nann,ann\n");
    write(path("labels.csv"),
          "image_id,label\np1,relevant\np2,relevant\np3,not_relevant\np7,relevant\n");
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({"train", "--corpus", "x"}).code, 2);
  const auto r = run({"train", "--corpus", "x", "--out", "y", "--wat"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST_F(CliTest, IngestCheck) {
  write_fixture();
  const auto r = run({"ingest-check", "--corpus", path("corpus.jsonl"), "--contacts",
                      path("contacts.csv"), "--labels", path("labels.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("images,7"), std::string::npos);
  EXPECT_NE(r.out.find("self_loops_dropped,1"), std::string::npos);
  EXPECT_NE(r.out.find("relevant,3"), std::string::npos);
  EXPECT_EQ(run({"ingest-check", "--corpus", path("missing.jsonl")}).code, 2);
  write(path("bad.jsonl"), "{\"id\": 1}\n");
  EXPECT_EQ(run({"ingest-check", "--corpus", path("bad.jsonl")}).code, 2);
}

TEST_F(CliTest, TrainIsByteReproducible) {
  write_fixture();
  const std::vector<std::string> common{"train", "--corpus", path("corpus.jsonl"), "--topics",
                                        "3", "--seed", "7", "--quiet"};
  auto a = common;
  a.insert(a.end(), {"--out", path("a.model")});
  auto b = common;
  b.insert(b.end(), {"--out", path("b.model")});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  EXPECT_EQ(slurp(path("a.model")), slurp(path("b.model")));
  EXPECT_FALSE(fs::exists(path("a.model.tmp")));
}

TEST_F(CliTest, ConfigErrorsLeaveNoOutput) {
  write_fixture();
  EXPECT_EQ(run({"train", "--corpus", path("corpus.jsonl"), "--topics", "0", "--out",
                 path("m.model")})
                .code,
            3);
  EXPECT_FALSE(fs::exists(path("m.model")));
  EXPECT_EQ(run({"train", "--corpus", path("corpus.jsonl"), "--rel-tol", "-1", "--out",
                 path("m.model")})
                .code,
            3);
  EXPECT_EQ(run({"filter-contacts", "--contacts", path("contacts.csv"), "--corpus",
                 path("corpus.jsonl"), "--user", "ann", "--level", "3"})
                .code,
            3);
}

TEST_F(CliTest, TopicsRankAndColdUser) {
  write_fixture();
  ASSERT_EQ(run({"train", "--corpus", path("corpus.jsonl"), "--topics", "2", "--seed", "1",
                 "--out", path("m.model"), "--quiet"})
                .code,
            0);
  const auto topics = run({"topics", "--model", path("m.model"), "--top", "3"});
  ASSERT_EQ(topics.code, 0) << topics.err;
  EXPECT_EQ(topics.out.rfind("topic,rank,tag,probability\n", 0), 0u);
  EXPECT_EQ(run({"topics", "--model", path("m.model"), "--format", "table"}).code, 0);

  const auto rank = run({"rank", "--model", path("m.model"), "--corpus", path("corpus.jsonl"),
                         "--user", "ann", "--query-tag", "newborn", "--out", path("r.csv")});
  ASSERT_EQ(rank.code, 0) << rank.err;
  std::istringstream lines(slurp(path("r.csv")));
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "rank,image_id,score");
  std::size_t rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 4u);  // images tagged newborn

  const auto again = run({"rank", "--model", path("m.model"), "--corpus", path("corpus.jsonl"),
                          "--user", "ann", "--query-tag", "newborn"});
  EXPECT_EQ(again.out, slurp(path("r.csv")));

  const auto cold = run({"rank", "--model", path("m.model"), "--corpus", path("corpus.jsonl"),
                         "--user", "cy", "--profile-mode", "related", "--query-tag", "newborn",
                         "--out", path("cold.csv")});
  EXPECT_EQ(cold.code, 4);
  EXPECT_FALSE(fs::exists(path("cold.csv")));
  EXPECT_EQ(run({"rank", "--model", path("m.model"), "--corpus", path("corpus.jsonl"), "--user",
                 "nobody"})
                .code,
            4);

  write(path("profile.json"), R"({"user": "zed", "tag_counts": {"Baby": 2, "cat": 1}})");
  EXPECT_EQ(run({"rank", "--model", path("m.model"), "--corpus", path("corpus.jsonl"),
                 "--profile", path("profile.json"), "--top", "2"})
                .code,
            0);
}

TEST_F(CliTest, FilterAndEvaluate) {
  write_fixture();
  const auto filtered =
      run({"filter-contacts", "--contacts", path("contacts.csv"), "--corpus",
           path("corpus.jsonl"), "--user", "ann", "--level", "2", "--query-tag", "newborn",
           "--out", path("f.csv"), "--quiet"});
  ASSERT_EQ(filtered.code, 0) << filtered.err;
  EXPECT_EQ(slurp(path("f.csv")), "image_id,owner\np3,bob\np7,dee\n");

  const auto report = run({"eval", "--labels", path("labels.csv"), "--results", path("f.csv"),
                           "--baseline-precision", "0.75"});
  ASSERT_EQ(report.code, 0) << report.err;
  EXPECT_EQ(report.out,
            "relevant,not_relevant,precision,recall,r_precision,improvement_pct\n"
            "1,1,0.5,0.3333333333333333,,-33\n");

  const auto plain = run({"eval", "--labels", path("labels.csv")});
  EXPECT_EQ(plain.out,
            "relevant,not_relevant,precision,recall,r_precision,improvement_pct\n"
            "3,1,0.75,,,\n");
  EXPECT_EQ(run({"eval", "--labels", path("labels.csv"), "--format", "xml"}).code, 3);
}

TEST_F(CliTest, SynthOutputLoadsBack) {
  const auto r = run({"synth", "--out-corpus", path("s.jsonl"), "--out-truth", path("t.json"),
                      "--images", "50", "--topics", "2", "--tags-per-image", "1:3",
                      "--groups-per-image", "0:1", "--vocab-groups", "4", "--seed", "3",
                      "--quiet"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(tagrank::load_corpus(fs::path(path("s.jsonl"))).size(), 50u);
  EXPECT_NE(slurp(path("t.json")).find("\"planted\": true"), std::string::npos);
  EXPECT_EQ(run({"synth", "--out-corpus", path("x.jsonl"), "--tags-per-image", "a:b"}).code, 3);
}

TEST(CliBinary, ReportsUsageOnBadSubcommand) {
  const std::string cmd = std::string(TAGRANK_CLI_PATH) + " nonsense >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
}

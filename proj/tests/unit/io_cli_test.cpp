/* Copyright 2026 The semls Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "semls/cli.hpp"
#include "semls/io.hpp"

namespace semls {
namespace {

const std::string kFixtures = SEMLS_FIXTURE_DIR;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const CategoryRegistry& reg() {
  static const CategoryRegistry r = CategoryRegistry::with_defaults();
  return r;
}

TEST(Io, ShortestNumberFormat) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(4.0), "4");
  EXPECT_EQ(format_double(0.1 + 0.2), "0.30000000000000004");
  EXPECT_EQ(format_double(1e-3), "0.001");
}

TEST(Io, MinimalFixture) {
  const AnnotationFile f = load_annotations(kFixtures + "/minimal.jsonl", reg());
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].image_id, "only");
  EXPECT_EQ(f[0].width, 64);
  EXPECT_EQ(f[0].height, 48);
  ASSERT_EQ(f[0].segments.size(), 1u);
  const SemLS& s = f[0].segments[0].line;
  EXPECT_EQ(s.p1, (Point{4.5, 40.25}));
  EXPECT_EQ(s.p2, (Point{60, 8}));
  EXPECT_EQ(s.category, reg().index_of("pole"));
  EXPECT_FALSE(s.confidence.has_value());
}

TEST(Io, RoundTripIsByteIdentical) {
  const std::string original = slurp(kFixtures + "/roundtrip.jsonl");
  std::stringstream in(original), out;
  save_annotations(out, load_annotations(in, reg()), reg());
  EXPECT_EQ(out.str(), original);
}

TEST(Io, EndpointOutsideImageIsRejectedWithLine) {
  std::stringstream in(
      "{\"image_id\":\"a\",\"width\":10,\"height\":10,\"segments\":[]}\n"
      "\n"
      "{\"image_id\":\"b\",\"width\":10,\"height\":10,\"segments\":"
      "[{\"x1\":11,\"y1\":0,\"x2\":5,\"y2\":5,\"category\":\"pole\"}]}\n");
  try {
    load_annotations(in, reg());
    FAIL() << "accepted x1 > width";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("x1"), std::string::npos) << msg;
  }
}

TEST(Io, OtherMalformedRecords) {
  auto bad = [](const std::string& text) {
    std::stringstream in(text);
    EXPECT_THROW(load_annotations(in, reg()), ValidationError) << text;
  };
  bad("not json\n");
  bad("{\"image_id\":\"a\",\"width\":10,\"height\":10}\n");
  bad("{\"image_id\":\"a\",\"width\":10,\"height\":10,\"segments\":"
      "[{\"x1\":1,\"y1\":1,\"x2\":5,\"y2\":5,\"category\":\"unicorn\"}]}\n");
  bad("{\"image_id\":\"a\",\"width\":10,\"height\":10,\"segments\":"
      "[{\"x1\":1,\"y1\":1,\"x2\":5,\"y2\":5,\"category\":\"pole\",\"score\":1.5}]}\n");
  bad("{\"image_id\":\"a\",\"width\":10,\"height\":10,\"segments\":"
      "[{\"x1\":1,\"y1\":1,\"x2\":1,\"y2\":1,\"category\":\"pole\"}]}\n");
}

TEST(Io, StatsHandCounts) {
  const DatasetStats st = dataset_stats(load_annotations(kFixtures + "/stats10.jsonl", reg()), reg());
  EXPECT_EQ(st.per_category[std::size_t(reg().index_of("building"))], 9u);
  EXPECT_EQ(st.per_category[std::size_t(reg().index_of("pole"))], 10u);
  EXPECT_EQ(st.per_category[std::size_t(reg().index_of("curb"))], 7u);
  EXPECT_EQ(st.per_category[std::size_t(reg().index_of("grass"))], 5u);
  EXPECT_EQ(st.total, 31u);
  EXPECT_DOUBLE_EQ(st.labels_per_image, 3.1);
}

TEST(Io, StatsTwoImages) {
  std::stringstream in(
      "{\"image_id\":\"a\",\"width\":10,\"height\":10,\"segments\":["
      "{\"x1\":1,\"y1\":1,\"x2\":5,\"y2\":5,\"category\":\"pole\"},"
      "{\"x1\":1,\"y1\":1,\"x2\":5,\"y2\":6,\"category\":\"pole\"},"
      "{\"x1\":1,\"y1\":1,\"x2\":5,\"y2\":7,\"category\":\"pole\"}]}\n"
      "{\"image_id\":\"b\",\"width\":10,\"height\":10,\"segments\":["
      "{\"x1\":1,\"y1\":1,\"x2\":5,\"y2\":5,\"category\":\"curb\"},"
      "{\"x1\":1,\"y1\":1,\"x2\":5,\"y2\":6,\"category\":\"curb\"},"
      "{\"x1\":1,\"y1\":1,\"x2\":5,\"y2\":7,\"category\":\"curb\"},"
      "{\"x1\":1,\"y1\":1,\"x2\":5,\"y2\":8,\"category\":\"curb\"},"
      "{\"x1\":1,\"y1\":1,\"x2\":5,\"y2\":9,\"category\":\"curb\"}]}\n");
  EXPECT_DOUBLE_EQ(dataset_stats(load_annotations(in, reg()), reg()).labels_per_image, 4.0);
}

TEST(Io, CalibrationRejectsNonRotation) {
  std::stringstream ok(
      "{\"image_id\":\"a\",\"fx\":1,\"fy\":1,\"cx\":0,\"cy\":0,"
      "\"R\":[1,0,0,0,1,0,0,0,1],\"t\":[0,0,0]}\n");
  EXPECT_EQ(load_calibration(ok).size(), 1u);
  std::stringstream bad(
      "{\"image_id\":\"a\",\"fx\":1,\"fy\":1,\"cx\":0,\"cy\":0,"
      "\"R\":[2,0,0,0,1,0,0,0,1],\"t\":[0,0,0]}\n");
  EXPECT_THROW(load_calibration(bad), ValidationError);
}

TEST(Io, PgmRoundTrip) {
  GrayImage img(3, 2);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = std::uint8_t(40 * i);
  std::stringstream s;
  write_pgm(s, img);
  const GrayImage back = read_pgm(s);
  EXPECT_EQ(back.width, 3u);
  EXPECT_EQ(back.pixels, img.pixels);
  std::stringstream comment("P5\n# hello\n2 1\n255\nab");
  EXPECT_EQ(read_pgm(comment).pixels, (std::vector<std::uint8_t>{'a', 'b'}));
  std::stringstream truncated("P5\n4 4\n255\nab");
  EXPECT_THROW(read_pgm(truncated), ValidationError);
}

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

TEST(Cli, StatsTable) {
  const CliRun r = run({"stats", "--annotations", kFixtures + "/stats10.jsonl"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("pole"), std::string::npos);
  EXPECT_NE(r.out.find("31"), std::string::npos);
  EXPECT_NE(r.out.find("3.1"), std::string::npos);
}

TEST(Cli, AclPairs) {
  const CliRun r = run({"acl", "--pairs", kFixtures + "/pairs.jsonl"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("pair 0: acl=1.000000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("pair 1: acl=0.640000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("pair 2: acl=0.000000"), std::string::npos) << r.out;
}

TEST(Cli, EvalIdentical) {
  const CliRun r = run({"eval", "--gt", kFixtures + "/eval_gt.jsonl", "--det", kFixtures + "/eval_gt.jsonl"});
  // Labels without a score count as confidence 1.
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("mAP@0.5=1.000000"), std::string::npos) << r.out;
}

TEST(Cli, WritesCsv) {
  const auto path = (std::filesystem::temp_directory_path() / "semls_cli_stats.csv").string();
  const CliRun r = run({"--out", path, "stats", "--annotations", kFixtures + "/stats10.jsonl"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  const std::string csv = slurp(path);
  EXPECT_NE(csv.find("pole"), std::string::npos);
  std::filesystem::remove(path);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"stats"}).code, kExitUsage);
  EXPECT_EQ(run({"stats", "--annotations", "/nonexistent/file.jsonl"}).code, kExitValidation);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(Cli, EmptyGroundTruthIsDegenerate) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto gt = (dir / "semls_empty_gt.jsonl").string();
  std::ofstream(gt) << "{\"image_id\":\"a\",\"width\":10,\"height\":10,\"segments\":[]}\n";
  const CliRun r = run({"eval", "--gt", gt, "--det", gt});
  EXPECT_EQ(r.code, kExitDegenerate) << r.out << r.err;
  std::filesystem::remove(gt);
}

TEST(Cli, LossCheck) {
  const CliRun r = run({"losscheck", "--seed", "3"});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
}

}  // namespace
}  // namespace semls

// Copyright 2026 The totalign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "totalign/io.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "totalign/synth.hpp"

namespace totalign::io {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("totalign_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(FormatRealTest, ShortestRoundTrip) {
  EXPECT_EQ(FormatReal(1.0), "1");
  EXPECT_EQ(FormatReal(0.1), "0.1");
  EXPECT_EQ(FormatReal(-2.5e-300), "-2.5e-300");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(std::stod(FormatReal(x)), x);
  }
}

TEST(FeatureFileTest, ParseSimple) {
  const Matrix m = ParseFeatureText("2 3\n1 2 3\n-0.5 1e-3 4\n");
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 3);
  EXPECT_EQ(m(1, 1), 1e-3);
  // Extra spaces, tabs and CRLF are tolerated.
  EXPECT_EQ(ParseFeatureText("1 2\r\n  7\t 8 \r\n"), (Matrix(1, 2) << 7, 8).finished());
}

TEST(FeatureFileTest, ErrorsNameTheLine) {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      ParseFeatureText(text, "f.txt");
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find("f.txt:"), std::string::npos);
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of(""), 1u);
  EXPECT_EQ(line_of("2\n1 2\n"), 1u);
  EXPECT_EQ(line_of("0 2\n"), 1u);
  EXPECT_EQ(line_of("2 2\n1 2\n3\n"), 3u);
  EXPECT_EQ(line_of("2 2\n1 x\n3 4\n"), 2u);
  EXPECT_EQ(line_of("2 2\n1 2\n3 nan\n"), 3u);
  EXPECT_EQ(line_of("1 2\n1 inf\n"), 2u);
  EXPECT_EQ(line_of("2 2\n1 2\n"), 3u);
  EXPECT_EQ(line_of("1 2\n1 2\n3 4\n"), 3u);
}

TEST(FeatureFileTest, SerializeParseRoundTrip) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 100.0);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix m(1 + trial % 7, 1 + trial % 5);
    for (Index k = 0; k < m.size(); ++k) m.data()[k] = n(rng);
    const std::string text = FormatFeatureText(m);
    EXPECT_EQ(ParseFeatureText(text), m);
    EXPECT_EQ(FormatFeatureText(ParseFeatureText(text)), text);
  }
  // Whitespace variations normalize to the canonical layout.
  EXPECT_EQ(FormatFeatureText(ParseFeatureText("2  1\n 0.50\n\t-1.0\n")), "2 1\n0.5\n-1\n");
}

TEST(FeatureFileTest, FileRoundTripAndMissingFile) {
  const fs::path dir = TempDir("features");
  const FeatureSequence seq((Matrix(2, 2) << 1.25, -3, 0, 7).finished());
  WriteFeatureFile(dir / "a.txt", seq);
  EXPECT_FALSE(fs::exists(dir / "a.txt.tmp"));
  EXPECT_EQ(ReadText(dir / "a.txt"), "2 2\n1.25 -3\n0 7\n");
  EXPECT_EQ(ReadFeatureFile(dir / "a.txt").data(), seq.data());
  EXPECT_THROW(ReadFeatureFile(dir / "missing.txt"), InvalidArgument);
}

TEST(CouplingCsvTest, FormatAndParse) {
  Matrix g(2, 3);
  g << 0.25, 0, 0.125, 1e-20, 0.5, 0.125;
  const std::string csv = FormatCouplingCsv(g);
  EXPECT_EQ(csv, "0.25,0,0.125\n1e-20,0.5,0.125\n");
  EXPECT_EQ(ParseCouplingCsv(csv), g);
  EXPECT_EQ(FormatCouplingCsv(Matrix::Ones(1, 1)), "1\n");
}

TEST(CouplingCsvTest, Errors) {
  EXPECT_THROW(ParseCouplingCsv(""), ParseError);
  EXPECT_THROW(ParseCouplingCsv("1,2\n3\n"), ParseError);
  EXPECT_THROW(ParseCouplingCsv("0.5,-0.1\n"), ParseError);
  EXPECT_THROW(ParseCouplingCsv("0.5,,0.1\n"), ParseError);
  try {
    ParseCouplingCsv("0.1,0.2\n0.3,abc\n", "c.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(HeatmapTest, LinearGrayMapping) {
  Matrix g(2, 2);
  g << 0.5, 0, 0, 0.5;
  EXPECT_EQ(FormatHeatmapPgm(g), "P2\n2 2\n255\n0 255\n255 0\n");
  EXPECT_EQ(FormatHeatmapPgm(Matrix::Constant(2, 3, 1.0 / 6.0)), "P2\n3 2\n255\n0 0 0\n0 0 0\n");
  Matrix half(1, 3);
  half << 0.2, 0.1, 0.0;
  EXPECT_EQ(FormatHeatmapPgm(half), "P2\n3 1\n255\n0 128 255\n");
}

TEST(HeatmapTest, DimensionsAndRange) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix g(7, 4);
  for (Index k = 0; k < g.size(); ++k) g.data()[k] = u(rng);
  const std::string pgm = FormatHeatmapPgm(g);
  std::istringstream in(pgm);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  EXPECT_EQ(magic, "P2");
  EXPECT_EQ(w, 4);
  EXPECT_EQ(h, 7);
  EXPECT_EQ(maxval, 255);
  int px = 0, count = 0;
  while (in >> px) {
    EXPECT_GE(px, 0);
    EXPECT_LE(px, 255);
    ++count;
  }
  EXPECT_EQ(count, 28);
}

TEST(HeatmapTest, RejectsEmptyOrMassless) {
  EXPECT_THROW(FormatHeatmapPgm(Matrix(0, 0)), InvalidArgument);
  EXPECT_THROW(FormatHeatmapPgm(Matrix::Zero(2, 2)), InvalidArgument);
}

TEST(LabelFileTest, ParseAndFormat) {
  EXPECT_EQ(ParseLabelText("101 3 4 102\n"), (std::vector<int>{101, 3, 4, 102}));
  EXPECT_EQ(ParseLabelText("101\n5\n102"), (std::vector<int>{101, 5, 102}));
  EXPECT_EQ(FormatLabelText({101, 7, 102}), "101 7 102\n");
  EXPECT_THROW(ParseLabelText(""), ParseError);
  EXPECT_THROW(ParseLabelText("101 x 102"), ParseError);
  EXPECT_THROW(ParseLabelText("101 -2 102"), ParseError);
}

TEST(WeightsFileTest, JsonRoundTrip) {
  SeededGenerator gen(4);
  AdapterWeights w = RandomAdapterWeights(gen, 5, 7, 0.25);
  w.ln_projected.bias.setConstant(0.3);
  const fs::path dir = TempDir("weights");
  WriteAdapterWeights(dir / "w.json", w);
  const AdapterWeights r = ReadAdapterWeights(dir / "w.json");
  EXPECT_EQ(r.s, 0.25);
  EXPECT_EQ(r.fc1.weight, w.fc1.weight);
  EXPECT_EQ(r.fc1.bias, w.fc1.bias);
  EXPECT_EQ(r.fc3.weight, w.fc3.weight);
  EXPECT_EQ(r.ln_projected.bias, w.ln_projected.bias);
  EXPECT_EQ(r.vocab_size(), 7);
}

TEST(WeightsFileTest, RejectsMalformed) {
  SeededGenerator gen(5);
  auto j = AdapterWeightsToJson(RandomAdapterWeights(gen, 3, 4));
  auto missing = j;
  missing.erase("fc3");
  EXPECT_THROW(AdapterWeightsFromJson(missing), InvalidArgument);
  auto ragged = j;
  ragged["fc1"]["weight"][1] = nlohmann::json::array({1.0});
  EXPECT_THROW(AdapterWeightsFromJson(ragged), InvalidArgument);
  auto wrong_dim = j;
  wrong_dim["ln_fused"]["gain"] = nlohmann::json::array({1.0});
  EXPECT_THROW(AdapterWeightsFromJson(wrong_dim), InvalidArgument);
  const fs::path dir = TempDir("weights_bad");
  WriteTextAtomic(dir / "bad.json", "{not json");
  EXPECT_THROW(ReadAdapterWeights(dir / "bad.json"), InvalidArgument);
}

}  // namespace
}  // namespace totalign::io

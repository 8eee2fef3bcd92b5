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

// Plain-text file formats:
//   feature file  "rows cols" header, then one space-separated row per line
//   coupling CSV  comma-separated rows, no header
//   heatmap       P2 graymap, maxval 255
//   labels        whitespace-separated integer ids on one line
//   weights       JSON object (see ReadAdapterWeights)
// Reals are written in the shortest form that parses back to the same double.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "totalign/common.hpp"
#include "totalign/geometry.hpp"
#include "totalign/transfer.hpp"

namespace totalign::io {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& message)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline std::string FormatReal(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::string_view> SplitFields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  if (sep == ' ') {
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      if (pos >= line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
      out.push_back(line.substr(pos, end - pos));
      pos = end;
    }
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const std::size_t end = line.find(sep, start);
    std::string_view field = line.substr(start, end - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    out.push_back(field);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

template <typename T>
bool ParseNumber(std::string_view field, T& value) {
  if (field.empty()) return false;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  return res.ec == std::errc() && res.ptr == field.data() + field.size();
}

// Splits on '\n', dropping one trailing newline and any '\r'.
inline std::vector<std::string> SplitLines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

}  // namespace detail

inline std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to a sibling temporary file and renames it over `path`.
inline void WriteTextAtomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw InvalidArgument("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Matrix ParseFeatureText(const std::string& text, const std::string& source = "<features>") {
  const auto lines = detail::SplitLines(text);
  if (lines.empty()) throw ParseError(source, 1, "missing 'rows cols' header");
  const auto header = detail::SplitFields(lines[0], ' ');
  long rows = 0;
  long cols = 0;
  if (header.size() != 2 || !detail::ParseNumber(header[0], rows) ||
      !detail::ParseNumber(header[1], cols) || rows < 1 || cols < 1) {
    throw ParseError(source, 1, "header must be two positive integers 'rows cols'");
  }
  if (lines.size() != static_cast<std::size_t>(rows) + 1) {
    throw ParseError(source, std::min(lines.size(), static_cast<std::size_t>(rows) + 1) + 1,
                     "expected " + std::to_string(rows) + " data lines, found " +
                         std::to_string(lines.size() - 1));
  }
  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    const std::size_t lineno = static_cast<std::size_t>(i) + 2;
    const auto fields = detail::SplitFields(lines[static_cast<std::size_t>(i) + 1], ' ');
    if (fields.size() != static_cast<std::size_t>(cols)) {
      throw ParseError(source, lineno,
                       "expected " + std::to_string(cols) + " fields, found " +
                           std::to_string(fields.size()));
    }
    for (long j = 0; j < cols; ++j) {
      double v = 0.0;
      if (!detail::ParseNumber(fields[static_cast<std::size_t>(j)], v) || !std::isfinite(v)) {
        throw ParseError(source, lineno,
                         "field " + std::to_string(j + 1) + " is not a finite real: '" +
                             std::string(fields[static_cast<std::size_t>(j)]) + "'");
      }
      m(i, j) = v;
    }
  }
  return m;
}

inline std::string FormatFeatureText(const Matrix& m) {
  std::string out = std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ' ';
      out += FormatReal(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline FeatureSequence ReadFeatureFile(const std::filesystem::path& path,
                                       std::string modality = {}) {
  return FeatureSequence(ParseFeatureText(ReadText(path), path.string()), std::move(modality));
}

inline void WriteFeatureFile(const std::filesystem::path& path, const FeatureSequence& seq) {
  WriteTextAtomic(path, FormatFeatureText(seq.data()));
}

inline std::string FormatCouplingCsv(const Matrix& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += FormatReal(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline Matrix ParseCouplingCsv(const std::string& text, const std::string& source = "<csv>") {
  const auto lines = detail::SplitLines(text);
  if (lines.empty()) throw ParseError(source, 1, "empty coupling matrix");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto fields = detail::SplitFields(lines[i], ',');
    if (!rows.empty() && fields.size() != rows.front().size()) {
      throw ParseError(source, i + 1,
                       "expected " + std::to_string(rows.front().size()) + " columns, found " +
                           std::to_string(fields.size()));
    }
    std::vector<double> row;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      double v = 0.0;
      if (!detail::ParseNumber(fields[j], v) || !std::isfinite(v) || v < 0.0) {
        throw ParseError(source, i + 1,
                         "column " + std::to_string(j + 1) +
                             " is not a finite nonnegative real: '" + std::string(fields[j]) +
                             "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return m;
}

// One pixel per entry: the largest entry maps to 0 (black), zero to 255.
inline std::string FormatHeatmapPgm(const Matrix& m) {
  ::totalign::detail::Require(m.rows() >= 1 && m.cols() >= 1, "heatmap: empty matrix");
  ::totalign::detail::Require((m.array() >= 0.0).all() && ::totalign::detail::AllFinite(m),
                              "heatmap: entries must be finite and >= 0");
  const double peak = m.maxCoeff();
  ::totalign::detail::Require(peak > 0.0, "heatmap: matrix has no mass");
  std::string out = "P2\n" + std::to_string(m.cols()) + " " + std::to_string(m.rows()) + "\n255\n";
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ' ';
      const long px = std::lround(255.0 * (1.0 - m(i, j) / peak));
      out += std::to_string(std::clamp(px, 0L, 255L));
    }
    out += '\n';
  }
  return out;
}

inline std::vector<int> ParseLabelText(const std::string& text, const std::string& source = "<labels>") {
  const auto lines = detail::SplitLines(text);
  std::vector<int> ids;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (auto field : detail::SplitFields(lines[i], ' ')) {
      int id = 0;
      if (!detail::ParseNumber(field, id) || id < 0) {
        throw ParseError(source, i + 1, "not a nonnegative integer id: '" + std::string(field) + "'");
      }
      ids.push_back(id);
    }
  }
  if (ids.empty()) throw ParseError(source, 1, "no label ids");
  return ids;
}

inline std::string FormatLabelText(const std::vector<int>& ids) {
  std::string out;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (k) out += ' ';
    out += std::to_string(ids[k]);
  }
  return out + "\n";
}

// --- adapter weights as JSON ---------------------------------------------
//
// {
//   "s": 1.0,
//   "fc1": {"weight": [[...], ...], "bias": [...]},   vocab x d_a
//   "fc2": {...},                                      d_t x d_a
//   "fc3": {...},                                      d_a x d_t
//   "ln_projected": {"gain": [...], "bias": [...]},   length d_t
//   "ln_fused": {"gain": [...], "bias": [...]}        length d_a
// }

namespace detail {

inline nlohmann::json ToJson(const Vector& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Index k = 0; k < v.size(); ++k) j.push_back(v[k]);
  return j;
}

inline nlohmann::json ToJson(const Matrix& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) j.push_back(ToJson(Vector(m.row(i).transpose())));
  return j;
}

inline Vector VectorFromJson(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw InvalidArgument("weights: " + what + " must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw InvalidArgument("weights: " + what + " must hold numbers");
    v[static_cast<Index>(k)] = j[k].get<double>();
  }
  return v;
}

inline Matrix MatrixFromJson(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw InvalidArgument("weights: " + what + " must be a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector row = VectorFromJson(j[i], what + " row " + std::to_string(i));
    if (static_cast<std::size_t>(row.size()) != cols) {
      throw InvalidArgument("weights: " + what + " rows have unequal length");
    }
    m.row(static_cast<Index>(i)) = row.transpose();
  }
  return m;
}

inline const nlohmann::json& Field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw InvalidArgument(std::string("weights: missing field '") + key + "'");
  }
  return j.at(key);
}

}  // namespace detail

inline nlohmann::json AdapterWeightsToJson(const AdapterWeights& w) {
  auto affine = [](const AffineMap& m) {
    return nlohmann::json{{"weight", detail::ToJson(m.weight)}, {"bias", detail::ToJson(m.bias)}};
  };
  auto norm = [](const LayerNormParams& p) {
    return nlohmann::json{{"gain", detail::ToJson(p.gain)}, {"bias", detail::ToJson(p.bias)}};
  };
  return nlohmann::json{{"s", w.s},
                        {"fc1", affine(w.fc1)},
                        {"fc2", affine(w.fc2)},
                        {"fc3", affine(w.fc3)},
                        {"ln_projected", norm(w.ln_projected)},
                        {"ln_fused", norm(w.ln_fused)}};
}

inline AdapterWeights AdapterWeightsFromJson(const nlohmann::json& j) {
  auto affine = [](const nlohmann::json& o, const char* name) {
    return AffineMap{detail::MatrixFromJson(detail::Field(o, "weight"), std::string(name) + ".weight"),
                     detail::VectorFromJson(detail::Field(o, "bias"), std::string(name) + ".bias")};
  };
  auto norm = [](const nlohmann::json& o, const char* name) {
    return LayerNormParams{detail::VectorFromJson(detail::Field(o, "gain"), std::string(name) + ".gain"),
                           detail::VectorFromJson(detail::Field(o, "bias"), std::string(name) + ".bias")};
  };
  AdapterWeights w;
  const auto& s = detail::Field(j, "s");
  if (!s.is_number()) throw InvalidArgument("weights: s must be a number");
  w.s = s.get<double>();
  w.fc1 = affine(detail::Field(j, "fc1"), "fc1");
  w.fc2 = affine(detail::Field(j, "fc2"), "fc2");
  w.fc3 = affine(detail::Field(j, "fc3"), "fc3");
  w.ln_projected = norm(detail::Field(j, "ln_projected"), "ln_projected");
  w.ln_fused = norm(detail::Field(j, "ln_fused"), "ln_fused");
  w.Validate();
  return w;
}

inline AdapterWeights ReadAdapterWeights(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadText(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
  return AdapterWeightsFromJson(j);
}

inline void WriteAdapterWeights(const std::filesystem::path& path, const AdapterWeights& w) {
  WriteTextAtomic(path, AdapterWeightsToJson(w).dump(1) + "\n");
}

}  // namespace totalign::io

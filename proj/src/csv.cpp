/*
 * Copyright 2026 The dpofl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "dpofl/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dpofl/errors.hpp"

namespace dpofl {

std::string FormatDouble(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
  }
  return fields;
}

void WriteMatrixCsv(const std::filesystem::path& path,
                    const Eigen::MatrixXd& m) {
  std::string out =
      "# schema_version=" + std::to_string(kCsvSchemaVersion) + "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += FormatDouble(m(i, j));
    }
    out += '\n';
  }
  WriteTextFile(path, out);
}

Eigen::MatrixXd ReadMatrixCsv(const std::filesystem::path& path) {
  std::istringstream in(ReadTextFile(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    for (const auto& field : SplitCsvLine(line)) {
      try {
        row.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw InvalidArgument("non-numeric field '" + field + "' in " +
                              path.string());
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InvalidArgument("ragged matrix in " + path.string());
    }
    rows.push_back(std::move(row));
  }
  const Eigen::Index cols = rows.empty() ? 0 : rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

CsvWriter::CsvWriter(std::vector<std::string> header)
    : header_(std::move(header)) {}

void CsvWriter::AddComment(const std::string& text) {
  comments_.push_back(text);
}

void CsvWriter::AddRow(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) line += ',';
    line += fields[i];
  }
  rows_.push_back(std::move(line));
}

std::string CsvWriter::str() const {
  std::string out =
      "# schema_version=" + std::to_string(kCsvSchemaVersion) + "\n";
  for (const auto& c : comments_) out += "# " + c + "\n";
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i > 0) out += ',';
    out += header_[i];
  }
  out += '\n';
  for (const auto& r : rows_) out += r + "\n";
  return out;
}

void CsvWriter::Save(const std::filesystem::path& path) const {
  WriteTextFile(path, str());
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dpofl

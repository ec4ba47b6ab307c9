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
#ifndef DPOFL_CSV_HPP_
#define DPOFL_CSV_HPP_

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dpofl {

inline constexpr int kCsvSchemaVersion = 1;

// Shortest round-trip decimal form ("%.17g").
std::string FormatDouble(double value);

std::vector<std::string> SplitCsvLine(std::string_view line);

// Plain numeric matrix, no header.
void WriteMatrixCsv(const std::filesystem::path& path,
                    const Eigen::MatrixXd& m);
Eigen::MatrixXd ReadMatrixCsv(const std::filesystem::path& path);

// Buffered writer for the experiment CSVs. Line 1 is always
// "# schema_version=<v>"; every field is written verbatim.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void AddComment(const std::string& text);
  void AddRow(const std::vector<std::string>& fields);
  std::string str() const;
  void Save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::string> comments_;
  std::vector<std::string> rows_;
};

void WriteTextFile(const std::filesystem::path& path, const std::string& text);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace dpofl

#endif  // DPOFL_CSV_HPP_

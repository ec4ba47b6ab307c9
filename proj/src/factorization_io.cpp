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
#include "dpofl/factorization_io.hpp"

#include <map>
#include <sstream>

#include "dpofl/csv.hpp"

namespace dpofl {

void SaveFactorization(const std::filesystem::path& dir,
                       const Factorization<double>& f) {
  std::filesystem::create_directories(dir);
  WriteMatrixCsv(dir / "B.csv", f.b);
  WriteMatrixCsv(dir / "C.csv", f.c);
  CsvWriter meta({"key", "value"});
  meta.AddRow({"R", std::to_string(f.dim())});
  meta.AddRow({"gamma", FormatDouble(f.gamma)});
  meta.AddRow({"frob_sq_b", FormatDouble(f.frob_sq_b)});
  meta.AddRow({"method_tag", std::string(ToString(f.method))});
  meta.AddRow({"converged", f.converged ? "1" : "0"});
  meta.AddRow({"iterations", std::to_string(f.iterations)});
  meta.Save(dir / "meta.csv");
}

Factorization<double> LoadFactorization(const std::filesystem::path& dir) {
  std::map<std::string, std::string> meta;
  std::istringstream in(ReadTextFile(dir / "meta.csv"));
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto fields = SplitCsvLine(line);
    if (fields.size() != 2) {
      throw InvalidArgument("malformed meta.csv row: " + line);
    }
    meta[fields[0]] = fields[1];
  }
  for (const char* key : {"R", "gamma", "frob_sq_b", "method_tag"}) {
    if (!meta.contains(key)) {
      throw InvalidArgument(std::string("meta.csv lacks key ") + key);
    }
  }
  Factorization<double> f;
  f.b = ReadMatrixCsv(dir / "B.csv");
  f.c = ReadMatrixCsv(dir / "C.csv");
  f.gamma = std::stod(meta["gamma"]);
  f.frob_sq_b = std::stod(meta["frob_sq_b"]);
  f.method = ParseFactorizationMethod(meta["method_tag"]);
  f.converged = meta.contains("converged") ? meta["converged"] == "1" : true;
  f.iterations = meta.contains("iterations") ? std::stoi(meta["iterations"]) : 0;
  const long rounds = std::stol(meta["R"]);
  if (f.b.rows() != rounds || f.b.cols() != rounds || f.c.rows() != rounds ||
      f.c.cols() != rounds) {
    throw InvalidArgument("factorization bundle shape does not match R");
  }
  return f;
}

Factorization<double> LoadOrComputeFactorization(
    const std::optional<std::filesystem::path>& cache_dir, int rounds,
    FactorizationMethod method) {
  const auto workload = BuildPrefixWorkload<double>(rounds);
  std::filesystem::path entry;
  if (cache_dir) {
    entry = *cache_dir /
            (std::string(ToString(method)) + "_R" + std::to_string(rounds));
    if (std::filesystem::exists(entry / "meta.csv")) {
      try {
        auto cached = LoadFactorization(entry);
        if (cached.method == method) {
          ValidateFactorization(workload, cached);
          return cached;
        }
      } catch (const std::exception&) {
        // Stale or corrupt bundle; fall through and recompute.
      }
    }
  }
  auto f = Factorize(workload, method);
  if (cache_dir) SaveFactorization(entry, f);
  return f;
}

}  // namespace dpofl

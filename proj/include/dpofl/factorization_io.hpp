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
#ifndef DPOFL_FACTORIZATION_IO_HPP_
#define DPOFL_FACTORIZATION_IO_HPP_

#include <filesystem>
#include <optional>

#include "dpofl/workload.hpp"

namespace dpofl {

// CSV bundle layout inside `dir`:
//   B.csv, C.csv   R lines of R comma-separated values (%.17g)
//   meta.csv       "# schema_version=1" then key,value rows:
//                  R, gamma, frob_sq_b, method_tag, converged, iterations
void SaveFactorization(const std::filesystem::path& dir,
                       const Factorization<double>& f);

Factorization<double> LoadFactorization(const std::filesystem::path& dir);

// Cache lookup keyed by R and method in `<cache>/<method>_R<R>/`. A bundle
// that fails validation against the workload is recomputed and overwritten.
Factorization<double> LoadOrComputeFactorization(
    const std::optional<std::filesystem::path>& cache_dir, int rounds,
    FactorizationMethod method);

}  // namespace dpofl

#endif  // DPOFL_FACTORIZATION_IO_HPP_

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
#include "dpofl/workload.hpp"

namespace dpofl {

std::string_view ToString(FactorizationMethod method) {
  switch (method) {
    case FactorizationMethod::kTrivialIdentityC:
      return "trivial_identity_c";
    case FactorizationMethod::kTrivialIdentityB:
      return "trivial_identity_b";
    case FactorizationMethod::kSqrtNormalized:
      return "sqrt_normalized";
    case FactorizationMethod::kOptimized:
      return "optimized";
  }
  return "unknown";
}

FactorizationMethod ParseFactorizationMethod(std::string_view tag) {
  if (tag == "trivial_identity_c" || tag == "c_identity" || tag == "trivial") {
    return FactorizationMethod::kTrivialIdentityC;
  }
  if (tag == "trivial_identity_b" || tag == "b_identity") {
    return FactorizationMethod::kTrivialIdentityB;
  }
  if (tag == "sqrt_normalized" || tag == "sqrt") {
    return FactorizationMethod::kSqrtNormalized;
  }
  if (tag == "optimized") return FactorizationMethod::kOptimized;
  throw InvalidArgument("unknown factorization method '" + std::string(tag) +
                        "'");
}

std::vector<BnormRow> BnormStudy(const std::vector<int>& rounds_list,
                                 FactorizationMethod method) {
  std::vector<BnormRow> rows;
  rows.reserve(rounds_list.size());
  for (int rounds : rounds_list) {
    const auto a = BuildPrefixWorkload<double>(rounds);
    const auto f = Factorize(a, method);
    const double r = static_cast<double>(rounds);
    rows.push_back({rounds, f.frob_sq_b, f.frob_sq_b / (r * r)});
  }
  return rows;
}

}  // namespace dpofl

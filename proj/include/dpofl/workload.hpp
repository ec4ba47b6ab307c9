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
#ifndef DPOFL_WORKLOAD_HPP_
#define DPOFL_WORKLOAD_HPP_

// Prefix-sum workload A (all ones on and below the diagonal) and its
// factorizations A = B C. Noise is added after C and post-processed by B, so
// the largest column norm gamma(C) sets the privacy cost and ||B||_F^2 the
// utility cost.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "dpofl/errors.hpp"

namespace dpofl {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class FactorizationMethod {
  kTrivialIdentityC,  // B = A, C = I
  kTrivialIdentityB,  // B = sqrt(R) I, C = A / sqrt(R)
  kSqrtNormalized,    // B = g M, C = M / g with M M = A
  kOptimized,         // projected-gradient refinement of kSqrtNormalized
};

std::string_view ToString(FactorizationMethod method);
// Accepts the tags produced by ToString plus "c_identity" / "b_identity".
FactorizationMethod ParseFactorizationMethod(std::string_view tag);

// Square, lower-triangular, ones on and below the diagonal.
template <typename Scalar = double>
class WorkloadMatrix {
 public:
  // Validates an arbitrary matrix (e.g. from a cache file).
  explicit WorkloadMatrix(DenseMatrix<Scalar> entries)
      : entries_(std::move(entries)) {
    if (entries_.rows() < 1 || entries_.rows() != entries_.cols()) {
      throw InvalidArgument("workload must be a non-empty square matrix");
    }
    for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
      for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
        const Scalar expected = j <= i ? Scalar(1) : Scalar(0);
        if (entries_(i, j) != expected) {
          throw InvalidArgument("workload is not the lower-triangular ones "
                                "prefix-sum matrix");
        }
      }
    }
  }

  Eigen::Index dim() const { return entries_.rows(); }
  const DenseMatrix<Scalar>& entries() const { return entries_; }

 private:
  DenseMatrix<Scalar> entries_;
};

template <typename Scalar = double>
WorkloadMatrix<Scalar> BuildPrefixWorkload(Eigen::Index rounds) {
  if (rounds < 1) {
    throw InvalidArgument("invalid dimension: workload needs R >= 1");
  }
  DenseMatrix<Scalar> a = DenseMatrix<Scalar>::Zero(rounds, rounds);
  a.template triangularView<Eigen::Lower>().setOnes();
  return WorkloadMatrix<Scalar>(std::move(a));
}

template <typename Scalar = double>
struct Factorization {
  DenseMatrix<Scalar> b;
  DenseMatrix<Scalar> c;
  Scalar gamma = Scalar(1);      // max column norm of c
  Scalar frob_sq_b = Scalar(0);  // ||b||_F^2
  FactorizationMethod method = FactorizationMethod::kSqrtNormalized;
  // Only meaningful for kOptimized.
  bool converged = true;
  int iterations = 0;

  Eigen::Index dim() const { return b.rows(); }
};

// Largest column 2-norm; the first column attaining it wins ties.
template <typename Derived>
typename Derived::RealScalar MaxColumnNorm(
    const Eigen::MatrixBase<Derived>& m) {
  using Real = typename Derived::RealScalar;
  Real best = Real(0);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const Real norm = m.col(j).norm();
    if (norm > best) best = norm;
  }
  return best;
}

template <typename Scalar>
Scalar ReconstructionError(const WorkloadMatrix<Scalar>& a,
                           const Factorization<Scalar>& f) {
  return (a.entries() - f.b * f.c).norm() / a.entries().norm();
}

// Fills gamma / frob_sq_b from the stored matrices.
template <typename Scalar>
void RefreshSummaries(Factorization<Scalar>& f) {
  f.gamma = MaxColumnNorm(f.c);
  f.frob_sq_b = f.b.squaredNorm();
}

namespace internal {

inline constexpr double kReconstructionTol = 1e-8;
inline constexpr double kGammaTol = 1e-6;
inline constexpr double kSummaryRelTol = 1e-12;

inline bool RelClose(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace internal

// Throws InvariantViolation naming the first factorization invariant that
// fails: reconstruction, gamma / ||B||_F^2 bookkeeping, or normalization.
template <typename Scalar>
void ValidateFactorization(const WorkloadMatrix<Scalar>& a,
                           const Factorization<Scalar>& f) {
  if (f.b.rows() != a.dim() || f.b.cols() != a.dim() ||
      f.c.rows() != a.dim() || f.c.cols() != a.dim()) {
    throw InvariantViolation("factorization.shape",
                             "B and C must be R x R for the workload");
  }
  const double rec = static_cast<double>(ReconstructionError(a, f));
  if (!(rec <= internal::kReconstructionTol)) {
    throw InvariantViolation(
        "factorization.reconstruction",
        "||A - BC||_F / ||A||_F = " + std::to_string(rec) + " > 1e-8");
  }
  if (!internal::RelClose(static_cast<double>(f.gamma),
                          static_cast<double>(MaxColumnNorm(f.c)),
                          internal::kSummaryRelTol)) {
    throw InvariantViolation("factorization.gamma",
                             "stored gamma differs from max column norm of C");
  }
  if (!internal::RelClose(static_cast<double>(f.frob_sq_b),
                          static_cast<double>(f.b.squaredNorm()),
                          internal::kSummaryRelTol)) {
    throw InvariantViolation("factorization.frob_sq_b",
                             "stored ||B||_F^2 differs from recomputed value");
  }
  const bool normalized = f.method == FactorizationMethod::kSqrtNormalized ||
                          f.method == FactorizationMethod::kOptimized;
  if (normalized &&
      std::abs(static_cast<double>(f.gamma) - 1.0) > internal::kGammaTol) {
    throw InvariantViolation("factorization.normalization",
                             "gamma(C) = " + std::to_string(f.gamma) +
                                 " but normalized methods require 1");
  }
}

enum class TrivialKind { kIdentityC, kIdentityB };

template <typename Scalar>
Factorization<Scalar> FactorizeTrivial(const WorkloadMatrix<Scalar>& a,
                                       TrivialKind which) {
  const Eigen::Index r = a.dim();
  Factorization<Scalar> f;
  if (which == TrivialKind::kIdentityC) {
    f.b = a.entries();
    f.c = DenseMatrix<Scalar>::Identity(r, r);
    f.method = FactorizationMethod::kTrivialIdentityC;
  } else {
    // gamma(A) = sqrt(R), attained by the first column.
    const Scalar root_r = std::sqrt(static_cast<Scalar>(r));
    f.b = root_r * DenseMatrix<Scalar>::Identity(r, r);
    f.c = a.entries() / root_r;
    f.method = FactorizationMethod::kTrivialIdentityB;
  }
  RefreshSummaries(f);
  return f;
}

// Diagonal-band coefficients of the lower-triangular Toeplitz square root of
// the prefix-sum matrix: c_0 = 1, c_k = c_{k-1} (2k - 1) / (2k), i.e.
// binom(2k, k) / 4^k, the Taylor coefficients of (1 - x)^(-1/2).
template <typename Scalar = double>
std::vector<Scalar> SqrtToeplitzCoefficients(Eigen::Index rounds) {
  std::vector<Scalar> coeffs(static_cast<std::size_t>(rounds));
  if (rounds == 0) return coeffs;
  coeffs[0] = Scalar(1);
  for (Eigen::Index k = 1; k < rounds; ++k) {
    coeffs[k] = coeffs[k - 1] * Scalar(2 * k - 1) / Scalar(2 * k);
  }
  return coeffs;
}

// The unique lower-triangular M with positive diagonal and M M = A.
template <typename Scalar>
DenseMatrix<Scalar> LowerTriangularSqrt(const WorkloadMatrix<Scalar>& a) {
  const Eigen::Index r = a.dim();
  const std::vector<Scalar> coeffs = SqrtToeplitzCoefficients<Scalar>(r);
  DenseMatrix<Scalar> m = DenseMatrix<Scalar>::Zero(r, r);
  for (Eigen::Index j = 0; j < r; ++j) {
    for (Eigen::Index i = j; i < r; ++i) m(i, j) = coeffs[i - j];
  }
  return m;
}

template <typename Scalar>
Factorization<Scalar> FactorizeSqrtNormalized(const WorkloadMatrix<Scalar>& a) {
  DenseMatrix<Scalar> m = LowerTriangularSqrt(a);
  const Scalar gamma0 = MaxColumnNorm(m);
  Factorization<Scalar> f;
  f.b = gamma0 * m;
  f.c = m / gamma0;
  f.method = FactorizationMethod::kSqrtNormalized;
  RefreshSummaries(f);
  return f;
}

namespace internal {

// ||A C^+||_F^2 for square invertible C; +inf when C is numerically singular.
template <typename Scalar>
Scalar FactorObjective(const DenseMatrix<Scalar>& a,
                       const DenseMatrix<Scalar>& c, DenseMatrix<Scalar>* b) {
  Eigen::PartialPivLU<DenseMatrix<Scalar>> lu(c);
  const Scalar det = lu.determinant();
  if (!std::isfinite(static_cast<double>(det)) || det == Scalar(0)) {
    return std::numeric_limits<Scalar>::infinity();
  }
  // B = A C^{-1}  <=>  C^T B^T = A^T.
  DenseMatrix<Scalar> bt = c.transpose().partialPivLu().solve(a.transpose());
  *b = bt.transpose();
  const Scalar value = b->squaredNorm();
  return std::isfinite(static_cast<double>(value))
             ? value
             : std::numeric_limits<Scalar>::infinity();
}

// Columns longer than 1 are shrunk to 1, then the whole matrix is scaled so
// the largest column has norm exactly 1 (scaling up can only lower the
// objective, since ||A (sC)^+||^2 = ||A C^+||^2 / s^2).
template <typename Scalar>
void ProjectAndNormalize(DenseMatrix<Scalar>& c) {
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    const Scalar norm = c.col(j).norm();
    if (norm > Scalar(1)) c.col(j) /= norm;
  }
  const Scalar gamma = MaxColumnNorm(c);
  if (gamma > Scalar(0)) c /= gamma;
}

}  // namespace internal

// Refines the sqrt factorization toward min ||A C^+||_F^2 over gamma(C) = 1
// by projected gradient descent with step halving. Only strict decreases are
// accepted, so the result is never worse than the starting point. Stops when
// the relative decrease of an accepted step falls below `tol` (converged) or
// after `max_iters` outer iterations (converged = false).
template <typename Scalar>
Factorization<Scalar> FactorizeOptimized(const WorkloadMatrix<Scalar>& a,
                                         int max_iters, Scalar tol) {
  if (max_iters < 1) throw InvalidArgument("max_iters must be positive");
  if (!(tol > Scalar(0))) throw InvalidArgument("tol must be positive");

  Factorization<Scalar> start = FactorizeSqrtNormalized(a);
  const DenseMatrix<Scalar>& workload = a.entries();
  DenseMatrix<Scalar> c = start.c;
  DenseMatrix<Scalar> b = start.b;
  Scalar objective = b.squaredNorm();

  Factorization<Scalar> out;
  out.method = FactorizationMethod::kOptimized;
  out.converged = false;

  Scalar step = Scalar(-1);
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    // d/dC ||A C^{-1}||_F^2 = -2 B^T B C^{-T}.
    const DenseMatrix<Scalar> c_inv_t =
        c.transpose().partialPivLu().solve(
            DenseMatrix<Scalar>::Identity(c.rows(), c.cols()));
    const DenseMatrix<Scalar> grad =
        Scalar(-2) * (b.transpose() * b) * c_inv_t;
    const Scalar grad_norm = grad.norm();
    if (!(grad_norm > Scalar(0))) {
      out.converged = true;
      break;
    }
    if (step < Scalar(0)) step = Scalar(0.1) * c.norm() / grad_norm;

    bool accepted = false;
    DenseMatrix<Scalar> b_try;
    while (step * grad_norm > std::numeric_limits<Scalar>::epsilon() *
                                  c.norm()) {
      DenseMatrix<Scalar> c_try = c - step * grad;
      internal::ProjectAndNormalize(c_try);
      const Scalar value = internal::FactorObjective(workload, c_try, &b_try);
      if (value < objective) {
        const Scalar rel_decrease = (objective - value) / objective;
        c = std::move(c_try);
        b = std::move(b_try);
        objective = value;
        accepted = true;
        step *= Scalar(2);
        if (rel_decrease < tol) out.converged = true;
        break;
      }
      step /= Scalar(2);
    }
    if (!accepted) {
      // No descent at machine-precision step: stationary for this method.
      out.converged = true;
    }
    if (out.converged) {
      ++iter;
      break;
    }
  }

  out.b = std::move(b);
  out.c = std::move(c);
  out.iterations = iter;
  RefreshSummaries(out);
  return out;
}

template <typename Scalar>
Factorization<Scalar> Factorize(const WorkloadMatrix<Scalar>& a,
                                FactorizationMethod method,
                                int max_iters = 200, Scalar tol = Scalar(1e-9)) {
  switch (method) {
    case FactorizationMethod::kTrivialIdentityC:
      return FactorizeTrivial(a, TrivialKind::kIdentityC);
    case FactorizationMethod::kTrivialIdentityB:
      return FactorizeTrivial(a, TrivialKind::kIdentityB);
    case FactorizationMethod::kSqrtNormalized:
      return FactorizeSqrtNormalized(a);
    case FactorizationMethod::kOptimized:
      return FactorizeOptimized(a, max_iters, tol);
  }
  throw InvalidArgument("unknown factorization method");
}

struct BnormRow {
  int rounds = 0;
  double frob_sq_b = 0.0;
  double ratio = 0.0;  // frob_sq_b / R^2
};

std::vector<BnormRow> BnormStudy(const std::vector<int>& rounds_list,
                                 FactorizationMethod method);

}  // namespace dpofl

#endif  // DPOFL_WORKLOAD_HPP_

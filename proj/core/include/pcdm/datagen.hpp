#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "pcdm/problem.hpp"
#include "pcdm/sparse_matrix.hpp"

namespace pcdm {

/// Matrix, targets and (when known) the optimum of a least-squares type
/// instance. Also what the instance file format stores.
struct GeneratedInstance {
  SparseMatrix A;
  std::vector<double> b;
  std::optional<double> lambda;
  std::vector<double> xstar;  // empty when unknown
  std::optional<double> fstar;
};

struct LassoOptions {
  std::size_t n = 1000;  // columns
  std::size_t m = 2000;  // rows
  std::size_t nnz_per_col = 20;
  std::size_t support_size = 100;
  double lambda = 1.0;
  std::uint64_t seed = 0;
};

/// LASSO instance 1/2||Ax - b||^2 + lambda ||x||_1 with a planted optimum.
/// A residual r is drawn first; support columns are rescaled so that
/// a_i^T r = -lambda sign(x*_i), off-support columns so that |a_i^T r| < lambda,
/// and b = A x* - r. The KKT conditions are checked before returning.
GeneratedInstance generate_lasso(const LassoOptions& options);

/// max_i |(A^T (A x* - b))_i + lambda sign(x*_i)| over the support, and
/// max(0, |(A^T (A x* - b))_i| - lambda) elsewhere, divided by lambda.
double lasso_kkt_violation(const GeneratedInstance& inst);

/// 0-1 matrix with exactly omega ones per row and m omega / n per column:
/// row r holds ones at columns (r omega + t) mod n, t < omega.
SparseMatrix generate_tightness_matrix(std::size_t n, std::size_t m, std::size_t omega);

/// Each row has omega nonzeros at uniformly random distinct columns, all
/// equal to a per-row constant drawn from [0.5, 1.5].
SparseMatrix generate_equal_row_matrix(std::size_t m, std::size_t n, std::size_t omega,
                                       std::uint64_t seed);

/// b = A x* for x* uniform in [-1, 1]^n, so F* = 0 for the square loss.
GeneratedInstance planted_least_squares(SparseMatrix A, std::uint64_t seed);

/// Square loss plus lambda ||x||_1 (or no regularizer when lambda is unset),
/// with the known optimum attached when the instance carries one.
CompositeProblem make_lasso_problem(const GeneratedInstance& inst);

}  // namespace pcdm

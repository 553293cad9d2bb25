#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcdm/block_structure.hpp"
#include "pcdm/sparse_matrix.hpp"

namespace pcdm {

enum class LossKind { Square, Logistic, HingeSquare };

std::string to_string(LossKind kind);

/// Per-row loss l_j applied to the row residual. For the square loss the
/// residual is A_j x - b_j; for the classification losses it is the margin
/// A_j x and the targets are labels in {+1, -1}.
class Loss {
 public:
  static Loss square(std::vector<double> targets);
  static Loss logistic(std::vector<double> labels);
  static Loss hinge_square(std::vector<double> labels);

  LossKind kind() const noexcept { return kind_; }
  std::span<const double> targets() const noexcept { return targets_; }

  /// Offset subtracted from A_j x to form the stored residual.
  double offset(std::size_t row) const noexcept {
    return kind_ == LossKind::Square ? targets_[row] : 0.0;
  }
  double value(std::size_t row, double residual) const noexcept;
  double derivative(std::size_t row, double residual) const noexcept;
  /// Upper bound on the second derivative of l_j, uniform over rows.
  double curvature_bound() const noexcept { return kind_ == LossKind::Logistic ? 0.25 : 1.0; }

 private:
  Loss(LossKind kind, std::vector<double> targets);
  LossKind kind_ = LossKind::Square;
  std::vector<double> targets_;
};

enum class RegularizerKind { Zero, L1, L2Squared, Box };

/// Coordinate-separable Omega. L2Squared means (lambda/2)||x||^2. Box bounds
/// are per coordinate; a single-entry bound vector is broadcast.
class Regularizer {
 public:
  static Regularizer zero();
  static Regularizer l1(double lambda);
  static Regularizer l2_squared(double lambda);
  static Regularizer box(std::vector<double> lo, std::vector<double> hi);
  static Regularizer box(double lo, double hi) { return box(std::vector{lo}, std::vector{hi}); }

  RegularizerKind kind() const noexcept { return kind_; }
  double lambda() const noexcept { return lambda_; }
  double lower(std::size_t coord) const { return lo_.size() == 1 ? lo_[0] : lo_[coord]; }
  double upper(std::size_t coord) const { return hi_.size() == 1 ? hi_[0] : hi_[coord]; }

  /// Omega_c(value); +infinity outside a box.
  double value(std::size_t coord, double x) const;
  /// argmin_t  g t + (s/2) t^2 + Omega_c(x + t), returned as the new value x + t.
  double prox_step(std::size_t coord, double x, double g, double s) const;
  /// Throws unless box bounds cover exactly num_coords coordinates (or are broadcast).
  void check_dimension(std::size_t num_coords) const;

 private:
  RegularizerKind kind_ = RegularizerKind::Zero;
  double lambda_ = 0.0;
  std::vector<double> lo_, hi_;
};

std::string to_string(RegularizerKind kind);

struct ObjectiveValue {
  double smooth = 0.0;       // f(x)
  double regularizer = 0.0;  // Omega(x), +inf outside the domain
  double total = 0.0;        // F(x)
};

struct KnownOptimum {
  std::vector<double> x;
  double value = 0.0;
};

/// F(x) = sum_j l_j(A_j x) + c^T x + Omega(x) over a block structure. The
/// optional linear term c carries e.g. the -1/n sum(x) part of the SVM dual.
/// Immutable after construction; safe to share between threads.
class CompositeProblem {
 public:
  CompositeProblem(SparseMatrix matrix, Loss loss, Regularizer reg,
                   std::optional<BlockStructure> blocks = std::nullopt,
                   std::vector<double> linear_term = {});

  const SparseMatrix& matrix() const noexcept { return matrix_; }
  const Loss& loss() const noexcept { return loss_; }
  const Regularizer& regularizer() const noexcept { return reg_; }
  const BlockStructure& blocks() const noexcept { return blocks_; }
  std::span<const double> linear_term() const noexcept { return linear_; }
  std::span<const double> lipschitz() const noexcept { return lipschitz_; }
  std::size_t omega() const noexcept { return omega_; }
  std::size_t num_blocks() const noexcept { return blocks_.num_blocks(); }
  std::size_t num_coords() const noexcept { return blocks_.num_coords(); }
  std::size_t num_rows() const noexcept { return matrix_.rows(); }
  std::uint64_t id() const noexcept { return id_; }

  /// Sorted distinct blocks touched by row j.
  std::span<const std::size_t> row_blocks(std::size_t row) const {
    return std::span(incidence_).subspan(incidence_ptr_[row],
                                         incidence_ptr_[row + 1] - incidence_ptr_[row]);
  }

  const std::optional<KnownOptimum>& known_optimum() const noexcept { return optimum_; }
  void set_known_optimum(KnownOptimum opt);

  ObjectiveValue evaluate(std::span<const double> x) const;
  std::vector<double> gradient(std::span<const double> x) const;

 private:
  SparseMatrix matrix_;
  Loss loss_;
  Regularizer reg_;
  BlockStructure blocks_;
  std::vector<double> linear_;
  std::vector<double> lipschitz_;
  std::size_t omega_ = 1;
  std::vector<std::size_t> incidence_ptr_;
  std::vector<std::size_t> incidence_;
  std::optional<KnownOptimum> optimum_;
  std::uint64_t id_ = 0;
};

/// Max over rows of the number of distinct blocks the row touches (at least 1).
std::size_t partial_separability_degree(const SparseMatrix& matrix, const BlockStructure& blocks);

/// Block Lipschitz constants of the smooth part. Unit blocks: curvature * ||a_i||^2.
/// Wider blocks: curvature * lambda_max of the block Gram matrix, by power
/// iteration. Blocks with no nonzeros get the floor DBL_EPSILON.
std::vector<double> block_lipschitz_constants(const SparseMatrix& matrix, const Loss& loss,
                                              const BlockStructure& blocks);

inline constexpr double kEmptyBlockLipschitz = std::numeric_limits<double>::epsilon();

/// Same as problem.evaluate(x) but rejects non-finite entries.
ObjectiveValue evaluate_objective(const CompositeProblem& problem, std::span<const double> x);

/// f(x) + <grad f(x), h> + (theta/2) ||h||_L^2 with theta = max_J |J cap supp(h)|.
double dso_upper_bound(const CompositeProblem& problem, std::span<const double> x,
                       std::span<const double> h);

/// max over rows of |row blocks cap supp(h)|, supp taken blockwise.
std::size_t dso_support_factor(const CompositeProblem& problem, std::span<const double> h);

/// ||h||_w^2 = sum_i w_i ||h^(i)||^2.
double weighted_norm_sq(const BlockStructure& blocks, std::span<const double> w,
                        std::span<const double> h);

/// Dual of the L2-regularized hinge-loss SVM as a box-constrained quadratic:
/// f(x) = x^T Z x / (2 lambda n^2) - (1/n) sum x_i, Z_ij = y_i y_j <a_i, a_j>, 0 <= x <= 1.
/// `examples` holds one example per row.
CompositeProblem make_svm_dual(const SparseMatrix& examples, std::span<const double> labels,
                               double lambda);

}  // namespace pcdm

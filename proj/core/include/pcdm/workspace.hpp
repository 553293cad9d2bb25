#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pcdm/problem.hpp"

namespace pcdm {

/// Iterate x together with the row residuals r_j = A_j x - offset_j and
/// running values of f and Omega, all kept consistent under block updates.
///
/// The low-level apply_* calls are written so that several threads may apply
/// one batch concurrently: apply_coordinates on disjoint block subsets and
/// apply_rows on disjoint row ranges.
class Workspace {
 public:
  Workspace(const CompositeProblem& problem, std::span<const double> x0);

  std::uint64_t problem_id() const noexcept { return problem_id_; }
  /// Incremented by every mutation.
  std::uint64_t version() const noexcept { return version_; }

  std::span<const double> x() const noexcept { return x_; }
  std::span<const double> residual() const noexcept { return residual_; }
  double smooth_value() const noexcept { return loss_sum_ + linear_sum_; }
  double regularizer_value() const noexcept { return reg_sum_; }
  double objective() const noexcept { return smooth_value() + reg_sum_; }

  /// Block updates applied since the last full recomputation.
  std::size_t updates_since_refresh() const noexcept { return updates_since_refresh_; }

  /// Recompute residual, f and Omega from x with compensated sums.
  void refresh(const CompositeProblem& problem);
  /// Replace the iterate and recompute everything.
  void reset(const CompositeProblem& problem, std::span<const double> x);

  /// x^(i) += delta for one block, residual and values updated incrementally.
  void apply_block_delta(const CompositeProblem& problem, std::size_t block,
                         std::span<const double> delta);

  // --- batch interface used by the solver ---------------------------------
  // `deltas` is packed: the delta of blocks[k] starts at sum of sizes of blocks[0..k).

  /// Coordinate part of a batch. Returns the change in (linear term, Omega).
  std::pair<double, double> apply_coordinates(const CompositeProblem& problem,
                                              std::span<const std::size_t> blocks,
                                              std::span<const double> deltas,
                                              std::size_t first, std::size_t last);
  /// Residual part of a batch restricted to rows [row_begin, row_end). Returns
  /// the change of the loss sum over those rows. When `undo` is given, the old
  /// residual of every touched row is appended to it.
  double apply_rows(const CompositeProblem& problem, std::span<const std::size_t> blocks,
                    std::span<const double> deltas, std::size_t row_begin, std::size_t row_end,
                    std::vector<std::pair<std::size_t, double>>* undo = nullptr);
  /// Fold the per-part changes of a batch into the running values.
  void commit(double loss_change, double linear_change, double reg_change, std::size_t num_blocks);
  /// Undo a batch: restores x blocks from `old_x` (packed like deltas), the
  /// residual rows from `undo`, and the running values.
  void rollback(const CompositeProblem& problem, std::span<const std::size_t> blocks,
                std::span<const double> old_x,
                std::span<const std::pair<std::size_t, double>> undo, double loss_sum,
                double linear_sum, double reg_sum);

  /// Overwrite the whole residual, e.g. with a copy taken before refresh().
  void restore_residual(std::span<const double> residual);

  double loss_sum() const noexcept { return loss_sum_; }
  double linear_sum() const noexcept { return linear_sum_; }
  double reg_sum() const noexcept { return reg_sum_; }

 private:
  std::uint64_t problem_id_;
  std::uint64_t version_ = 0;
  std::vector<double> x_;
  std::vector<double> residual_;
  std::vector<unsigned char> touched_;
  double loss_sum_ = 0.0;
  double linear_sum_ = 0.0;
  double reg_sum_ = 0.0;
  std::size_t updates_since_refresh_ = 0;
};

/// grad_i f(x) for the iterate held by `ws`. Throws when `ws` was built for a
/// different problem.
void block_gradient(const CompositeProblem& problem, const Workspace& ws, std::size_t block,
                    std::span<double> out);
std::vector<double> block_gradient(const CompositeProblem& problem, const Workspace& ws,
                                   std::size_t block);

}  // namespace pcdm

#include "pcdm/workspace.hpp"

#include <algorithm>
#include <cmath>

#include "pcdm/compensated_sum.hpp"
#include "pcdm/error.hpp"

namespace pcdm {

Workspace::Workspace(const CompositeProblem& problem, std::span<const double> x0)
    : problem_id_(problem.id()),
      x_(x0.empty() ? std::vector<double>(problem.num_coords(), 0.0)
                    : std::vector<double>(x0.begin(), x0.end())),
      residual_(problem.num_rows()),
      touched_(problem.num_rows(), 0) {
  if (x_.size() != problem.num_coords()) throw Error("initial point has wrong dimension");
  refresh(problem);
}

void Workspace::reset(const CompositeProblem& problem, std::span<const double> x) {
  if (x.size() != x_.size()) throw Error("point has wrong dimension");
  x_.assign(x.begin(), x.end());
  refresh(problem);
}

void Workspace::refresh(const CompositeProblem& problem) {
  if (problem.id() != problem_id_) throw Error("stale workspace: built for another problem");
  const auto& A = problem.matrix();
  const auto& loss = problem.loss();
  CompensatedSum loss_sum, linear_sum, reg_sum;
  for (std::size_t r = 0; r < A.rows(); ++r) {
    const auto row = A.row(r);
    CompensatedSum z;
    for (std::size_t k = 0; k < row.nnz(); ++k) z += row.value[k] * x_[row.index[k]];
    residual_[r] = z.value() - loss.offset(r);
    loss_sum += loss.value(r, residual_[r]);
  }
  const auto lin = problem.linear_term();
  for (std::size_t c = 0; c < lin.size(); ++c) linear_sum += lin[c] * x_[c];
  for (std::size_t c = 0; c < x_.size(); ++c) reg_sum += problem.regularizer().value(c, x_[c]);
  loss_sum_ = loss_sum.value();
  linear_sum_ = linear_sum.value();
  reg_sum_ = reg_sum.value();
  updates_since_refresh_ = 0;
  ++version_;
}

std::pair<double, double> Workspace::apply_coordinates(const CompositeProblem& problem,
                                                       std::span<const std::size_t> blocks,
                                                       std::span<const double> deltas,
                                                       std::size_t first, std::size_t last) {
  const auto& bs = problem.blocks();
  const auto lin = problem.linear_term();
  const auto& reg = problem.regularizer();
  // locate the packed offset of blocks[first]
  std::size_t pos = 0;
  for (std::size_t k = 0; k < first; ++k) pos += bs.size(blocks[k]);
  double dlin = 0.0, dreg = 0.0;
  for (std::size_t k = first; k < last; ++k) {
    const auto b = blocks[k];
    const auto off = bs.offset(b);
    for (std::size_t t = 0; t < bs.size(b); ++t, ++pos) {
      const double d = deltas[pos];
      if (d == 0.0) continue;
      const auto c = off + t;
      const double old = x_[c];
      const double updated = old + d;
      if (!lin.empty()) dlin += lin[c] * d;
      dreg += reg.value(c, updated) - reg.value(c, old);
      x_[c] = updated;
    }
  }
  return {dlin, dreg};
}

double Workspace::apply_rows(const CompositeProblem& problem, std::span<const std::size_t> blocks,
                             std::span<const double> deltas, std::size_t row_begin,
                             std::size_t row_end,
                             std::vector<std::pair<std::size_t, double>>* undo) {
  const auto& A = problem.matrix();
  const auto& bs = problem.blocks();
  const auto& loss = problem.loss();
  const bool full_range = row_begin == 0 && row_end >= A.rows();
  thread_local std::vector<std::size_t> rows_hit;
  rows_hit.clear();
  double change = 0.0;
  std::size_t pos = 0;
  for (auto b : blocks) {
    const auto off = bs.offset(b);
    for (std::size_t t = 0; t < bs.size(b); ++t, ++pos) {
      const double d = deltas[pos];
      if (d == 0.0) continue;
      const auto col = A.col(off + t);
      for (std::size_t k = 0; k < col.nnz(); ++k) {
        const auto r = col.index[k];
        if (!full_range && (r < row_begin || r >= row_end)) continue;
        if (!touched_[r]) {
          touched_[r] = 1;
          rows_hit.push_back(r);
          change -= loss.value(r, residual_[r]);
          if (undo) undo->emplace_back(r, residual_[r]);
        }
        residual_[r] += col.value[k] * d;
      }
    }
  }
  for (auto r : rows_hit) {
    change += loss.value(r, residual_[r]);
    touched_[r] = 0;
  }
  return change;
}

void Workspace::commit(double loss_change, double linear_change, double reg_change,
                       std::size_t num_blocks) {
  loss_sum_ += loss_change;
  linear_sum_ += linear_change;
  reg_sum_ += reg_change;
  // once infinite (left the box) the running sum cannot recover by differences
  if (std::isnan(reg_sum_)) reg_sum_ = std::numeric_limits<double>::infinity();
  updates_since_refresh_ += num_blocks;
  ++version_;
}

void Workspace::rollback(const CompositeProblem& problem, std::span<const std::size_t> blocks,
                         std::span<const double> old_x,
                         std::span<const std::pair<std::size_t, double>> undo, double loss_sum,
                         double linear_sum, double reg_sum) {
  const auto& bs = problem.blocks();
  std::size_t pos = 0;
  for (auto b : blocks) {
    const auto off = bs.offset(b);
    for (std::size_t t = 0; t < bs.size(b); ++t) x_[off + t] = old_x[pos++];
  }
  for (auto [r, v] : undo) residual_[r] = v;
  loss_sum_ = loss_sum;
  linear_sum_ = linear_sum;
  reg_sum_ = reg_sum;
  ++version_;
}

void Workspace::restore_residual(std::span<const double> residual) {
  if (residual.size() != residual_.size()) throw Error("residual has wrong dimension");
  std::copy(residual.begin(), residual.end(), residual_.begin());
  ++version_;
}

void Workspace::apply_block_delta(const CompositeProblem& problem, std::size_t block,
                                  std::span<const double> delta) {
  if (problem.id() != problem_id_) throw Error("stale workspace: built for another problem");
  if (delta.size() != problem.blocks().size(block)) throw Error("delta has wrong block size");
  const std::size_t blocks[] = {block};
  const auto [dlin, dreg] = apply_coordinates(problem, blocks, delta, 0, 1);
  const double dloss = apply_rows(problem, blocks, delta, 0, problem.num_rows());
  commit(dloss, dlin, dreg, 1);
}

void block_gradient(const CompositeProblem& problem, const Workspace& ws, std::size_t block,
                    std::span<double> out) {
  if (ws.problem_id() != problem.id()) throw Error("stale workspace: built for another problem");
  const auto& bs = problem.blocks();
  const auto& A = problem.matrix();
  const auto& loss = problem.loss();
  const auto res = ws.residual();
  const auto lin = problem.linear_term();
  const auto off = bs.offset(block);
  for (std::size_t t = 0; t < bs.size(block); ++t) {
    const auto col = A.col(off + t);
    double g = 0.0;
    for (std::size_t k = 0; k < col.nnz(); ++k) {
      const auto r = col.index[k];
      g += col.value[k] * loss.derivative(r, res[r]);
    }
    if (!lin.empty()) g += lin[off + t];
    out[t] = g;
  }
}

std::vector<double> block_gradient(const CompositeProblem& problem, const Workspace& ws,
                                   std::size_t block) {
  std::vector<double> g(problem.blocks().size(block));
  block_gradient(problem, ws, block, g);
  return g;
}

}  // namespace pcdm

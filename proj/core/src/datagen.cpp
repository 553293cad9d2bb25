#include "pcdm/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcdm/error.hpp"
#include "pcdm/rng.hpp"
#include "pcdm/sampling.hpp"

namespace pcdm {

namespace {

struct Column {
  std::vector<std::size_t> rows;
  std::vector<double> values;
};

double dot(const Column& col, const std::vector<double>& r) {
  double s = 0.0;
  for (std::size_t k = 0; k < col.rows.size(); ++k) s += col.values[k] * r[col.rows[k]];
  return s;
}

void randomize(Column& col, std::size_t m, std::size_t nnz, Rng& rng,
               std::vector<unsigned char>& mark) {
  draw_nice(m, nnz, rng, mark, col.rows);
  col.values.resize(nnz);
  for (auto& v : col.values) {
    do {
      v = rng.uniform(-1.0, 1.0);
    } while (v == 0.0);
  }
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

GeneratedInstance generate_lasso(const LassoOptions& o) {
  if (o.n == 0 || o.m == 0) throw Error("empty instance");
  if (o.support_size > o.n) throw Error("support_size exceeds n");
  if (o.nnz_per_col == 0 || o.nnz_per_col > o.m) throw Error("nnz_per_col must lie in [1, m]");
  if (!(o.lambda > 0.0)) throw Error("lambda must be positive");

  Rng rng(o.seed, 0);
  std::vector<unsigned char> mark(std::max(o.m, o.n), 0);

  // residual r = A x* - b; entries scaled so that a_i^T r has spread ~ lambda
  std::vector<double> r(o.m);
  const double spread = 3.0 * o.lambda / std::sqrt(static_cast<double>(o.nnz_per_col));
  for (auto& v : r) v = spread * rng.uniform(-1.0, 1.0);

  std::vector<double> xstar(o.n, 0.0);
  std::vector<std::size_t> support;
  draw_nice(o.n, o.support_size, rng, mark, support);
  for (auto i : support) {
    const double magnitude = rng.uniform(0.1, 1.0);
    xstar[i] = rng.below(2) == 0 ? magnitude : -magnitude;
  }

  constexpr int kMaxRetries = 100;
  std::vector<Column> cols(o.n);
  for (std::size_t i = 0; i < o.n; ++i) {
    auto& col = cols[i];
    randomize(col, o.m, o.nnz_per_col, rng, mark);
    double t = dot(col, r);
    if (xstar[i] != 0.0) {
      int tries = 0;
      double scale = 0.0;
      for (;;) {
        scale = t != 0.0 ? -o.lambda * sign(xstar[i]) / t : 0.0;
        if (scale >= 0.1 && scale <= 10.0) break;
        if (++tries > kMaxRetries) {
          throw Error("could not rescale support column " + std::to_string(i));
        }
        randomize(col, o.m, o.nnz_per_col, rng, mark);
        t = dot(col, r);
      }
      for (auto& v : col.values) v *= scale;
    } else if (std::fabs(t) > 0.9 * o.lambda) {
      const double target = o.lambda * rng.uniform(0.1, 0.9);
      for (auto& v : col.values) v *= target / std::fabs(t);
    }
  }

  std::vector<Triplet> entries;
  entries.reserve(o.n * o.nnz_per_col);
  for (std::size_t i = 0; i < o.n; ++i) {
    for (std::size_t k = 0; k < cols[i].rows.size(); ++k) {
      entries.push_back({cols[i].rows[k], i, cols[i].values[k]});
    }
  }
  GeneratedInstance inst;
  inst.A = SparseMatrix::from_triplets(o.m, o.n, std::move(entries));
  std::vector<double> ax(o.m);
  inst.A.multiply(xstar, ax);
  inst.b.resize(o.m);
  for (std::size_t j = 0; j < o.m; ++j) inst.b[j] = ax[j] - r[j];
  inst.lambda = o.lambda;
  inst.xstar = std::move(xstar);

  const auto problem = make_lasso_problem(inst);
  inst.fstar = problem.evaluate(inst.xstar).total;

  const double violation = lasso_kkt_violation(inst);
  if (!(violation <= 1e-10)) {
    throw Error("generated instance fails the optimality check (violation " +
                std::to_string(violation) + ")");
  }
  return inst;
}

double lasso_kkt_violation(const GeneratedInstance& inst) {
  if (!inst.lambda || inst.xstar.size() != inst.A.cols()) {
    throw Error("instance has no lambda or planted optimum");
  }
  const double lambda = *inst.lambda;
  std::vector<double> res(inst.A.rows());
  inst.A.multiply(inst.xstar, res);
  for (std::size_t j = 0; j < res.size(); ++j) res[j] -= inst.b[j];
  std::vector<double> g(inst.A.cols());
  inst.A.multiply_transpose(res, g);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = inst.xstar[i] != 0.0 ? std::fabs(g[i] + lambda * sign(inst.xstar[i]))
                                          : std::max(0.0, std::fabs(g[i]) - lambda);
    worst = std::max(worst, v / lambda);
  }
  return worst;
}

SparseMatrix generate_tightness_matrix(std::size_t n, std::size_t m, std::size_t omega) {
  if (n == 0 || m == 0) throw Error("empty matrix");
  if (omega == 0 || omega > n) throw Error("omega must lie in [1, n]");
  if ((m * omega) % n != 0) {
    throw Error("m * omega must be divisible by n (m=" + std::to_string(m) +
                ", omega=" + std::to_string(omega) + ", n=" + std::to_string(n) + ")");
  }
  std::vector<Triplet> entries;
  entries.reserve(m * omega);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t t = 0; t < omega; ++t) entries.push_back({r, (r * omega + t) % n, 1.0});
  }
  return SparseMatrix::from_triplets(m, n, std::move(entries));
}

SparseMatrix generate_equal_row_matrix(std::size_t m, std::size_t n, std::size_t omega,
                                       std::uint64_t seed) {
  if (n == 0 || m == 0) throw Error("empty matrix");
  if (omega == 0 || omega > n) throw Error("omega must lie in [1, n]");
  Rng rng(seed, 1);
  std::vector<unsigned char> mark(n, 0);
  std::vector<std::size_t> cols;
  std::vector<Triplet> entries;
  entries.reserve(m * omega);
  for (std::size_t r = 0; r < m; ++r) {
    draw_nice(n, omega, rng, mark, cols);
    const double v = rng.uniform(0.5, 1.5);
    for (auto c : cols) entries.push_back({r, c, v});
  }
  return SparseMatrix::from_triplets(m, n, std::move(entries));
}

GeneratedInstance planted_least_squares(SparseMatrix A, std::uint64_t seed) {
  Rng rng(seed, 2);
  GeneratedInstance inst;
  inst.xstar.resize(A.cols());
  for (auto& v : inst.xstar) v = rng.uniform(-1.0, 1.0);
  inst.b.resize(A.rows());
  A.multiply(inst.xstar, inst.b);
  inst.A = std::move(A);
  inst.fstar = 0.0;
  return inst;
}

CompositeProblem make_lasso_problem(const GeneratedInstance& inst) {
  std::vector<double> b = inst.b.empty() ? std::vector<double>(inst.A.rows(), 0.0) : inst.b;
  if (b.size() != inst.A.rows()) throw Error("b has wrong length");
  auto reg = inst.lambda ? Regularizer::l1(*inst.lambda) : Regularizer::zero();
  CompositeProblem problem(inst.A, Loss::square(std::move(b)), reg);
  if (inst.fstar && inst.xstar.size() == inst.A.cols()) {
    problem.set_known_optimum({inst.xstar, *inst.fstar});
  }
  return problem;
}

}  // namespace pcdm

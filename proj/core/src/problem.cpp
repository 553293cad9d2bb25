#include "pcdm/problem.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "pcdm/compensated_sum.hpp"
#include "pcdm/error.hpp"
#include "pcdm/rng.hpp"

namespace pcdm {

namespace {

std::atomic<std::uint64_t> next_problem_id{1};

void check_labels(std::span<const double> labels) {
  for (double y : labels) {
    if (y != 1.0 && y != -1.0) throw Error("classification labels must be +1 or -1");
  }
}

double sparse_dot(const SparseVectorView& a, const SparseVectorView& b) {
  double acc = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.nnz() && j < b.nnz()) {
    if (a.index[i] < b.index[j]) {
      ++i;
    } else if (a.index[i] > b.index[j]) {
      ++j;
    } else {
      acc += a.value[i++] * b.value[j++];
    }
  }
  return acc;
}

// Largest eigenvalue of a small dense PSD matrix (row-major, size d).
double power_iteration(const std::vector<double>& gram, std::size_t d, std::uint64_t seed) {
  Rng rng(seed, 0x4c);
  std::vector<double> v(d), next(d);
  for (auto& e : v) e = rng.uniform(0.5, 1.5);
  double lambda = 0.0;
  for (int it = 0; it < 20000; ++it) {
    double norm = 0.0;
    for (double e : v) norm += e * e;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (auto& e : v) e /= norm;
    for (std::size_t r = 0; r < d; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += gram[r * d + c] * v[c];
      next[r] = acc;
    }
    double rq = 0.0;
    for (std::size_t r = 0; r < d; ++r) rq += v[r] * next[r];
    const bool done = it > 0 && std::fabs(rq - lambda) <= 1e-15 * std::max(1.0, std::fabs(rq));
    lambda = rq;
    if (done) break;
    v.swap(next);
  }
  return lambda;
}

}  // namespace

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Square: return "square";
    case LossKind::Logistic: return "logistic";
    case LossKind::HingeSquare: return "hinge-square";
  }
  return "?";
}

std::string to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::Zero: return "zero";
    case RegularizerKind::L1: return "l1";
    case RegularizerKind::L2Squared: return "l2";
    case RegularizerKind::Box: return "box";
  }
  return "?";
}

Loss::Loss(LossKind kind, std::vector<double> targets) : kind_(kind), targets_(std::move(targets)) {}

Loss Loss::square(std::vector<double> targets) {
  for (double b : targets) {
    if (!std::isfinite(b)) throw Error("square-loss targets must be finite");
  }
  return Loss(LossKind::Square, std::move(targets));
}

Loss Loss::logistic(std::vector<double> labels) {
  check_labels(labels);
  return Loss(LossKind::Logistic, std::move(labels));
}

Loss Loss::hinge_square(std::vector<double> labels) {
  check_labels(labels);
  return Loss(LossKind::HingeSquare, std::move(labels));
}

double Loss::value(std::size_t row, double residual) const noexcept {
  switch (kind_) {
    case LossKind::Square: return 0.5 * residual * residual;
    case LossKind::Logistic: {
      const double t = -targets_[row] * residual;
      return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
    }
    case LossKind::HingeSquare: {
      const double gap = std::max(0.0, 1.0 - targets_[row] * residual);
      return 0.5 * gap * gap;
    }
  }
  return 0.0;
}

double Loss::derivative(std::size_t row, double residual) const noexcept {
  switch (kind_) {
    case LossKind::Square: return residual;
    case LossKind::Logistic: {
      const double y = targets_[row];
      return -y / (1.0 + std::exp(y * residual));
    }
    case LossKind::HingeSquare: {
      const double y = targets_[row];
      return -y * std::max(0.0, 1.0 - y * residual);
    }
  }
  return 0.0;
}

Regularizer Regularizer::zero() { return Regularizer{}; }

Regularizer Regularizer::l1(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error("L1 weight must be positive");
  Regularizer r;
  r.kind_ = RegularizerKind::L1;
  r.lambda_ = lambda;
  return r;
}

Regularizer Regularizer::l2_squared(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error("L2 weight must be positive");
  Regularizer r;
  r.kind_ = RegularizerKind::L2Squared;
  r.lambda_ = lambda;
  return r;
}

Regularizer Regularizer::box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.empty() || lo.size() != hi.size()) throw Error("box bounds must have matching length");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (std::isnan(lo[i]) || std::isnan(hi[i]) || lo[i] > hi[i]) {
      throw Error("box bound lo > hi at coordinate " + std::to_string(i));
    }
  }
  Regularizer r;
  r.kind_ = RegularizerKind::Box;
  r.lo_ = std::move(lo);
  r.hi_ = std::move(hi);
  return r;
}

void Regularizer::check_dimension(std::size_t num_coords) const {
  if (kind_ == RegularizerKind::Box && lo_.size() != 1 && lo_.size() != num_coords) {
    throw Error("box bounds cover " + std::to_string(lo_.size()) + " coordinates, problem has " +
                std::to_string(num_coords));
  }
}

double Regularizer::value(std::size_t coord, double x) const {
  switch (kind_) {
    case RegularizerKind::Zero: return 0.0;
    case RegularizerKind::L1: return lambda_ * std::fabs(x);
    case RegularizerKind::L2Squared: return 0.5 * lambda_ * x * x;
    case RegularizerKind::Box:
      return (x < lower(coord) || x > upper(coord)) ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return 0.0;
}

double Regularizer::prox_step(std::size_t coord, double x, double g, double s) const {
  switch (kind_) {
    case RegularizerKind::Zero: return x - g / s;
    case RegularizerKind::L1: {
      const double u = x - g / s;
      const double thr = lambda_ / s;
      if (u > thr) return u - thr;
      if (u < -thr) return u + thr;
      return 0.0;
    }
    case RegularizerKind::L2Squared: return x - (g + lambda_ * x) / (s + lambda_);
    case RegularizerKind::Box: return std::clamp(x - g / s, lower(coord), upper(coord));
  }
  return x;
}

std::size_t partial_separability_degree(const SparseMatrix& matrix, const BlockStructure& blocks) {
  if (matrix.rows() == 0) throw Error("no loss terms");
  if (blocks.num_coords() != matrix.cols()) {
    throw Error("block structure covers " + std::to_string(blocks.num_coords()) +
                " coordinates, matrix has " + std::to_string(matrix.cols()) + " columns");
  }
  std::size_t omega = 1;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto row = matrix.row(r);
    // columns are sorted and blocks contiguous, so distinct blocks appear as runs
    std::size_t count = 0;
    std::size_t last = static_cast<std::size_t>(-1);
    for (auto c : row.index) {
      const auto b = blocks.block_of(c);
      if (b != last) {
        ++count;
        last = b;
      }
    }
    omega = std::max(omega, count);
  }
  return omega;
}

std::vector<double> block_lipschitz_constants(const SparseMatrix& matrix, const Loss& loss,
                                              const BlockStructure& blocks) {
  if (blocks.num_coords() != matrix.cols()) throw Error("block structure does not match matrix");
  const double curvature = loss.curvature_bound();
  std::vector<double> L(blocks.num_blocks());
  for (std::size_t i = 0; i < blocks.num_blocks(); ++i) {
    const auto first = blocks.offset(i);
    const auto width = blocks.size(i);
    double value = 0.0;
    if (width == 1) {
      for (double v : matrix.col(first).value) value += v * v;
    } else {
      std::vector<double> gram(width * width);
      for (std::size_t a = 0; a < width; ++a) {
        for (std::size_t b = a; b < width; ++b) {
          const double d = sparse_dot(matrix.col(first + a), matrix.col(first + b));
          gram[a * width + b] = d;
          gram[b * width + a] = d;
        }
      }
      value = power_iteration(gram, width, i);
    }
    value *= curvature;
    L[i] = value > kEmptyBlockLipschitz ? value : kEmptyBlockLipschitz;
  }
  return L;
}

CompositeProblem::CompositeProblem(SparseMatrix matrix, Loss loss, Regularizer reg,
                                   std::optional<BlockStructure> blocks,
                                   std::vector<double> linear_term)
    : matrix_(std::move(matrix)),
      loss_(std::move(loss)),
      reg_(std::move(reg)),
      blocks_(blocks ? std::move(*blocks) : BlockStructure::unit(matrix_.cols())),
      linear_(std::move(linear_term)),
      id_(next_problem_id.fetch_add(1)) {
  if (loss_.targets().size() != matrix_.rows()) {
    throw Error("loss has " + std::to_string(loss_.targets().size()) + " targets, matrix has " +
                std::to_string(matrix_.rows()) + " rows");
  }
  if (!linear_.empty() && linear_.size() != matrix_.cols()) {
    throw Error("linear term length does not match column count");
  }
  reg_.check_dimension(matrix_.cols());
  omega_ = partial_separability_degree(matrix_, blocks_);
  lipschitz_ = block_lipschitz_constants(matrix_, loss_, blocks_);

  incidence_ptr_.reserve(matrix_.rows() + 1);
  incidence_ptr_.push_back(0);
  for (std::size_t r = 0; r < matrix_.rows(); ++r) {
    std::size_t last = static_cast<std::size_t>(-1);
    for (auto c : matrix_.row(r).index) {
      const auto b = blocks_.block_of(c);
      if (b != last) {
        incidence_.push_back(b);
        last = b;
      }
    }
    incidence_ptr_.push_back(incidence_.size());
  }
}

void CompositeProblem::set_known_optimum(KnownOptimum opt) {
  if (opt.x.size() != num_coords()) throw Error("optimum has wrong dimension");
  optimum_ = std::move(opt);
}

ObjectiveValue CompositeProblem::evaluate(std::span<const double> x) const {
  if (x.size() != num_coords()) throw Error("point has wrong dimension");
  CompensatedSum f, omega;
  for (std::size_t r = 0; r < matrix_.rows(); ++r) {
    const auto row = matrix_.row(r);
    double z = 0.0;
    for (std::size_t k = 0; k < row.nnz(); ++k) z += row.value[k] * x[row.index[k]];
    f += loss_.value(r, z - loss_.offset(r));
  }
  for (std::size_t c = 0; c < linear_.size(); ++c) f += linear_[c] * x[c];
  for (std::size_t c = 0; c < x.size(); ++c) omega += reg_.value(c, x[c]);
  ObjectiveValue out;
  out.smooth = f.value();
  out.regularizer = omega.value();
  out.total = out.smooth + out.regularizer;
  return out;
}

std::vector<double> CompositeProblem::gradient(std::span<const double> x) const {
  if (x.size() != num_coords()) throw Error("point has wrong dimension");
  std::vector<double> z(matrix_.rows());
  matrix_.multiply(x, z);
  for (std::size_t r = 0; r < z.size(); ++r) z[r] = loss_.derivative(r, z[r] - loss_.offset(r));
  std::vector<double> g(num_coords());
  matrix_.multiply_transpose(z, g);
  for (std::size_t c = 0; c < linear_.size(); ++c) g[c] += linear_[c];
  return g;
}

ObjectiveValue evaluate_objective(const CompositeProblem& problem, std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw Error("point has non-finite entries");
  }
  return problem.evaluate(x);
}

double weighted_norm_sq(const BlockStructure& blocks, std::span<const double> w,
                        std::span<const double> h) {
  double acc = 0.0;
  for (std::size_t i = 0; i < blocks.num_blocks(); ++i) {
    double sq = 0.0;
    for (auto v : blocks.slice(h, i)) sq += v * v;
    acc += w[i] * sq;
  }
  return acc;
}

std::size_t dso_support_factor(const CompositeProblem& problem, std::span<const double> h) {
  const auto& blocks = problem.blocks();
  std::vector<char> in_support(blocks.num_blocks(), 0);
  for (std::size_t i = 0; i < blocks.num_blocks(); ++i) {
    for (auto v : blocks.slice(h, i)) {
      if (v != 0.0) {
        in_support[i] = 1;
        break;
      }
    }
  }
  std::size_t theta = 0;
  for (std::size_t r = 0; r < problem.num_rows(); ++r) {
    std::size_t count = 0;
    for (auto b : problem.row_blocks(r)) count += static_cast<std::size_t>(in_support[b]);
    theta = std::max(theta, count);
  }
  return theta;
}

double dso_upper_bound(const CompositeProblem& problem, std::span<const double> x,
                       std::span<const double> h) {
  if (h.size() != problem.num_coords()) throw Error("direction has wrong dimension");
  const double fx = problem.evaluate(x).smooth;
  const auto grad = problem.gradient(x);
  double lin = 0.0;
  for (std::size_t c = 0; c < h.size(); ++c) lin += grad[c] * h[c];
  const auto theta = static_cast<double>(dso_support_factor(problem, h));
  return fx + lin + 0.5 * theta * weighted_norm_sq(problem.blocks(), problem.lipschitz(), h);
}

CompositeProblem make_svm_dual(const SparseMatrix& examples, std::span<const double> labels,
                               double lambda) {
  if (labels.size() != examples.rows()) throw Error("one label per example required");
  if (!(lambda > 0.0)) throw Error("SVM regularization must be positive");
  check_labels(labels);
  const auto n = static_cast<double>(examples.rows());
  const double scale = 1.0 / (n * std::sqrt(lambda));
  auto entries = examples.triplets();
  for (auto& t : entries) {
    t.value *= labels[t.row] * scale;
    std::swap(t.row, t.col);
  }
  auto m = SparseMatrix::from_triplets(examples.cols(), examples.rows(), std::move(entries));
  return CompositeProblem(std::move(m), Loss::square(std::vector<double>(examples.cols(), 0.0)),
                          Regularizer::box(0.0, 1.0), std::nullopt,
                          std::vector<double>(examples.rows(), -1.0 / n));
}

}  // namespace pcdm

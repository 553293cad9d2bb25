#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "pcdm/problem.hpp"
#include "pcdm/rng.hpp"
#include "pcdm/sparse_matrix.hpp"

namespace testing {

inline pcdm::SparseMatrix random_matrix(std::size_t m, std::size_t n, double density,
                                        std::uint64_t seed) {
  pcdm::Rng rng(seed, 77);
  std::vector<pcdm::Triplet> t;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (rng.uniform() < density) t.push_back({r, c, rng.uniform(-1.0, 1.0)});
    }
  }
  return pcdm::SparseMatrix::from_triplets(m, n, std::move(t));
}

/// Rows have between 1 and max_row nonzeros; every column is hit at least once.
inline pcdm::SparseMatrix random_partially_separable(std::size_t m, std::size_t n,
                                                     std::size_t max_row, std::uint64_t seed) {
  pcdm::Rng rng(seed, 78);
  std::vector<pcdm::Triplet> t;
  for (std::size_t r = 0; r < m; ++r) {
    const auto k = 1 + rng.below(max_row);
    for (std::size_t j = 0; j < k; ++j) t.push_back({r, rng.below(n), rng.uniform(-1.0, 1.0)});
  }
  for (std::size_t c = 0; c < n; ++c) t.push_back({rng.below(m), c, rng.uniform(0.5, 1.0)});
  auto A = pcdm::SparseMatrix::from_triplets(m, n, std::move(t));
  return A;
}

inline Eigen::MatrixXd dense(const pcdm::SparseMatrix& A) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(A.rows()),
                                            static_cast<Eigen::Index>(A.cols()));
  for (const auto& t : A.triplets()) D(static_cast<Eigen::Index>(t.row), static_cast<Eigen::Index>(t.col)) = t.value;
  return D;
}

inline Eigen::VectorXd vec(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                         double hi = 1.0) {
  pcdm::Rng rng(seed, 79);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline std::vector<double> random_labels(std::size_t m, std::uint64_t seed) {
  pcdm::Rng rng(seed, 80);
  std::vector<double> y(m);
  for (auto& v : y) v = rng.below(2) ? 1.0 : -1.0;
  return y;
}

/// Dense re-evaluation of f straight from the loss formulas.
inline double dense_f(const Eigen::MatrixXd& A, pcdm::LossKind kind, const std::vector<double>& t,
                      const Eigen::VectorXd& x) {
  const Eigen::VectorXd z = A * x;
  double f = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const double y = t[static_cast<std::size_t>(j)];
    switch (kind) {
      case pcdm::LossKind::Square: f += 0.5 * (z(j) - y) * (z(j) - y); break;
      case pcdm::LossKind::Logistic: f += std::log1p(std::exp(-y * z(j))); break;
      case pcdm::LossKind::HingeSquare: {
        const double h = std::max(0.0, 1.0 - y * z(j));
        f += 0.5 * h * h;
        break;
      }
    }
  }
  return f;
}

inline pcdm::Loss make_loss(pcdm::LossKind kind, std::vector<double> t) {
  switch (kind) {
    case pcdm::LossKind::Logistic: return pcdm::Loss::logistic(std::move(t));
    case pcdm::LossKind::HingeSquare: return pcdm::Loss::hinge_square(std::move(t));
    default: return pcdm::Loss::square(std::move(t));
  }
}

/// Probability of every subset (bitmask) obtained by brute force from the
/// definition of the law, independently of the library's formulas.
using Pmf = std::map<unsigned, double>;

inline double choose(unsigned n, unsigned k) {
  double c = 1.0;
  for (unsigned i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

inline void for_each_subset_of_size(unsigned n, unsigned k, const std::function<void(unsigned)>& f) {
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<unsigned>(__builtin_popcount(mask)) == k) f(mask);
  }
}

inline Pmf brute_nice(unsigned n, unsigned tau) {
  Pmf p;
  const double c = choose(n, tau);
  for_each_subset_of_size(n, tau, [&](unsigned m) { p[m] += 1.0 / c; });
  return p;
}

/// tau picks, each uniform over n, all n^tau sequences equally likely.
inline Pmf brute_independent(unsigned n, unsigned tau) {
  Pmf p;
  std::vector<unsigned> pick(tau, 0);
  const double w = std::pow(static_cast<double>(n), -static_cast<double>(tau));
  for (;;) {
    unsigned mask = 0;
    for (auto i : pick) mask |= 1u << i;
    p[mask] += w;
    std::size_t d = 0;
    while (d < tau && ++pick[d] == n) pick[d++] = 0;
    if (d == tau) break;
  }
  return p;
}

/// tau processors, each available with probability pb; K available -> K-nice set.
inline Pmf brute_binomial(unsigned n, unsigned tau, double pb) {
  Pmf p;
  for (unsigned avail = 0; avail < (1u << tau); ++avail) {
    const unsigned k = static_cast<unsigned>(__builtin_popcount(avail));
    const double w = std::pow(pb, k) * std::pow(1.0 - pb, tau - k);
    if (k == 0) {
      p[0] += w;
      continue;
    }
    const double c = choose(n, k);
    for_each_subset_of_size(n, k, [&](unsigned m) { p[m] += w / c; });
  }
  return p;
}

inline Pmf brute_du(unsigned n, const std::vector<double>& q) {
  Pmf p;
  for (unsigned k = 0; k <= n; ++k) {
    if (q[k] == 0.0) continue;
    const double c = choose(n, k);
    for_each_subset_of_size(n, k, [&](unsigned m) { p[m] += q[k] / c; });
  }
  return p;
}

inline Pmf brute_nu(const std::vector<std::vector<std::size_t>>& cells) {
  Pmf p;
  for (const auto& cell : cells) {
    unsigned m = 0;
    for (auto i : cell) m |= 1u << i;
    p[m] += 1.0 / static_cast<double>(cells.size());
  }
  return p;
}

}  // namespace testing

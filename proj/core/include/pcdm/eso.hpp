#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcdm/problem.hpp"
#include "pcdm/sampling.hpp"

namespace pcdm {

/// Certificate (beta, w) for E[f(x + h_[S])] <= f(x) + (E|S|/n)(<grad f(x), h> + (beta/2)||h||_w^2).
/// (c beta, w) and (beta, c w) certify the same inequality; beta is kept as
/// the family's closed-form value and w as a separate vector.
struct EsoParams {
  double beta = 1.0;
  std::vector<double> w;
  /// PCDM1 with this certificate never increases F.
  bool monotonic = false;

  /// Same certificate rewritten with beta = 1.
  EsoParams unit_beta() const;
};

/// Closed-form certificate for a law, block count n = L.size().
///   serial: (1, L)            fully parallel: (omega, L)
///   nice(tau): (1 + (omega-1)(tau-1)/max(1,n-1), L)
///   binomial(tau,p): (1 + p(omega-1)(tau-1)/max(1,n-1), L)
///   doubly uniform / independent: (1 + (omega-1)(E|S|^2/E|S| - 1)/max(1,n-1), L)
///   mixture: combine_eso over components
/// Nonoverlapping laws need the row structure: use the problem overload.
EsoParams eso_for(const SamplingLaw& law, std::size_t omega, std::span<const double> L);
/// As above, plus nonoverlapping laws via (1, gamma . L).
EsoParams eso_for(const SamplingLaw& law, const CompositeProblem& problem);

/// Conservative certificate (min{omega, tau}, L), monotonic, for laws with
/// |S| = tau almost surely. Throws otherwise.
EsoParams eso_fixed_cardinality(const SamplingLaw& law, std::size_t omega,
                                std::span<const double> L);

/// (1, nu . L) for any uniform law with computable nu.
EsoParams eso_from_nu(const SamplingLaw& law, std::size_t omega, std::span<const double> L);

/// nu_i = E[min{omega, |S|} | i in S]. Closed form for doubly uniform laws,
/// exact enumeration for n <= 20; other laws throw.
std::vector<double> nu_vector(const SamplingLaw& law, std::size_t omega, std::size_t n);

/// gamma_i = max over rows of |row blocks cap cell(i)|, floored at 1.
std::vector<double> gamma_vector(const std::vector<std::vector<std::size_t>>& cells,
                                 const CompositeProblem& problem);

struct EsoComponent {
  double weight;
  SamplingLaw law;
  EsoParams eso;
};

/// Certificate for the mixture sum_j weight_j S_j of uniform laws, returned
/// with beta = 1: w = sum_j weight_j E|S_j| beta_j w_j / sum_j weight_j E|S_j|.
EsoParams combine_eso(std::span<const EsoComponent> components, std::size_t n);

struct ConicTerm {
  double c;
  EsoParams eso;
};

/// Certificate (1, sum_j c_j beta_j w_j) for sum_j c_j f_j under a shared law.
EsoParams conic_combine(std::span<const ConicTerm> terms);

/// Strong convexity modulus of Omega with respect to ||.||_w: lambda / max_i w_i
/// for the L2 regularizer, 0 otherwise.
double regularizer_strong_convexity(const Regularizer& reg, std::span<const double> w);

struct EsoCheck {
  double lhs_mean = 0.0;  // estimate of E[f(x + h_[S])]
  double std_error = 0.0;
  double rhs = 0.0;
  /// (lhs_mean - rhs) / std_error; negative means the inequality holds.
  double margin_sigma = 0.0;
  bool violated = false;
};

struct EsoValidationReport {
  std::size_t points = 0;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double max_gap_sigma = 0.0;
  std::vector<EsoCheck> checks;
};

/// Monte-Carlo check of the ESO inequality at a given (x, h). Draws are
/// seeded by (seed, trial) only, so different certificates for the same law
/// see the same sets. The single-block changes serve as a control variate
/// with known mean, so the estimate is exact whenever the bound is tight.
EsoCheck check_eso_at(const CompositeProblem& problem, const SamplingLaw& law,
                      const EsoParams& eso, std::span<const double> x, std::span<const double> h,
                      std::size_t trials, std::uint64_t seed);

/// check_eso_at over `points` random (x, h) pairs. A violation is an estimate
/// exceeding the bound by more than 3 standard errors. trials >= 1000.
EsoValidationReport monte_carlo_validate(const CompositeProblem& problem, const SamplingLaw& law,
                                         const EsoParams& eso, std::size_t trials,
                                         std::size_t points, std::uint64_t seed);

}  // namespace pcdm

#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "pcdm/eso.hpp"
#include "pcdm/problem.hpp"
#include "pcdm/sampling.hpp"

namespace pcdm {

enum class ConvexBound {
  /// K >= 2 + (2 (beta/alpha) max{R^2, gap0/beta} / eps) (1 - eps/gap0 + log(1/rho))
  Direct,
  /// K >= (2 (beta/alpha) R^2 / eps) log(gap0 / (eps rho)), needs eps < 2 (beta/alpha) R^2
  LogConfidence,
};

/// Smallest integer K satisfying the chosen convex-case bound. radius_sq is
/// R_w^2(x0, x*). Throws unless 0 < eps < gap0 and 0 < rho < 1.
std::size_t iteration_bound_convex(double beta, double alpha, double radius_sq, double gap0,
                                   double eps, double rho, ConvexBound form);

/// Smallest integer K >= (1/alpha) ((beta + mu_omega)/(mu_f + mu_omega)) log(gap0/(eps rho)).
std::size_t iteration_bound_strongly_convex(double beta, double alpha, double mu_f,
                                            double mu_omega, double gap0, double eps,
                                            double rho);

struct StrongConvexity {
  double mu_f = 0.0;
  double mu_omega = 0.0;
};

/// Parallelization speedup factor for a doubly uniform law:
/// n / (beta/alpha) in the convex case, n / ((beta + mu_omega) / (alpha (1 + mu_omega)))
/// otherwise (independent of mu_f).
double speedup_factor(const SamplingLaw& law, std::size_t omega, std::size_t n,
                      std::optional<StrongConvexity> sc = std::nullopt);

/// Same quantity for an arbitrary certificate: the weights are compared to
/// the block Lipschitz constants through beta * max_i w_i / L_i.
double speedup_factor(const SamplingLaw& law, const EsoParams& eso, std::span<const double> L,
                      std::optional<StrongConvexity> sc = std::nullopt);

/// R_w(x0, x*) = ||x0 - x*||_w.
double weighted_distance(const BlockStructure& blocks, std::span<const double> w,
                         std::span<const double> x0, std::span<const double> xstar);

}  // namespace pcdm

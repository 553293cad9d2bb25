#include "pcdm/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pcdm/error.hpp"

namespace pcdm {

namespace {

void check_common(double beta, double alpha, double gap0, double eps, double rho) {
  if (!(beta > 0.0)) throw Error("beta must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("alpha must lie in (0, 1]");
  if (!(eps > 0.0)) throw Error("eps must be positive");
  if (!(eps < gap0)) {
    throw Error("eps must be below the initial gap (eps=" + std::to_string(eps) +
                ", gap0=" + std::to_string(gap0) + ")");
  }
  if (!(rho > 0.0 && rho < 1.0)) throw Error("rho must lie in (0, 1)");
}

std::size_t ceil_count(double k) {
  if (!std::isfinite(k)) throw Error("iteration bound is not finite");
  if (k <= 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(k));
}

double speedup(double beta, double e1, std::optional<StrongConvexity> sc) {
  if (!sc) return e1 / beta;
  if (sc->mu_omega < 0.0 || sc->mu_f < 0.0) throw Error("strong convexity moduli must be >= 0");
  return e1 * (1.0 + sc->mu_omega) / (beta + sc->mu_omega);
}

}  // namespace

std::size_t iteration_bound_convex(double beta, double alpha, double radius_sq, double gap0,
                                   double eps, double rho, ConvexBound form) {
  check_common(beta, alpha, gap0, eps, rho);
  if (!(radius_sq >= 0.0)) throw Error("radius must be nonnegative");
  const double ratio = beta / alpha;
  if (form == ConvexBound::Direct) {
    const double c1 = 2.0 * ratio * std::max(radius_sq, gap0 / beta);
    return ceil_count(2.0 + c1 / eps * (1.0 - eps / gap0 + std::log(1.0 / rho)));
  }
  if (!(eps < 2.0 * ratio * radius_sq)) {
    throw Error("log-confidence bound needs eps < 2 (beta/alpha) R^2");
  }
  return ceil_count(2.0 * ratio * radius_sq / eps * std::log(gap0 / (eps * rho)));
}

std::size_t iteration_bound_strongly_convex(double beta, double alpha, double mu_f,
                                            double mu_omega, double gap0, double eps,
                                            double rho) {
  if (!(mu_f + mu_omega > 0.0)) throw Error("mu_f + mu_omega must be positive");
  check_common(beta, alpha, gap0, eps, rho);
  return ceil_count((beta + mu_omega) / (alpha * (mu_f + mu_omega)) *
                    std::log(gap0 / (eps * rho)));
}

double speedup_factor(const SamplingLaw& law, std::size_t omega, std::size_t n,
                      std::optional<StrongConvexity> sc) {
  if (law.get_if<law::NonoverlappingUniform>()) {
    throw Error("nonoverlapping laws need the certificate; use the EsoParams overload");
  }
  const std::vector<double> ones(n, 1.0);
  const auto eso = eso_for(law, omega, ones);
  return speedup(eso.beta, moments(law, n).e1, sc);
}

double speedup_factor(const SamplingLaw& law, const EsoParams& eso, std::span<const double> L,
                      std::optional<StrongConvexity> sc) {
  if (eso.w.size() != L.size()) throw Error("certificate has wrong dimension");
  double worst = 0.0;
  for (std::size_t i = 0; i < L.size(); ++i) worst = std::max(worst, eso.w[i] / L[i]);
  return speedup(eso.beta * worst, moments(law, L.size()).e1, sc);
}

double weighted_distance(const BlockStructure& blocks, std::span<const double> w,
                         std::span<const double> x0, std::span<const double> xstar) {
  if (x0.size() != xstar.size() || x0.size() != blocks.num_coords()) {
    throw Error("points have wrong dimension");
  }
  std::vector<double> d(x0.size());
  for (std::size_t c = 0; c < d.size(); ++c) d[c] = x0[c] - xstar[c];
  return std::sqrt(weighted_norm_sq(blocks, w, d));
}

}  // namespace pcdm

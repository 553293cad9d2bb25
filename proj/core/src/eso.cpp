#include "pcdm/eso.hpp"

#include <algorithm>
#include <cmath>

#include "pcdm/error.hpp"
#include "pcdm/workspace.hpp"

namespace pcdm {

namespace {

void check_inputs(std::size_t omega, std::span<const double> L) {
  if (L.empty()) throw Error("no blocks");
  if (omega < 1 || omega > L.size()) {
    throw Error("omega must lie in [1, n] (omega=" + std::to_string(omega) +
                ", n=" + std::to_string(L.size()) + ")");
  }
  for (double l : L) {
    if (!(l > 0.0) || !std::isfinite(l)) throw Error("block Lipschitz constants must be positive");
  }
}

double denominator(std::size_t n) { return static_cast<double>(std::max<std::size_t>(1, n - 1)); }

EsoParams make(double beta, std::span<const double> L, bool monotonic) {
  return EsoParams{beta, std::vector<double>(L.begin(), L.end()), monotonic};
}

double doubly_uniform_beta(const SamplingMoments& m, std::size_t omega, std::size_t n) {
  return 1.0 + static_cast<double>(omega - 1) * (m.e2 / m.e1 - 1.0) / denominator(n);
}

}  // namespace

EsoParams EsoParams::unit_beta() const {
  EsoParams out{1.0, w, monotonic};
  for (auto& v : out.w) v *= beta;
  return out;
}

EsoParams eso_for(const SamplingLaw& law, std::size_t omega, std::span<const double> L) {
  check_inputs(omega, L);
  const auto n = L.size();
  validate(law, n);
  const double om1 = static_cast<double>(omega - 1);
  if (law.get_if<law::Serial>()) return make(1.0, L, true);
  if (law.get_if<law::FullyParallel>()) return make(static_cast<double>(omega), L, true);
  if (const auto* nice = law.get_if<law::Nice>()) {
    return make(1.0 + om1 * static_cast<double>(nice->tau - 1) / denominator(n), L, false);
  }
  if (const auto* bin = law.get_if<law::Binomial>()) {
    return make(1.0 + bin->p * om1 * static_cast<double>(bin->tau - 1) / denominator(n), L, false);
  }
  if (const auto* mix = law.get_if<law::Mixture>()) {
    std::vector<EsoComponent> parts;
    for (const auto& c : mix->components) {
      if (c.weight > 0.0) parts.push_back({c.weight, c.law, eso_for(c.law, omega, L)});
    }
    return combine_eso(parts, n);
  }
  if (law.get_if<law::NonoverlappingUniform>()) {
    if (auto k = fixed_cardinality(law, n); k && (*k == 1 || *k == n)) {
      return *k == 1 ? make(1.0, L, true) : make(static_cast<double>(omega), L, true);
    }
    throw Error("nonoverlapping sampling needs the row structure; pass the problem");
  }
  // Independent, DoublyUniform
  const auto m = moments(law, n);
  const auto k = fixed_cardinality(law, n);
  const bool monotonic = k && (*k == 1 || *k == n);
  return make(doubly_uniform_beta(m, omega, n), L, monotonic);
}

EsoParams eso_for(const SamplingLaw& law, const CompositeProblem& problem) {
  const auto L = problem.lipschitz();
  if (const auto* nu = law.get_if<law::NonoverlappingUniform>()) {
    check_inputs(problem.omega(), L);
    validate(law, L.size());
    auto gamma = gamma_vector(nu->cells, problem);
    for (std::size_t i = 0; i < gamma.size(); ++i) gamma[i] *= L[i];
    return EsoParams{1.0, std::move(gamma), true};
  }
  if (const auto* mix = law.get_if<law::Mixture>()) {
    std::vector<EsoComponent> parts;
    for (const auto& c : mix->components) {
      if (c.weight > 0.0) parts.push_back({c.weight, c.law, eso_for(c.law, problem)});
    }
    return combine_eso(parts, L.size());
  }
  return eso_for(law, problem.omega(), L);
}

EsoParams eso_fixed_cardinality(const SamplingLaw& law, std::size_t omega,
                                std::span<const double> L) {
  check_inputs(omega, L);
  validate(law, L.size());
  const auto tau = fixed_cardinality(law, L.size());
  if (!tau) throw Error("law " + law.describe() + " does not have a fixed cardinality");
  return make(static_cast<double>(std::min(omega, *tau)), L, true);
}

std::vector<double> nu_vector(const SamplingLaw& law, std::size_t omega, std::size_t n) {
  validate(law, n);
  if (auto q = cardinality_distribution(law, n)) {
    double num = 0.0, e1 = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      const double kk = static_cast<double>(k);
      num += (*q)[k] * kk * static_cast<double>(std::min(omega, k));
      e1 += (*q)[k] * kk;
    }
    return std::vector<double>(n, num / e1);
  }
  if (n > 20) {
    throw Error("nu has no closed form for " + law.describe() +
                "; use the fixed-cardinality certificate min{omega, tau}");
  }
  const auto pmf = enumerate_pmf(law, n);
  std::vector<double> num(n, 0.0), den(n, 0.0);
  for (std::size_t mask = 1; mask < pmf.prob.size(); ++mask) {
    const double p = pmf.prob[mask];
    if (p == 0.0) continue;
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    const double capped = static_cast<double>(std::min(omega, size));
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1U) {
        num[i] += p * capped;
        den[i] += p;
      }
    }
  }
  std::vector<double> nu(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (den[i] <= 0.0) throw Error("law is not proper: block " + std::to_string(i) + " never drawn");
    nu[i] = num[i] / den[i];
  }
  return nu;
}

EsoParams eso_from_nu(const SamplingLaw& law, std::size_t omega, std::span<const double> L) {
  check_inputs(omega, L);
  auto nu = nu_vector(law, omega, L.size());
  for (std::size_t i = 0; i < nu.size(); ++i) nu[i] *= L[i];
  return EsoParams{1.0, std::move(nu), false};
}

std::vector<double> gamma_vector(const std::vector<std::vector<std::size_t>>& cells,
                                 const CompositeProblem& problem) {
  const auto n = problem.num_blocks();
  std::vector<std::size_t> cell_of(n, static_cast<std::size_t>(-1));
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (auto i : cells[c]) {
      if (i >= n) throw Error("partition index out of range");
      cell_of[i] = c;
    }
  }
  for (auto c : cell_of) {
    if (c == static_cast<std::size_t>(-1)) throw Error("partition does not cover all blocks");
  }
  std::vector<std::size_t> best(cells.size(), 1), count(cells.size(), 0);
  std::vector<std::size_t> hit;
  for (std::size_t r = 0; r < problem.num_rows(); ++r) {
    hit.clear();
    for (auto b : problem.row_blocks(r)) {
      const auto c = cell_of[b];
      if (count[c]++ == 0) hit.push_back(c);
    }
    for (auto c : hit) {
      best[c] = std::max(best[c], count[c]);
      count[c] = 0;
    }
  }
  std::vector<double> gamma(n);
  for (std::size_t i = 0; i < n; ++i) gamma[i] = static_cast<double>(best[cell_of[i]]);
  return gamma;
}

EsoParams combine_eso(std::span<const EsoComponent> components, std::size_t n) {
  std::vector<double> w;
  double total = 0.0;
  std::size_t used = 0;
  bool monotonic = false;
  for (const auto& c : components) {
    if (c.weight < 0.0) throw Error("mixture weights must be nonnegative");
    if (c.weight == 0.0) continue;
    if (c.eso.w.size() != n) throw Error("component certificate has wrong dimension");
    const double e1 = moments(c.law, n).e1;
    const double scale = c.weight * e1;
    if (w.empty()) w.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) w[i] += scale * c.eso.beta * c.eso.w[i];
    total += scale;
    monotonic = c.eso.monotonic;
    ++used;
  }
  if (!(total > 0.0)) throw Error("nil sampling");
  for (auto& v : w) v /= total;
  return EsoParams{1.0, std::move(w), used == 1 && monotonic};
}

EsoParams conic_combine(std::span<const ConicTerm> terms) {
  std::vector<double> w;
  std::size_t used = 0;
  bool monotonic = false;
  for (const auto& t : terms) {
    if (t.c < 0.0) throw Error("conic coefficients must be nonnegative");
    if (t.c == 0.0) continue;
    if (w.empty()) w.assign(t.eso.w.size(), 0.0);
    if (t.eso.w.size() != w.size()) throw Error("certificates have different dimensions");
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += t.c * t.eso.beta * t.eso.w[i];
    monotonic = t.eso.monotonic;
    ++used;
  }
  if (used == 0) throw Error("all conic coefficients are zero");
  return EsoParams{1.0, std::move(w), used == 1 && monotonic};
}

double regularizer_strong_convexity(const Regularizer& reg, std::span<const double> w) {
  if (reg.kind() != RegularizerKind::L2Squared || w.empty()) return 0.0;
  return reg.lambda() / *std::max_element(w.begin(), w.end());
}

EsoCheck check_eso_at(const CompositeProblem& problem, const SamplingLaw& law,
                      const EsoParams& eso, std::span<const double> x, std::span<const double> h,
                      std::size_t trials, std::uint64_t seed) {
  const auto& bs = problem.blocks();
  const auto n = problem.num_blocks();
  if (eso.w.size() != n) throw Error("certificate has wrong dimension");
  if (h.size() != problem.num_coords()) throw Error("direction has wrong dimension");
  if (trials == 0) throw Error("need at least one trial");

  Workspace ws(problem, x);
  const auto grad = problem.gradient(x);
  const auto& A = problem.matrix();
  const auto& loss = problem.loss();
  const auto res = ws.residual();
  const auto lin = problem.linear_term();
  const double fx = ws.smooth_value();
  const auto m = moments(law, n);

  double inner = 0.0;
  for (std::size_t c = 0; c < h.size(); ++c) inner += grad[c] * h[c];
  const double quad = weighted_norm_sq(bs, eso.w, h);
  const double rhs_change = m.p * (inner + 0.5 * eso.beta * quad);

  std::vector<double> delta(problem.num_rows(), 0.0);
  std::vector<unsigned char> hit(problem.num_rows(), 0);
  std::vector<std::size_t> rows;
  // f(x + h_[S]) - f(x)
  auto change_for = [&](std::span<const std::size_t> set) {
    rows.clear();
    double change = 0.0;
    for (auto b : set) {
      for (std::size_t k = 0; k < bs.size(b); ++k) {
        const auto c = bs.offset(b) + k;
        if (h[c] == 0.0) continue;
        if (!lin.empty()) change += lin[c] * h[c];
        const auto col = A.col(c);
        for (std::size_t e = 0; e < col.nnz(); ++e) {
          const auto r = col.index[e];
          if (!hit[r]) {
            hit[r] = 1;
            rows.push_back(r);
          }
          delta[r] += col.value[e] * h[c];
        }
      }
    }
    for (auto r : rows) {
      change += loss.value(r, res[r] + delta[r]) - loss.value(r, res[r]);
      delta[r] = 0.0;
      hit[r] = 0;
    }
    return change;
  };

  // Control variate: the single-block changes c_i = f(x + h_[{i}]) - f(x)
  // have E[sum_{i in S} c_i] = p sum_i c_i for uniform laws. Subtracting them
  // keeps the estimate unbiased and removes all noise when the bound is tight
  // (serial sampling on a quadratic, separable f).
  std::vector<double> single(n);
  double single_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t one[] = {i};
    single[i] = change_for(one);
    single_mean += single[i];
  }
  single_mean *= m.p;

  Sampler sampler(law, n);
  std::vector<std::size_t> set;
  double mean = 0.0, m2 = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(seed, t);
    sampler.draw(rng, set);
    double change = change_for(set) + single_mean;
    for (auto b : set) change -= single[b];
    // Welford
    const double d = change - mean;
    mean += d / static_cast<double>(t + 1);
    m2 += d * (change - mean);
  }

  EsoCheck out;
  out.lhs_mean = fx + mean;
  out.rhs = fx + rhs_change;
  out.std_error = trials > 1 ? std::sqrt(m2 / static_cast<double>(trials - 1) /
                                         static_cast<double>(trials))
                             : 0.0;
  const double gap = mean - rhs_change;
  const double slack = 1e-10 * (1.0 + std::fabs(fx) + std::fabs(inner) + eso.beta * quad);
  out.violated = gap > 3.0 * out.std_error + slack;
  // below the rounding slack the standard error is noise, not sampling spread
  if (out.std_error > slack) {
    out.margin_sigma = gap / out.std_error;
  } else {
    out.margin_sigma = gap > slack ? std::numeric_limits<double>::infinity() : 0.0;
    if (gap < -slack) out.margin_sigma = -std::numeric_limits<double>::infinity();
  }
  return out;
}

EsoValidationReport monte_carlo_validate(const CompositeProblem& problem, const SamplingLaw& law,
                                         const EsoParams& eso, std::size_t trials,
                                         std::size_t points, std::uint64_t seed) {
  if (trials < 1000) throw Error("Monte-Carlo validation needs at least 1000 trials per point");
  const auto& bs = problem.blocks();
  const auto L = problem.lipschitz();
  const auto& reg = problem.regularizer();
  EsoValidationReport report;
  report.points = points;
  report.trials = trials;
  report.max_gap_sigma = -std::numeric_limits<double>::infinity();
  std::vector<double> x(problem.num_coords()), h(problem.num_coords());
  for (std::size_t p = 0; p < points; ++p) {
    Rng rng(seed, 0x9000 + p);
    for (std::size_t i = 0; i < bs.num_blocks(); ++i) {
      const double scale = 1.0 / std::sqrt(L[i]);
      for (std::size_t k = 0; k < bs.size(i); ++k) {
        const auto c = bs.offset(i) + k;
        double xc = rng.uniform(-1.0, 1.0);
        if (reg.kind() == RegularizerKind::Box) xc = std::clamp(xc, reg.lower(c), reg.upper(c));
        x[c] = xc;
        h[c] = scale * rng.uniform(-1.0, 1.0);
      }
    }
    auto check = check_eso_at(problem, law, eso, x, h, trials, seed + 0x5bd1e995ULL * (p + 1));
    if (check.violated) ++report.violations;
    report.max_gap_sigma = std::max(report.max_gap_sigma, check.margin_sigma);
    report.checks.push_back(check);
  }
  return report;
}

}  // namespace pcdm

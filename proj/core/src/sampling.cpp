#include "pcdm/sampling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pcdm/error.hpp"

namespace pcdm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kProbabilityTolerance = 1e-9;

void check_tau(std::size_t tau, std::size_t n, const char* what) {
  if (tau < 1 || tau > n) {
    throw Error(std::string(what) + " sampling needs 1 <= tau <= n (tau=" + std::to_string(tau) +
                ", n=" + std::to_string(n) + ")");
  }
}

void check_partition(const std::vector<std::vector<std::size_t>>& cells, std::size_t n) {
  if (cells.empty()) throw Error("partition has no cells");
  std::vector<unsigned char> seen(n, 0);
  std::size_t covered = 0;
  for (const auto& cell : cells) {
    if (cell.empty()) throw Error("partition cell is empty");
    for (auto i : cell) {
      if (i >= n) throw Error("partition index " + std::to_string(i) + " out of range");
      if (seen[i]) throw Error("partition cells overlap at block " + std::to_string(i));
      seen[i] = 1;
      ++covered;
    }
  }
  if (covered != n) throw Error("partition does not cover all blocks");
}

void check_probability_vector(std::span<const double> v, const char* what) {
  double total = 0.0;
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error(std::string(what) + " has a negative entry");
    total += x;
  }
  if (std::fabs(total - 1.0) > kProbabilityTolerance) {
    throw Error(std::string(what) + " does not sum to 1");
  }
}

double binomial_pmf(std::size_t tau, std::size_t k, double p) {
  if (p >= 1.0) return k == tau ? 1.0 : 0.0;
  const double t = static_cast<double>(tau), kk = static_cast<double>(k);
  return std::exp(std::lgamma(t + 1) - std::lgamma(kk + 1) - std::lgamma(t - kk + 1) +
                  kk * std::log(p) + (t - kk) * std::log1p(-p));
}

double log_choose(std::size_t n, std::size_t k) {
  return std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1) -
         std::lgamma(static_cast<double>(n - k) + 1);
}

// Probability that the law draws the empty set.
double empty_probability(const SamplingLaw& law, std::size_t n) {
  if (auto q = cardinality_distribution(law, n)) return (*q)[0];
  if (const auto* mix = law.get_if<law::Mixture>()) {
    double p = 0.0;
    for (const auto& c : mix->components) p += c.weight * empty_probability(c.law, n);
    return p;
  }
  return 0.0;  // NU cells are nonempty
}

void validate_impl(const SamplingLaw& law, std::size_t n) {
  if (n == 0) throw Error("sampling over zero blocks");
  std::visit(overloaded{
                 [](const law::Serial&) {},
                 [](const law::FullyParallel&) {},
                 [n](const law::Nice& l) { check_tau(l.tau, n, "nice"); },
                 [n](const law::Independent& l) { check_tau(l.tau, n, "independent"); },
                 [n](const law::Binomial& l) {
                   check_tau(l.tau, n, "binomial");
                   if (!(l.p > 0.0 && l.p <= 1.0)) throw Error("binomial needs 0 < p <= 1");
                 },
                 [n](const law::NonoverlappingUniform& l) { check_partition(l.cells, n); },
                 [n](const law::DoublyUniform& l) {
                   if (l.q.size() != n + 1) {
                     throw Error("doubly uniform q needs n + 1 = " + std::to_string(n + 1) +
                                 " entries, got " + std::to_string(l.q.size()));
                   }
                   check_probability_vector(l.q, "cardinality distribution q");
                 },
                 [n](const law::Mixture& l) {
                   if (l.components.empty()) throw Error("mixture has no components");
                   std::vector<double> w;
                   for (const auto& c : l.components) {
                     w.push_back(c.weight);
                     validate_impl(c.law, n);
                   }
                   check_probability_vector(w, "mixture weights");
                 },
             },
             law.variant());
}

}  // namespace

std::string SamplingLaw::describe() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const law::Serial&) { os << "serial"; },
                 [&](const law::FullyParallel&) { os << "full"; },
                 [&](const law::Nice& l) { os << "nice:" << l.tau; },
                 [&](const law::Independent& l) { os << "indep:" << l.tau; },
                 [&](const law::Binomial& l) { os << "binom:" << l.tau << ":" << l.p; },
                 [&](const law::NonoverlappingUniform& l) { os << "nu(" << l.cells.size() << " cells)"; },
                 [&](const law::DoublyUniform& l) { os << "du(n=" << l.q.size() - 1 << ")"; },
                 [&](const law::Mixture& l) {
                   os << "mixture(";
                   for (std::size_t i = 0; i < l.components.size(); ++i) {
                     if (i) os << ",";
                     os << l.components[i].weight << "*" << l.components[i].law.describe();
                   }
                   os << ")";
                 },
             },
             v_);
  return os.str();
}

void validate(const SamplingLaw& law, std::size_t n) {
  validate_impl(law, n);
  if (empty_probability(law, n) >= 1.0 - 1e-15) throw Error("nil sampling");
}

std::vector<double> independent_q(std::size_t n, std::size_t tau) {
  check_tau(tau, n, "independent");
  // dist[k] = P(k distinct blocks after t picks)
  std::vector<double> dist(n + 1, 0.0);
  dist[0] = 1.0;
  const double nn = static_cast<double>(n);
  for (std::size_t t = 1; t <= tau; ++t) {
    for (std::size_t k = std::min(t, n); k >= 1; --k) {
      dist[k] = dist[k] * (static_cast<double>(k) / nn) +
                dist[k - 1] * (static_cast<double>(n - k + 1) / nn);
    }
    dist[0] = 0.0;
  }
  return dist;
}

std::optional<std::vector<double>> cardinality_distribution(const SamplingLaw& law, std::size_t n) {
  auto point = [n](std::size_t k) {
    std::vector<double> q(n + 1, 0.0);
    q[k] = 1.0;
    return q;
  };
  return std::visit(
      overloaded{
          [&](const law::Serial&) -> std::optional<std::vector<double>> { return point(1); },
          [&](const law::FullyParallel&) -> std::optional<std::vector<double>> { return point(n); },
          [&](const law::Nice& l) -> std::optional<std::vector<double>> {
            check_tau(l.tau, n, "nice");
            return point(l.tau);
          },
          [&](const law::Independent& l) -> std::optional<std::vector<double>> {
            return independent_q(n, l.tau);
          },
          [&](const law::Binomial& l) -> std::optional<std::vector<double>> {
            check_tau(l.tau, n, "binomial");
            std::vector<double> q(n + 1, 0.0);
            for (std::size_t k = 0; k <= l.tau; ++k) q[k] = binomial_pmf(l.tau, k, l.p);
            return q;
          },
          [&](const law::NonoverlappingUniform& l) -> std::optional<std::vector<double>> {
            // serial and fully parallel are the only laws that are both NU and DU
            if (l.cells.size() == n && n > 0) return point(1);
            if (l.cells.size() == 1) return point(n);
            return std::nullopt;
          },
          [&](const law::DoublyUniform& l) -> std::optional<std::vector<double>> {
            if (l.q.size() != n + 1) throw Error("doubly uniform q has wrong length");
            return l.q;
          },
          [&](const law::Mixture& l) -> std::optional<std::vector<double>> {
            std::vector<double> q(n + 1, 0.0);
            for (const auto& c : l.components) {
              auto qc = cardinality_distribution(c.law, n);
              if (!qc) return std::nullopt;
              for (std::size_t k = 0; k <= n; ++k) q[k] += c.weight * (*qc)[k];
            }
            return q;
          },
      },
      law.variant());
}

std::optional<std::size_t> fixed_cardinality(const SamplingLaw& law, std::size_t n) {
  if (auto q = cardinality_distribution(law, n)) {
    std::optional<std::size_t> k;
    for (std::size_t i = 0; i <= n; ++i) {
      if ((*q)[i] > 0.0) {
        if (k) return std::nullopt;
        k = i;
      }
    }
    return k;
  }
  if (const auto* nu = law.get_if<law::NonoverlappingUniform>()) {
    const auto size = nu->cells.front().size();
    for (const auto& c : nu->cells) {
      if (c.size() != size) return std::nullopt;
    }
    return size;
  }
  if (const auto* mix = law.get_if<law::Mixture>()) {
    std::optional<std::size_t> k;
    for (const auto& c : mix->components) {
      if (c.weight == 0.0) continue;
      auto kc = fixed_cardinality(c.law, n);
      if (!kc || (k && *k != *kc)) return std::nullopt;
      k = kc;
    }
    return k;
  }
  return std::nullopt;
}

SamplingMoments moments(const SamplingLaw& law, std::size_t n) {
  validate(law, n);
  SamplingMoments m;
  const double nn = static_cast<double>(n);
  std::visit(overloaded{
                 [&](const law::Serial&) { m.e1 = m.e2 = 1.0; },
                 [&](const law::FullyParallel&) {
                   m.e1 = nn;
                   m.e2 = nn * nn;
                 },
                 [&](const law::Nice& l) {
                   m.e1 = static_cast<double>(l.tau);
                   m.e2 = m.e1 * m.e1;
                 },
                 [&](const law::Binomial& l) {
                   const double t = static_cast<double>(l.tau);
                   m.e1 = t * l.p;
                   m.e2 = t * l.p * (1.0 + t * l.p - l.p);
                 },
                 [&](const law::NonoverlappingUniform& l) {
                   const double cells = static_cast<double>(l.cells.size());
                   m.e1 = nn / cells;
                   double sq = 0.0;
                   for (const auto& c : l.cells) sq += static_cast<double>(c.size() * c.size());
                   m.e2 = sq / cells;
                 },
                 [&](const law::Mixture& l) {
                   for (const auto& c : l.components) {
                     if (c.weight == 0.0) continue;
                     const auto mc = moments(c.law, n);
                     m.e1 += c.weight * mc.e1;
                     m.e2 += c.weight * mc.e2;
                   }
                 },
                 [&](const auto&) {  // Independent, DoublyUniform
                   const auto q = *cardinality_distribution(law, n);
                   for (std::size_t k = 1; k <= n; ++k) {
                     const double kk = static_cast<double>(k);
                     m.e1 += q[k] * kk;
                     m.e2 += q[k] * kk * kk;
                   }
                 },
             },
             law.variant());
  m.p = m.e1 / nn;
  return m;
}

double PairProbabilities::operator()(std::size_t i, std::size_t j) const {
  if (i == j) return element_;
  double p = scalar_;
  for (const auto& t : cell_terms_) {
    if (t.cell_of[i] == t.cell_of[j]) p += t.weight;
  }
  return p;
}

double PairProbabilities::constant() const {
  if (!is_constant()) throw Error("pair probability depends on the partition");
  return scalar_;
}

PairProbabilities pair_probability(const SamplingLaw& law, std::size_t n) {
  if (n < 2) throw Error("pair probability needs at least two blocks");
  validate(law, n);
  PairProbabilities out;
  out.element_ = moments(law, n).p;
  const double nn = static_cast<double>(n);
  auto add = [&](const auto& self, const SamplingLaw& l, double weight) -> void {
    if (auto q = cardinality_distribution(l, n)) {
      double e1 = 0.0, e2 = 0.0;
      for (std::size_t k = 1; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        e1 += (*q)[k] * kk;
        e2 += (*q)[k] * kk * kk;
      }
      out.scalar_ += weight * (e2 - e1) / (nn * (nn - 1.0));
    } else if (const auto* nu = l.get_if<law::NonoverlappingUniform>()) {
      PairProbabilities::CellTerm term;
      term.weight = weight / static_cast<double>(nu->cells.size());
      term.cell_of.resize(n);
      for (std::size_t c = 0; c < nu->cells.size(); ++c) {
        for (auto i : nu->cells[c]) term.cell_of[i] = c;
      }
      out.cell_terms_.push_back(std::move(term));
    } else if (const auto* mix = l.get_if<law::Mixture>()) {
      for (const auto& c : mix->components) {
        if (c.weight > 0.0) self(self, c.law, weight * c.weight);
      }
    }
  };
  add(add, law, 1.0);
  return out;
}

SamplingLaw mixture(std::vector<law::Component> components, std::size_t n) {
  std::erase_if(components, [](const law::Component& c) { return c.weight == 0.0; });
  if (components.empty()) throw Error("mixture has no components with positive weight");
  SamplingLaw mixed = law::Mixture{components};
  validate_impl(mixed, n);
  if (empty_probability(mixed, n) >= 1.0 - 1e-15) throw Error("nil sampling");
  if (auto q = cardinality_distribution(mixed, n)) return SamplingLaw::doubly_uniform(std::move(*q));
  if (components.size() == 1) return components.front().law;
  return mixed;
}

double SubsetPmf::element_probability(std::size_t i) const {
  double p = 0.0;
  for (std::size_t mask = 0; mask < prob.size(); ++mask) {
    if (mask >> i & 1U) p += prob[mask];
  }
  return p;
}

double SubsetPmf::pair_probability(std::size_t i, std::size_t j) const {
  double p = 0.0;
  for (std::size_t mask = 0; mask < prob.size(); ++mask) {
    if ((mask >> i & 1U) && (mask >> j & 1U)) p += prob[mask];
  }
  return p;
}

SubsetPmf enumerate_pmf(const SamplingLaw& law, std::size_t n) {
  if (n > 20) throw Error("enumeration too large");
  validate(law, n);
  SubsetPmf pmf;
  pmf.n = n;
  pmf.prob.assign(std::size_t{1} << n, 0.0);
  auto add = [&](const auto& self, const SamplingLaw& l, double weight) -> void {
    if (auto q = cardinality_distribution(l, n)) {
      for (std::size_t mask = 0; mask < pmf.prob.size(); ++mask) {
        const auto k = static_cast<std::size_t>(std::popcount(mask));
        if ((*q)[k] > 0.0) pmf.prob[mask] += weight * (*q)[k] * std::exp(-log_choose(n, k));
      }
    } else if (const auto* nu = l.get_if<law::NonoverlappingUniform>()) {
      for (const auto& cell : nu->cells) {
        std::size_t mask = 0;
        for (auto i : cell) mask |= std::size_t{1} << i;
        pmf.prob[mask] += weight / static_cast<double>(nu->cells.size());
      }
    } else if (const auto* mix = l.get_if<law::Mixture>()) {
      for (const auto& c : mix->components) self(self, c.law, weight * c.weight);
    }
  };
  add(add, law, 1.0);
  return pmf;
}

void draw_nice(std::size_t n, std::size_t k, Rng& rng, std::vector<unsigned char>& mark,
               std::vector<std::size_t>& out) {
  out.clear();
  if (k == 0) return;
  if (k >= n) {
    out.resize(n);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return;
  }
  // Floyd's algorithm on the smaller of the set and its complement
  const bool complement = k > n / 2;
  const std::size_t pick = complement ? n - k : k;
  std::vector<std::size_t>& chosen = out;
  thread_local std::vector<std::size_t> excluded;
  auto& target = complement ? excluded : chosen;
  target.clear();
  for (std::size_t j = n - pick; j < n; ++j) {
    auto t = static_cast<std::size_t>(rng.below(j + 1));
    if (mark[t]) t = j;
    mark[t] = 1;
    target.push_back(t);
  }
  if (complement) {
    out.reserve(k);
    for (std::size_t i = 0; i < n; ++i) {
      if (!mark[i]) out.push_back(i);
    }
    for (auto i : excluded) mark[i] = 0;
  } else {
    for (auto i : out) mark[i] = 0;
    std::sort(out.begin(), out.end());
  }
}

struct Sampler::Impl {
  SamplingLaw law;
  std::size_t n;
  std::vector<unsigned char> mark;
  std::vector<double> cdf;                // cardinality (DU) or component (mixture)
  std::vector<std::vector<std::size_t>> cells;  // NU, sorted
  std::vector<std::unique_ptr<Impl>> children;  // mixture

  Impl(const SamplingLaw& l, std::size_t nblocks) : law(l), n(nblocks), mark(nblocks, 0) {
    validate_impl(law, n);
    if (const auto* du = law.get_if<law::DoublyUniform>()) {
      cdf.resize(du->q.size());
      std::partial_sum(du->q.begin(), du->q.end(), cdf.begin());
    } else if (const auto* nu = law.get_if<law::NonoverlappingUniform>()) {
      cells = nu->cells;
      for (auto& c : cells) std::sort(c.begin(), c.end());
    } else if (const auto* mix = law.get_if<law::Mixture>()) {
      double acc = 0.0;
      for (const auto& c : mix->components) {
        acc += c.weight;
        cdf.push_back(acc);
        children.push_back(std::make_unique<Impl>(c.law, n));
      }
    }
  }

  std::size_t pick_from_cdf(Rng& rng) const {
    const double u = rng.uniform() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
  }

  void draw(Rng& rng, std::vector<std::size_t>& out) {
    std::visit(overloaded{
                   [&](const law::Serial&) {
                     out.assign(1, static_cast<std::size_t>(rng.below(n)));
                   },
                   [&](const law::FullyParallel&) { draw_nice(n, n, rng, mark, out); },
                   [&](const law::Nice& l) { draw_nice(n, l.tau, rng, mark, out); },
                   [&](const law::Independent& l) {
                     out.clear();
                     for (std::size_t t = 0; t < l.tau; ++t) {
                       const auto i = static_cast<std::size_t>(rng.below(n));
                       if (!mark[i]) {
                         mark[i] = 1;
                         out.push_back(i);
                       }
                     }
                     for (auto i : out) mark[i] = 0;
                     std::sort(out.begin(), out.end());
                   },
                   [&](const law::Binomial& l) {
                     std::size_t k = 0;
                     for (std::size_t t = 0; t < l.tau; ++t) k += rng.uniform() < l.p ? 1 : 0;
                     draw_nice(n, k, rng, mark, out);
                   },
                   [&](const law::NonoverlappingUniform&) {
                     out = cells[static_cast<std::size_t>(rng.below(cells.size()))];
                   },
                   [&](const law::DoublyUniform&) { draw_nice(n, pick_from_cdf(rng), rng, mark, out); },
                   [&](const law::Mixture&) { children[pick_from_cdf(rng)]->draw(rng, out); },
               },
               law.variant());
  }
};

Sampler::Sampler(const SamplingLaw& law, std::size_t n) {
  validate(law, n);
  impl_ = std::make_unique<Impl>(law, n);
}
Sampler::~Sampler() = default;
Sampler::Sampler(Sampler&&) noexcept = default;
Sampler& Sampler::operator=(Sampler&&) noexcept = default;

std::size_t Sampler::num_blocks() const noexcept { return impl_->n; }

void Sampler::draw(Rng& rng, std::vector<std::size_t>& out) { impl_->draw(rng, out); }

std::vector<std::size_t> draw(const SamplingLaw& law, std::size_t n, Rng& rng) {
  Sampler s(law, n);
  return s.draw(rng);
}

}  // namespace pcdm

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "pcdm/rng.hpp"

namespace pcdm {

class SamplingLaw;

namespace law {

struct Serial {};
struct FullyParallel {};
struct Nice {
  std::size_t tau;
};
/// tau independent uniform picks; repeated picks collapse.
struct Independent {
  std::size_t tau;
};
/// K ~ Binomial(tau, p), then a K-nice set.
struct Binomial {
  std::size_t tau;
  double p;
};
/// One cell of a fixed partition, uniformly.
struct NonoverlappingUniform {
  std::vector<std::vector<std::size_t>> cells;
};
/// Cardinality k ~ q (q has n + 1 entries), then a k-nice set.
struct DoublyUniform {
  std::vector<double> q;
};
struct Component;
struct Mixture {
  std::vector<Component> components;
};

}  // namespace law

/// Random block sampling. A value type; the block count n is supplied by each
/// operation (NU and DU laws carry their own n and are checked against it).
class SamplingLaw {
 public:
  using Variant = std::variant<law::Serial, law::FullyParallel, law::Nice, law::Independent,
                               law::Binomial, law::NonoverlappingUniform, law::DoublyUniform,
                               law::Mixture>;

  SamplingLaw() : v_(law::Serial{}) {}
  SamplingLaw(Variant v) : v_(std::move(v)) {}  // NOLINT(google-explicit-constructor)
  template <typename T>
    requires std::is_constructible_v<Variant, T&&> &&
             (!std::is_same_v<std::remove_cvref_t<T>, SamplingLaw>) &&
             (!std::is_same_v<std::remove_cvref_t<T>, Variant>)
  SamplingLaw(T&& alt) : v_(std::forward<T>(alt)) {}  // NOLINT(google-explicit-constructor)

  static SamplingLaw serial() { return law::Serial{}; }
  static SamplingLaw fully_parallel() { return law::FullyParallel{}; }
  static SamplingLaw nice(std::size_t tau) { return law::Nice{tau}; }
  static SamplingLaw independent(std::size_t tau) { return law::Independent{tau}; }
  static SamplingLaw binomial(std::size_t tau, double p) { return law::Binomial{tau, p}; }
  static SamplingLaw nonoverlapping(std::vector<std::vector<std::size_t>> cells) {
    return law::NonoverlappingUniform{std::move(cells)};
  }
  static SamplingLaw doubly_uniform(std::vector<double> q) { return law::DoublyUniform{std::move(q)}; }

  const Variant& variant() const noexcept { return v_; }
  template <typename T>
  const T* get_if() const noexcept {
    return std::get_if<T>(&v_);
  }

  /// Short description, e.g. "nice:8" or "mixture(0.5*serial,0.5*full)".
  std::string describe() const;

 private:
  Variant v_;
};

namespace law {
struct Component {
  double weight;
  SamplingLaw law;
};
}  // namespace law

struct SamplingMoments {
  double e1 = 0.0;  // E|S|
  double e2 = 0.0;  // E|S|^2
  double p = 0.0;   // P(i in S) = e1 / n
};

/// Throws pcdm::Error when the law's parameters are invalid for n blocks or
/// the law is nil ("nil sampling").
void validate(const SamplingLaw& law, std::size_t n);

/// Closed-form moments.
SamplingMoments moments(const SamplingLaw& law, std::size_t n);

/// Cardinality distribution of tau independent uniform picks out of n,
/// q[0..n]. Computed by the forward recursion over the number of distinct
/// picks, which only adds nonnegative terms.
std::vector<double> independent_q(std::size_t n, std::size_t tau);

/// q[0..n] when the law is doubly uniform (all serial/full/nice/independent/
/// binomial/DU laws and mixtures of those), nullopt otherwise.
std::optional<std::vector<double>> cardinality_distribution(const SamplingLaw& law, std::size_t n);

/// True when every draw has the same cardinality; that cardinality.
std::optional<std::size_t> fixed_cardinality(const SamplingLaw& law, std::size_t n);

/// p_ij = P(i in S, j in S) for i != j. Constant for DU laws; partition
/// dependent for NU components.
class PairProbabilities {
 public:
  double operator()(std::size_t i, std::size_t j) const;
  bool is_constant() const noexcept { return cell_terms_.empty(); }
  /// Throws when not constant.
  double constant() const;

 private:
  friend PairProbabilities pair_probability(const SamplingLaw&, std::size_t);
  struct CellTerm {
    double weight;  // mixture weight / number of cells
    std::vector<std::size_t> cell_of;
  };
  double element_ = 0.0;
  double scalar_ = 0.0;
  std::vector<CellTerm> cell_terms_;
};

/// Throws for n == 1.
PairProbabilities pair_probability(const SamplingLaw& law, std::size_t n);

/// Two-stage law: pick a component by weight, then draw from it. When every
/// component is doubly uniform the result is normalized to DoublyUniform(q_mix).
SamplingLaw mixture(std::vector<law::Component> components, std::size_t n);

/// Exact probability of every subset, indexed by bitmask (bit i = block i).
struct SubsetPmf {
  std::size_t n = 0;
  std::vector<double> prob;

  double element_probability(std::size_t i) const;
  double pair_probability(std::size_t i, std::size_t j) const;
};

/// n <= 20, else throws "enumeration too large".
SubsetPmf enumerate_pmf(const SamplingLaw& law, std::size_t n);

/// Draws sets from a law. Holds scratch space so a draw costs O(|S|) expected
/// for the subset laws. Output is sorted ascending. Not thread-safe; use one
/// sampler per thread.
class Sampler {
 public:
  Sampler(const SamplingLaw& law, std::size_t n);
  ~Sampler();
  Sampler(Sampler&&) noexcept;
  Sampler& operator=(Sampler&&) noexcept;

  std::size_t num_blocks() const noexcept;
  void draw(Rng& rng, std::vector<std::size_t>& out);
  std::vector<std::size_t> draw(Rng& rng) {
    std::vector<std::size_t> out;
    draw(rng, out);
    return out;
  }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot convenience wrapper around Sampler.
std::vector<std::size_t> draw(const SamplingLaw& law, std::size_t n, Rng& rng);

/// Uniform k-subset of [0, n), sorted. `mark` must be all-zero with size >= n
/// and is all-zero again on return.
void draw_nice(std::size_t n, std::size_t k, Rng& rng, std::vector<unsigned char>& mark,
               std::vector<std::size_t>& out);

}  // namespace pcdm

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pcdm/eso.hpp"
#include "pcdm/problem.hpp"
#include "pcdm/sampling.hpp"
#include "pcdm/workspace.hpp"

namespace pcdm {

enum class Variant { Pcdm1, Pcdm2 };

struct SolverConfig {
  SamplingLaw law;
  /// Defaults to eso_for(law, problem).
  std::optional<EsoParams> eso;
  Variant variant = Variant::Pcdm1;
  /// 0 runs the synchronous iteration in the calling thread; k > 0 splits
  /// every iteration over k threads (the caller counts as one of them).
  std::size_t threads = 0;
  std::size_t max_iters = std::numeric_limits<std::size_t>::max();
  /// Stop after this many epochs (n block updates).
  double max_epochs = std::numeric_limits<double>::infinity();
  /// Used when the problem has a known optimum.
  double target_gap = 1e-10;
  std::uint64_t seed = 0;
  /// Iterations between trace records; 0 records only the first and last.
  std::size_t trace_every = 1;
  /// Empty means x0 = 0.
  std::vector<double> x0;
};

struct TraceRecord {
  std::size_t k = 0;
  /// Block updates so far divided by n.
  double normalized_updates = 0.0;
  /// F(x_k) - F* when F* is known, F(x_k) otherwise.
  double value = 0.0;
  double elapsed_s = 0.0;
};

struct Trace {
  std::vector<TraceRecord> records;
  bool reports_gap = false;
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t block_updates = 0;
  std::size_t rejected_steps = 0;
  double final_objective = 0.0;
  std::vector<double> x;
};

/// h^(i)(x) for one block: the minimizer of <g, t> + (s/2)||t||^2 + Omega_i(x^(i) + t)
/// with s = beta w_i, written into `h`.
void block_update(const CompositeProblem& problem, const EsoParams& eso,
                  std::span<const double> x, std::size_t block, std::span<const double> grad,
                  std::span<double> h);

/// PCDM1 / PCDM2. Iteration k draws S_k from Rng(seed, k), so the set sequence
/// depends only on the seed. All h^(i) of an iteration are computed from the
/// iterate before any of them is applied.
class Solver {
 public:
  Solver(const CompositeProblem& problem, SolverConfig config);
  ~Solver();
  Solver(const Solver&) = delete;
  Solver& operator=(const Solver&) = delete;

  /// One iteration. Returns false when PCDM2 rejected the step.
  bool step();
  /// Iterate until the target gap, max_iters or max_epochs.
  Trace run();

  std::size_t iteration() const noexcept { return k_; }
  std::size_t block_updates() const noexcept { return updates_; }
  double objective() const noexcept { return ws_.objective(); }
  std::span<const double> x() const noexcept { return ws_.x(); }
  const EsoParams& eso() const noexcept { return eso_; }
  const Workspace& workspace() const noexcept { return ws_; }
  /// S_k of the last iteration.
  std::span<const std::size_t> last_set() const noexcept { return set_; }

 private:
  class Pool;
  void compute_range(std::size_t first, std::size_t last);
  void refresh_if_due(std::vector<double>* backup);

  const CompositeProblem& problem_;
  SolverConfig config_;
  EsoParams eso_;
  Workspace ws_;
  Sampler sampler_;
  std::unique_ptr<Pool> pool_;
  std::size_t k_ = 0;
  std::size_t updates_ = 0;
  std::size_t rejected_ = 0;

  std::vector<std::size_t> set_;
  std::vector<std::size_t> packed_;  // packed offset of set_[j]
  std::vector<double> delta_;
  std::vector<double> old_x_;
  std::vector<double> grad_;
  std::vector<double> residual_backup_;
  struct Partial {
    double dloss = 0.0, dlin = 0.0, dreg = 0.0;
    std::vector<std::pair<std::size_t, double>> undo;
  };
  std::vector<Partial> partials_;
};

/// Number of threads ParallelThreads mode may use.
std::size_t max_solver_threads();

}  // namespace pcdm

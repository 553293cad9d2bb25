#include "pcdm/solver.hpp"

#include <algorithm>
#include <barrier>
#include <cmath>
#include <exception>
#include <functional>
#include <thread>

#include "pcdm/error.hpp"

namespace pcdm {

std::size_t max_solver_threads() {
  // Oversubscription up to 8 is allowed so that small machines can still run
  // the threaded path.
  return std::max<std::size_t>(std::thread::hardware_concurrency(), 8);
}

void block_update(const CompositeProblem& problem, const EsoParams& eso,
                  std::span<const double> x, std::size_t block, std::span<const double> grad,
                  std::span<double> h) {
  const auto& bs = problem.blocks();
  const auto& reg = problem.regularizer();
  const double s = eso.beta * eso.w[block];
  const auto off = bs.offset(block);
  for (std::size_t t = 0; t < bs.size(block); ++t) {
    const auto c = off + t;
    h[t] = reg.prox_step(c, x[c], grad[t], s) - x[c];
  }
}

class Solver::Pool {
 public:
  explicit Pool(std::size_t n) : n_(n), start_(static_cast<std::ptrdiff_t>(n)),
                                 done_(static_cast<std::ptrdiff_t>(n)), errors_(n) {
    for (std::size_t t = 1; t < n; ++t) workers_.emplace_back([this, t] { loop(t); });
  }
  ~Pool() {
    stop_ = true;
    start_.arrive_and_wait();
  }

  std::size_t size() const noexcept { return n_; }

  void run(std::function<void(std::size_t)> task) {
    task_ = std::move(task);
    start_.arrive_and_wait();
    try {
      task_(0);
    } catch (...) {
      errors_[0] = std::current_exception();
    }
    done_.arrive_and_wait();
    for (auto& e : errors_) {
      if (e) {
        auto first = e;
        for (auto& f : errors_) f = nullptr;
        std::rethrow_exception(first);
      }
    }
  }

 private:
  void loop(std::size_t t) {
    for (;;) {
      start_.arrive_and_wait();
      if (stop_) return;
      try {
        task_(t);
      } catch (...) {
        errors_[t] = std::current_exception();
      }
      done_.arrive_and_wait();
    }
  }

  std::size_t n_;
  bool stop_ = false;
  std::function<void(std::size_t)> task_;
  std::barrier<> start_;
  std::barrier<> done_;
  std::vector<std::exception_ptr> errors_;
  std::vector<std::jthread> workers_;
};

namespace {

std::pair<std::size_t, std::size_t> chunk(std::size_t total, std::size_t parts, std::size_t t) {
  return {total * t / parts, total * (t + 1) / parts};
}

}  // namespace

Solver::Solver(const CompositeProblem& problem, SolverConfig config)
    : problem_(problem),
      config_(std::move(config)),
      eso_(config_.eso ? *config_.eso : eso_for(config_.law, problem)),
      ws_(problem, config_.x0),
      sampler_(config_.law, problem.num_blocks()) {
  const auto n = problem.num_blocks();
  if (eso_.w.size() != n) throw Error("certificate has wrong dimension");
  if (!(eso_.beta > 0.0)) throw Error("beta must be positive");
  for (double w : eso_.w) {
    if (!(w > 0.0)) throw Error("certificate weights must be positive");
  }
  if (!std::isfinite(ws_.objective())) throw Error("initial point outside the domain of F");
  if (config_.threads > max_solver_threads()) {
    throw Error("requested " + std::to_string(config_.threads) + " threads, at most " +
                std::to_string(max_solver_threads()) + " available");
  }
  const std::size_t parts = std::max<std::size_t>(1, config_.threads);
  if (config_.threads > 0) pool_ = std::make_unique<Pool>(config_.threads);
  partials_.resize(parts);
}

Solver::~Solver() = default;

void Solver::compute_range(std::size_t first, std::size_t last) {
  thread_local std::vector<double> grad;
  const auto& bs = problem_.blocks();
  const auto x = ws_.x();
  for (std::size_t j = first; j < last; ++j) {
    const auto b = set_[j];
    const auto size = bs.size(b);
    grad.resize(size);
    block_gradient(problem_, ws_, b, grad);
    const std::span<double> h(delta_.data() + packed_[j], size);
    block_update(problem_, eso_, x, b, grad, h);
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(bs.offset(b)), size,
                old_x_.begin() + static_cast<std::ptrdiff_t>(packed_[j]));
  }
}

void Solver::refresh_if_due(std::vector<double>* backup) {
  if (ws_.updates_since_refresh() < 2 * problem_.num_blocks()) return;
  if (backup) backup->assign(ws_.residual().begin(), ws_.residual().end());
  ws_.refresh(problem_);
}

bool Solver::step() {
  Rng rng(config_.seed, k_);
  sampler_.draw(rng, set_);
  const auto& bs = problem_.blocks();
  packed_.resize(set_.size());
  std::size_t total = 0;
  for (std::size_t j = 0; j < set_.size(); ++j) {
    packed_[j] = total;
    total += bs.size(set_[j]);
  }
  delta_.resize(total);
  old_x_.resize(total);

  const bool guarded = config_.variant == Variant::Pcdm2;
  const double f_old = ws_.objective();
  const double loss_old = ws_.loss_sum(), lin_old = ws_.linear_sum(), reg_old = ws_.reg_sum();
  const std::size_t parts = partials_.size();
  const std::size_t rows = problem_.num_rows();

  auto compute = [&](std::size_t t) {
    const auto [a, b] = chunk(set_.size(), parts, t);
    compute_range(a, b);
  };
  auto apply = [&](std::size_t t) {
    auto& part = partials_[t];
    part.undo.clear();
    const auto [a, b] = chunk(set_.size(), parts, t);
    std::tie(part.dlin, part.dreg) = ws_.apply_coordinates(problem_, set_, delta_, a, b);
    const auto [r0, r1] = chunk(rows, parts, t);
    part.dloss = ws_.apply_rows(problem_, set_, delta_, r0, r1, guarded ? &part.undo : nullptr);
  };
  if (pool_) {
    pool_->run(compute);
    pool_->run(apply);
  } else {
    compute(0);
    apply(0);
  }
  double dloss = 0.0, dlin = 0.0, dreg = 0.0;
  for (const auto& p : partials_) {
    dloss += p.dloss;
    dlin += p.dlin;
    dreg += p.dreg;
  }
  ws_.commit(dloss, dlin, dreg, set_.size());
  updates_ += set_.size();
  ++k_;

  if (!guarded) {
    refresh_if_due(nullptr);
    if (!std::isfinite(ws_.objective())) throw DivergenceError("divergence");
    return true;
  }

  residual_backup_.clear();
  refresh_if_due(&residual_backup_);
  const double f_new = ws_.objective();
  if (std::isnan(f_new) || (std::isinf(f_new) && f_new < 0)) throw DivergenceError("divergence");
  if (f_new <= f_old) return true;

  std::vector<std::pair<std::size_t, double>> undo;
  for (const auto& p : partials_) undo.insert(undo.end(), p.undo.begin(), p.undo.end());
  // the backup holds the post-step residual, so the undo log goes on top of it
  if (!residual_backup_.empty()) ws_.restore_residual(residual_backup_);
  ws_.rollback(problem_, set_, old_x_, undo, loss_old, lin_old, reg_old);
  ++rejected_;
  return false;
}

Trace Solver::run() {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const auto n = static_cast<double>(problem_.num_blocks());
  const auto& opt = problem_.known_optimum();

  Trace trace;
  trace.reports_gap = opt.has_value();
  auto value = [&] { return opt ? ws_.objective() - opt->value : ws_.objective(); };
  auto record = [&] {
    const double elapsed = std::chrono::duration<double>(clock::now() - start).count();
    trace.records.push_back({k_, static_cast<double>(updates_) / n, value(), elapsed});
  };
  auto epochs = [&] { return static_cast<double>(updates_) / n; };

  record();
  double window_start_f = ws_.objective();
  std::size_t window_start_updates = updates_;
  while (k_ < config_.max_iters && epochs() < config_.max_epochs) {
    step();
    bool done = false;
    if (opt) {
      if (value() <= config_.target_gap) {
        ws_.refresh(problem_);
        done = value() <= config_.target_gap;
      }
    } else if (updates_ - window_start_updates >= problem_.num_blocks()) {
      const double f = ws_.objective();
      done = std::fabs(f - window_start_f) <= 1e-12 * std::max(1.0, std::fabs(f));
      window_start_f = f;
      window_start_updates = updates_;
    }
    if (done) {
      trace.converged = true;
      break;
    }
    if (config_.trace_every > 0 && k_ % config_.trace_every == 0) record();
  }
  if (trace.records.back().k != k_) record();

  trace.iterations = k_;
  trace.block_updates = updates_;
  trace.rejected_steps = rejected_;
  trace.final_objective = ws_.objective();
  trace.x.assign(ws_.x().begin(), ws_.x().end());
  return trace;
}

}  // namespace pcdm

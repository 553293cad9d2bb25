#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "pcdm/datagen.hpp"
#include "pcdm/error.hpp"
#include "pcdm/solver.hpp"

using namespace pcdm;

namespace {

CompositeProblem scalar_problem(Regularizer reg) {
  return CompositeProblem(SparseMatrix::from_triplets(1, 1, {{0, 0, 1.0}}), Loss::square({0.0}), std::move(reg));
}

double h_of(const CompositeProblem& p, double s, double x, double g) {
  const EsoParams eso{1.0, {s}, true};
  const std::vector<double> xv{x}, gv{g};
  std::vector<double> h(1);
  block_update(p, eso, xv, 0, gv, h);
  return h[0];
}

/// Minimizer of g t + s t^2 / 2 + omega(x + t) over a fine grid.
template <typename Omega>
double grid_argmin(double x, double g, double s, Omega omega) {
  double best = 0.0, best_v = INFINITY;
  for (int k = -400000; k <= 400000; ++k) {
    const double t = k * 1e-5;
    const double v = g * t + 0.5 * s * t * t + omega(x + t);
    if (v < best_v) {
      best_v = v;
      best = t;
    }
  }
  return best;
}

CompositeProblem small_lasso(std::uint64_t seed, double lambda = 1.0) {
  LassoOptions opt;
  opt.n = 100;
  opt.m = 200;
  opt.nnz_per_col = 5;
  opt.support_size = 10;
  opt.lambda = lambda;
  opt.seed = seed;
  return make_lasso_problem(generate_lasso(opt));
}

double soft(double v, double t) { return v > t ? v - t : v < -t ? v + t : 0.0; }

}  // namespace

TEST_CASE("block update closed forms") {
  CHECK(h_of(scalar_problem(Regularizer::zero()), 2.0, 0.0, 4.0) == -2.0);
  CHECK(h_of(scalar_problem(Regularizer::l1(1.0)), 2.0, 0.0, 3.0) == doctest::Approx(-1.0));
  CHECK(h_of(scalar_problem(Regularizer::box(0.0, 1.0)), 1.0, 0.9, -5.0) == doctest::Approx(0.1));
  CHECK(h_of(scalar_problem(Regularizer::l2_squared(2.0)), 3.0, 1.0, 1.0) == doctest::Approx(-3.0 / 5.0));

  const auto l1 = scalar_problem(Regularizer::l1(1.0));
  const auto box = scalar_problem(Regularizer::box(0.0, 1.0));
  Rng rng(5, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const double x = rng.uniform(-1.0, 1.0), g = rng.uniform(-3.0, 3.0), s = rng.uniform(0.5, 3.0);
    CHECK(h_of(l1, s, x, g) ==
          doctest::Approx(grid_argmin(x, g, s, [](double v) { return std::fabs(v); })).epsilon(2e-5));
    const double xb = rng.uniform(0.0, 1.0);
    CHECK(h_of(box, s, xb, g) ==
          doctest::Approx(grid_argmin(xb, g, s, [](double v) { return v < 0 || v > 1 ? INFINITY : 0.0; }))
              .epsilon(2e-5));
  }
}

TEST_CASE("multi-coordinate blocks update coordinatewise") {
  const auto A = testing::random_matrix(8, 6, 0.6, 3);
  CompositeProblem p(A, Loss::square(testing::random_vector(8, 4)), Regularizer::l1(0.3),
                     BlockStructure::from_sizes({2, 3, 1}));
  const EsoParams eso{1.5, {2.0, 3.0, 4.0}, false};
  const auto x = testing::random_vector(6, 5);
  const auto g = p.gradient(x);
  std::vector<double> h(3);
  block_update(p, eso, x, 1, std::span(g).subspan(2, 3), h);
  for (std::size_t j = 0; j < 3; ++j) {
    const double s = 1.5 * 3.0;
    CHECK(x[2 + j] + h[j] == doctest::Approx(soft(x[2 + j] - g[2 + j] / s, 0.3 / s)));
  }
}

TEST_CASE("step uses the snapshot") {
  const auto p = small_lasso(1);
  SolverConfig cfg{SamplingLaw::nice(17)};
  cfg.seed = 9;
  Solver solver(p, cfg);
  for (int k = 0; k < 30; ++k) {
    const std::vector<double> before(solver.x().begin(), solver.x().end());
    solver.step();
    const std::vector<std::size_t> set(solver.last_set().begin(), solver.last_set().end());
    const auto g = p.gradient(before);
    // any processing order gives the same h when all gradients come from x_k
    auto order = set;
    std::reverse(order.begin(), order.end());
    Rng shuffle(k, 1);
    std::shuffle(order.begin(), order.end(), shuffle);
    auto expect = before;
    for (auto i : order) {
      std::vector<double> h(1);
      block_update(p, solver.eso(), before, i, std::span(g).subspan(i, 1), h);
      expect[i] += h[0];
    }
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(solver.x()[i] == doctest::Approx(expect[i]).epsilon(1e-13));
  }
}

TEST_CASE("fully parallel step is a separable prox step") {
  const auto A = testing::random_partially_separable(30, 10, 3, 2);
  CompositeProblem p(A, Loss::square(testing::random_vector(30, 3)), Regularizer::zero());
  SolverConfig cfg{SamplingLaw::nice(10)};
  cfg.eso = eso_for(SamplingLaw::fully_parallel(), p);
  const auto x0 = testing::random_vector(10, 11);
  cfg.x0 = x0;
  Solver from_x0(p, cfg);
  from_x0.step();
  const auto g = p.gradient(x0);
  const double omega = static_cast<double>(p.omega());
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(from_x0.x()[i] == doctest::Approx(x0[i] - g[i] / (omega * p.lipschitz()[i])).epsilon(1e-13));
  }
}

TEST_CASE("serial law reproduces a hand-written serial coordinate descent") {
  const auto p = small_lasso(2, 0.5);
  const auto D = testing::dense(p.matrix());
  const auto b = p.loss().targets();
  const std::size_t n = p.num_coords();
  SolverConfig cfg{SamplingLaw::serial()};
  cfg.seed = 21;
  Solver solver(p, cfg);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd r = -testing::vec(b);
  for (std::size_t k = 0; k < 2000; ++k) {
    Rng rng(21, k);
    const auto i = static_cast<Eigen::Index>(draw(SamplingLaw::serial(), n, rng).front());
    const double Li = D.col(i).squaredNorm();
    const double g = D.col(i).dot(r);
    const double xi = soft(x(i) - g / Li, 0.5 / Li);
    r += (xi - x(i)) * D.col(i);
    x(i) = xi;
    solver.step();
  }
  for (std::size_t i = 0; i < n; ++i) CHECK(solver.x()[i] == doctest::Approx(x(static_cast<Eigen::Index>(i))).epsilon(1e-10));
}

TEST_CASE("expected one-step decrease") {
  const auto p = small_lasso(3);
  const auto law = SamplingLaw::nice(20);
  SolverConfig warm{law};
  warm.max_iters = 15;
  warm.seed = 1;
  Solver pre(p, warm);
  pre.run();
  const std::vector<double> x(pre.x().begin(), pre.x().end());
  const auto eso = eso_for(law, p);

  // H(x, h(x)) = f(x) + <grad f, h> + beta/2 ||h||_w^2 + Omega(x + h)
  const auto g = p.gradient(x);
  const auto fx = p.evaluate(x);
  std::vector<double> xh = x;
  double model = fx.smooth;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> h(1);
    block_update(p, eso, x, i, std::span(g).subspan(i, 1), h);
    model += g[i] * h[0] + 0.5 * eso.beta * eso.w[i] * h[0] * h[0];
    xh[i] += h[0];
  }
  model += p.evaluate(xh).regularizer;
  const double alpha = 20.0 / 100.0;
  const double bound = (1 - alpha) * fx.total + alpha * model;

  double sum = 0.0, sq = 0.0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    SolverConfig cfg{law};
    cfg.x0 = x;
    cfg.seed = 1000 + static_cast<std::uint64_t>(t);
    Solver s(p, cfg);
    s.step();
    const double f = p.evaluate(s.x()).total;
    sum += f;
    sq += f * f;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt(std::max(0.0, sq / trials - mean * mean) / trials);
  CHECK(mean <= bound + 3 * sd + 1e-12 * std::fabs(bound));
  CHECK(bound < fx.total);
}

TEST_CASE("run bookkeeping") {
  const auto p = small_lasso(4);
  SolverConfig cfg{SamplingLaw::nice(10)};
  cfg.max_iters = 0;
  const auto t0 = Solver(p, cfg).run();
  REQUIRE(t0.records.size() == 1);
  CHECK(t0.records[0].k == 0);
  CHECK(t0.records[0].normalized_updates == 0.0);
  CHECK(t0.reports_gap);
  CHECK(t0.records[0].value == doctest::Approx(p.evaluate(std::vector<double>(100, 0.0)).total -
                                               p.known_optimum()->value));

  cfg.max_iters = 25;
  cfg.trace_every = 10;
  const auto t1 = Solver(p, cfg).run();
  REQUIRE(t1.records.size() == 4);
  CHECK(t1.records[1].k == 10);
  CHECK(t1.records.back().k == 25);
  CHECK(t1.records.back().normalized_updates == doctest::Approx(2.5));
  CHECK(t1.iterations == 25);
  CHECK(t1.block_updates == 250);

  cfg.max_iters = std::numeric_limits<std::size_t>::max();
  cfg.trace_every = 0;
  const auto t2 = Solver(p, cfg).run();
  CHECK(t2.converged);
  CHECK(t2.records.size() == 2);
  CHECK(t2.records.back().value <= 1e-10);
  CHECK(p.evaluate(t2.x).total - p.known_optimum()->value <= 1e-9);

  cfg.max_epochs = 3;
  const auto t3 = Solver(p, cfg).run();
  CHECK_FALSE(t3.converged);
  CHECK(t3.records.back().normalized_updates == doctest::Approx(3.0));
}

TEST_CASE("without a known optimum the run stops on stalled progress") {
  const auto A = testing::random_partially_separable(60, 20, 4, 6);
  CompositeProblem p(A, Loss::logistic(testing::random_labels(60, 7)), Regularizer::l2_squared(0.1));
  SolverConfig cfg{SamplingLaw::nice(4)};
  cfg.max_epochs = 5000;
  const auto t = Solver(p, cfg).run();
  CHECK_FALSE(t.reports_gap);
  CHECK(t.converged);
  // near-stationary: grad f + lambda x ~ 0
  const auto g = p.gradient(t.x);
  for (std::size_t i = 0; i < 20; ++i) CHECK(std::fabs(g[i] + 0.1 * t.x[i]) < 1e-4);
}

TEST_CASE("PCDM2 never increases F") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto A = testing::random_partially_separable(80, 30, 6, seed);
    CompositeProblem p(A, Loss::square(testing::random_vector(80, seed + 50)), Regularizer::l1(0.2));
    SolverConfig cfg{SamplingLaw::nice(12)};
    cfg.variant = Variant::Pcdm2;
    cfg.max_iters = 300;
    cfg.seed = seed;
    auto eso = eso_for(cfg.law, p);
    eso.beta *= 0.2;  // too aggressive on purpose, so steps get rejected
    cfg.eso = eso;
    const auto t = Solver(p, cfg).run();
    CHECK(t.rejected_steps > 0);
    for (std::size_t k = 1; k < t.records.size(); ++k) CHECK(t.records[k].value <= t.records[k - 1].value);
    CHECK(p.evaluate(t.x).total == doctest::Approx(t.final_objective).epsilon(1e-10));
  }
}

TEST_CASE("threads agree with the sequential run") {
  const auto p = small_lasso(5);
  for (std::size_t threads : {1u, 3u, 8u}) {
    for (auto variant : {Variant::Pcdm1, Variant::Pcdm2}) {
      SolverConfig cfg{SamplingLaw::nice(25)};
      cfg.variant = variant;
      cfg.seed = 17;
      Solver seq(p, cfg);
      cfg.threads = threads;
      Solver par(p, cfg);
      for (int k = 0; k < 200; ++k) {
        seq.step();
        par.step();
        REQUIRE(std::equal(seq.last_set().begin(), seq.last_set().end(), par.last_set().begin(),
                           par.last_set().end()));
        CHECK(par.objective() == doctest::Approx(seq.objective()).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("solver errors") {
  const auto A = testing::random_partially_separable(30, 10, 3, 8);
  CompositeProblem p(A, Loss::square(testing::random_vector(30, 9, 5.0, 10.0)), Regularizer::zero());
  SolverConfig cfg{SamplingLaw::fully_parallel()};
  auto eso = eso_for(cfg.law, p);
  eso.beta = 1e-3;
  cfg.eso = eso;
  cfg.max_iters = 10000;
  Solver bad(p, cfg);
  CHECK_THROWS_WITH_AS(bad.run(), "divergence", DivergenceError);

  CompositeProblem boxed(A, Loss::square(testing::random_vector(30, 9)), Regularizer::box(0.0, 1.0));
  SolverConfig out{SamplingLaw::serial()};
  out.x0.assign(10, 2.0);
  CHECK_THROWS_AS(Solver(boxed, out), Error);

  SolverConfig many{SamplingLaw::serial()};
  many.threads = max_solver_threads() + 1;
  CHECK_THROWS_AS(Solver(p, many), Error);

  SolverConfig zero_beta{SamplingLaw::serial()};
  zero_beta.eso = EsoParams{0.0, std::vector<double>(10, 1.0), true};
  CHECK_THROWS_AS(Solver(p, zero_beta), Error);
}

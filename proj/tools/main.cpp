#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "pcdm/complexity.hpp"
#include "pcdm/datagen.hpp"
#include "pcdm/error.hpp"
#include "pcdm/eso.hpp"
#include "pcdm/io.hpp"
#include "pcdm/solver.hpp"
#include "report.hpp"

namespace {

using namespace pcdm;
using cli::Cell;
using cli::Format;
using cli::Table;

struct Globals {
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string out;
  Format format = Format::Csv;
};

struct ProblemFlags {
  std::string instance;
  std::string loss = "square";
  std::string reg = "auto";
  std::optional<double> lambda;
  double lo = 0.0, hi = 1.0;
};

void add_problem_flags(CLI::App* cmd, ProblemFlags& f) {
  cmd->add_option("--instance", f.instance, "pcdm-instance or LIBSVM file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--loss", f.loss, "loss applied to the rows; b holds targets or labels")
      ->check(CLI::IsMember({"square", "logistic", "hinge-square"}));
  cmd->add_option("--reg", f.reg, "regularizer; auto means l1 when the instance has lambda")
      ->check(CLI::IsMember({"auto", "zero", "l1", "l2", "box"}));
  cmd->add_option("--lambda", f.lambda, "regularization weight, overrides the instance");
  cmd->add_option("--lo", f.lo, "box lower bound");
  cmd->add_option("--hi", f.hi, "box upper bound");
}

/// pcdm-instance files are recognized by their header; anything else is
/// read as LIBSVM data with the labels as b.
GeneratedInstance read_any(const std::string& path) {
  std::ifstream in(path);
  std::string word;
  in >> word;
  if (word == "pcdm-instance") return read_instance(path);
  auto data = read_libsvm(path);
  GeneratedInstance inst;
  inst.A = std::move(data.examples);
  inst.b = std::move(data.labels);
  return inst;
}

CompositeProblem load_problem(const ProblemFlags& f) {
  auto inst = read_any(f.instance);
  std::vector<double> b = inst.b.empty() ? std::vector<double>(inst.A.rows(), 0.0) : inst.b;
  const std::optional<double> lambda = f.lambda ? f.lambda : inst.lambda;
  std::string reg_name = f.reg;
  if (reg_name == "auto") reg_name = lambda ? "l1" : "zero";
  if ((reg_name == "l1" || reg_name == "l2") && !lambda) {
    throw Error("--reg " + reg_name + " needs --lambda or an instance with lambda");
  }
  Regularizer reg = reg_name == "l1"   ? Regularizer::l1(*lambda)
                    : reg_name == "l2" ? Regularizer::l2_squared(*lambda)
                    : reg_name == "box" ? Regularizer::box(f.lo, f.hi)
                                        : Regularizer::zero();
  Loss loss = f.loss == "logistic"       ? Loss::logistic(std::move(b))
              : f.loss == "hinge-square" ? Loss::hinge_square(std::move(b))
                                         : Loss::square(std::move(b));
  CompositeProblem problem(std::move(inst.A), std::move(loss), std::move(reg));
  // the stored optimum only describes the problem the instance was generated for
  const bool as_generated = f.loss == "square" && reg_name == (inst.lambda ? "l1" : "zero") &&
                            (!f.lambda || (inst.lambda && *f.lambda == *inst.lambda));
  if (as_generated && inst.fstar && inst.xstar.size() == problem.num_coords()) {
    problem.set_known_optimum({inst.xstar, *inst.fstar});
  }
  return problem;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct Summary {
  double min = 0, mean = 0, max = 0;
};

Summary summarize(std::span<const double> v) {
  Summary s;
  if (v.empty()) return s;
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return s;
}

// ---------------------------------------------------------------- generate

struct GenerateFlags {
  std::string kind = "lasso";
  LassoOptions lasso;
  std::size_t omega = 5;
};

void run_generate(const GenerateFlags& f, const Globals& g) {
  if (g.out.empty()) throw Error("generate needs --out");
  GeneratedInstance inst;
  if (f.kind == "lasso") {
    auto o = f.lasso;
    o.seed = g.seed;
    inst = generate_lasso(o);
  } else if (f.kind == "tight") {
    inst.A = generate_tightness_matrix(f.lasso.n, f.lasso.m, f.omega);
  } else {
    inst = planted_least_squares(generate_equal_row_matrix(f.lasso.m, f.lasso.n, f.omega, g.seed),
                                 g.seed);
  }
  write_instance(g.out, inst);
  std::cerr << "wrote " << f.kind << " instance " << inst.A.rows() << "x" << inst.A.cols()
            << " nnz=" << inst.A.nnz() << " to " << g.out << '\n';
}

// ---------------------------------------------------------------- analyze

struct AnalyzeFlags {
  ProblemFlags problem;
  std::vector<std::string> laws{"serial", "full"};
  std::optional<std::size_t> n, omega;
};

void run_analyze(const AnalyzeFlags& f, const Globals& g) {
  Table table({"law", "n", "m", "nnz", "omega", "L_min", "L_mean", "L_max", "E_S", "beta", "w_min",
               "w_mean", "w_max", "monotonic", "speedup"});
  Output out(g.out);
  if (f.problem.instance.empty()) {
    if (!f.n || !f.omega) throw Error("analyze needs --instance or both --n and --omega");
    const std::vector<double> ones(*f.n, 1.0);
    for (const auto& text : f.laws) {
      const auto law = parse_law(text);
      const auto eso = eso_for(law, *f.omega, ones);
      table.add({text, static_cast<long long>(*f.n), 0LL, 0LL, static_cast<long long>(*f.omega), 1.0,
                 1.0, 1.0, moments(law, *f.n).e1, eso.beta, 1.0, 1.0, 1.0, eso.monotonic,
                 speedup_factor(law, *f.omega, *f.n)});
    }
    table.print(out.stream(), g.format);
    return;
  }
  const auto problem = load_problem(f.problem);
  const auto L = problem.lipschitz();
  const auto ls = summarize(L);
  const auto n = problem.num_blocks();
  for (const auto& text : f.laws) {
    const auto law = parse_law(text);
    const auto eso = eso_for(law, problem);
    const auto ws = summarize(eso.w);
    table.add({text, static_cast<long long>(n), static_cast<long long>(problem.num_rows()),
               static_cast<long long>(problem.matrix().nnz()), static_cast<long long>(problem.omega()),
               ls.min, ls.mean, ls.max, moments(law, n).e1, eso.beta, ws.min, ws.mean, ws.max,
               eso.monotonic, speedup_factor(law, eso, L)});
  }
  table.print(out.stream(), g.format);
}

// ---------------------------------------------------------------- solve

struct SolveFlags {
  ProblemFlags problem;
  std::string law = "serial";
  std::string variant = "pcdm1";
  std::string mode = "sim";
  bool conservative = false;
  double eps = 1e-10;
  double max_epochs = 100;
  std::size_t max_iters = std::numeric_limits<std::size_t>::max();
  std::size_t trace_every = 0;
  std::string trace;
};

void run_solve(const SolveFlags& f, const Globals& g) {
  const auto problem = load_problem(f.problem);
  SolverConfig config;
  config.law = parse_law(f.law);
  if (f.conservative) {
    config.eso = eso_fixed_cardinality(config.law, problem.omega(), problem.lipschitz());
  }
  config.variant = f.variant == "pcdm2" ? Variant::Pcdm2 : Variant::Pcdm1;
  if (f.mode == "par") {
    config.threads = g.threads == 0 ? 1 : g.threads;
  } else if (g.threads != 0) {
    std::cerr << "note: --threads is ignored in --mode sim\n";
  }
  config.seed = g.seed;
  config.target_gap = f.eps;
  config.max_epochs = f.max_epochs;
  config.max_iters = f.max_iters;
  config.trace_every = f.trace_every == 0 ? std::max<std::size_t>(1, problem.num_blocks() / 4)
                                          : f.trace_every;
  Solver solver(problem, config);
  const auto trace = solver.run();

  if (!f.trace.empty()) {
    std::ofstream csv(f.trace);
    if (!csv) throw Error("cannot write " + f.trace);
    Table t({"k", "normalized_updates", "gap_or_F", "elapsed_s"});
    for (const auto& r : trace.records) {
      t.add({static_cast<long long>(r.k), r.normalized_updates, r.value, r.elapsed_s});
    }
    t.print(csv, Format::Csv);
  }
  Table summary({"law", "variant", "threads", "beta", "iterations", "epochs", "rejected", "F",
                 trace.reports_gap ? "gap" : "F_change", "converged", "elapsed_s"});
  const auto& last = trace.records.back();
  const double second = trace.reports_gap ? last.value
                                          : trace.records.size() > 1
                                                ? last.value - trace.records[trace.records.size() - 2].value
                                                : 0.0;
  summary.add({f.law, f.variant, static_cast<long long>(config.threads), solver.eso().beta,
               static_cast<long long>(trace.iterations), last.normalized_updates,
               static_cast<long long>(trace.rejected_steps), trace.final_objective, second,
               trace.converged, last.elapsed_s});
  Output out(g.out);
  summary.print(out.stream(), g.format);
}

// ---------------------------------------------------------------- validate-eso

struct ValidateFlags {
  ProblemFlags problem;
  std::vector<std::string> laws{"serial"};
  std::size_t trials = 10000;
  std::size_t points = 20;
  bool conservative = false;
};

void run_validate(const ValidateFlags& f, const Globals& g) {
  const auto problem = load_problem(f.problem);
  Table table({"law", "certificate", "beta", "points", "trials", "violations", "max_gap_sigma"});
  for (const auto& text : f.laws) {
    const auto law = parse_law(text);
    std::vector<std::pair<std::string, EsoParams>> certs{{"table", eso_for(law, problem)}};
    if (f.conservative && fixed_cardinality(law, problem.num_blocks())) {
      certs.emplace_back("min_omega_tau",
                         eso_fixed_cardinality(law, problem.omega(), problem.lipschitz()));
    }
    for (const auto& [name, eso] : certs) {
      const auto rep = monte_carlo_validate(problem, law, eso, f.trials, f.points, g.seed);
      table.add({text, name, eso.beta, static_cast<long long>(rep.points),
                 static_cast<long long>(rep.trials), static_cast<long long>(rep.violations),
                 rep.max_gap_sigma});
    }
  }
  Output out(g.out);
  table.print(out.stream(), g.format);
}

// ---------------------------------------------------------------- sampling-stats

struct StatsFlags {
  std::string law = "serial";
  std::size_t n = 10;
  std::size_t draws = 100000;
  std::size_t pairs = 10;
};

double chi2_pvalue(double stat, double dof) {
  if (dof <= 0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, stat / 2.0);
}

double normal_pvalue(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

void run_stats(const StatsFlags& f, const Globals& g) {
  if (f.draws < 10000) throw Error("sampling-stats needs at least 10^4 draws");
  const auto law = parse_law(f.law);
  const auto n = f.n;
  validate(law, n);
  const auto m = moments(law, n);
  Sampler sampler(law, n);
  std::vector<std::size_t> set;
  std::vector<double> count(n, 0.0), card(n + 1, 0.0);
  // pairs (0,1), (0,2), ... (0,pairs) are tracked for p_ij
  const std::size_t tracked = std::min(f.pairs, n > 0 ? n - 1 : 0);
  std::vector<double> pair_count(tracked, 0.0);
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (std::size_t d = 0; d < f.draws; ++d) {
    Rng rng(g.seed, d);
    sampler.draw(rng, set);
    for (auto i : set) count[i] += 1.0;
    card[set.size()] += 1.0;
    const auto k = static_cast<double>(set.size());
    s1 += k;
    s2 += k * k;
    s4 += k * k * k * k;
    if (!set.empty() && set.front() == 0) {
      for (std::size_t t = 1; t < set.size() && set[t] <= tracked; ++t) pair_count[set[t] - 1] += 1.0;
    }
  }
  const auto D = static_cast<double>(f.draws);
  Table table({"metric", "exact", "empirical", "p_value"});
  // element probabilities: worst deviation, and an approximate chi-square
  double chi = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pi = count[i] / D;
    worst = std::max(worst, std::fabs(pi - m.p));
    if (m.p < 1.0) chi += (count[i] - D * m.p) * (count[i] - D * m.p) / (D * m.p * (1.0 - m.p));
  }
  table.add({std::string("p_i_max_abs_dev"), 0.0, worst, m.p < 1.0 ? chi2_pvalue(chi, static_cast<double>(n - 1)) : 1.0});
  for (std::size_t i = 0; i < std::min<std::size_t>(n, 5); ++i) {
    const double se = std::sqrt(m.p * (1.0 - m.p) / D);
    const double pi = count[i] / D;
    table.add({"p_" + std::to_string(i), m.p, pi, se > 0 ? normal_pvalue((pi - m.p) / se) : 1.0});
  }
  const double e1 = s1 / D, e2 = s2 / D;
  const double var1 = s2 / D - e1 * e1, var2 = s4 / D - e2 * e2;
  table.add({std::string("E_S"), m.e1, e1, var1 > 0 ? normal_pvalue((e1 - m.e1) / std::sqrt(var1 / D)) : 1.0});
  table.add({std::string("E_S2"), m.e2, e2, var2 > 0 ? normal_pvalue((e2 - m.e2) / std::sqrt(var2 / D)) : 1.0});
  if (auto q = cardinality_distribution(law, n)) {
    double stat = 0.0, pooled_obs = 0.0, pooled_exp = 0.0;
    std::size_t cells = 0;
    for (std::size_t k = 0; k <= n; ++k) {
      const double expect = D * (*q)[k];
      if (expect >= 5.0) {
        stat += (card[k] - expect) * (card[k] - expect) / expect;
        ++cells;
      } else {
        pooled_obs += card[k];
        pooled_exp += expect;
      }
      if ((*q)[k] > 0.0 && (*q)[k] >= 1e-6) {
        const double se = std::sqrt((*q)[k] * (1.0 - (*q)[k]) / D);
        const double emp = card[k] / D;
        table.add({"q_" + std::to_string(k), (*q)[k], emp, se > 0 ? normal_pvalue((emp - (*q)[k]) / se) : 1.0});
      }
    }
    if (pooled_exp > 0.0) {
      stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
      ++cells;
    }
    table.add({std::string("chi2_cardinality"), static_cast<double>(cells > 0 ? cells - 1 : 0), stat,
               chi2_pvalue(stat, static_cast<double>(cells > 0 ? cells - 1 : 0))});
  }
  if (n > 1) {
    const auto pij = pair_probability(law, n);
    for (std::size_t t = 0; t < tracked; ++t) {
      const double exact = pij(0, t + 1);
      const double emp = pair_count[t] / D;
      const double se = std::sqrt(exact * (1.0 - exact) / D);
      table.add({"p_0_" + std::to_string(t + 1), exact, emp, se > 0 ? normal_pvalue((emp - exact) / se) : 1.0});
    }
  }
  Output out(g.out);
  table.print(out.stream(), g.format);
}

// ---------------------------------------------------------------- bench-speedup

struct BenchFlags {
  std::size_t m = 3000, n = 1000;
  std::vector<std::size_t> omegas{5, 10, 50, 100};
  std::vector<std::size_t> taus{1, 2, 4, 8, 16, 32, 64};
  double eps = 1e-6;
  std::size_t repeats = 1;
  double max_epochs = 1e4;
};

void run_bench(const BenchFlags& f, const Globals& g) {
  Table table({"omega", "tau", "theoretical", "empirical", "iters_serial", "iters_nice", "status"});
  for (auto omega : f.omegas) {
    const auto inst = planted_least_squares(generate_equal_row_matrix(f.m, f.n, omega, g.seed), g.seed);
    const auto problem = make_lasso_problem(inst);
    auto mean_iters = [&](const SamplingLaw& law) -> std::optional<double> {
      double total = 0.0;
      for (std::size_t r = 0; r < f.repeats; ++r) {
        SolverConfig c;
        c.law = law;
        c.seed = g.seed + r;
        c.target_gap = f.eps;
        c.trace_every = 0;
        c.max_epochs = f.max_epochs;
        Solver s(problem, c);
        const auto t = s.run();
        if (!t.converged) return std::nullopt;
        total += static_cast<double>(t.iterations);
      }
      return total / static_cast<double>(f.repeats);
    };
    const auto serial = mean_iters(SamplingLaw::serial());
    for (auto tau : f.taus) {
      const auto law = SamplingLaw::nice(tau);
      const double theory = speedup_factor(law, problem.omega(), problem.num_blocks());
      const auto nice = tau == 1 ? serial : mean_iters(law);
      if (!serial || !nice) {
        table.add({static_cast<long long>(omega), static_cast<long long>(tau), theory, 0.0,
                   serial ? *serial : 0.0, nice ? *nice : 0.0, std::string("failed")});
        continue;
      }
      table.add({static_cast<long long>(omega), static_cast<long long>(tau), theory, *serial / *nice,
                 *serial, *nice, std::string("ok")});
    }
  }
  Output out(g.out);
  table.print(out.stream(), g.format);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel block coordinate descent toolkit"};
  app.require_subcommand(1);
  Globals g;
  std::string format = "csv";
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads for --mode par");
  app.add_option("--out", g.out, "output file (default stdout; the instance path for generate)");
  app.add_option("--format", format, "report format")->check(CLI::IsMember({"csv", "jsonl"}));
  app.fallthrough();

  GenerateFlags gen;
  auto* generate = app.add_subcommand("generate", "write a generated instance");
  generate->add_option("--kind", gen.kind)->check(CLI::IsMember({"lasso", "tight", "eqrow"}));
  generate->add_option("--n", gen.lasso.n, "columns");
  generate->add_option("--m", gen.lasso.m, "rows");
  generate->add_option("--nnz-per-col", gen.lasso.nnz_per_col);
  generate->add_option("--support", gen.lasso.support_size, "nonzeros of x*");
  generate->add_option("--lambda", gen.lasso.lambda);
  generate->add_option("--omega", gen.omega, "row cardinality (tight, eqrow)");

  AnalyzeFlags an;
  auto* analyze = app.add_subcommand("analyze", "ESO parameters and speedup per law");
  analyze->add_option("--instance", an.problem.instance)->check(CLI::ExistingFile);
  analyze->add_option("--loss", an.problem.loss)->check(CLI::IsMember({"square", "logistic", "hinge-square"}));
  analyze->add_option("--reg", an.problem.reg)->check(CLI::IsMember({"auto", "zero", "l1", "l2", "box"}));
  analyze->add_option("--lambda", an.problem.lambda);
  analyze->add_option("--law", an.laws, "one or more law strings");
  analyze->add_option("--n", an.n, "block count, without an instance");
  analyze->add_option("--omega", an.omega, "partial separability degree, without an instance");

  SolveFlags sv;
  auto* solve = app.add_subcommand("solve", "run PCDM1 or PCDM2");
  add_problem_flags(solve, sv.problem);
  solve->add_option("--law", sv.law);
  solve->add_option("--variant", sv.variant)->check(CLI::IsMember({"pcdm1", "pcdm2"}));
  solve->add_option("--mode", sv.mode)->check(CLI::IsMember({"sim", "par"}));
  solve->add_flag("--conservative", sv.conservative, "use beta = min{omega, tau}");
  solve->add_option("--eps", sv.eps, "target gap when F* is known");
  solve->add_option("--max-epochs", sv.max_epochs);
  solve->add_option("--max-iters", sv.max_iters);
  solve->add_option("--trace-every", sv.trace_every, "iterations between trace rows (default n/4)");
  solve->add_option("--trace", sv.trace, "trace CSV path");

  ValidateFlags va;
  auto* validate_cmd = app.add_subcommand("validate-eso", "Monte-Carlo check of the ESO inequality");
  add_problem_flags(validate_cmd, va.problem);
  validate_cmd->add_option("--law", va.laws);
  validate_cmd->add_option("--trials", va.trials)->check(CLI::Range(1000, 100000000));
  validate_cmd->add_option("--points", va.points);
  validate_cmd->add_flag("--conservative", va.conservative, "also check beta = min{omega, tau}");

  StatsFlags st;
  auto* stats = app.add_subcommand("sampling-stats", "empirical vs exact sampling statistics");
  stats->add_option("--law", st.law);
  stats->add_option("--n", st.n)->check(CLI::PositiveNumber);
  stats->add_option("--draws", st.draws);
  stats->add_option("--pairs", st.pairs, "number of pairs (0, j) to report");

  BenchFlags be;
  auto* bench = app.add_subcommand("bench-speedup", "empirical vs theoretical speedup");
  bench->add_option("--m", be.m);
  bench->add_option("--n", be.n);
  bench->add_option("--omegas", be.omegas)->delimiter(',');
  bench->add_option("--taus", be.taus)->delimiter(',');
  bench->add_option("--eps", be.eps);
  bench->add_option("--repeats", be.repeats)->check(CLI::PositiveNumber);
  bench->add_option("--max-epochs", be.max_epochs);

  CLI11_PARSE(app, argc, argv);
  g.format = format == "jsonl" ? Format::Jsonl : Format::Csv;

  try {
    if (*generate) run_generate(gen, g);
    if (*analyze) run_analyze(an, g);
    if (*solve) run_solve(sv, g);
    if (*validate_cmd) run_validate(va, g);
    if (*stats) run_stats(st, g);
    if (*bench) run_bench(be, g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

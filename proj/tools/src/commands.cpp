#include "qpath/cli/commands.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "qpath/cli/kink_file.hpp"
#include "qpath/dataset.hpp"
#include "qpath/error.hpp"
#include "qpath/evaluate.hpp"
#include "qpath/path.hpp"
#include "qpath/qoperator.hpp"
#include "qpath/recover.hpp"
#include "qpath/solver.hpp"

namespace qpath::cli {

namespace {

Dataset load_for_training(const std::filesystem::path& file, bool bias) {
  Dataset raw = load_libsvm(file);
  return bias ? augment_bias(raw) : raw;
}

// The training data a kink file was traced on, checked by fingerprint.
Dataset load_matching(const std::filesystem::path& file, const KinkPath& path) {
  Dataset raw = load_libsvm(file);
  const std::size_t features = path.d - (path.bias ? 1 : 0);
  if (raw.d() < features) raw = widen(raw, features);
  Dataset ds = path.bias ? augment_bias(raw) : raw;
  if (ds.n() != path.n || ds.d() != path.d || fingerprint(ds) != path.fingerprint)
    throw Error("dataset " + file.string() + " does not match the kink file fingerprint");
  return ds;
}

// Evaluation data in the feature space of the trained model.
Dataset load_evaluation(const std::filesystem::path& file, const KinkPath& path) {
  const std::size_t features = path.d - (path.bias ? 1 : 0);
  Dataset raw = widen(load_libsvm(file), features);
  return path.bias ? augment_bias(raw) : raw;
}

std::string fmt17(double v) { return fmt::format("{:.17g}", v); }

struct CheckResult {
  std::string name;
  double worst = 0;
  double tol = 0;

  bool passed() const { return worst <= tol; }
};

double max_abs_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

int cmd_trace(const TraceArgs& args, std::ostream& out, std::ostream& err) {
  if (!(args.lambda > 0.0)) {
    fmt::print(err, "error: --lambda must be positive\n");
    return kExitUsage;
  }
  if (args.tol && !(*args.tol > 0.0)) {
    fmt::print(err, "error: --tol must be positive\n");
    return kExitUsage;
  }
  const Dataset ds = load_for_training(args.data, args.bias);

  TraceOptions opts;
  opts.qp_tol = args.tol;
  const auto start = std::chrono::steady_clock::now();
  KinkPath path;
  int code = kExitOk;
  try {
    path = trace_path(ds, args.lambda, opts);
  } catch (const PathError& e) {
    fmt::print(err, "error: {}\n", e.what());
    path = e.partial();
    code = kExitFailure;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  save_kink_file(args.out, path);
  if (code == kExitOk)
    fmt::print(out, "kinks={} taus=[0,1] events={} time={:.3f}\n", path.kinks.size(),
               path.events, secs);
  else
    fmt::print(out, "kinks={} taus=[0,{}] events={} time={:.3f} INCOMPLETE\n",
               path.kinks.size(), fmt17(path.terminal_tau), path.events, secs);
  return code;
}

int cmd_at(const AtArgs& args, std::ostream& out, std::ostream& err) {
  const bool has_cost = args.cost_pos || args.cost_neg;
  if (args.tau.has_value() == has_cost) {
    fmt::print(err, "error: give exactly one of --tau or --cost-pos/--cost-neg\n");
    return kExitUsage;
  }
  if (has_cost && !(args.cost_pos && args.cost_neg)) {
    fmt::print(err, "error: --cost-pos and --cost-neg must be given together\n");
    return kExitUsage;
  }
  const double tau = args.tau ? *args.tau : cost_to_tau(*args.cost_pos, *args.cost_neg);
  if (!(tau >= 0.0 && tau <= 1.0)) {
    fmt::print(err, "error: tau = {} is outside [0, 1]\n", tau);
    return kExitUsage;
  }

  const KinkPath path = load_kink_file(args.path);
  const Dataset ds = load_matching(args.data, path);
  const PrimalModel model = PathRecovery(path).primal_at(ds, tau);

  std::ofstream file;
  std::ostream* sink = &out;
  if (args.out) {
    file.open(*args.out, std::ios::binary);
    if (!file) throw Error("cannot open " + args.out->string() + " for writing");
    sink = &file;
  }
  fmt::print(*sink, "# tau={}\n", fmt17(tau));
  for (std::size_t j = 0; j < model.w.size(); ++j)
    if (model.w[j] != 0.0) fmt::print(*sink, "{}:{}\n", j, fmt17(model.w[j]));
  return kExitOk;
}

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  if (args.grid < 2) {
    fmt::print(err, "error: --grid must be at least 2\n");
    return kExitUsage;
  }
  const KinkPath path = load_kink_file(args.path);
  const Dataset train = load_matching(args.data, path);
  const Dataset test = load_evaluation(args.test, path);
  const std::vector<double> taus = tau_grid(static_cast<std::size_t>(args.grid));
  const SweepMetrics metrics = sweep(path, train, test, taus);

  std::ofstream file(args.out, std::ios::binary);
  if (!file) throw Error("cannot open " + args.out.string() + " for writing");
  metrics.write_csv(file);
  fmt::print(out, "rows={} positives={} negatives={}\n", metrics.records.size(),
             metrics.positives, metrics.negatives);
  return kExitOk;
}

int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err) {
  if (!(args.lambda > 0.0)) {
    fmt::print(err, "error: --lambda must be positive\n");
    return kExitUsage;
  }
  if (args.grid < 2) {
    fmt::print(err, "error: --grid must be at least 2\n");
    return kExitUsage;
  }
  const Dataset ds = load_for_training(args.data, args.bias);
  if (ds.n() > kVerifyMaxN) {
    fmt::print(err, "error: verify runs dense reference solves and accepts n <= {} (got {})\n",
               kVerifyMaxN, ds.n());
    return kExitUsage;
  }

  KinkPath path;
  try {
    path = trace_path(ds, args.lambda);
  } catch (const PathError& e) {
    fmt::print(out, "FAIL trace: {}\n", e.what());
    return kExitFailure;
  }
  const QOperator q(ds);
  const CostSchedule sched(ds.n(), args.lambda);
  const PathRecovery rec(path);

  CheckResult objective{"oracle_objective", 0, 1e-7};
  CheckResult weights{"oracle_weights", 0, 1e-5};
  std::optional<Vector> warm;
  for (double tau : tau_grid(static_cast<std::size_t>(args.grid))) {
    const Costs c = sched.at(tau);
    const Vector upper = sched.upper_bounds(ds.labels(), tau);
    const double tol = std::min(default_box_qp_tol(ds.n(), c.plus, c.minus), 1e-11);
    Vector direct;
    try {
      direct = solve_box_qp(q, args.lambda, upper, tol, 100000,
                            warm ? std::optional<std::span<const double>>(*warm) : std::nullopt)
                   .alpha;
    } catch (const BoxQPError& e) {
      direct = e.best().alpha;
    }
    warm = direct;
    const Vector traced = rec.alpha_at(tau);
    const double d_direct = dual_objective(q, args.lambda, direct);
    const double d_traced = dual_objective(q, args.lambda, traced);
    objective.worst = std::max(objective.worst, std::abs(d_traced - d_direct) /
                                                    std::max(1.0, std::abs(d_direct)));
    weights.worst = std::max(
        weights.worst, max_abs_diff(primal_weights(ds, traced, args.lambda),
                                    primal_weights(ds, direct, args.lambda)));
  }

  CheckResult kkt{"kkt_at_kinks", 0, 1e-6};
  for (const Kink& k : path.kinks)
    kkt.worst = std::max(kkt.worst, kkt_check(q, sched, k.tau, rec.alpha_at(k.tau), kkt.tol).worst());

  CheckResult linear{"segment_linearity", 0, 1e-9};
  CheckResult continuity{"continuity", 0, 1e-9};
  for (std::size_t k = 0; k < path.kinks.size(); ++k) {
    const double lo = path.kinks[k].tau;
    const double hi = k + 1 < path.kinks.size() ? path.kinks[k + 1].tau : 1.0;
    if (hi > lo) {
      const Vector a = rec.alpha_on_segment(k, lo);
      const Vector b = rec.alpha_on_segment(k, hi);
      const Vector mid = rec.alpha_on_segment(k, 0.5 * (lo + hi));
      for (std::size_t i = 0; i < mid.size(); ++i)
        linear.worst = std::max(linear.worst, std::abs(mid[i] - 0.5 * (a[i] + b[i])));
    }
    if (k > 0)
      continuity.worst = std::max(continuity.worst,
                                  max_abs_diff(rec.alpha_on_segment(k - 1, lo),
                                               rec.alpha_on_segment(k, lo)));
  }

  // Random feasible perturbations must not lower the dual objective beyond
  // what the KKT tolerance allows (first-order rate per unit l1 step).
  CheckResult local{"local_optimality", 0, 1e-6};
  std::mt19937_64 rng(args.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double tau = unit(rng);
    const Vector alpha = rec.alpha_at(tau);
    const Vector upper = sched.upper_bounds(ds.labels(), tau);
    Vector delta(alpha.size(), 0.0);
    double step = 1e-3 * *std::max_element(upper.begin(), upper.end());
    double l1 = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      double v = 2.0 * unit(rng) - 1.0;
      if (alpha[i] <= 1e-12) v = std::abs(v);
      if (alpha[i] >= upper[i] - 1e-12) v = -std::abs(v);
      if (upper[i] <= 0.0) v = 0.0;
      delta[i] = v;
      l1 += std::abs(v);
      if (v > 0.0) step = std::min(step, (upper[i] - alpha[i]) / v);
      if (v < 0.0) step = std::min(step, alpha[i] / -v);
    }
    if (!(step > 0.0) || l1 == 0.0) continue;
    Vector moved = alpha;
    for (std::size_t i = 0; i < alpha.size(); ++i) moved[i] += step * delta[i];
    const double change =
        dual_objective(q, args.lambda, moved) - dual_objective(q, args.lambda, alpha);
    local.worst = std::max(local.worst, -change / (step * l1));
  }

  bool all = true;
  for (const CheckResult& c : {objective, weights, kkt, linear, continuity, local}) {
    fmt::print(out, "{} {} worst={:.3e} tol={:.0e}\n", c.passed() ? "PASS" : "FAIL", c.name,
               c.worst, c.tol);
    all = all && c.passed();
  }
  fmt::print(out, "kinks={} events={} n={} d={}\n", path.kinks.size(), path.events, ds.n(),
             ds.d());
  return all ? kExitOk : kExitFailure;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cost-sensitive linear SVM: trace the full dual path over tau in [0, 1] "
               "and recover models at any cost ratio."};
  app.name("qpath");
  app.require_subcommand(1);

  TraceArgs trace;
  auto* t = app.add_subcommand("trace", "Trace the kink path and write a kink file");
  t->add_option("--data", trace.data, "Training data (LIBSVM)")->required();
  t->add_option("--lambda", trace.lambda, "Regularization strength (> 0)")->required();
  t->add_flag("--bias,!--no-bias", trace.bias, "Append a constant bias feature (default on)");
  t->add_option("--tol", trace.tol, "Box-QP tolerance for the tau = 0 warm start");
  t->add_option("--out", trace.out, "Kink file to write")->required();

  AtArgs at;
  auto* a = app.add_subcommand("at", "Recover the primal weights at one tau or cost pair");
  a->add_option("--path", at.path, "Kink file")->required();
  a->add_option("--data", at.data, "Training data the path was traced on")->required();
  a->add_option("--tau", at.tau, "Quantile in [0, 1]");
  a->add_option("--cost-pos", at.cost_pos, "Cost of a false positive");
  a->add_option("--cost-neg", at.cost_neg, "Cost of a false negative");
  a->add_option("--out", at.out, "Write weights here instead of stdout");

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "TPR/TNR/accuracy over an even tau grid (CSV)");
  s->add_option("--path", sw.path, "Kink file")->required();
  s->add_option("--data", sw.data, "Training data the path was traced on")->required();
  s->add_option("--test", sw.test, "Labeled evaluation data (LIBSVM)")->required();
  s->add_option("--grid", sw.grid, "Number of tau values (>= 2)")->required();
  s->add_option("--out", sw.out, "CSV file to write")->required();

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "Check a traced path against direct solves");
  v->add_option("--data", ver.data, "Data (LIBSVM), at most 500 instances")->required();
  v->add_option("--lambda", ver.lambda, "Regularization strength (> 0)")->required();
  v->add_flag("--bias,!--no-bias", ver.bias, "Append a constant bias feature (default on)");
  v->add_option("--grid", ver.grid, "Number of tau values for the direct comparison");
  v->add_option("--seed", ver.seed, "Seed for the perturbation check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUsage;
  }

  try {
    if (*t) return cmd_trace(trace, out, err);
    if (*a) return cmd_at(at, out, err);
    if (*s) return cmd_sweep(sw, out, err);
    return cmd_verify(ver, out, err);
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUsage;
  }
}

}  // namespace qpath::cli

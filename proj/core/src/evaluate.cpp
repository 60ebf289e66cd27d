#include "qpath/evaluate.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "qpath/recover.hpp"

namespace qpath {

double asym_risk(double cost_pos, double cost_neg, double p_false_pos,
                 double p_false_neg) {
  if (cost_pos < 0.0 || cost_neg < 0.0) throw Error("asym_risk: costs must be non-negative");
  return cost_pos * p_false_pos + cost_neg * p_false_neg;
}

double cost_to_tau(double cost_pos, double cost_neg) {
  if (cost_pos < 0.0 || cost_neg < 0.0) throw Error("cost_to_tau: costs must be non-negative");
  if (!(cost_pos + cost_neg > 0.0)) throw Error("cost_to_tau: costs cannot both be zero");
  return cost_pos / (cost_pos + cost_neg);
}

double conditional_risk(double eta, double tau, double f) {
  return tau * (1.0 - eta) * std::max(1.0 + f, 0.0) +
         (1.0 - tau) * eta * std::max(1.0 - f, 0.0);
}

double primal_objective(const Dataset& ds, double lambda, double tau,
                        std::span<const double> w) {
  if (w.size() != ds.d()) throw Error("primal_objective: w has wrong length");
  const Costs c = CostSchedule(ds.n(), lambda).at(tau);
  double reg = 0.0;
  for (double v : w) reg += v * v;
  double loss = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const double margin = ds.label(i) * dot(ds.row(i), w);
    loss += c.for_label(ds.label(i)) * std::max(0.0, 1.0 - margin);
  }
  return 0.5 * lambda * reg + loss;
}

double dual_objective(const QOperator& q, double lambda,
                      std::span<const double> alpha) {
  const Vector qa = q.apply(alpha);
  double quad = 0.0, lin = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    quad += alpha[i] * qa[i];
    lin += alpha[i];
  }
  return 0.5 * quad / lambda - lin;
}

double KKTReport::worst() const {
  return std::max({max_stationarity, max_complementarity, feasibility_violation});
}

KKTReport kkt_check(const QOperator& q, const CostSchedule& sched, double tau,
                    std::span<const double> alpha, double tol, double bound_tol) {
  if (alpha.size() != q.size()) throw Error("kkt_check: alpha has wrong length");
  const Vector g = gradient(q, sched.lambda(), alpha);
  const Costs c = sched.at(tau);
  const Dataset& ds = q.dataset();
  KKTReport rep;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double ci = c.for_label(ds.label(i));
    const double a = alpha[i];
    const double beta = std::abs(a) <= bound_tol ? std::max(g[i], 0.0) : 0.0;
    const double gamma = std::abs(a - ci) <= bound_tol ? std::max(-g[i], 0.0) : 0.0;
    rep.max_stationarity = std::max(rep.max_stationarity, std::abs(g[i] - beta + gamma));
    rep.max_complementarity =
        std::max({rep.max_complementarity, std::abs(beta * a), std::abs(gamma * (a - ci))});
    rep.feasibility_violation =
        std::max({rep.feasibility_violation, -a, a - ci, 0.0});
  }
  rep.passed = rep.worst() <= tol;
  return rep;
}

namespace {

std::string format10(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 10);
  return std::string(buf.data(), ptr);
}

}  // namespace

void SweepMetrics::write_csv(std::ostream& out) const {
  out << "tau,tpr,tnr,accuracy\n";
  for (const SweepRecord& r : records)
    out << format10(r.tau) << ',' << format10(r.tpr) << ',' << format10(r.tnr)
        << ',' << format10(r.accuracy) << '\n';
}

std::string SweepMetrics::to_csv() const {
  std::ostringstream out;
  write_csv(out);
  return out.str();
}

std::vector<double> tau_grid(std::size_t grid) {
  if (grid < 2) throw Error("tau grid needs at least 2 points");
  std::vector<double> taus(grid);
  for (std::size_t k = 0; k < grid; ++k)
    taus[k] = static_cast<double>(k) / static_cast<double>(grid - 1);
  taus.back() = 1.0;
  return taus;
}

SweepMetrics sweep(const KinkPath& path, const Dataset& train,
                   const Dataset& eval, std::span<const double> taus) {
  const PathRecovery rec(path);
  SweepMetrics out;
  out.positives = eval.positives();
  out.negatives = eval.negatives();
  for (double tau : taus) {
    const PrimalModel model = rec.primal_at(train, tau);
    std::size_t tp = 0, tn = 0;
    for (std::size_t i = 0; i < eval.n(); ++i) {
      const int pred = predict(model, eval.row(i));
      if (pred == eval.label(i)) (pred > 0 ? tp : tn) += 1;
    }
    SweepRecord r;
    r.tau = tau;
    r.tpr = out.positives ? static_cast<double>(tp) / out.positives : 0.0;
    r.tnr = out.negatives ? static_cast<double>(tn) / out.negatives : 0.0;
    r.accuracy = static_cast<double>(tp + tn) / static_cast<double>(eval.n());
    out.records.push_back(r);
  }
  return out;
}

TrendReport monotone_trend(const SweepMetrics& metrics) {
  TrendReport rep;
  for (std::size_t k = 1; k < metrics.records.size(); ++k) {
    const SweepRecord& a = metrics.records[k - 1];
    const SweepRecord& b = metrics.records[k];
    ++rep.pairs;
    const double up = b.tpr - a.tpr;    // TPR should not increase
    const double down = a.tnr - b.tnr;  // TNR should not decrease
    const double v = std::max(up, down);
    if (v > 0.0) {
      ++rep.violations;
      rep.worst = std::max(rep.worst, v);
    }
  }
  return rep;
}

Vector SyntheticSpec::effective_slope() const {
  if (!slope.empty()) {
    if (slope.size() != dim) throw Error("synthetic spec: slope length must equal dim");
    return slope;
  }
  Vector a(dim, 0.0);
  if (dim > 0) a[0] = 4.0;
  return a;
}

double SyntheticSpec::eta(std::span<const double> x) const {
  if (family == EtaFamily::Constant) return constant;
  const Vector a = effective_slope();
  double z = offset;
  for (std::size_t k = 0; k < dim; ++k) z += a[k] * x[k];
  if (family == EtaFamily::Step) return z > 0.0 ? 1.0 : 0.0;
  return 1.0 / (1.0 + std::exp(-z));
}

SyntheticSample generate_synthetic(const SyntheticSpec& spec, std::size_t n) {
  if (n == 0) throw Error("generate_synthetic: n must be at least 1");
  if (spec.family == EtaFamily::Constant && !(spec.constant >= 0.0 && spec.constant <= 1.0))
    throw Error("generate_synthetic: constant eta must lie in [0, 1]");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, spec.scale);
  std::uniform_real_distribution<double> unif(spec.low, spec.high);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::vector<SparseRow> rows;
  std::vector<int> labels;
  Vector etas;
  rows.reserve(n);
  Vector x(spec.dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : x)
      v = spec.distribution == InstanceDistribution::Gaussian ? gauss(rng) : unif(rng);
    const double eta = spec.eta(x);
    SparseRow row;
    for (std::size_t k = 0; k < spec.dim; ++k)
      if (x[k] != 0.0) row.push_back({k, x[k]});
    rows.push_back(std::move(row));
    labels.push_back(coin(rng) < eta ? 1 : -1);
    etas.push_back(eta);
  }
  return {Dataset(std::move(rows), std::move(labels), spec.dim), std::move(etas)};
}

}  // namespace qpath

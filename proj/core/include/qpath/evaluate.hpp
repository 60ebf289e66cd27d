#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qpath/dataset.hpp"
#include "qpath/path.hpp"
#include "qpath/qoperator.hpp"

namespace qpath {

/// C+ P(FP) + C- P(FN), with P(FP) = P(Y = -1, g = +1) and
/// P(FN) = P(Y = +1, g = -1) given as frequencies.
double asym_risk(double cost_pos, double cost_neg, double p_false_pos,
                 double p_false_neg);

/// tau = C+ / (C+ + C-). Only the ratio of the costs matters.
double cost_to_tau(double cost_pos, double cost_neg);

/// Expected weighted hinge at a point with P(Y = 1 | x) = eta:
/// tau (1 - eta) (1 + f)_+ + (1 - tau) eta (1 - f)_+.
double conditional_risk(double eta, double tau, double f);

/// (lambda/2) |w|^2 + sum_i c_{y_i}(tau) max(0, 1 - y_i w'x_i).
double primal_objective(const Dataset& ds, double lambda, double tau,
                        std::span<const double> w);

/// a'Qa / (2 lambda) - sum(a).
double dual_objective(const QOperator& q, double lambda,
                      std::span<const double> alpha);

struct KKTReport {
  double max_stationarity = 0;
  double max_complementarity = 0;
  double feasibility_violation = 0;
  bool passed = false;

  double worst() const;
};

/// KKT residuals of the box-constrained dual at tau. Multipliers are
/// reconstructed from the gradient: beta_i = max(g_i, 0) where alpha_i ~ 0,
/// gamma_i = max(-g_i, 0) where alpha_i ~ c_i (within bound_tol).
KKTReport kkt_check(const QOperator& q, const CostSchedule& sched, double tau,
                    std::span<const double> alpha, double tol,
                    double bound_tol = 1e-10);

struct SweepRecord {
  double tau = 0;
  double tpr = 0;
  double tnr = 0;
  double accuracy = 0;
};

/// Rates on a labeled evaluation set over a tau grid. A rate whose class is
/// absent from the evaluation set is reported as 0.
struct SweepMetrics {
  std::vector<SweepRecord> records;
  std::size_t positives = 0;
  std::size_t negatives = 0;

  /// Header `tau,tpr,tnr,accuracy`, 10 significant digits.
  void write_csv(std::ostream& out) const;
  std::string to_csv() const;
};

/// grid evenly spaced points k / (grid - 1), grid >= 2.
std::vector<double> tau_grid(std::size_t grid);

SweepMetrics sweep(const KinkPath& path, const Dataset& train,
                   const Dataset& eval, std::span<const double> taus);

/// Counts adjacent-grid violations of "TPR non-increasing, TNR
/// non-decreasing in tau".
struct TrendReport {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double worst = 0;  // largest single violation
};
TrendReport monotone_trend(const SweepMetrics& metrics);

enum class EtaFamily : std::uint8_t {
  Logistic,  // 1 / (1 + exp(-(a'x + b0)))
  Constant,  // eta(x) = constant
  Step,      // 1 if a'x + b0 > 0 else 0 (separable labels)
};

enum class InstanceDistribution : std::uint8_t {
  Gaussian,  // N(0, scale^2 I)
  Uniform,   // U[low, high]^d
};

/// Synthetic labeled data with a known conditional probability eta(x).
/// Defaults: 2-d standard Gaussian instances, logistic eta in the first
/// coordinate with slope 4 and no offset.
struct SyntheticSpec {
  std::size_t dim = 2;
  EtaFamily family = EtaFamily::Logistic;
  Vector slope;  // a; empty means (4, 0, ..., 0)
  double offset = 0;
  double constant = 0.5;
  InstanceDistribution distribution = InstanceDistribution::Gaussian;
  double scale = 1;
  double low = 0;
  double high = 1;
  std::uint64_t seed = 0;

  double eta(std::span<const double> x) const;
  Vector effective_slope() const;
};

struct SyntheticSample {
  Dataset data;
  Vector eta;  // true eta(x_i) per instance
};

/// Deterministic for a given spec (including seed) and n.
SyntheticSample generate_synthetic(const SyntheticSpec& spec, std::size_t n);

}  // namespace qpath

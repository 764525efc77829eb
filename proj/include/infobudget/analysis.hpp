#pragma once

// Permutation dispersion statistics, Jensen gaps, the a + b ln n dispersion
// regression and exponentiated-gradient permutation mixtures.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "infobudget/info_core.hpp"

namespace infobudget {

struct DispersionStats {
  double q_bar = 0.0;
  double mean_abs_residual = 0.0;
  // Mean |q_j - q_k| over all ordered pairs, self-pairs included (they add 0).
  double e_pair = 0.0;
};

DispersionStats dispersion_stats(std::span<const double> q);

struct DispersionRecord {
  std::string item_id;
  std::size_t n = 0;
  std::vector<double> q;
  DispersionStats stats;
};

DispersionRecord make_dispersion_record(std::string item_id, std::size_t n, std::vector<double> q);

// Mean single-permutation cross-entropy minus uniform-mixture cross-entropy for
// one fixed continuation, divided by its token count.
NatBudget jensen_gap(std::span<const double> scores, std::size_t token_count = 1);

struct RegressionFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_points = 0;
  std::size_t resamples = 0;
  std::uint64_t bootstrap_seed = 0;
};

// OLS of mean_abs_residual on ln n across records; slope CI by item-level
// percentile bootstrap (resamples with a single distinct n are redrawn). The
// interval is widened, if needed, to contain the point estimate.
RegressionFit fit_log_dispersion(std::span<const DispersionRecord> records,
                                 std::uint64_t bootstrap_seed = 0, std::size_t resamples = 1000);

// Items x permutation-columns matrix of probabilities assigned to a fixed
// continuation, with each item's mixture group (its chunk count n).
struct ScoreMatrix {
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> group;
};

struct EgOptions {
  double eta = 0.1;
  std::size_t max_iters = 500;
  double tolerance = 1e-8;  // stop when max |w_new - w_old| < tolerance
};

using MixtureWeights = std::map<std::size_t, std::vector<double>>;

struct EgResult {
  MixtureWeights weights;
  std::map<std::size_t, std::vector<double>> ce_trace;  // per group, starting at uniform
  std::map<std::size_t, std::size_t> iterations;
};

// Mixture cross-entropy: mean over rows of -ln(sum_k w_k S_ik).
double mixture_ce(std::span<const std::vector<double>> rows, std::span<const double> weights);

// Minimizes mixture CE per group by exponentiated gradient
// w <- w * exp(-eta * grad) / Z, halving eta whenever a step would raise the
// objective. Starts from uniform, so the result never exceeds uniform CE.
EgResult eg_optimize_mixture(const ScoreMatrix& matrix, const EgOptions& options = {});

struct MixtureReport {
  double uniform_ce = 0.0;
  double optimized_ce = 0.0;
  double improvement = 0.0;
  double oracle_single_ce = 0.0;  // best single column per group
  double mean_single_ce = 0.0;    // average over columns
  EgResult eg;
};

// CE figures are item-weighted means over all groups.
MixtureReport mixture_ce_report(const ScoreMatrix& matrix, const EgOptions& options = {});

// Two-parameter growth fits of y against n, both scored by R^2 on the y scale:
// logarithmic y = a + b ln n, and power y = c n^beta (fitted in log-log).
struct GrowthFit {
  double log_intercept = 0.0;
  double log_slope = 0.0;
  double log_r2 = 0.0;
  double power_exponent = 0.0;
  double power_r2 = 0.0;
};

GrowthFit fit_growth(std::span<const double> n, std::span<const double> y);

}  // namespace infobudget

#pragma once

// Synthetic positional-sensitivity laboratory.
//
// A first-order model predicts
//   logit q_pi = a + sum_i w_i * psi(position of chunk i under pi)
// with w on the simplex and psi an (alpha, C)-regular potential realized as a
// signed partial sum: psi(r) = sign * C * sum_{t=1}^{r-1} t^-alpha.

#include <cstdint>
#include <vector>

#include "infobudget/dist_core.hpp"
#include "infobudget/permute.hpp"

namespace infobudget {

struct PotentialSpec {
  double alpha = 1.0;
  double C = 1.0;
  int sign = -1;  // -1: later positions pull the logit down

  void validate() const;
};

// psi at 1-based rank r >= 1.
double psi(const PotentialSpec& spec, std::size_t rank);
// psi(1..n), index 0 holding rank 1.
std::vector<double> potential_table(const PotentialSpec& spec, std::size_t n);

struct FirstOrderModel {
  double a = 0.0;
  std::vector<double> weights;
  PotentialSpec potential;

  std::size_t n() const noexcept { return weights.size(); }
  void validate() const;
};

struct Prediction {
  Prob q;
  FiniteDist dist;  // {"1": q, "0": 1 - q}
};

double logistic(double x) noexcept;

Prediction model_predict(const FirstOrderModel& model, const Permutation& perm);

// Logit for a permutation using a precomputed potential table.
double model_logit(const FirstOrderModel& model, std::span<const double> table,
                   const Permutation& perm);

// Closed-form dispersion bound in the three decay regimes:
//   alpha < 1: (C/4) (n^{1-alpha} - 1) / (1 - alpha)
//   alpha = 1: (C/4) (ln n - 3/2)
//   alpha > 1: (C/4) zeta(alpha)
// The alpha = 1 form is the large-n approximation; at small n it can be below
// the dispersion a model actually attains (it is negative for n <= 4).
double qmv_bound(double C, std::size_t n, double alpha);

// Finite-n bound from the same argument without asymptotics:
// (C/4) E[sum_{t=1}^{D} t^-alpha] with D = |U - V|, U, V iid uniform on 1..n.
double qmv_bound_finite(double C, std::size_t n, double alpha);

// Riemann zeta for alpha > 1, accurate to ~1e-12.
double riemann_zeta(double alpha);

struct HarmonicDistance {
  double exact = 0.0;   // E[H_D]
  double approx = 0.0;  // H_n - 3/2
  double gap = 0.0;     // exact - approx
};

HarmonicDistance expected_harmonic_distance(std::size_t n);

// Random model generator. `support` chunks (drawn uniformly between
// support_min and support_max, at most n) carry Dirichlet(1) weight, the rest
// carry none. The base logit is centered on the position-averaged potential
// plus a uniform offset in [-a_spread, a_spread].
struct ModelGenSpec {
  std::size_t n = 8;
  PotentialSpec potential;
  std::size_t support_min = 1;
  std::size_t support_max = 3;
  double a_spread = 1.0;
  std::uint64_t seed = 0;
};

FirstOrderModel generate_model(const ModelGenSpec& spec);

struct McDispersion {
  double q_bar = 0.0;
  double mean_abs_residual = 0.0;
  double stderr_abs_residual = 0.0;
  std::size_t permutations = 0;
};

// Monte-Carlo E_pi |q_pi - q_bar| over uniform permutations; permutation k uses
// seed derive_seed(seed, k), so the result does not depend on `threads`.
McDispersion mc_dispersion(const FirstOrderModel& model, std::size_t permutations,
                           std::uint64_t seed, std::size_t threads = 1);

// Exact E_pi |q_pi - q_bar| for models with at most 3 weighted chunks, by
// enumerating the placements of the weighted chunks (all equally likely under
// a uniform permutation).
double exact_dispersion(const FirstOrderModel& model);

// Adjacent-rank increments Delta[i][t] = max over orderings of the other
// chunks of |f(rank_i = t+1) - f(rank_i = t)|, t = 1..n-1 (index t-1), found
// by enumerating all orderings. Intended for n <= 8.
std::vector<std::vector<double>> coordinate_increments(const FirstOrderModel& model);

}  // namespace infobudget

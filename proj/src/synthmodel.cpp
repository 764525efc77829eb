#include "infobudget/synthmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "infobudget/error.hpp"
#include "infobudget/parallel.hpp"
#include "infobudget/rng.hpp"

namespace infobudget {

void PotentialSpec::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("potential alpha must be > 0");
  if (!(C >= 0.0) || !std::isfinite(C)) throw DomainError("potential scale C must be >= 0");
  if (sign != 1 && sign != -1) throw InputError("potential sign must be +1 or -1");
}

double psi(const PotentialSpec& spec, std::size_t rank) {
  spec.validate();
  if (rank < 1) throw InputError("psi rank must be >= 1");
  double s = 0.0;
  for (std::size_t t = 1; t < rank; ++t) s += std::pow(static_cast<double>(t), -spec.alpha);
  return spec.sign * spec.C * s;
}

std::vector<double> potential_table(const PotentialSpec& spec, std::size_t n) {
  spec.validate();
  std::vector<double> table(n, 0.0);
  double s = 0.0;
  for (std::size_t r = 1; r < n; ++r) {
    s += std::pow(static_cast<double>(r), -spec.alpha);
    table[r] = spec.sign * spec.C * s;
  }
  return table;
}

void FirstOrderModel::validate() const {
  potential.validate();
  if (weights.empty()) throw InputError("first-order model needs n >= 1 weights");
  if (!std::isfinite(a)) throw InputError("base logit must be finite");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("content weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("content weights must sum to 1");
}

double logistic(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double model_logit(const FirstOrderModel& model, std::span<const double> table,
                   const Permutation& perm) {
  double logit = model.a;
  for (std::size_t slot = 0; slot < perm.size(); ++slot) {
    const double w = model.weights[perm[slot]];
    if (w != 0.0) logit += w * table[slot];
  }
  return logit;
}

Prediction model_predict(const FirstOrderModel& model, const Permutation& perm) {
  model.validate();
  if (perm.size() != model.n()) {
    throw InputError("permutation size " + std::to_string(perm.size()) + " does not match model n " +
                     std::to_string(model.n()));
  }
  const auto table = potential_table(model.potential, model.n());
  const double q = logistic(model_logit(model, table, perm));
  return {Prob(q), FiniteDist::bernoulli(q)};
}

double riemann_zeta(double alpha) {
  if (!(alpha > 1.0)) throw DomainError("zeta needs alpha > 1");
  constexpr int N = 64;
  double s = 0.0;
  for (int t = 1; t < N; ++t) s += std::pow(static_cast<double>(t), -alpha);
  const double n = N;
  const double a = alpha;
  // Euler-Maclaurin tail.
  s += std::pow(n, 1.0 - a) / (a - 1.0) + 0.5 * std::pow(n, -a) + a * std::pow(n, -a - 1.0) / 12.0 -
       a * (a + 1) * (a + 2) * std::pow(n, -a - 3.0) / 720.0 +
       a * (a + 1) * (a + 2) * (a + 3) * (a + 4) * std::pow(n, -a - 5.0) / 30240.0;
  return s;
}

double qmv_bound(double C, std::size_t n, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("qmv_bound needs alpha > 0");
  if (n < 2) throw InputError("qmv_bound needs n >= 2");
  if (!(C >= 0.0)) throw InputError("qmv_bound needs C >= 0");
  const double nn = static_cast<double>(n);
  double shape = 0.0;
  if (alpha == 1.0) {
    shape = std::log(nn) - 1.5;
  } else if (alpha < 1.0) {
    shape = (std::pow(nn, 1.0 - alpha) - 1.0) / (1.0 - alpha);
  } else {
    shape = riemann_zeta(alpha);
  }
  return 0.25 * C * shape;
}

double qmv_bound_finite(double C, std::size_t n, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("qmv_bound_finite needs alpha > 0");
  if (n < 1) throw InputError("qmv_bound_finite needs n >= 1");
  if (!(C >= 0.0)) throw InputError("qmv_bound_finite needs C >= 0");
  const double nn = static_cast<double>(n);
  double partial = 0.0;
  double acc = 0.0;
  for (std::size_t d = 1; d < n; ++d) {
    partial += std::pow(static_cast<double>(d), -alpha);
    acc += static_cast<double>(n - d) * partial;
  }
  return 0.25 * C * 2.0 * acc / (nn * nn);
}

HarmonicDistance expected_harmonic_distance(std::size_t n) {
  if (n < 1) throw InputError("harmonic distance needs n >= 1");
  const double nn = static_cast<double>(n);
  double h = 0.0;
  double acc = 0.0;
  for (std::size_t d = 1; d < n; ++d) {
    h += 1.0 / static_cast<double>(d);
    acc += static_cast<double>(n - d) * h;
  }
  const double h_n = h + 1.0 / nn;
  HarmonicDistance out;
  out.exact = 2.0 * acc / (nn * nn);
  out.approx = h_n - 1.5;
  out.gap = out.exact - out.approx;
  return out;
}

FirstOrderModel generate_model(const ModelGenSpec& spec) {
  if (spec.n == 0) throw InputError("model generator needs n >= 1");
  if (spec.support_min < 1 || spec.support_max < spec.support_min) {
    throw InputError("model generator needs 1 <= support_min <= support_max");
  }
  spec.potential.validate();
  Rng rng(spec.seed);
  const std::size_t span = spec.support_max - spec.support_min + 1;
  const std::size_t support =
      std::min(spec.n, spec.support_min + static_cast<std::size_t>(rng.below(span)));

  std::vector<std::size_t> chunks(spec.n);
  std::iota(chunks.begin(), chunks.end(), std::size_t{0});
  for (std::size_t i = 0; i < support; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(spec.n - i));
    std::swap(chunks[i], chunks[j]);
  }

  FirstOrderModel model;
  model.potential = spec.potential;
  model.weights.assign(spec.n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < support; ++i) {
    const double g = rng.exponential();
    model.weights[chunks[i]] = g;
    total += g;
  }
  for (auto& w : model.weights) w /= total;

  const auto table = potential_table(spec.potential, spec.n);
  const double mean_potential =
      std::accumulate(table.begin(), table.end(), 0.0) / static_cast<double>(spec.n);
  model.a = -mean_potential + rng.uniform(-spec.a_spread, spec.a_spread);
  return model;
}

McDispersion mc_dispersion(const FirstOrderModel& model, std::size_t permutations,
                           std::uint64_t seed, std::size_t threads) {
  model.validate();
  if (permutations < 2) throw InputError("Monte-Carlo dispersion needs >= 2 permutations");
  const auto table = potential_table(model.potential, model.n());
  std::vector<double> q(permutations);
  parallel_for(permutations, threads, [&](std::size_t k) {
    const auto perm = uniform_permutation(model.n(), derive_seed(seed, k));
    q[k] = logistic(model_logit(model, table, perm));
  });
  const double K = static_cast<double>(permutations);
  McDispersion out;
  out.permutations = permutations;
  out.q_bar = std::accumulate(q.begin(), q.end(), 0.0) / K;
  double s1 = 0.0;
  double s2 = 0.0;
  for (double v : q) {
    const double r = std::abs(v - out.q_bar);
    s1 += r;
    s2 += r * r;
  }
  out.mean_abs_residual = s1 / K;
  const double var = std::max(0.0, (s2 - K * out.mean_abs_residual * out.mean_abs_residual) / (K - 1.0));
  out.stderr_abs_residual = std::sqrt(var / K);
  return out;
}

double exact_dispersion(const FirstOrderModel& model) {
  model.validate();
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < model.n(); ++i) {
    if (model.weights[i] > 0.0) support.push_back(i);
  }
  if (support.size() > 3) throw InputError("exact dispersion supports at most 3 weighted chunks");
  const auto table = potential_table(model.potential, model.n());
  const std::size_t n = model.n();

  std::vector<double> q;
  std::vector<std::size_t> slot(support.size());
  std::vector<bool> used(n, false);
  // Depth-first enumeration of distinct slot tuples for the weighted chunks.
  auto recurse = [&](auto&& self, std::size_t depth, double logit) -> void {
    if (depth == support.size()) {
      q.push_back(logistic(logit));
      return;
    }
    for (std::size_t s = 0; s < n; ++s) {
      if (used[s]) continue;
      used[s] = true;
      self(self, depth + 1, logit + model.weights[support[depth]] * table[s]);
      used[s] = false;
    }
  };
  recurse(recurse, 0, model.a);

  const double K = static_cast<double>(q.size());
  const double q_bar = std::accumulate(q.begin(), q.end(), 0.0) / K;
  double s = 0.0;
  for (double v : q) s += std::abs(v - q_bar);
  return s / K;
}

std::vector<std::vector<double>> coordinate_increments(const FirstOrderModel& model) {
  model.validate();
  const std::size_t n = model.n();
  if (n > 9) throw InputError("coordinate increments enumerate (n-1)! orderings; n must be <= 9");
  const auto table = potential_table(model.potential, n);
  std::vector<std::vector<double>> delta(n, std::vector<double>(n > 0 ? n - 1 : 0, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) others.push_back(j);
    }
    do {
      // Place chunk i at slot r among `others` kept in this relative order.
      auto logit_at = [&](std::size_t r) {
        double f = model.a;
        std::size_t k = 0;
        for (std::size_t slot = 0; slot < n; ++slot) {
          const std::size_t chunk = slot == r ? i : others[k++];
          f += model.weights[chunk] * table[slot];
        }
        return f;
      };
      for (std::size_t t = 0; t + 1 < n; ++t) {
        delta[i][t] = std::max(delta[i][t], std::abs(logit_at(t + 1) - logit_at(t)));
      }
    } while (std::next_permutation(others.begin(), others.end()));
  }
  return delta;
}

}  // namespace infobudget

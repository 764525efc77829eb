#include "infobudget/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "infobudget/error.hpp"
#include "infobudget/rng.hpp"
#include "infobudget/stats.hpp"

namespace infobudget {

DispersionStats dispersion_stats(std::span<const double> q) {
  if (q.size() < 2) throw InputError("dispersion statistics need at least two predictions");
  const double K = static_cast<double>(q.size());
  DispersionStats s;
  s.q_bar = stats::mean(q);
  for (double v : q) s.mean_abs_residual += std::abs(v - s.q_bar);
  s.mean_abs_residual /= K;

  // Sum over ordered pairs via the sorted form: sum_{j<k} (q_(k) - q_(j)) =
  // sum_k q_(k) (2k - K - 1) with 1-based k.
  std::vector<double> sorted(q.begin(), q.end());
  std::sort(sorted.begin(), sorted.end());
  double acc = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    acc += sorted[k] * (2.0 * static_cast<double>(k + 1) - K - 1.0);
  }
  s.e_pair = 2.0 * acc / (K * K);
  return s;
}

DispersionRecord make_dispersion_record(std::string item_id, std::size_t n, std::vector<double> q) {
  DispersionRecord r;
  r.item_id = std::move(item_id);
  r.n = n;
  r.stats = dispersion_stats(q);
  r.q = std::move(q);
  return r;
}

NatBudget jensen_gap(std::span<const double> scores, std::size_t token_count) {
  if (scores.empty()) throw InputError("Jensen gap of an empty score list");
  if (token_count == 0) throw InputError("token count must be >= 1");
  double mean_ce = 0.0;
  double mean_score = 0.0;
  for (double s : scores) {
    if (!(s > 0.0 && s <= 1.0)) {
      throw InputError("scores must lie in (0, 1]; smooth zero probabilities first");
    }
    mean_ce -= std::log(s);
    mean_score += s;
  }
  const double K = static_cast<double>(scores.size());
  mean_ce /= K;
  mean_score /= K;
  const double gap = mean_ce + std::log(mean_score);
  return NatBudget(std::max(0.0, gap) / static_cast<double>(token_count));
}

RegressionFit fit_log_dispersion(std::span<const DispersionRecord> records,
                                 std::uint64_t bootstrap_seed, std::size_t resamples) {
  std::set<std::size_t> distinct;
  for (const auto& r : records) distinct.insert(r.n);
  if (distinct.size() < 3) {
    throw DataError("dispersion fit needs at least 3 distinct n values, got " +
                    std::to_string(distinct.size()));
  }
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& r : records) {
    x.push_back(std::log(static_cast<double>(r.n)));
    y.push_back(r.stats.mean_abs_residual);
  }
  const auto fit = stats::ols(x, y);

  RegressionFit out;
  out.intercept = fit.intercept;
  out.slope = fit.slope;
  out.r2 = fit.r2;
  out.n_points = records.size();
  out.resamples = resamples;
  out.bootstrap_seed = bootstrap_seed;

  std::vector<double> slopes;
  slopes.reserve(resamples);
  Rng rng(bootstrap_seed);
  std::vector<double> bx(x.size());
  std::vector<double> by(y.size());
  const std::size_t max_draws = 20 * resamples + 100;
  for (std::size_t draw = 0; slopes.size() < resamples && draw < max_draws; ++draw) {
    bool varied = false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto j = static_cast<std::size_t>(rng.below(x.size()));
      bx[i] = x[j];
      by[i] = y[j];
      varied = varied || bx[i] != bx[0];
    }
    if (!varied) continue;
    slopes.push_back(stats::ols(bx, by).slope);
  }
  if (slopes.empty()) {
    out.ci_low = out.ci_high = out.slope;
  } else {
    out.ci_low = std::min(stats::quantile(slopes, 0.025), out.slope);
    out.ci_high = std::max(stats::quantile(slopes, 0.975), out.slope);
  }
  return out;
}

double mixture_ce(std::span<const std::vector<double>> rows, std::span<const double> weights) {
  if (rows.empty()) throw InputError("mixture CE of an empty group");
  double ce = 0.0;
  for (const auto& row : rows) {
    double mix = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) mix += weights[k] * row[k];
    ce -= std::log(mix);
  }
  return ce / static_cast<double>(rows.size());
}

namespace {

struct Group {
  std::size_t key = 0;
  std::vector<std::vector<double>> rows;
};

std::vector<Group> split_groups(const ScoreMatrix& matrix) {
  if (matrix.rows.size() != matrix.group.size()) {
    throw InputError("score matrix rows and group labels differ in length");
  }
  std::map<std::size_t, Group> by_key;
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
    auto& g = by_key[matrix.group[i]];
    g.key = matrix.group[i];
    const auto& row = matrix.rows[i];
    if (row.empty()) throw InputError("score matrix row without permutation columns");
    if (!g.rows.empty() && g.rows.front().size() != row.size()) {
      throw DataError("group n=" + std::to_string(g.key) + " mixes rows with different column counts");
    }
    for (double s : row) {
      if (!(s > 0.0 && s <= 1.0)) throw InputError("scores must lie in (0, 1]");
    }
    g.rows.push_back(row);
  }
  std::vector<Group> out;
  for (auto& [key, g] : by_key) out.push_back(std::move(g));
  if (out.empty()) throw InputError("empty score matrix");
  return out;
}

std::vector<double> uniform_weights(std::size_t m) {
  return std::vector<double>(m, 1.0 / static_cast<double>(m));
}

}  // namespace

EgResult eg_optimize_mixture(const ScoreMatrix& matrix, const EgOptions& options) {
  if (!(options.eta > 0.0)) throw InputError("EG step size must be > 0");
  EgResult result;
  for (const auto& g : split_groups(matrix)) {
    const std::size_t m = g.rows.front().size();
    auto w = uniform_weights(m);
    double f = mixture_ce(g.rows, w);
    auto& trace = result.ce_trace[g.key];
    trace.push_back(f);
    double eta = options.eta;
    std::size_t it = 0;
    std::vector<double> grad(m);
    std::vector<double> next(m);
    for (; it < options.max_iters && m > 1; ++it) {
      std::fill(grad.begin(), grad.end(), 0.0);
      for (const auto& row : g.rows) {
        double mix = 0.0;
        for (std::size_t k = 0; k < m; ++k) mix += w[k] * row[k];
        for (std::size_t k = 0; k < m; ++k) grad[k] -= row[k] / mix;
      }
      for (auto& gk : grad) gk /= static_cast<double>(g.rows.size());
      const double gmin = *std::min_element(grad.begin(), grad.end());
      double z = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        next[k] = w[k] * std::exp(-eta * (grad[k] - gmin));
        z += next[k];
      }
      double change = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        next[k] /= z;
        change = std::max(change, std::abs(next[k] - w[k]));
      }
      const double f_next = mixture_ce(g.rows, next);
      if (f_next > f) {
        eta *= 0.5;
        if (eta < 1e-30) break;
        continue;
      }
      w = next;
      f = f_next;
      trace.push_back(f);
      if (change < options.tolerance) break;
    }
    result.iterations[g.key] = it;
    result.weights[g.key] = std::move(w);
  }
  return result;
}

MixtureReport mixture_ce_report(const ScoreMatrix& matrix, const EgOptions& options) {
  MixtureReport rep;
  rep.eg = eg_optimize_mixture(matrix, options);
  double total = 0.0;
  for (const auto& g : split_groups(matrix)) {
    const std::size_t m = g.rows.front().size();
    const double count = static_cast<double>(g.rows.size());
    total += count;
    rep.uniform_ce += count * mixture_ce(g.rows, uniform_weights(m));
    rep.optimized_ce += count * mixture_ce(g.rows, rep.eg.weights.at(g.key));
    double best = std::numeric_limits<double>::infinity();
    double avg = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      double ce = 0.0;
      for (const auto& row : g.rows) ce -= std::log(row[k]);
      ce /= count;
      best = std::min(best, ce);
      avg += ce / static_cast<double>(m);
    }
    rep.oracle_single_ce += count * best;
    rep.mean_single_ce += count * avg;
  }
  rep.uniform_ce /= total;
  rep.optimized_ce /= total;
  rep.oracle_single_ce /= total;
  rep.mean_single_ce /= total;
  rep.improvement = std::max(0.0, rep.uniform_ce - rep.optimized_ce);
  return rep;
}

GrowthFit fit_growth(std::span<const double> n, std::span<const double> y) {
  if (n.size() != y.size() || n.size() < 3) throw InputError("growth fit needs >= 3 matched points");
  std::vector<double> ln_n(n.size());
  std::vector<double> ln_y(y.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(n[i] > 0.0) || !(y[i] > 0.0)) throw InputError("growth fit needs positive n and y");
    ln_n[i] = std::log(n[i]);
    ln_y[i] = std::log(y[i]);
  }
  GrowthFit g;
  const auto lin = stats::ols(ln_n, y);
  g.log_intercept = lin.intercept;
  g.log_slope = lin.slope;
  g.log_r2 = lin.r2;
  const auto pw = stats::ols(ln_n, ln_y);
  g.power_exponent = pw.slope;
  const double my = stats::mean(y);
  double sse = 0.0;
  double sst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double pred = std::exp(pw.intercept + pw.slope * ln_n[i]);
    sse += (y[i] - pred) * (y[i] - pred);
    sst += (y[i] - my) * (y[i] - my);
  }
  g.power_r2 = sst > 0.0 ? 1.0 - sse / sst : 1.0;
  return g;
}

}  // namespace infobudget

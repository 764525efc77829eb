#include "infobudget/doseresponse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "infobudget/error.hpp"
#include "infobudget/parallel.hpp"
#include "infobudget/rng.hpp"
#include "infobudget/stats.hpp"

namespace infobudget {

using nlohmann::json;

void DoseParams::validate() const {
  for (double v : {first_stage_slope, budget_intercept, noise_sd, response_slope, base_rate,
                   confounder_budget, confounder_outcome}) {
    if (!std::isfinite(v)) throw InputError("dose parameters must be finite");
  }
  if (noise_sd < 0.0) throw InputError("noise_sd must be >= 0");
  if (base_rate < 0.0 || base_rate > 1.0) throw InputError("base_rate must lie in [0, 1]");
}

std::vector<DoseItem> synth_generate(const DoseParams& params, std::size_t count, std::uint64_t seed) {
  params.validate();
  if (count < 40) throw InputError("dose generation needs count >= 40");
  Rng rng(seed);
  std::vector<DoseItem> items(count);
  for (std::size_t i = 0; i < count; ++i) {
    DoseItem& it = items[i];
    it.item_id = "dose-" + std::to_string(i);
    it.dose = static_cast<int>(i % kDoseLevels);
    const double z = rng.normal();
    const double u = rng.normal();
    const double budget = params.budget_intercept + params.first_stage_slope * it.dose + params.noise_sd * z +
                          params.confounder_budget * u;
    it.delta_bar = NatBudget(budget);
    const double p = std::clamp(params.base_rate + params.response_slope * budget + params.confounder_outcome * u,
                                0.0, 1.0);
    const bool hall = rng.uniform01() < p;
    it.answered = true;
    it.hallucinated = hall;
    it.correct = !hall;
    it.outcome = params.mode == OutcomeMode::Expected ? p : (hall ? 1.0 : 0.0);
  }
  return items;
}

std::string_view to_string(EstimateMethod m) noexcept {
  return m == EstimateMethod::Ols ? "ols" : "2sls";
}

namespace {

struct Columns {
  std::vector<double> d, x, y;
};

Columns columns(std::span<const DoseItem> items) {
  Columns c;
  for (const auto& it : items) {
    c.d.push_back(static_cast<double>(it.dose));
    c.x.push_back(it.delta_bar.value());
    c.y.push_back(it.outcome);
  }
  return c;
}

void attach_first_stage(CausalEstimate& e, const Columns& c) {
  const auto fs = stats::ols(c.d, c.x);
  e.first_stage_slope = fs.slope;
  e.first_stage_se = fs.slope_se;
  const double t = fs.slope_se > 0.0 ? fs.slope / fs.slope_se : std::numeric_limits<double>::infinity();
  e.first_stage_f = std::isfinite(t) ? t * t : std::numeric_limits<double>::infinity();
  e.weak_instrument = std::abs(t) < stats::kZ95;
  e.spearman_rho = stats::spearman(c.d, c.x);
}

void set_ci(CausalEstimate& e) {
  e.ci_low = e.slope - stats::kZ95 * e.std_error;
  e.ci_high = e.slope + stats::kZ95 * e.std_error;
}

}  // namespace

CausalEstimate estimate_ols(std::span<const DoseItem> items) {
  const Columns c = columns(items);
  const auto fit = stats::ols(c.x, c.y);
  CausalEstimate e;
  e.method = EstimateMethod::Ols;
  e.n = items.size();
  e.intercept = fit.intercept;
  e.slope = fit.slope;
  e.std_error = fit.slope_robust_se;
  set_ci(e);
  std::vector<double> distinct_d(c.d);
  std::sort(distinct_d.begin(), distinct_d.end());
  if (distinct_d.front() != distinct_d.back()) attach_first_stage(e, c);
  return e;
}

CausalEstimate estimate_2sls(std::span<const DoseItem> items) {
  const Columns c = columns(items);
  if (c.d.size() < 3) throw DataError("2SLS needs at least three items");
  CausalEstimate e;
  e.method = EstimateMethod::TwoStageLs;
  e.n = items.size();
  attach_first_stage(e, c);  // throws DataError when d is constant

  const auto fs = stats::ols(c.d, c.x);
  std::vector<double> fitted(c.d.size());
  for (std::size_t i = 0; i < c.d.size(); ++i) fitted[i] = fs.intercept + fs.slope * c.d[i];
  const auto ss = stats::ols(fitted, c.y);
  e.slope = ss.slope;
  e.intercept = ss.intercept;

  // HC1 variance with structural residuals y - a - b x (not the fitted x).
  const double n = static_cast<double>(c.d.size());
  const double md = stats::mean(c.d);
  const double mx = stats::mean(c.x);
  double szx = 0.0;
  double meat = 0.0;
  for (std::size_t i = 0; i < c.d.size(); ++i) {
    const double dz = c.d[i] - md;
    const double r = c.y[i] - e.intercept - e.slope * c.x[i];
    szx += dz * (c.x[i] - mx);
    meat += dz * dz * r * r;
  }
  e.std_error = std::sqrt(n / (n - 2.0) * meat) / std::abs(szx);
  set_ci(e);
  return e;
}

DoseTrialSummary run_dose_trials(const DoseParams& params, std::size_t count, std::size_t trials,
                                 std::uint64_t seed, std::size_t threads) {
  if (trials == 0) throw InputError("need at least one trial");
  DoseTrialSummary s;
  s.trials.resize(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    DoseTrial& tr = s.trials[t];
    tr.seed = derive_seed(seed, t);
    const auto items = synth_generate(params, count, tr.seed);
    tr.ols = estimate_ols(items);
    tr.iv = estimate_2sls(items);
  });
  std::size_t ols_hits = 0;
  std::size_t iv_hits = 0;
  for (const auto& tr : s.trials) {
    ols_hits += (tr.ols.ci_low <= params.response_slope && params.response_slope <= tr.ols.ci_high) ? 1 : 0;
    iv_hits += (tr.iv.ci_low <= params.response_slope && params.response_slope <= tr.iv.ci_high) ? 1 : 0;
    s.ols_mean_slope += tr.ols.slope;
    s.iv_mean_slope += tr.iv.slope;
  }
  const double T = static_cast<double>(trials);
  s.ols_coverage = static_cast<double>(ols_hits) / T;
  s.iv_coverage = static_cast<double>(iv_hits) / T;
  s.ols_mean_slope /= T;
  s.iv_mean_slope /= T;
  return s;
}

json to_json(const DoseItem& it) {
  return json{{"item_id", it.item_id},       {"dose", it.dose},
              {"total_chunks", it.total_chunks}, {"delta_bar", it.delta_bar.value()},
              {"answered", it.answered},     {"correct", it.correct},
              {"hallucinated", it.hallucinated}, {"outcome", it.outcome}};
}

json to_json(const CausalEstimate& e) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return json{{"method", to_string(e.method)},
              {"intercept", e.intercept},
              {"slope", e.slope},
              {"std_error", e.std_error},
              {"ci_low", e.ci_low},
              {"ci_high", e.ci_high},
              {"first_stage_slope", e.first_stage_slope},
              {"first_stage_se", e.first_stage_se},
              {"first_stage_f", num(e.first_stage_f)},
              {"weak_instrument", e.weak_instrument},
              {"spearman_rho", e.spearman_rho},
              {"n", e.n}};
}

}  // namespace infobudget

#pragma once

// Planted dose-response harness: evidence dose d -> budget -> hallucination,
// with linear-probability OLS and two-stage least squares (instrument d).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "infobudget/info_core.hpp"
#include "json.hpp"

namespace infobudget {

inline constexpr int kDoseLevels = 4;  // d in {0, 1, 2, 3}
inline constexpr int kDoseChunks = 4;  // prompt length L

struct DoseItem {
  std::string item_id;
  int dose = 0;
  int total_chunks = kDoseChunks;
  NatBudget delta_bar;
  bool answered = true;
  bool correct = false;
  bool hallucinated = false;
  // Regression outcome: the hallucination indicator, or its probability when
  // the generator runs in Expected mode.
  double outcome = 0.0;
};

enum class OutcomeMode { Bernoulli, Expected };

// budget  = budget_intercept + first_stage_slope d + noise_sd Z + confounder_budget U
// P(hall) = base_rate + response_slope budget + confounder_outcome U, clamped to [0, 1]
// with Z, U independent standard normals.
struct DoseParams {
  double first_stage_slope = 0.375;
  double budget_intercept = 0.5;
  double noise_sd = 0.3;
  double response_slope = -0.13;
  double base_rate = 0.6;
  double confounder_budget = 0.0;
  double confounder_outcome = 0.0;
  OutcomeMode mode = OutcomeMode::Bernoulli;

  void validate() const;
};

// Doses cycle 0,1,2,3 so every level appears floor(count/4) or ceil(count/4) times.
std::vector<DoseItem> synth_generate(const DoseParams& params, std::size_t count, std::uint64_t seed);

enum class EstimateMethod { Ols, TwoStageLs };
std::string_view to_string(EstimateMethod m) noexcept;

struct CausalEstimate {
  EstimateMethod method = EstimateMethod::Ols;
  double intercept = 0.0;
  double slope = 0.0;
  double std_error = 0.0;  // HC1 robust
  double ci_low = 0.0;
  double ci_high = 0.0;
  double first_stage_slope = 0.0;
  double first_stage_se = 0.0;
  double first_stage_f = 0.0;
  bool weak_instrument = false;  // first-stage |t| < 1.96
  double spearman_rho = 0.0;     // rho(d, budget)
  std::size_t n = 0;
};

CausalEstimate estimate_ols(std::span<const DoseItem> items);
CausalEstimate estimate_2sls(std::span<const DoseItem> items);

struct DoseTrial {
  std::uint64_t seed = 0;
  CausalEstimate ols;
  CausalEstimate iv;
};

struct DoseTrialSummary {
  std::vector<DoseTrial> trials;
  double ols_coverage = 0.0;  // fraction of CIs containing response_slope
  double iv_coverage = 0.0;
  double ols_mean_slope = 0.0;
  double iv_mean_slope = 0.0;
};

// Trial t uses seed derive_seed(seed, t); results do not depend on `threads`.
DoseTrialSummary run_dose_trials(const DoseParams& params, std::size_t count, std::size_t trials,
                                 std::uint64_t seed, std::size_t threads = 1);

nlohmann::json to_json(const DoseItem& item);
nlohmann::json to_json(const CausalEstimate& estimate);

}  // namespace infobudget

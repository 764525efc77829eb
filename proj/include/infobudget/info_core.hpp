#pragma once

// Bernoulli information geometry and the answer/abstain planners built on it.
//
// All quantities are in nats. The planners relate three numbers:
//   - bits_to_trust: KL(Ber(1-h*) || Ber(q_lo)), evidence needed to lift a
//     conservative prior to the target reliability 1-h*;
//   - risk_of_hallucination: 1 - p_max(delta, q_bar), residual error
//     achievable at a measured budget;
//   - ISR = delta / B2T, the answer/abstain ratio.

#include <limits>
#include <string_view>
#include <utility>

namespace infobudget {

// Probability in [0, 1]. Construction rejects NaN, infinities and values
// outside the unit interval.
class Prob {
 public:
  constexpr Prob() noexcept = default;
  explicit Prob(double value);

  constexpr double value() const noexcept { return value_; }
  friend constexpr bool operator==(Prob, Prob) noexcept = default;

 private:
  double value_ = 0.0;
};

// Amount of information in nats. Must be finite; KL-derived budgets are >= 0,
// clipped per-sample increments may be negative.
class NatBudget {
 public:
  constexpr NatBudget() noexcept = default;
  explicit NatBudget(double value);

  constexpr double value() const noexcept { return value_; }
  friend constexpr bool operator==(NatBudget, NatBudget) noexcept = default;

 private:
  double value_ = 0.0;
};

enum class Decision { Answer, Hedge, Refuse };
enum class DecisionMode { Binary, Graduated };

std::string_view to_string(Decision d) noexcept;
Decision decision_from_string(std::string_view s);
std::string_view to_string(DecisionMode m) noexcept;
DecisionMode decision_mode_from_string(std::string_view s);

struct IsrThresholds {
  double hedge_lo = 0.5;
  double answer_at = 1.0;
};

// KL(Ber(p) || Ber(q)). q must lie strictly inside (0, 1); zero-mass terms of
// p contribute nothing.
NatBudget kl_bernoulli(Prob p, Prob q);

// Largest p in [q, 1) with KL(Ber(p) || Ber(q)) <= delta, by bisection on
// [q, 1 - 1e-15] to 1e-12 in p.
Prob p_max(NatBudget delta, Prob q);

// Lower inverse: the prior f in (0, p) with KL(Ber(p) || Ber(f)) = delta.
// Used to recover the effective prior floor implied by a reported B2T value.
Prob prior_for_budget(NatBudget delta, Prob p);

// KL(Ber(1 - h*) || Ber(q_lo)); zero once q_lo already meets 1 - h*.
NatBudget bits_to_trust(Prob q_lo, Prob h_star);

Prob risk_of_hallucination(NatBudget delta, Prob q_bar);

struct IsrResult {
  double isr = 0.0;  // +inf when b2t == 0
  Decision decision = Decision::Refuse;
};

// ISR = delta / b2t; Answer iff ISR >= answer_at. Graduated mode reports Hedge
// for hedge_lo <= ISR < answer_at; Binary mode folds Hedge into Refuse.
IsrResult isr_decide(NatBudget delta, NatBudget b2t, IsrThresholds thresholds = {},
                     DecisionMode mode = DecisionMode::Binary);

struct RareEventBounds {
  NatBudget asymptotic;  // (1 - eps) ln(1/q)
  NatBudget uniform;     // max(0, ln(1/q)/2 - ln 2)
};

// Rare-event lower bounds on the budget needed for reliability 1 - eps from
// prior q. Domain: q in (0, 0.25], eps in (0, 0.5].
RareEventBounds rare_event_bounds(Prob q, Prob eps);

// Exponential tilt that moves Ber(q) to Ber(p): ln(p(1-q) / (q(1-p))).
double tilt_lambda(Prob q, Prob p);
// Mass of the predicate under Ber(q) tilted by lambda.
Prob tilted_mass(Prob q, double lambda);

// The planner bundle for one decision.
struct GatePlan {
  Prob q_bar;
  Prob q_lo;  // after flooring
  NatBudget delta_bar;
  NatBudget b2t;
  Prob roh;
  double isr = 0.0;
  Decision decision = Decision::Refuse;
};

struct PlanOptions {
  Prob h_star{0.05};
  double prior_floor = 0.003;
  IsrThresholds thresholds{};
  DecisionMode mode = DecisionMode::Binary;
};

// Builds the plan from literal (q_bar, q_lo, delta). q_lo is raised to the
// prior floor before B2T; a negative delta (possible under symmetric clipping)
// carries no usable information and is planned as zero.
GatePlan make_plan(Prob q_bar, Prob q_lo, double delta, const PlanOptions& options);

}  // namespace infobudget

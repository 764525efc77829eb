#include "infobudget/info_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "infobudget/error.hpp"

namespace infobudget {

namespace {

constexpr double kUpperP = 1.0 - 1e-15;
constexpr double kPTolerance = 1e-12;
constexpr int kMaxBisection = 200;

// p ln(p/q) with 0 ln 0 = 0.
double xlogx_over(double p, double log_p, double log_q) {
  return p == 0.0 ? 0.0 : p * (log_p - log_q);
}

double kl_raw(double p, double q) {
  const double head = xlogx_over(p, std::log(p), std::log(q));
  const double tail = xlogx_over(1.0 - p, std::log1p(-p), std::log1p(-q));
  return std::max(0.0, head + tail);
}

void require_interior(double q, const char* what) {
  if (!(q > 0.0 && q < 1.0)) {
    throw DomainError(std::string(what) + " = " + std::to_string(q) +
                      " must lie strictly inside (0,1); apply the prior floor first");
  }
}

}  // namespace

Prob::Prob(double value) : value_(value) {
  if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
    throw DomainError("probability out of [0,1]: " + std::to_string(value));
  }
}

NatBudget::NatBudget(double value) : value_(value) {
  if (!std::isfinite(value)) throw DomainError("nat budget must be finite");
}

std::string_view to_string(Decision d) noexcept {
  switch (d) {
    case Decision::Answer: return "Answer";
    case Decision::Hedge: return "Hedge";
    case Decision::Refuse: return "Refuse";
  }
  return "Refuse";
}

Decision decision_from_string(std::string_view s) {
  if (s == "Answer" || s == "answer") return Decision::Answer;
  if (s == "Hedge" || s == "hedge") return Decision::Hedge;
  if (s == "Refuse" || s == "refuse" || s == "Abstain" || s == "abstain") return Decision::Refuse;
  throw InputError("unknown decision '" + std::string(s) + "'");
}

std::string_view to_string(DecisionMode m) noexcept {
  return m == DecisionMode::Binary ? "binary" : "graduated";
}

DecisionMode decision_mode_from_string(std::string_view s) {
  if (s == "binary") return DecisionMode::Binary;
  if (s == "graduated") return DecisionMode::Graduated;
  throw InputError("unknown decision mode '" + std::string(s) + "'");
}

NatBudget kl_bernoulli(Prob p, Prob q) {
  require_interior(q.value(), "q");
  return NatBudget(kl_raw(p.value(), q.value()));
}

Prob p_max(NatBudget delta, Prob q) {
  require_interior(q.value(), "q");
  if (delta.value() < 0.0) throw InputError("budget must be non-negative");
  const double qv = q.value();
  if (delta.value() == 0.0) return q;
  double lo = qv;
  double hi = kUpperP;
  if (kl_raw(hi, qv) <= delta.value()) return Prob(hi);
  for (int it = 0; it < kMaxBisection && hi - lo > kPTolerance; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (kl_raw(mid, qv) <= delta.value()) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return Prob(lo);
}

Prob prior_for_budget(NatBudget delta, Prob p) {
  require_interior(p.value(), "p");
  if (delta.value() < 0.0) throw InputError("budget must be non-negative");
  if (delta.value() == 0.0) return p;
  // KL(p || f) decreases in f on (0, p); bisect on log f.
  double lo = std::log(1e-300);
  double hi = std::log(p.value());
  if (kl_raw(p.value(), std::exp(lo)) < delta.value()) {
    throw DomainError("budget exceeds KL achievable from any positive prior");
  }
  for (int it = 0; it < kMaxBisection && hi - lo > kPTolerance; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (kl_raw(p.value(), std::exp(mid)) > delta.value()) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return Prob(std::exp(0.5 * (lo + hi)));
}

NatBudget bits_to_trust(Prob q_lo, Prob h_star) {
  if (!(h_star.value() > 0.0 && h_star.value() <= 0.5)) {
    throw DomainError("h_star must lie in (0, 0.5]");
  }
  const double target = 1.0 - h_star.value();
  if (q_lo.value() >= target) return NatBudget(0.0);
  return kl_bernoulli(Prob(target), q_lo);
}

Prob risk_of_hallucination(NatBudget delta, Prob q_bar) {
  return Prob(std::clamp(1.0 - p_max(delta, q_bar).value(), 0.0, 1.0));
}

IsrResult isr_decide(NatBudget delta, NatBudget b2t, IsrThresholds thresholds, DecisionMode mode) {
  if (delta.value() < 0.0) throw InputError("isr_decide: budget must be non-negative");
  if (b2t.value() < 0.0) throw InputError("isr_decide: B2T must be non-negative");
  if (!(thresholds.hedge_lo <= thresholds.answer_at)) {
    throw InputError("isr_decide: hedge threshold above answer threshold");
  }
  IsrResult out;
  out.isr = b2t.value() == 0.0 ? std::numeric_limits<double>::infinity()
                               : delta.value() / b2t.value();
  if (out.isr >= thresholds.answer_at) {
    out.decision = Decision::Answer;
  } else if (mode == DecisionMode::Graduated && out.isr >= thresholds.hedge_lo) {
    out.decision = Decision::Hedge;
  } else {
    out.decision = Decision::Refuse;
  }
  return out;
}

RareEventBounds rare_event_bounds(Prob q, Prob eps) {
  if (!(q.value() > 0.0 && q.value() <= 0.25)) throw DomainError("rare-event bounds need q in (0, 0.25]");
  if (!(eps.value() > 0.0 && eps.value() <= 0.5)) throw DomainError("rare-event bounds need eps in (0, 0.5]");
  const double log_inv_q = -std::log(q.value());
  return {NatBudget((1.0 - eps.value()) * log_inv_q),
          NatBudget(std::max(0.0, 0.5 * log_inv_q - std::log(2.0)))};
}

double tilt_lambda(Prob q, Prob p) {
  require_interior(q.value(), "q");
  require_interior(p.value(), "p");
  return std::log(p.value()) - std::log1p(-p.value()) - std::log(q.value()) + std::log1p(-q.value());
}

Prob tilted_mass(Prob q, double lambda) {
  // q e^l / (q e^l + 1 - q), written as a logistic of the shifted log-odds.
  const double log_odds = std::log(q.value()) - std::log1p(-q.value()) + lambda;
  return Prob(1.0 / (1.0 + std::exp(-log_odds)));
}

GatePlan make_plan(Prob q_bar, Prob q_lo, double delta, const PlanOptions& options) {
  if (!(options.prior_floor > 0.0 && options.prior_floor < 0.1)) {
    throw InputError("prior_floor must lie in (0, 0.1)");
  }
  if (!std::isfinite(delta)) throw InputError("budget must be finite");
  GatePlan plan;
  plan.q_bar = q_bar;
  plan.q_lo = Prob(std::max(q_lo.value(), options.prior_floor));
  plan.delta_bar = NatBudget(delta);
  const NatBudget usable(std::max(delta, 0.0));
  plan.b2t = bits_to_trust(plan.q_lo, options.h_star);
  const Prob prior(std::clamp(q_bar.value(), options.prior_floor, kUpperP));
  plan.roh = risk_of_hallucination(usable, prior);
  const IsrResult r = isr_decide(usable, plan.b2t, options.thresholds, options.mode);
  plan.isr = r.isr;
  plan.decision = r.decision;
  return plan;
}

}  // namespace infobudget

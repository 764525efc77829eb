#include <cmath>
#include <limits>

#include "doctest.h"
#include "infobudget/error.hpp"
#include "infobudget/info_core.hpp"
#include "support.hpp"

using namespace infobudget;
using testing_support::Gen;
using testing_support::ref_kl;
using testing_support::ref_pmax;

TEST_CASE("Prob and NatBudget reject invalid values") {
  CHECK_THROWS_AS(Prob(-0.1), DomainError);
  CHECK_THROWS_AS(Prob(1.0000001), DomainError);
  CHECK_THROWS_AS(Prob(std::nan("")), DomainError);
  CHECK_THROWS_AS(NatBudget(std::numeric_limits<double>::infinity()), DomainError);
  CHECK(Prob(0.0).value() == 0.0);
  CHECK(Prob(1.0).value() == 1.0);
  CHECK(NatBudget(-2.0).value() == -2.0);
}

TEST_CASE("kl_bernoulli worked values") {
  CHECK(std::abs(kl_bernoulli(Prob(0.95), Prob(0.10)).value() - 1.994) < 5e-4);
  CHECK(std::abs(kl_bernoulli(Prob(0.95), Prob(0.02)).value() - 3.519) < 5e-4);
  CHECK(std::abs(kl_bernoulli(Prob(0.95), Prob(0.30)).value() - 0.963) < 5e-4);
  CHECK(kl_bernoulli(Prob(0.3), Prob(0.3)).value() == 0.0);
  CHECK(std::abs(kl_bernoulli(Prob(0.95), Prob(1e-4)).value() - 8.551) < 5e-4);
}

TEST_CASE("kl_bernoulli endpoints and domain") {
  CHECK(kl_bernoulli(Prob(1.0), Prob(0.5)).value() == doctest::Approx(std::log(2.0)));
  CHECK(kl_bernoulli(Prob(0.0), Prob(0.5)).value() == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(kl_bernoulli(Prob(0.5), Prob(0.0)), DomainError);
  CHECK_THROWS_AS(kl_bernoulli(Prob(0.5), Prob(1.0)), DomainError);
  try {
    kl_bernoulli(Prob(0.5), Prob(0.0));
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("floor") != std::string::npos);
  }
}

TEST_CASE("kl_bernoulli matches long-double oracle, Pinsker, monotone") {
  Gen g(11);
  for (int i = 0; i < 10000; ++i) {
    const double p = g.prob();
    const double q = g.prob();
    const double kl = kl_bernoulli(Prob(p), Prob(q)).value();
    REQUIRE(kl >= 0.0);
    REQUIRE(std::abs(kl - static_cast<double>(ref_kl(p, q))) <= 1e-12 * std::max(1.0, kl));
    REQUIRE(kl >= 2.0 * (p - q) * (p - q) - 1e-15);
  }
  // strictly increasing in |p - q| on each side of q
  const double q = 0.3;
  double prev = 0.0;
  for (double p = 0.31; p < 0.999; p += 0.01) {
    const double kl = kl_bernoulli(Prob(p), Prob(q)).value();
    REQUIRE(kl > prev);
    prev = kl;
  }
  prev = 0.0;
  for (double p = 0.29; p > 0.001; p -= 0.01) {
    const double kl = kl_bernoulli(Prob(p), Prob(q)).value();
    REQUIRE(kl > prev);
    prev = kl;
  }
}

TEST_CASE("p_max worked values") {
  CHECK(std::abs(p_max(NatBudget(0.5), Prob(0.10)).value() - 0.495) < 5e-4);
  CHECK(std::abs(p_max(NatBudget(1.0), Prob(0.10)).value() - 0.689) < 5e-4);
  CHECK(std::abs(p_max(NatBudget(2.0), Prob(0.10)).value() - 0.951) < 5e-4);
  CHECK(p_max(NatBudget(3.0), Prob(0.10)).value() >= 0.999);
  CHECK(p_max(NatBudget(0.0), Prob(0.37)).value() == doctest::Approx(0.37).epsilon(1e-12));
  CHECK_THROWS(p_max(NatBudget(-1.0), Prob(0.1)));
}

TEST_CASE("p_max agrees with an independent root finder and round-trips") {
  Gen g(12);
  for (int i = 0; i < 2000; ++i) {
    const double q = g.uniform(1e-4, 0.99);
    const double delta = g.uniform(0.0, 6.0);
    const double pm = p_max(NatBudget(delta), Prob(q)).value();
    const double oracle = static_cast<double>(ref_pmax(delta, q));
    REQUIRE(std::abs(pm - oracle) <= 1e-9);
    const double resid = std::abs(kl_bernoulli(Prob(pm), Prob(q)).value() - delta);
    REQUIRE((resid <= 1e-9 || pm >= 1.0 - 1e-12 - 1e-15));
  }
  for (int i = 0; i < 2000; ++i) {
    const double q = g.uniform(0.01, 0.9);
    const double p = g.uniform(q, 0.999);
    const double back = p_max(kl_bernoulli(Prob(p), Prob(q)), Prob(q)).value();
    REQUIRE(std::abs(back - p) <= 1e-8);
  }
}

TEST_CASE("bits_to_trust and risk_of_hallucination") {
  const Prob h(0.05);
  CHECK(std::abs(bits_to_trust(Prob(0.10), h).value() - 1.994) < 5e-4);
  CHECK(std::abs(bits_to_trust(Prob(0.167), h).value() - static_cast<double>(ref_kl(0.95, 0.167))) < 1e-12);
  CHECK(std::abs(bits_to_trust(Prob(0.167), h).value() - 1.511) < 5e-4);
  CHECK(bits_to_trust(Prob(0.95), h).value() == 0.0);
  CHECK(bits_to_trust(Prob(0.99), h).value() == 0.0);
  CHECK_THROWS(bits_to_trust(Prob(0.1), Prob(0.6)));
  CHECK_THROWS(bits_to_trust(Prob(0.1), Prob(0.0)));

  double prev = std::numeric_limits<double>::infinity();
  for (double q = 0.001; q < 0.95; q += 0.001) {
    const double b = bits_to_trust(Prob(q), h).value();
    REQUIRE(b < prev);
    prev = b;
  }

  CHECK(std::abs(risk_of_hallucination(NatBudget(2.0), Prob(0.10)).value() - 0.049) < 5e-4);
  CHECK(risk_of_hallucination(NatBudget(0.0), Prob(0.10)).value() == doctest::Approx(0.90));
  CHECK(risk_of_hallucination(NatBudget(3.0), Prob(0.10)).value() < 1e-3);
  prev = 1.0;
  for (double d = 0.0; d < 8.0; d += 0.05) {
    const double r = risk_of_hallucination(NatBudget(d), Prob(0.2)).value();
    REQUIRE(r <= prev);
    REQUIRE(r >= 0.0);
    REQUIRE(r <= 0.8 + 1e-12);
    prev = r;
  }
}

TEST_CASE("isr_decide rules") {
  auto r = isr_decide(NatBudget(2.0), NatBudget(1.994));
  CHECK(r.isr == doctest::Approx(1.003).epsilon(1e-3));
  CHECK(r.decision == Decision::Answer);

  r = isr_decide(NatBudget(2.0), NatBudget(3.519));
  CHECK(r.isr == doctest::Approx(0.568).epsilon(1e-3));
  CHECK(r.decision == Decision::Refuse);
  r = isr_decide(NatBudget(2.0), NatBudget(3.519), {}, DecisionMode::Graduated);
  CHECK(r.decision == Decision::Hedge);
  r = isr_decide(NatBudget(1.0), NatBudget(3.0), {}, DecisionMode::Graduated);
  CHECK(r.decision == Decision::Refuse);

  CHECK(isr_decide(NatBudget(0.83), NatBudget(5.29)).decision == Decision::Refuse);
  CHECK(isr_decide(NatBudget(2.64), NatBudget(2.48)).decision == Decision::Answer);

  // exact tie answers
  r = isr_decide(NatBudget(1.5), NatBudget(1.5));
  CHECK(r.isr == 1.0);
  CHECK(r.decision == Decision::Answer);
  // zero B2T
  r = isr_decide(NatBudget(0.0), NatBudget(0.0));
  CHECK(std::isinf(r.isr));
  CHECK(r.decision == Decision::Answer);

  CHECK_THROWS_AS(isr_decide(NatBudget(-0.1), NatBudget(1.0)), InputError);
}

TEST_CASE("decision string round trips") {
  for (auto d : {Decision::Answer, Decision::Hedge, Decision::Refuse}) {
    CHECK(decision_from_string(to_string(d)) == d);
  }
  for (auto m : {DecisionMode::Binary, DecisionMode::Graduated}) {
    CHECK(decision_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS(decision_from_string("maybe"));
}

TEST_CASE("rare-event bounds") {
  auto b = rare_event_bounds(Prob(1e-4), Prob(0.05));
  CHECK(b.uniform.value() == doctest::Approx(0.5 * std::log(1e4) - std::log(2.0)));
  CHECK(std::abs(b.uniform.value() - 3.912) < 5e-4);
  CHECK(kl_bernoulli(Prob(0.95), Prob(1e-4)).value() >= b.uniform.value());

  b = rare_event_bounds(Prob(0.25), Prob(0.5));
  CHECK(b.uniform.value() == 0.0);
  CHECK(std::abs(kl_bernoulli(Prob(0.5), Prob(0.25)).value() - 0.144) < 5e-4);

  double prev = 0.0;
  for (double q : {1e-2, 1e-4, 1e-6}) {
    const auto rb = rare_event_bounds(Prob(q), Prob(0.05));
    const double ratio = kl_bernoulli(Prob(0.95), Prob(q)).value() / rb.asymptotic.value();
    CHECK(ratio > prev);
    prev = ratio;
  }
  CHECK(prev < 1.05);

  Gen g(13);
  for (int i = 0; i < 20000; ++i) {
    const double q = g.uniform(1e-9, 0.25);
    const double eps = g.uniform(1e-6, 0.5);
    const auto rb = rare_event_bounds(Prob(q), Prob(eps));
    REQUIRE(kl_bernoulli(Prob(1.0 - eps), Prob(q)).value() >= rb.uniform.value() - 1e-12);
  }
  for (double q = 0.005; q <= 0.25; q += 0.005) {
    for (double eps = 0.01; eps <= 0.5; eps += 0.01) {
      REQUIRE(kl_bernoulli(Prob(1.0 - eps), Prob(q)).value() >= rare_event_bounds(Prob(q), Prob(eps)).uniform.value());
    }
  }
  CHECK_THROWS(rare_event_bounds(Prob(0.3), Prob(0.05)));
  CHECK_THROWS(rare_event_bounds(Prob(0.1), Prob(0.6)));
}

TEST_CASE("tilt_lambda closes the gap exactly") {
  CHECK(tilt_lambda(Prob(0.3), Prob(0.3)) == doctest::Approx(0.0));
  CHECK(tilt_lambda(Prob(0.5), Prob(0.5)) == 0.0);
  CHECK(tilt_lambda(Prob(0.10), Prob(0.95)) == doctest::Approx(std::log(171.0)));
  CHECK(std::abs(tilt_lambda(Prob(0.10), Prob(0.95)) - 5.1417) < 1e-4);
  CHECK(tilted_mass(Prob(0.10), tilt_lambda(Prob(0.10), Prob(0.95))).value() == doctest::Approx(0.95));
  CHECK_THROWS(tilt_lambda(Prob(0.0), Prob(0.5)));
  CHECK_THROWS(tilt_lambda(Prob(0.5), Prob(1.0)));
}

TEST_CASE("prior_for_budget inverts the lower branch") {
  const double f = prior_for_budget(NatBudget(5.29), Prob(0.95)).value();
  CHECK(std::abs(static_cast<double>(ref_kl(0.95, f)) - 5.29) < 1e-9);
  CHECK(f == doctest::Approx(0.0031).epsilon(0.01));
  CHECK(std::abs(kl_bernoulli(Prob(0.95), Prob(0.003)).value() - 5.29) < 0.05);
}

TEST_CASE("make_plan floors q_lo and plans negative budgets as zero") {
  PlanOptions o;
  auto plan = make_plan(Prob(0.0), Prob(0.0), 0.83, o);
  CHECK(plan.q_lo.value() == 0.003);
  CHECK(plan.b2t.value() == doctest::Approx(kl_bernoulli(Prob(0.95), Prob(0.003)).value()));
  CHECK(plan.decision == Decision::Refuse);

  plan = make_plan(Prob(0.2), Prob(0.1), -0.5, o);
  CHECK(plan.delta_bar.value() == -0.5);
  CHECK(plan.isr == 0.0);
  CHECK(plan.roh.value() == doctest::Approx(0.8));

  plan = make_plan(Prob(0.10), Prob(0.10), 2.0, o);
  CHECK(plan.decision == Decision::Answer);
  CHECK(plan.isr == doctest::Approx(2.0 / static_cast<double>(ref_kl(0.95, 0.10))));

  plan = make_plan(Prob(1.0), Prob(1.0), 2.95, o);
  CHECK(std::isinf(plan.isr));
  CHECK(plan.decision == Decision::Answer);

  o.prior_floor = 0.2;
  CHECK_THROWS(make_plan(Prob(0.1), Prob(0.1), 1.0, o));
}

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <sstream>

#include "infobudget/analysis.hpp"
#include "infobudget/backend.hpp"
#include "infobudget/cli.hpp"
#include "infobudget/dist_core.hpp"
#include "infobudget/error.hpp"
#include "infobudget/gate.hpp"
#include "infobudget/info_core.hpp"
#include "infobudget/rng.hpp"
#include "infobudget/synthmodel.hpp"

namespace py = pybind11;
using namespace infobudget;

namespace {

py::dict plan_dict(const GatePlan& p) {
  py::dict d;
  d["q_bar"] = p.q_bar.value();
  d["q_lo"] = p.q_lo.value();
  d["delta_bar"] = p.delta_bar.value();
  d["b2t"] = p.b2t.value();
  d["roh"] = p.roh.value();
  d["isr"] = p.isr;
  d["decision"] = std::string(to_string(p.decision));
  return d;
}

PlanOptions plan_options(double h_star, double prior_floor, double hedge_lo, double answer_at,
                         const std::string& mode) {
  PlanOptions o;
  o.h_star = Prob(h_star);
  o.prior_floor = prior_floor;
  o.thresholds = {hedge_lo, answer_at};
  o.mode = decision_mode_from_string(mode);
  return o;
}

}  // namespace

PYBIND11_MODULE(_infobudget, m) {
  m.doc() = "Information-budget planning, permutation gating and dispersion analysis";

  py::register_exception<Error>(m, "InfobudgetError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InputError& e) {
      py::set_error(PyExc_ValueError, e.what());
    } catch (const DomainError& e) {
      py::set_error(PyExc_ValueError, e.what());
    }
  });

  m.def("kl_bernoulli", [](double p, double q) { return kl_bernoulli(Prob(p), Prob(q)).value(); },
        py::arg("p"), py::arg("q"));
  m.def("p_max", [](double delta, double q) { return p_max(NatBudget(delta), Prob(q)).value(); },
        py::arg("delta"), py::arg("q"));
  m.def("bits_to_trust", [](double q_lo, double h_star) { return bits_to_trust(Prob(q_lo), Prob(h_star)).value(); },
        py::arg("q_lo"), py::arg("h_star") = 0.05);
  m.def("prior_for_budget", [](double delta, double p) { return prior_for_budget(NatBudget(delta), Prob(p)).value(); },
        py::arg("delta"), py::arg("p") = 0.95);
  m.def(
      "isr",
      [](double delta, double b2t, double hedge_lo, double answer_at, const std::string& mode) {
        const auto r = isr_decide(NatBudget(delta), NatBudget(b2t), {hedge_lo, answer_at}, decision_mode_from_string(mode));
        return py::make_tuple(r.isr, std::string(to_string(r.decision)));
      },
      py::arg("delta"), py::arg("b2t"), py::arg("hedge_lo") = 0.5, py::arg("answer_at") = 1.0,
      py::arg("mode") = "binary");
  m.def(
      "plan",
      [](double q_lo, double delta, std::optional<double> q_bar, double h_star, double prior_floor, double hedge_lo,
         double answer_at, const std::string& mode) {
        return plan_dict(make_plan(Prob(q_bar.value_or(q_lo)), Prob(q_lo), delta,
                                   plan_options(h_star, prior_floor, hedge_lo, answer_at, mode)));
      },
      py::arg("q_lo"), py::arg("delta"), py::arg("q_bar") = py::none(), py::arg("h_star") = 0.05,
      py::arg("prior_floor") = 0.003, py::arg("hedge_lo") = 0.5, py::arg("answer_at") = 1.0,
      py::arg("mode") = "binary");

  m.def("jensen_gap", [](const std::vector<double>& s, std::size_t tokens) { return jensen_gap(s, tokens).value(); },
        py::arg("scores"), py::arg("token_count") = 1);
  m.def(
      "dispersion_stats",
      [](const std::vector<double>& q) {
        const auto s = dispersion_stats(q);
        py::dict d;
        d["q_bar"] = s.q_bar;
        d["mean_abs_residual"] = s.mean_abs_residual;
        d["e_pair"] = s.e_pair;
        return d;
      },
      py::arg("q"));
  m.def(
      "clipped_budget",
      [](const std::vector<double>& u, double b, const std::string& mode) {
        return clipped_budget(u, b, clip_mode_from_string(mode)).value();
      },
      py::arg("log_ratios"), py::arg("clip_bound") = kDefaultClip, py::arg("mode") = "symmetric");

  m.def("qmv_bound", &qmv_bound, py::arg("C"), py::arg("n"), py::arg("alpha"));
  m.def("qmv_bound_finite", &qmv_bound_finite, py::arg("C"), py::arg("n"), py::arg("alpha"));
  m.def(
      "expected_harmonic_distance",
      [](std::size_t n) {
        const auto h = expected_harmonic_distance(n);
        return py::make_tuple(h.exact, h.approx, h.gap);
      },
      py::arg("n"));
  m.def(
      "synthetic_dispersion",
      [](std::size_t n, double alpha, double C, int sign, std::uint64_t seed, std::size_t permutations,
         std::size_t threads) {
        ModelGenSpec spec;
        spec.n = n;
        spec.potential = {alpha, C, sign};
        spec.seed = seed;
        const auto mc = mc_dispersion(generate_model(spec), permutations, derive_seed(seed, 1), threads);
        return py::make_tuple(mc.mean_abs_residual, mc.stderr_abs_residual);
      },
      py::arg("n"), py::arg("alpha") = 1.0, py::arg("C") = 1.0, py::arg("sign") = -1, py::arg("seed") = 0,
      py::arg("permutations") = 2000, py::arg("threads") = 1);

  m.def(
      "gate_synthetic",
      [](const std::string& item_json, const std::string& config_json, std::uint64_t model_seed) {
        const auto item = gate_item_from_json(nlohmann::json::parse(item_json));
        const auto config = gate_config_from_json(nlohmann::json::parse(config_json));
        SyntheticBackendConfig sc;
        sc.seed = model_seed;
        SyntheticScorer backend(sc);
        return to_json(run_gate(backend, item, config)).dump();
      },
      py::arg("item_json"), py::arg("config_json") = "{}", py::arg("model_seed") = 0);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::execute(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}

#include "infobudget/gate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "infobudget/analysis.hpp"
#include "infobudget/error.hpp"
#include "infobudget/parallel.hpp"
#include "infobudget/rng.hpp"

namespace infobudget {

using nlohmann::json;

std::string_view to_string(ReferenceMode m) noexcept {
  switch (m) {
    case ReferenceMode::IdentityOrder: return "identity";
    case ReferenceMode::UniformMixture: return "mixture";
    case ReferenceMode::Supplied: return "supplied";
  }
  return "identity";
}

ReferenceMode reference_mode_from_string(std::string_view s) {
  if (s == "identity") return ReferenceMode::IdentityOrder;
  if (s == "mixture") return ReferenceMode::UniformMixture;
  if (s == "supplied") return ReferenceMode::Supplied;
  throw InputError("unknown reference mode '" + std::string(s) + "' (identity|mixture|supplied)");
}

void GateConfig::validate() const {
  if (!(h_star.value() > 0.0 && h_star.value() <= 0.5)) throw InputError("h_star must lie in (0, 0.5]");
  if (m < 1) throw InputError("m must be >= 1");
  if (!(clip_bound > 0.0) || !std::isfinite(clip_bound)) throw InputError("clip bound must be finite and > 0");
  if (!(prior_floor > 0.0 && prior_floor < 0.1)) throw InputError("prior_floor must lie in (0, 0.1)");
  if (k_bands < 1) throw InputError("k_bands must be >= 1");
  if (!(smoothing > 0.0 && smoothing < 1e-2)) throw InputError("smoothing must lie in (0, 0.01)");
  if (!(thresholds.hedge_lo >= 0.0 && thresholds.hedge_lo <= thresholds.answer_at) ||
      !std::isfinite(thresholds.answer_at)) {
    throw InputError("thresholds must satisfy 0 <= hedge_lo <= answer_at");
  }
}

PlanOptions GateConfig::plan_options() const {
  PlanOptions o;
  o.h_star = h_star;
  o.prior_floor = prior_floor;
  o.thresholds = thresholds;
  o.mode = decision_mode;
  return o;
}

json to_json(const GateConfig& c) {
  return json{{"h_star", c.h_star.value()},
              {"m", c.m},
              {"clip_bound", c.clip_bound},
              {"clip_mode", to_string(c.clip_mode)},
              {"prior_floor", c.prior_floor},
              {"hedge_lo", c.thresholds.hedge_lo},
              {"answer_at", c.thresholds.answer_at},
              {"decision_mode", to_string(c.decision_mode)},
              {"reference", to_string(c.reference)},
              {"k_bands", c.k_bands},
              {"seed", c.seed},
              {"smoothing", c.smoothing},
              {"threads", c.threads}};
}

GateConfig gate_config_from_json(const json& j, GateConfig c) {
  if (!j.is_object()) throw DataError("gate config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "h_star") c.h_star = Prob(v.get<double>());
      else if (key == "m") c.m = v.get<std::size_t>();
      else if (key == "clip_bound") c.clip_bound = v.get<double>();
      else if (key == "clip_mode") c.clip_mode = clip_mode_from_string(v.get<std::string>());
      else if (key == "prior_floor") c.prior_floor = v.get<double>();
      else if (key == "hedge_lo") c.thresholds.hedge_lo = v.get<double>();
      else if (key == "answer_at") c.thresholds.answer_at = v.get<double>();
      else if (key == "decision_mode") c.decision_mode = decision_mode_from_string(v.get<std::string>());
      else if (key == "reference") c.reference = reference_mode_from_string(v.get<std::string>());
      else if (key == "k_bands") c.k_bands = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "smoothing") c.smoothing = v.get<double>();
      else if (key == "threads") c.threads = v.get<std::size_t>();
      else throw DataError("unknown gate config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("bad gate config value: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t config_hash(const GateConfig& config) {
  json j = to_json(config);
  j.erase("threads");
  return fnv1a64(j.dump());
}

GatePlan replan(const GateOutcome& outcome, const GateConfig& config) {
  return make_plan(outcome.plan.q_bar, Prob(outcome.q_lo_raw), outcome.delta_raw, config.plan_options());
}

namespace {

using ResponseCache = std::map<std::vector<std::size_t>, ScoreResponse>;

void validate_item(const GateItem& item) {
  if (item.item_id.empty()) throw DataError("item without item_id");
  if (item.chunks.empty()) throw DataError("item '" + item.item_id + "' has no chunks");
  if (item.labels.size() < 2) throw DataError("item '" + item.item_id + "' needs at least two labels");
  std::set<std::string> labels(item.labels.begin(), item.labels.end());
  if (labels.size() != item.labels.size()) throw DataError("item '" + item.item_id + "' repeats a label");
  if (item.predicate.empty()) throw DataError("item '" + item.item_id + "' has an empty predicate");
  for (const auto& p : item.predicate) {
    if (!labels.contains(p)) throw DataError("item '" + item.item_id + "' predicate label '" + p + "' is not a label");
  }
}

std::size_t argmax(const FiniteDist& d) {
  const auto& m = d.masses();
  return static_cast<std::size_t>(std::max_element(m.begin(), m.end()) - m.begin());
}

GateOutcome gate_with_cache(Scorer& backend, const GateItem& item, const GateConfig& config,
                            std::size_t m, ResponseCache& cache) {
  validate_item(item);
  const std::size_t n = item.chunks.size();
  const BandedSpec spec{n, config.k_bands, derive_seed(config.seed, fnv1a64(item.item_id))};
  const UniqueDraw draw = draw_unique(m, spec, /*lead_with_identity=*/true);

  GateOutcome out;
  out.item_id = item.item_id;
  out.requested_m = m;
  out.shortfall = draw.shortfall;

  std::vector<FiniteDist> dists;
  dists.reserve(draw.permutations.size());
  for (std::size_t k = 0; k < draw.permutations.size(); ++k) {
    const Permutation& perm = draw.permutations[k];
    auto it = cache.find(perm.slots());
    if (it == cache.end()) {
      ScoreRequest req;
      req.item_id = item.item_id;
      req.question = item.question;
      req.chunks = perm.apply<std::string>(item.chunks);
      req.labels = item.labels;
      req.permutation = perm;
      req.perm_index = static_cast<std::int64_t>(k);
      it = cache.emplace(perm.slots(), backend.score(req)).first;
    }
    dists.push_back(predictive(it->second, item.labels, config.smoothing));
  }

  const FiniteDist& identity = dists.front();
  const std::string y = identity.labels()[argmax(identity)];
  out.canonical_label = y;

  const FiniteDist mix = mixture(dists);
  out.predicted_label = mix.labels()[argmax(mix)];

  double p_y = 0.0;
  switch (config.reference) {
    case ReferenceMode::IdentityOrder: p_y = identity.mass_of(y); break;
    case ReferenceMode::UniformMixture: p_y = mix.mass_of(y); break;
    case ReferenceMode::Supplied: {
      if (!item.reference) throw DataError("item '" + item.item_id + "' has no supplied reference distribution");
      const auto ref = item.reference->aligned_to(item.labels);
      p_y = smooth_normalize(item.labels, ref.masses(), config.smoothing).mass_of(y);
      break;
    }
  }
  const double ln_p_y = std::log(p_y);

  std::vector<std::string> rest;
  for (const auto& l : item.labels) {
    if (std::find(item.predicate.begin(), item.predicate.end(), l) == item.predicate.end()) rest.push_back(l);
  }

  std::vector<double> u;
  std::vector<double> s_y;
  double q_sum = 0.0;
  double q_lo = 1.0;
  for (std::size_t k = 0; k < dists.size(); ++k) {
    PermutationScore ps;
    ps.perm_index = static_cast<std::int64_t>(k);
    ps.permutation = draw.permutations[k];
    ps.q = label_renormalize(dists[k].mass_of(item.predicate), dists[k].mass_of(rest)).value();
    ps.s_y = dists[k].mass_of(y);
    ps.u = ln_p_y - std::log(ps.s_y);
    q_sum += ps.q;
    q_lo = std::min(q_lo, ps.q);
    u.push_back(ps.u);
    s_y.push_back(ps.s_y);
    out.scores.push_back(std::move(ps));
  }
  const double K = static_cast<double>(dists.size());
  out.q_lo_raw = q_lo;
  out.delta_raw = clipped_budget(u, config.clip_bound, config.clip_mode).value();
  out.jensen_gap = jensen_gap(s_y).value();
  out.plan = make_plan(Prob(std::min(1.0, q_sum / K)), Prob(q_lo), out.delta_raw, config.plan_options());
  return out;
}

}  // namespace

GateOutcome run_gate(Scorer& backend, const GateItem& item, const GateConfig& config) {
  config.validate();
  ResponseCache cache;
  return gate_with_cache(backend, item, config, config.m, cache);
}

GateOutcome escalate_gate(Scorer& backend, const GateItem& item, const GateConfig& config,
                          std::size_t m_low, std::size_t m_high) {
  config.validate();
  if (!(m_low >= 1 && m_low < m_high)) throw InputError("escalation needs 1 <= m_low < m_high");
  ResponseCache cache;
  GateOutcome low = gate_with_cache(backend, item, config, m_low, cache);
  if (low.plan.isr >= config.thresholds.answer_at) return low;
  GateOutcome high = gate_with_cache(backend, item, config, m_high, cache);
  high.escalated = true;
  return high;
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const GateOutcome& o) {
  json perms = json::array();
  for (const auto& s : o.scores) {
    perms.push_back(json{{"k", s.perm_index},
                         {"permutation", s.permutation.to_one_based()},
                         {"q", s.q},
                         {"s_y", s.s_y},
                         {"u", s.u}});
  }
  return json{{"item_id", o.item_id},
              {"decision", to_string(o.plan.decision)},
              {"isr", finite_or_null(o.plan.isr)},
              {"b2t", o.plan.b2t.value()},
              {"delta_bar", o.delta_raw},
              {"roh", o.plan.roh.value()},
              {"q_bar", o.plan.q_bar.value()},
              {"q_lo", o.plan.q_lo.value()},
              {"q_lo_raw", o.q_lo_raw},
              {"canonical_label", o.canonical_label},
              {"predicted_label", o.predicted_label},
              {"jensen_gap", o.jensen_gap},
              {"requested_m", o.requested_m},
              {"m_used", o.scores.size()},
              {"shortfall", o.shortfall},
              {"escalated", o.escalated},
              {"permutations", perms}};
}

namespace {

RateCi rate(std::size_t successes, std::size_t trials) {
  RateCi r;
  r.successes = successes;
  r.trials = trials;
  r.rate = trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0;
  r.ci = stats::wilson95(successes, trials);
  return r;
}

json to_json(const RateCi& r) {
  return json{{"successes", r.successes}, {"trials", r.trials}, {"rate", r.rate},
              {"ci_low", r.ci.low}, {"ci_high", r.ci.high}};
}

}  // namespace

AuditReport batch_audit(Scorer& backend, std::span<const GateItem> items, const GateConfig& config,
                        const AuditOptions& options) {
  config.validate();
  AuditReport report;
  report.items.resize(items.size());
  parallel_for(items.size(), config.threads, [&](std::size_t i) {
    const GateItem& item = items[i];
    AuditItemResult& r = report.items[i];
    r.item_id = item.item_id;
    if (!item.gold) return;
    try {
      r.outcome = options.escalate ? escalate_gate(backend, item, config, options.m_low, config.m)
                                   : run_gate(backend, item, config);
      if (r.outcome->plan.decision == Decision::Answer) r.correct = r.outcome->predicted_label == *item.gold;
    } catch (const BackendError& e) {
      r.error = e.what();
    } catch (const DataError& e) {
      r.error = e.what();
    }
  });

  AuditSummary& s = report.summary;
  s.items = items.size();
  std::size_t abstained = 0, answered = 0, correct = 0, wrong = 0, aligned = 0, align_trials = 0;
  double delta_sum = 0.0, isr_sum = 0.0;
  std::size_t isr_count = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& r = report.items[i];
    if (!items[i].gold) {
      ++s.excluded_missing_gold;
      continue;
    }
    if (!r.outcome) {
      ++s.failed;
      continue;
    }
    const GateOutcome& o = *r.outcome;
    ++s.evaluated;
    s.shortfalls += o.shortfall ? 1 : 0;
    s.escalations += o.escalated ? 1 : 0;
    delta_sum += o.delta_raw;
    if (std::isfinite(o.plan.isr)) {
      isr_sum += o.plan.isr;
      ++isr_count;
    }
    if (o.plan.decision == Decision::Answer) {
      ++answered;
      (*r.correct ? correct : wrong) += 1;
    } else {
      ++abstained;
    }
    const bool isr_side = o.plan.isr >= config.thresholds.answer_at;
    if (options.trace) {
      const auto t = options.trace->find(o.item_id);
      if (t == options.trace->end()) continue;
      ++align_trials;
      aligned += ((t->second == Decision::Answer) == isr_side) ? 1 : 0;
    } else {
      ++align_trials;
      aligned += ((o.plan.decision == Decision::Answer) == isr_side) ? 1 : 0;
    }
  }
  s.abstention = rate(abstained, s.evaluated);
  s.hallucination = rate(wrong, answered);
  s.accuracy = rate(correct, answered);
  s.alignment = rate(aligned, align_trials);
  s.mean_delta = s.evaluated ? delta_sum / static_cast<double>(s.evaluated) : 0.0;
  s.mean_isr = isr_count ? isr_sum / static_cast<double>(isr_count) : 0.0;
  return report;
}

json to_json(const AuditSummary& s) {
  return json{{"items", s.items},
              {"evaluated", s.evaluated},
              {"excluded_missing_gold", s.excluded_missing_gold},
              {"failed", s.failed},
              {"shortfalls", s.shortfalls},
              {"escalations", s.escalations},
              {"abstention", to_json(s.abstention)},
              {"hallucination", to_json(s.hallucination)},
              {"accuracy", to_json(s.accuracy)},
              {"alignment", to_json(s.alignment)},
              {"mean_delta", s.mean_delta},
              {"mean_isr", s.mean_isr}};
}

std::vector<SweepRow> audit_sweep(Scorer& backend, std::span<const GateItem> items, const GateConfig& config,
                                  const AuditOptions& options) {
  std::vector<SweepRow> rows;
  for (std::size_t m : kSweepM) {
    for (double b : kSweepB) {
      GateConfig c = config;
      c.m = m;
      c.clip_bound = b;
      AuditOptions o = options;
      o.m_low = std::min(o.m_low, m > 1 ? m - 1 : std::size_t{1});
      o.escalate = options.escalate && m > 1;
      rows.push_back({m, b, batch_audit(backend, items, c, o).summary});
    }
  }
  return rows;
}

GateItem gate_item_from_json(const json& j) {
  try {
    GateItem item;
    item.item_id = j.at("item_id").get<std::string>();
    item.question = j.value("question", std::string());
    item.chunks = j.at("chunks").get<std::vector<std::string>>();
    if (j.contains("labels")) item.labels = j["labels"].get<std::vector<std::string>>();
    if (j.contains("predicate")) item.predicate = j["predicate"].get<std::vector<std::string>>();
    if (j.contains("gold") && !j["gold"].is_null()) item.gold = j["gold"].get<std::string>();
    if (j.contains("reference") && !j["reference"].is_null()) {
      std::vector<std::string> labels;
      std::vector<double> mass;
      for (const auto& [k, v] : j["reference"].items()) {
        labels.push_back(k);
        mass.push_back(v.get<double>());
      }
      item.reference = smooth_normalize(labels, mass, 0.0).aligned_to(item.labels);
    }
    validate_item(item);
    return item;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed item record: ") + e.what());
  }
}

json to_json(const GateItem& item) {
  json j{{"item_id", item.item_id},
         {"question", item.question},
         {"chunks", item.chunks},
         {"labels", item.labels},
         {"predicate", item.predicate}};
  if (item.gold) j["gold"] = *item.gold;
  if (item.reference) {
    json ref = json::object();
    for (std::size_t i = 0; i < item.reference->size(); ++i) {
      ref[item.reference->labels()[i]] = item.reference->masses()[i];
    }
    j["reference"] = ref;
  }
  return j;
}

std::vector<GateItem> read_items(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open item file '" + path + "'");
  std::vector<GateItem> items;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      items.push_back(gate_item_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(items.back().item_id).second) {
      throw DataError(path + ":" + std::to_string(line_no) + ": duplicate item_id '" + items.back().item_id + "'");
    }
  }
  return items;
}

}  // namespace infobudget

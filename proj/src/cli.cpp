#include "infobudget/cli.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "infobudget/analysis.hpp"
#include "infobudget/backend.hpp"
#include "infobudget/doseresponse.hpp"
#include "infobudget/error.hpp"
#include "infobudget/gate.hpp"
#include "infobudget/parallel.hpp"
#include "infobudget/rng.hpp"
#include "infobudget/synthmodel.hpp"
#include "json.hpp"

namespace infobudget::cli {

namespace {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json load_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open '" + path + "'");
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

struct Common {
  std::string out_dir;
  bool json_stdout = false;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;

  json file;  // parsed --config, or {}

  void add_to(CLI::App* app, bool with_seed = true) {
    app->add_option("--out", out_dir, "Directory for .jsonl, summary and plot files");
    app->add_flag("--json", json_stdout, "Print the .jsonl records instead of the summary");
    app->add_option("--config", config_path, "JSON config file; flags override it");
    if (with_seed) app->add_option("--seed", seed, "Global seed");
    app->add_option("--threads", threads, "Worker threads");
  }

  void load() {
    file = config_path.empty() ? json::object() : load_json_file(config_path);
    if (!file.is_object()) throw DataError("config file must hold a JSON object");
  }

  std::uint64_t resolved_seed() const {
    if (seed) return *seed;
    return file.value("seed", std::uint64_t{0});
  }

  std::size_t resolved_threads() const {
    if (threads) return std::max<std::size_t>(1, *threads);
    return std::max<std::size_t>(1, file.value("threads", std::size_t{1}));
  }

  json section(const char* name) const {
    if (!file.contains(name)) return json::object();
    const json& s = file[name];
    if (!s.is_object()) throw DataError(std::string("config section '") + name + "' must be an object");
    return s;
  }
};

class Report {
 public:
  Report(std::string command, json config, json seeds)
      : command_(std::move(command)), config_(std::move(config)), seeds_(std::move(seeds)) {}

  std::ostringstream summary;

  void add(json record) { records_.push_back(std::move(record)); }

  void plot_columns(std::vector<std::string> columns) { columns_ = std::move(columns); }

  void plot_row(const std::vector<json>& values) {
    std::string line;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) line += '\t';
      line += values[i].is_string() ? values[i].get<std::string>() : values[i].dump();
    }
    rows_.push_back(std::move(line));
  }

  json header() const {
    return json{{"kind", "header"},
                {"schema", "infobudget." + command_ + "/1"},
                {"command", command_},
                {"config_hash", hex64(fnv1a64(config_.dump()))},
                {"config", config_},
                {"seeds", seeds_}};
  }

  std::string jsonl() const {
    std::string s = header().dump() + "\n";
    for (const auto& r : records_) s += r.dump() + "\n";
    return s;
  }

  void emit(const Common& common, std::ostream& out) const {
    if (!common.out_dir.empty()) {
      std::filesystem::create_directories(common.out_dir);
      const std::filesystem::path dir(common.out_dir);
      write(dir / (command_ + ".jsonl"), jsonl());
      write(dir / (command_ + "_summary.txt"), summary.str());
      if (!columns_.empty()) {
        std::string tsv;
        for (std::size_t i = 0; i < columns_.size(); ++i) tsv += (i ? "\t" : "") + columns_[i];
        tsv += "\n";
        for (const auto& r : rows_) tsv += r + "\n";
        write(dir / (command_ + "_plot.tsv"), tsv);
      }
    }
    if (common.json_stdout) {
      out << jsonl();
    } else {
      out << summary.str();
    }
  }

 private:
  static void write(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
    os << text;
    if (!os) throw DataError("write to '" + path.string() + "' failed");
  }

  std::string command_;
  json config_;
  json seeds_;
  std::vector<json> records_;
  std::vector<std::string> columns_;
  std::vector<std::string> rows_;
};

// ------------------------------------------------------------------ plan

struct PlanArgs {
  double q_lo = 0.0;
  std::optional<double> q_bar;
  double delta = 0.0;
  double h_star = 0.05;
  double prior_floor = 0.003;
  double hedge_lo = 0.5;
  double answer_at = 1.0;
  std::string mode = "binary";
};

int run_plan(const PlanArgs& a, Common& common, std::ostream& out) {
  PlanOptions o;
  o.h_star = Prob(a.h_star);
  o.prior_floor = a.prior_floor;
  o.thresholds = {a.hedge_lo, a.answer_at};
  o.mode = decision_mode_from_string(a.mode);
  const double q_bar = a.q_bar.value_or(a.q_lo);
  const GatePlan plan = make_plan(Prob(q_bar), Prob(a.q_lo), a.delta, o);

  const json config{{"q_lo", a.q_lo}, {"q_bar", q_bar}, {"delta", a.delta}, {"h_star", a.h_star},
                    {"prior_floor", a.prior_floor}, {"hedge_lo", a.hedge_lo}, {"answer_at", a.answer_at},
                    {"mode", a.mode}};
  Report rep("plan", config, json::object());
  rep.add(json{{"kind", "plan"},
               {"q_bar", plan.q_bar.value()},
               {"q_lo", plan.q_lo.value()},
               {"delta_bar", plan.delta_bar.value()},
               {"b2t", plan.b2t.value()},
               {"roh", plan.roh.value()},
               {"p_max", 1.0 - plan.roh.value()},
               {"isr", num(plan.isr)},
               {"decision", to_string(plan.decision)}});
  rep.plot_columns({"q_lo", "delta_bar", "b2t", "isr", "decision"});
  rep.plot_row({plan.q_lo.value(), plan.delta_bar.value(), plan.b2t.value(), num(plan.isr),
                std::string(to_string(plan.decision))});
  auto& s = rep.summary;
  s << std::fixed << std::setprecision(3);
  s << "q_bar " << plan.q_bar.value() << "  q_lo " << plan.q_lo.value() << "  delta " << plan.delta_bar.value()
    << " nats  h* " << a.h_star << "\n";
  s << "B2T " << plan.b2t.value() << "  RoH " << plan.roh.value() << "  p_max " << 1.0 - plan.roh.value() << "\n";
  s << "ISR ";
  if (std::isfinite(plan.isr)) s << plan.isr; else s << "inf";
  s << "  decision " << to_string(plan.decision) << "\n";
  rep.emit(common, out);
  return 0;
}

// ------------------------------------------------------------------ backends

struct BackendArgs {
  std::optional<std::string> kind;
  std::optional<std::string> scores;
  std::optional<std::string> record;
  std::optional<std::string> url;
  std::optional<std::string> model_file;
  std::optional<double> alpha;
  std::optional<double> c;
  std::optional<int> sign;
  std::optional<std::uint64_t> model_seed;

  void add_to(CLI::App* app) {
    app->add_option("--backend", kind, "synthetic | replay | remote (default synthetic)")
        ->check(CLI::IsMember({"synthetic", "replay", "remote"}));
    app->add_option("--scores", scores, "Score file to replay");
    app->add_option("--record", record, "Write every score to this file");
    app->add_option("--url", url, "Remote scoring endpoint");
    app->add_option("--model-file", model_file, "Synthetic model JSON (same shape as the config 'synthetic' section)");
    app->add_option("--alpha", alpha, "Synthetic potential decay exponent");
    app->add_option("--C", c, "Synthetic potential scale");
    app->add_option("--sign", sign, "Synthetic potential sign (+1 or -1)");
    app->add_option("--model-seed", model_seed, "Seed for generated synthetic models");
  }
};

PotentialSpec potential_from_json(const json& j, PotentialSpec p = {}) {
  p.alpha = j.value("alpha", p.alpha);
  p.C = j.value("C", p.C);
  p.sign = j.value("sign", p.sign);
  return p;
}

SyntheticBackendConfig synthetic_from_json(const json& j, const BackendArgs& a) {
  SyntheticBackendConfig cfg;
  try {
    cfg.generator.potential = potential_from_json(j);
    cfg.generator.support_min = j.value("support_min", cfg.generator.support_min);
    cfg.generator.support_max = j.value("support_max", cfg.generator.support_max);
    cfg.generator.a_spread = j.value("a_spread", cfg.generator.a_spread);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.positive_label = j.value("positive_label", cfg.positive_label);
    if (a.alpha) cfg.generator.potential.alpha = *a.alpha;
    if (a.c) cfg.generator.potential.C = *a.c;
    if (a.sign) cfg.generator.potential.sign = *a.sign;
    if (a.model_seed) cfg.seed = *a.model_seed;
    if (j.contains("models")) {
      for (const auto& [id, mj] : j["models"].items()) {
        FirstOrderModel m;
        m.a = mj.value("a", 0.0);
        m.weights = mj.at("weights").get<std::vector<double>>();
        m.potential = potential_from_json(mj, cfg.generator.potential);
        m.validate();
        cfg.models.emplace(id, std::move(m));
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("bad synthetic model config: ") + e.what());
  }
  cfg.generator.potential.validate();
  return cfg;
}

json synthetic_to_json(const SyntheticBackendConfig& c) {
  json models = json::object();
  for (const auto& [id, m] : c.models) {
    models[id] = json{{"a", m.a}, {"weights", m.weights}, {"alpha", m.potential.alpha},
                      {"C", m.potential.C}, {"sign", m.potential.sign}};
  }
  return json{{"alpha", c.generator.potential.alpha}, {"C", c.generator.potential.C},
              {"sign", c.generator.potential.sign}, {"support_min", c.generator.support_min},
              {"support_max", c.generator.support_max}, {"a_spread", c.generator.a_spread},
              {"seed", c.seed}, {"positive_label", c.positive_label}, {"models", models}};
}

struct Backend {
  std::unique_ptr<Scorer> base;
  std::unique_ptr<RecordingScorer> recorder;
  std::string record_path;
  std::string kind;
  json description;

  Scorer& active() { return recorder ? static_cast<Scorer&>(*recorder) : *base; }
};

Backend make_backend(const BackendArgs& a, const Common& common) {
  const json section = common.section("backend");
  Backend b;
  b.kind = a.kind.value_or(section.value("kind", std::string("synthetic")));
  if (b.kind == "synthetic") {
    json sj = common.section("synthetic");
    if (a.model_file) sj = load_json_file(*a.model_file);
    auto cfg = synthetic_from_json(sj, a);
    b.description = synthetic_to_json(cfg);
    b.base = std::make_unique<SyntheticScorer>(std::move(cfg));
  } else if (b.kind == "replay") {
    const std::string path = a.scores.value_or(section.value("scores", std::string()));
    if (path.empty()) throw InputError("replay backend needs --scores FILE");
    b.base = std::make_unique<ReplayScorer>(read_score_file(path));
    b.description = json{{"scores", path}};
  } else if (b.kind == "remote") {
    const json r = common.section("remote");
    RemoteConfig rc;
    rc.url = a.url.value_or(r.value("url", std::string()));
    if (rc.url.empty()) throw InputError("remote backend needs --url");
    rc.timeout = std::chrono::milliseconds(r.value("timeout_ms", rc.timeout.count()));
    rc.attempts = r.value("attempts", rc.attempts);
    rc.backoff = std::chrono::milliseconds(r.value("backoff_ms", rc.backoff.count()));
    rc.backoff_cap = std::chrono::milliseconds(r.value("backoff_cap_ms", rc.backoff_cap.count()));
    rc.max_in_flight = r.value("max_in_flight", rc.max_in_flight);
    b.description = json{{"url", rc.url}, {"attempts", rc.attempts}, {"max_in_flight", rc.max_in_flight}};
    b.base = std::make_unique<RemoteScorer>(std::move(rc));
  } else {
    throw InputError("unknown backend '" + b.kind + "'");
  }
  b.record_path = a.record.value_or(section.value("record", std::string()));
  if (!b.record_path.empty()) b.recorder = std::make_unique<RecordingScorer>(*b.base);
  return b;
}

// ------------------------------------------------------------------ gate / audit

struct GateArgs {
  std::string items;
  std::optional<double> h_star;
  std::optional<std::size_t> m;
  std::optional<double> clip;
  std::optional<std::string> clip_mode;
  std::optional<double> prior_floor;
  std::optional<std::string> mode;
  std::optional<std::string> reference;
  std::optional<std::size_t> k_bands;
  std::optional<double> hedge_lo;
  std::optional<double> answer_at;
  std::optional<double> smoothing;
  bool escalate = false;
  std::size_t m_low = 3;
  bool sweep = false;
  std::string trace;
  BackendArgs backend;

  void add_to(CLI::App* app, bool audit) {
    app->add_option("--items", items, "Line-delimited item records")->required();
    app->add_option("--h-star", h_star, "Target hallucination rate h* (default 0.05)");
    app->add_option("--m", m, "Permutations per item (default 6)");
    app->add_option("--clip", clip, "Clip bound B in nats (default 6)");
    app->add_option("--clip-mode", clip_mode, "symmetric | minclip");
    app->add_option("--prior-floor", prior_floor, "Floor for q_lo (default 0.003)");
    app->add_option("--mode", mode, "binary | graduated");
    app->add_option("--reference", reference, "identity | mixture | supplied");
    app->add_option("--k-bands", k_bands, "Permutation bands (default 6)");
    app->add_option("--hedge-lo", hedge_lo, "Graduated hedge threshold (default 0.5)");
    app->add_option("--answer-at", answer_at, "Answer threshold (default 1.0)");
    app->add_option("--smoothing", smoothing, "Probability smoothing epsilon (default 1e-9)");
    app->add_flag("--escalate", escalate, "Start at --m-low permutations, escalate to --m when ISR < threshold");
    app->add_option("--m-low", m_low, "First-stage permutation count with --escalate");
    if (audit) {
      app->add_flag("--sweep", sweep, "Run the m x B sensitivity grid");
      app->add_option("--trace", trace, "External decisions {item_id, decision} to align against");
    }
    backend.add_to(app);
  }

  GateConfig resolve(const Common& common) const {
    GateConfig c = gate_config_from_json(common.section("gate"));
    c.seed = common.resolved_seed();
    c.threads = common.resolved_threads();
    if (h_star) c.h_star = Prob(*h_star);
    if (m) c.m = *m;
    if (clip) c.clip_bound = *clip;
    if (clip_mode) c.clip_mode = clip_mode_from_string(*clip_mode);
    if (prior_floor) c.prior_floor = *prior_floor;
    if (mode) c.decision_mode = decision_mode_from_string(*mode);
    if (reference) c.reference = reference_mode_from_string(*reference);
    if (k_bands) c.k_bands = *k_bands;
    if (hedge_lo) c.thresholds.hedge_lo = *hedge_lo;
    if (answer_at) c.thresholds.answer_at = *answer_at;
    if (smoothing) c.smoothing = *smoothing;
    c.validate();
    return c;
  }
};

json gate_run_config(const GateConfig& c, const GateArgs& a) {
  json j = to_json(c);
  j.erase("threads");
  j["escalate"] = a.escalate;
  if (a.escalate) j["m_low"] = a.m_low;
  return j;
}

void finish_recording(Backend& b, const GateConfig& c) {
  if (!b.recorder) return;
  const json header{{"config_hash", hex64(config_hash(c))}, {"seeds", json{{"gate", c.seed}}},
                    {"backend_config", b.description}};
  write_score_file(b.record_path, b.recorder->to_file(header));
}

std::map<std::string, Decision> read_trace(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open trace '" + path + "'");
  std::map<std::string, Decision> trace;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      trace[j.at("item_id").get<std::string>()] = decision_from_string(j.at("decision").get<std::string>());
    } catch (const json::exception& e) {
      throw DataError(path + ": " + e.what());
    }
  }
  return trace;
}

void summary_rate(std::ostream& s, const char* name, const RateCi& r) {
  s << "  " << std::left << std::setw(14) << name << std::right << std::setw(7) << 100.0 * r.rate << "%  ("
    << r.successes << "/" << r.trials << ", 95% CI " << 100.0 * r.ci.low << "-" << 100.0 * r.ci.high << ")\n";
}

int run_gate_cmd(const GateArgs& a, Common& common, std::ostream& out, bool audit) {
  const GateConfig config = a.resolve(common);
  const auto items = read_items(a.items);
  Backend backend = make_backend(a.backend, common);
  const json seeds{{"gate", config.seed}};
  const char* name = audit ? "audit" : "gate";
  Report rep(name, gate_run_config(config, a), seeds);
  rep.summary << std::fixed << std::setprecision(3);

  std::size_t failed = 0;
  std::size_t shortfalls = 0;
  if (!audit) {
    std::vector<std::optional<GateOutcome>> outcomes(items.size());
    std::vector<std::string> errors(items.size());
    parallel_for(items.size(), config.threads, [&](std::size_t i) {
      try {
        outcomes[i] = a.escalate ? escalate_gate(backend.active(), items[i], config, a.m_low, config.m)
                                 : run_gate(backend.active(), items[i], config);
      } catch (const BackendError& e) {
        errors[i] = e.what();
      } catch (const DataError& e) {
        errors[i] = e.what();
      }
    });
    rep.plot_columns({"item_id", "q_bar", "q_lo", "delta_bar", "b2t", "isr", "decision"});
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!outcomes[i]) {
        ++failed;
        rep.add(json{{"kind", "error"}, {"item_id", items[i].item_id}, {"error", errors[i]}});
        rep.summary << items[i].item_id << ": error: " << errors[i] << "\n";
        continue;
      }
      const GateOutcome& o = *outcomes[i];
      shortfalls += o.shortfall ? 1 : 0;
      json r = to_json(o);
      r["kind"] = "outcome";
      rep.add(r);
      rep.plot_row({o.item_id, o.plan.q_bar.value(), o.plan.q_lo.value(), o.delta_raw, o.plan.b2t.value(),
                    num(o.plan.isr), std::string(to_string(o.plan.decision))});
      rep.summary << o.item_id << ": " << to_string(o.plan.decision) << "  ISR ";
      if (std::isfinite(o.plan.isr)) rep.summary << o.plan.isr; else rep.summary << "inf";
      rep.summary << "  delta " << o.delta_raw << "  B2T " << o.plan.b2t.value() << "  m " << o.scores.size()
                  << (o.shortfall ? " (shortfall)" : "") << (o.escalated ? " (escalated)" : "") << "\n";
    }
  } else {
    std::map<std::string, Decision> trace;
    AuditOptions opts;
    opts.escalate = a.escalate;
    opts.m_low = a.m_low;
    if (!a.trace.empty()) {
      trace = read_trace(a.trace);
      opts.trace = &trace;
    }
    if (a.sweep) {
      const auto rows = audit_sweep(backend.active(), items, config, opts);
      rep.plot_columns({"m", "clip_bound", "abstention", "hallucination", "accuracy", "alignment", "mean_delta"});
      rep.summary << "   m     B  abstain   halluc  accuracy  align  mean_delta\n";
      for (const auto& row : rows) {
        failed += row.summary.failed;
        shortfalls += row.summary.shortfalls;
        json r = to_json(row.summary);
        r["kind"] = "sweep";
        r["m"] = row.m;
        r["clip_bound"] = row.clip_bound;
        rep.add(r);
        const auto& s = row.summary;
        rep.plot_row({row.m, row.clip_bound, s.abstention.rate, s.hallucination.rate, s.accuracy.rate,
                      s.alignment.rate, s.mean_delta});
        rep.summary << std::setw(4) << row.m << std::setw(6) << row.clip_bound << std::setw(9) << s.abstention.rate
                    << std::setw(9) << s.hallucination.rate << std::setw(10) << s.accuracy.rate << std::setw(7)
                    << s.alignment.rate << std::setw(12) << s.mean_delta << "\n";
      }
    } else {
      const AuditReport report = batch_audit(backend.active(), items, config, opts);
      rep.plot_columns({"item_id", "isr", "delta_bar", "b2t", "decision", "correct"});
      for (std::size_t i = 0; i < report.items.size(); ++i) {
        const auto& r = report.items[i];
        if (!items[i].gold) {
          rep.add(json{{"kind", "excluded"}, {"item_id", r.item_id}, {"reason", "missing gold label"}});
          continue;
        }
        if (!r.outcome) {
          rep.add(json{{"kind", "error"}, {"item_id", r.item_id}, {"error", r.error}});
          continue;
        }
        json j = to_json(*r.outcome);
        j["kind"] = "outcome";
        j["gold"] = *items[i].gold;
        j["correct"] = r.correct ? json(*r.correct) : json(nullptr);
        rep.add(j);
        rep.plot_row({r.item_id, num(r.outcome->plan.isr), r.outcome->delta_raw, r.outcome->plan.b2t.value(),
                      std::string(to_string(r.outcome->plan.decision)),
                      r.correct ? json(*r.correct ? 1 : 0) : json("")});
      }
      json sj = to_json(report.summary);
      sj["kind"] = "summary";
      rep.add(sj);
      const auto& s = report.summary;
      failed = s.failed;
      shortfalls = s.shortfalls;
      rep.summary << "items " << s.items << "  evaluated " << s.evaluated << "  excluded (no gold) "
                  << s.excluded_missing_gold << "  failed " << s.failed << "  shortfalls " << s.shortfalls
                  << "  escalations " << s.escalations << "\n";
      rep.summary << std::setprecision(1);
      summary_rate(rep.summary, "abstention", s.abstention);
      summary_rate(rep.summary, "hallucination", s.hallucination);
      summary_rate(rep.summary, "accuracy", s.accuracy);
      summary_rate(rep.summary, "alignment", s.alignment);
      rep.summary << std::setprecision(3) << "  mean delta " << s.mean_delta << " nats  mean ISR " << s.mean_isr
                  << "\n";
    }
  }
  finish_recording(backend, config);
  rep.emit(common, out);
  if (failed > 0) return static_cast<int>(ExitCode::Backend);
  if (shortfalls > 0) return static_cast<int>(ExitCode::Shortfall);
  return 0;
}

// ------------------------------------------------------------------ dispersion

std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string tok;
  auto to_n = [&](const std::string& s) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != s.size()) throw InputError("bad n value '" + s + "' in grid '" + text + "'");
    return static_cast<std::size_t>(v);
  };
  while (std::getline(ss, tok, ',')) {
    const auto dots = tok.find("..");
    if (dots == std::string::npos) {
      out.push_back(to_n(tok));
      continue;
    }
    std::string hi_s = tok.substr(dots + 2);
    std::size_t step = 1;
    if (const auto colon = hi_s.find(':'); colon != std::string::npos) {
      step = to_n(hi_s.substr(colon + 1));
      hi_s = hi_s.substr(0, colon);
    }
    const std::size_t lo = to_n(tok.substr(0, dots));
    const std::size_t hi = to_n(hi_s);
    if (step == 0 || lo > hi) throw InputError("bad range '" + tok + "'");
    for (std::size_t n = lo; n <= hi; n += step) out.push_back(n);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) throw InputError("empty n grid");
  if (out.front() < 2) throw InputError("dispersion needs n >= 2");
  return out;
}

struct DispersionArgs {
  double alpha = 1.0;
  double c = 1.0;
  int sign = -1;
  std::string grid = "8,16,32,60";
  std::size_t models = 50;
  std::size_t perms = 2000;
  std::size_t support_min = 1;
  std::size_t support_max = 3;
  double a_spread = 1.0;
  bool exact = false;
  std::size_t resamples = 1000;
};

int run_dispersion(const DispersionArgs& a, Common& common, std::ostream& out) {
  const auto grid = parse_grid(a.grid);
  const std::uint64_t seed = common.resolved_seed();
  const std::size_t threads = common.resolved_threads();
  PotentialSpec pot{a.alpha, a.c, a.sign};
  pot.validate();

  struct Cell {
    std::size_t n = 0;
    std::size_t j = 0;
    double q_bar = 0.0;
    double dispersion = 0.0;
    double se = 0.0;
  };
  std::vector<Cell> cells;
  for (std::size_t n : grid) {
    for (std::size_t j = 0; j < a.models; ++j) cells.push_back({n, j});
  }
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    Cell& cell = cells[i];
    ModelGenSpec spec;
    spec.n = cell.n;
    spec.potential = pot;
    spec.support_min = a.support_min;
    spec.support_max = a.support_max;
    spec.a_spread = a.a_spread;
    spec.seed = derive_seed(derive_seed(seed, cell.n), cell.j);
    const auto model = generate_model(spec);
    if (a.exact) {
      cell.dispersion = exact_dispersion(model);
    } else {
      const auto mc = mc_dispersion(model, a.perms, derive_seed(spec.seed, 1), 1);
      cell.q_bar = mc.q_bar;
      cell.dispersion = mc.mean_abs_residual;
      cell.se = mc.stderr_abs_residual;
    }
  });

  json config{{"alpha", a.alpha}, {"C", a.c}, {"sign", a.sign}, {"n", grid}, {"models", a.models},
              {"permutations", a.perms}, {"support_min", a.support_min}, {"support_max", a.support_max},
              {"a_spread", a.a_spread}, {"exact", a.exact}, {"resamples", a.resamples}};
  Report rep("dispersion", config, json{{"models", seed}, {"bootstrap", seed}});
  rep.plot_columns({"n", "model", "dispersion", "stderr", "bound", "bound_finite"});

  std::vector<DispersionRecord> records;
  std::size_t finite_violations = 0;
  std::map<std::size_t, std::vector<const Cell*>> by_n;
  for (const auto& cell : cells) {
    const double bound = qmv_bound(a.c, cell.n, a.alpha);
    const double bound_finite = qmv_bound_finite(a.c, cell.n, a.alpha);
    const double margin = 3.0 * cell.se;
    const bool within = cell.dispersion <= bound + margin;
    const bool within_finite = cell.dispersion <= bound_finite + margin + 1e-12;
    finite_violations += within_finite ? 0 : 1;
    const std::string id = "n" + std::to_string(cell.n) + "-m" + std::to_string(cell.j);
    rep.add(json{{"kind", "dispersion"}, {"item_id", id}, {"n", cell.n}, {"q_bar", cell.q_bar},
                 {"mean_abs_residual", cell.dispersion}, {"stderr", cell.se}, {"bound", bound},
                 {"bound_finite", bound_finite}, {"within_bound", within}, {"within_finite_bound", within_finite}});
    rep.plot_row({cell.n, cell.j, cell.dispersion, cell.se, bound, bound_finite});
    DispersionRecord r;
    r.item_id = id;
    r.n = cell.n;
    r.stats.q_bar = cell.q_bar;
    r.stats.mean_abs_residual = cell.dispersion;
    records.push_back(std::move(r));
    by_n[cell.n].push_back(&cell);
  }

  auto& s = rep.summary;
  s << std::fixed << std::setprecision(4);
  s << "alpha " << a.alpha << "  C " << a.c << "  models/n " << a.models
    << (a.exact ? "  exact enumeration" : "  permutations/model " + std::to_string(a.perms)) << "\n";
  s << "     n   mean_disp    max_disp       bound  bound_finite  over_bound\n";
  for (const auto& [n, cs] : by_n) {
    double sum = 0.0, mx = 0.0;
    std::size_t over = 0;
    const double bound = qmv_bound(a.c, n, a.alpha);
    for (const Cell* c : cs) {
      sum += c->dispersion;
      mx = std::max(mx, c->dispersion);
      over += c->dispersion > bound + 3.0 * c->se ? 1 : 0;
    }
    s << std::setw(6) << n << std::setw(12) << sum / static_cast<double>(cs.size()) << std::setw(12) << mx
      << std::setw(12) << bound << std::setw(14) << qmv_bound_finite(a.c, n, a.alpha) << std::setw(12) << over
      << "\n";
  }
  if (grid.size() >= 3) {
    const auto fit = fit_log_dispersion(records, seed, a.resamples);
    rep.add(json{{"kind", "fit"}, {"intercept", fit.intercept}, {"slope", fit.slope}, {"r2", fit.r2},
                 {"ci_low", fit.ci_low}, {"ci_high", fit.ci_high}, {"n_points", fit.n_points},
                 {"resamples", fit.resamples}, {"bootstrap_seed", fit.bootstrap_seed}});
    s << "fit: dispersion = " << fit.intercept << " + " << fit.slope << " ln n   R^2 " << fit.r2 << "  slope 95% CI ["
      << fit.ci_low << ", " << fit.ci_high << "]\n";
  }
  rep.emit(common, out);
  if (finite_violations > 0) {
    throw InvariantViolation(std::to_string(finite_violations) +
                             " model(s) exceeded the finite-n dispersion bound by more than 3 standard errors");
  }
  return 0;
}

// ------------------------------------------------------------------ score-file analyses

struct ItemScores {
  std::string item_id;
  std::size_t n = 0;
  std::vector<const ScoreRecord*> records;  // by perm_index
};

std::vector<ItemScores> group_scores(const ScoreFile& file) {
  std::map<std::string, ItemScores> by_item;
  for (const auto& r : file.records) {
    auto& g = by_item[r.request.item_id];
    g.item_id = r.request.item_id;
    if (g.n != 0 && g.n != r.request.permutation.size()) {
      throw DataError("item '" + g.item_id + "' mixes permutations of different sizes");
    }
    g.n = r.request.permutation.size();
    g.records.push_back(&r);
  }
  std::vector<ItemScores> out;
  for (auto& [id, g] : by_item) {
    std::stable_sort(g.records.begin(), g.records.end(), [](const ScoreRecord* x, const ScoreRecord* y) {
      return x->request.perm_index < y->request.perm_index;
    });
    out.push_back(std::move(g));
  }
  if (out.empty()) throw DataError("score file holds no records");
  return out;
}

std::vector<FiniteDist> item_dists(const ItemScores& g, double eps) {
  std::vector<FiniteDist> d;
  for (const auto* r : g.records) d.push_back(predictive(r->response, r->request.labels, eps));
  return d;
}

// Label chosen by argmax under the identity ordering (first record if absent).
std::string canonical_label(const ItemScores& g, const std::vector<FiniteDist>& dists) {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < g.records.size(); ++k) {
    if (g.records[k]->request.permutation.is_identity()) {
      idx = k;
      break;
    }
  }
  const auto& m = dists[idx].masses();
  return dists[idx].labels()[static_cast<std::size_t>(std::max_element(m.begin(), m.end()) - m.begin())];
}

std::vector<double> label_scores(const std::vector<FiniteDist>& dists, const std::string& y) {
  std::vector<double> s;
  for (const auto& d : dists) s.push_back(d.mass_of(y));
  return s;
}

struct ScoreArgs {
  std::string scores;
  std::string label;
  double smoothing = kDefaultSmoothing;
  std::string predicate = "1";
  double eta = 0.1;
  std::size_t max_iters = 500;
  double tolerance = 1e-8;
};

int run_jensen(const ScoreArgs& a, Common& common, std::ostream& out) {
  const ScoreFile file = read_score_file(a.scores);
  const auto groups = group_scores(file);
  json config{{"scores_header", file.header}, {"label", a.label}, {"smoothing", a.smoothing}};
  Report rep("jensen", config, json::object());
  rep.plot_columns({"item_id", "n", "gap", "mean_single_ce", "mixture_ce"});
  double gap_sum = 0.0, gap_min = std::numeric_limits<double>::infinity(), gap_max = 0.0;
  for (const auto& g : groups) {
    const auto dists = item_dists(g, a.smoothing);
    const std::string y = a.label.empty() ? canonical_label(g, dists) : a.label;
    const auto s = label_scores(dists, y);
    const double gap = jensen_gap(s).value();
    double single = 0.0, mix = 0.0;
    for (double v : s) {
      single -= std::log(v);
      mix += v;
    }
    single /= static_cast<double>(s.size());
    const double mix_ce = -std::log(mix / static_cast<double>(s.size()));
    rep.add(json{{"kind", "jensen"}, {"item_id", g.item_id}, {"n", g.n}, {"label", y}, {"permutations", s.size()},
                 {"gap", gap}, {"mean_single_ce", single}, {"mixture_ce", mix_ce}});
    rep.plot_row({g.item_id, g.n, gap, single, mix_ce});
    gap_sum += gap;
    gap_min = std::min(gap_min, gap);
    gap_max = std::max(gap_max, gap);
  }
  rep.summary << std::fixed << std::setprecision(6) << "items " << groups.size() << "  mean gap "
              << gap_sum / static_cast<double>(groups.size()) << " nats/token  min " << gap_min << "  max "
              << gap_max << "\n";
  rep.emit(common, out);
  return 0;
}

int run_mixture(const ScoreArgs& a, Common& common, std::ostream& out) {
  const ScoreFile file = read_score_file(a.scores);
  const auto groups = group_scores(file);
  ScoreMatrix matrix;
  for (const auto& g : groups) {
    const auto dists = item_dists(g, a.smoothing);
    const std::string y = a.label.empty() ? canonical_label(g, dists) : a.label;
    matrix.rows.push_back(label_scores(dists, y));
    matrix.group.push_back(g.n);
  }
  EgOptions opts{a.eta, a.max_iters, a.tolerance};
  const auto rep_ce = mixture_ce_report(matrix, opts);
  json config{{"scores_header", file.header}, {"label", a.label}, {"smoothing", a.smoothing}, {"eta", a.eta},
              {"max_iters", a.max_iters}, {"tolerance", a.tolerance}};
  Report rep("mixture", config, json::object());
  rep.plot_columns({"n", "iteration", "ce"});
  for (const auto& [n, w] : rep_ce.eg.weights) {
    rep.add(json{{"kind", "weights"}, {"n", n}, {"weights", w}, {"iterations", rep_ce.eg.iterations.at(n)},
                 {"ce_trace", rep_ce.eg.ce_trace.at(n)}});
    const auto& tr = rep_ce.eg.ce_trace.at(n);
    for (std::size_t i = 0; i < tr.size(); ++i) rep.plot_row({n, i, tr[i]});
  }
  rep.add(json{{"kind", "summary"}, {"uniform_ce", rep_ce.uniform_ce}, {"optimized_ce", rep_ce.optimized_ce},
               {"improvement", rep_ce.improvement}, {"oracle_single_ce", rep_ce.oracle_single_ce},
               {"mean_single_ce", rep_ce.mean_single_ce}});
  rep.summary << std::fixed << std::setprecision(6) << "uniform mixture CE   " << rep_ce.uniform_ce << "\n"
              << "optimized mixture CE " << rep_ce.optimized_ce << "  (improvement " << rep_ce.improvement << ")\n"
              << "mean single CE       " << rep_ce.mean_single_ce << "\n"
              << "oracle single CE     " << rep_ce.oracle_single_ce << "\n";
  rep.emit(common, out);
  return 0;
}

std::vector<std::string> split_labels(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  if (out.empty()) throw InputError("empty predicate");
  return out;
}

int run_certify(const ScoreArgs& a, Common& common, std::ostream& out) {
  const ScoreFile file = read_score_file(a.scores);
  const auto groups = group_scores(file);
  const auto predicate = split_labels(a.predicate);
  json config{{"scores_header", file.header}, {"predicate", predicate}, {"smoothing", a.smoothing}};
  Report rep("certify", config, json::object());
  rep.plot_columns({"item_id", "dispersion", "tv_mid", "jsd_rhs"});
  std::size_t certified = 0, skipped = 0;
  for (const auto& g : groups) {
    if (g.records.size() < 2) {
      ++skipped;
      rep.add(json{{"kind", "skipped"}, {"item_id", g.item_id}, {"reason", "fewer than two permutations"}});
      continue;
    }
    const auto c = jsd_certificate(item_dists(g, a.smoothing), predicate);
    ++certified;
    rep.add(json{{"kind", "certificate"}, {"item_id", g.item_id}, {"n", g.n}, {"dispersion", c.dispersion_lhs},
                 {"tv_mid", c.tv_mid}, {"jsd_rhs", c.jsd_rhs}, {"jsd", c.jsd}});
    rep.plot_row({g.item_id, c.dispersion_lhs, c.tv_mid, c.jsd_rhs});
  }
  rep.summary << "certified " << certified << " item(s), skipped " << skipped
              << "; dispersion <= mean TV <= sqrt(JSD/2) held for every certified item\n";
  rep.emit(common, out);
  return 0;
}

// ------------------------------------------------------------------ fit

struct FitArgs {
  std::string records;
  std::size_t resamples = 1000;
};

int run_fit(const FitArgs& a, Common& common, std::ostream& out) {
  std::ifstream is(a.records);
  if (!is) throw DataError("cannot open '" + a.records + "'");
  std::vector<DispersionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const auto kind = j.value("kind", std::string("dispersion"));
      if (kind != "dispersion") continue;
      const std::string id = j.value("item_id", "line" + std::to_string(line_no));
      const auto n = j.at("n").get<std::size_t>();
      if (j.contains("q")) {
        records.push_back(make_dispersion_record(id, n, j["q"].get<std::vector<double>>()));
      } else {
        DispersionRecord r;
        r.item_id = id;
        r.n = n;
        r.stats.mean_abs_residual = j.at("mean_abs_residual").get<double>();
        records.push_back(std::move(r));
      }
    } catch (const json::exception& e) {
      throw DataError(a.records + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  const std::uint64_t seed = common.resolved_seed();
  const auto fit = fit_log_dispersion(records, seed, a.resamples);
  json config{{"records", std::filesystem::path(a.records).filename().string()}, {"resamples", a.resamples}};
  Report rep("fit", config, json{{"bootstrap", seed}});
  rep.add(json{{"kind", "fit"}, {"intercept", fit.intercept}, {"slope", fit.slope}, {"r2", fit.r2},
               {"ci_low", fit.ci_low}, {"ci_high", fit.ci_high}, {"n_points", fit.n_points},
               {"resamples", fit.resamples}, {"bootstrap_seed", fit.bootstrap_seed}});
  rep.plot_columns({"n", "mean_abs_residual", "fitted"});
  for (const auto& r : records) {
    rep.plot_row({r.n, r.stats.mean_abs_residual, fit.intercept + fit.slope * std::log(static_cast<double>(r.n))});
  }
  rep.summary << std::fixed << std::setprecision(4) << "records " << fit.n_points << "  a " << fit.intercept
              << "  b " << fit.slope << "  R^2 " << fit.r2 << "  b 95% CI [" << fit.ci_low << ", " << fit.ci_high
              << "]\n";
  rep.emit(common, out);
  return 0;
}

// ------------------------------------------------------------------ dose

struct DoseArgs {
  std::size_t count = 2000;
  std::size_t trials = 200;
  DoseParams params;
  bool expected = false;
};

int run_dose(DoseArgs a, Common& common, std::ostream& out) {
  if (a.expected) a.params.mode = OutcomeMode::Expected;
  const std::uint64_t seed = common.resolved_seed();
  const auto s = run_dose_trials(a.params, a.count, a.trials, seed, common.resolved_threads());
  const auto& p = a.params;
  json config{{"count", a.count}, {"trials", a.trials}, {"first_stage_slope", p.first_stage_slope},
              {"budget_intercept", p.budget_intercept}, {"noise_sd", p.noise_sd},
              {"response_slope", p.response_slope}, {"base_rate", p.base_rate},
              {"confounder_budget", p.confounder_budget}, {"confounder_outcome", p.confounder_outcome},
              {"mode", a.expected ? "expected" : "bernoulli"}};
  Report rep("dose", config, json{{"trials", seed}});
  rep.plot_columns({"trial", "ols_slope", "ols_ci_low", "ols_ci_high", "iv_slope", "iv_ci_low", "iv_ci_high"});
  for (std::size_t t = 0; t < s.trials.size(); ++t) {
    const auto& tr = s.trials[t];
    rep.add(json{{"kind", "trial"}, {"trial", t}, {"seed", tr.seed}, {"ols", to_json(tr.ols)}, {"iv", to_json(tr.iv)}});
    rep.plot_row({t, tr.ols.slope, tr.ols.ci_low, tr.ols.ci_high, tr.iv.slope, tr.iv.ci_low, tr.iv.ci_high});
  }
  if (a.trials == 1) {
    for (const auto& it : synth_generate(a.params, a.count, s.trials.front().seed)) {
      json j = to_json(it);
      j["kind"] = "item";
      rep.add(j);
    }
  }
  rep.add(json{{"kind", "summary"}, {"ols_coverage", s.ols_coverage}, {"iv_coverage", s.iv_coverage},
               {"ols_mean_slope", s.ols_mean_slope}, {"iv_mean_slope", s.iv_mean_slope}});
  const auto& first = s.trials.front();
  rep.summary << std::fixed << std::setprecision(4) << "trials " << a.trials << " x " << a.count
              << " items, planted slope " << p.response_slope << "\n"
              << "OLS   mean slope " << s.ols_mean_slope << "  coverage " << s.ols_coverage << "\n"
              << "2SLS  mean slope " << s.iv_mean_slope << "  coverage " << s.iv_coverage << "\n"
              << "first trial: first-stage slope " << first.iv.first_stage_slope << "  F "
              << first.iv.first_stage_f << "  Spearman rho(d, budget) " << first.iv.spearman_rho
              << (first.iv.weak_instrument ? "  WEAK INSTRUMENT" : "") << "\n";
  rep.emit(common, out);
  return 0;
}

}  // namespace

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Information-budget planning, permutation gating and order-sensitivity analysis"};
  app.name("infobudget");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  Common common;
  PlanArgs plan;
  auto* plan_cmd = app.add_subcommand("plan", "B2T, RoH, ISR and decision from literal inputs");
  plan_cmd->add_option("--q-lo", plan.q_lo, "Conservative prior mass q_lo")->required();
  plan_cmd->add_option("--q-bar", plan.q_bar, "Mean prior mass (default q_lo)");
  plan_cmd->add_option("--delta", plan.delta, "Information budget in nats")->required();
  plan_cmd->add_option("--h-star", plan.h_star, "Target hallucination rate");
  plan_cmd->add_option("--prior-floor", plan.prior_floor, "Floor for q_lo");
  plan_cmd->add_option("--hedge-lo", plan.hedge_lo, "Graduated hedge threshold");
  plan_cmd->add_option("--answer-at", plan.answer_at, "Answer threshold");
  plan_cmd->add_option("--mode", plan.mode, "binary | graduated")->check(CLI::IsMember({"binary", "graduated"}));
  common.add_to(plan_cmd, false);

  GateArgs gate;
  auto* gate_cmd = app.add_subcommand("gate", "Run the permutation gate on items");
  gate.add_to(gate_cmd, false);
  common.add_to(gate_cmd);

  GateArgs audit;
  auto* audit_cmd = app.add_subcommand("audit", "Gate a labeled batch and report rates with Wilson intervals");
  audit.add_to(audit_cmd, true);
  common.add_to(audit_cmd);

  DispersionArgs disp;
  auto* disp_cmd = app.add_subcommand("dispersion", "Synthetic permutation-dispersion study with bound comparison");
  disp_cmd->add_option("--alpha", disp.alpha, "Potential decay exponent");
  disp_cmd->add_option("--C", disp.c, "Potential scale");
  disp_cmd->add_option("--sign", disp.sign, "Potential sign");
  disp_cmd->add_option("--n", disp.grid, "n grid: list and ranges, e.g. 8,16,32 or 4..60 or 4..60:4");
  disp_cmd->add_option("--models", disp.models, "Random models per n");
  disp_cmd->add_option("--perms", disp.perms, "Monte-Carlo permutations per model");
  disp_cmd->add_option("--support-min", disp.support_min, "Fewest weighted chunks per model");
  disp_cmd->add_option("--support-max", disp.support_max, "Most weighted chunks per model");
  disp_cmd->add_option("--a-spread", disp.a_spread, "Base-logit offset range");
  disp_cmd->add_flag("--exact", disp.exact, "Exact enumeration (support-max <= 3)");
  disp_cmd->add_option("--resamples", disp.resamples, "Bootstrap resamples for the slope CI");
  common.add_to(disp_cmd);

  ScoreArgs jensen;
  auto* jensen_cmd = app.add_subcommand("jensen", "Per-item Jensen gaps from a score file");
  jensen_cmd->add_option("--scores", jensen.scores, "Score file")->required();
  jensen_cmd->add_option("--label", jensen.label, "Fixed continuation label (default: identity-order argmax)");
  jensen_cmd->add_option("--smoothing", jensen.smoothing, "Smoothing epsilon");
  common.add_to(jensen_cmd, false);

  ScoreArgs mix;
  auto* mix_cmd = app.add_subcommand("mixture", "Uniform vs optimized permutation-mixture cross-entropy");
  mix_cmd->add_option("--scores", mix.scores, "Score file")->required();
  mix_cmd->add_option("--label", mix.label, "Fixed continuation label (default: identity-order argmax)");
  mix_cmd->add_option("--smoothing", mix.smoothing, "Smoothing epsilon");
  mix_cmd->add_option("--eta", mix.eta, "EG step size");
  mix_cmd->add_option("--max-iters", mix.max_iters, "EG iteration cap");
  mix_cmd->add_option("--tol", mix.tolerance, "EG stopping tolerance on max weight change");
  common.add_to(mix_cmd, false);

  DoseArgs dose;
  auto* dose_cmd = app.add_subcommand("dose", "Planted dose-response trials with OLS and 2SLS");
  dose_cmd->add_option("--count", dose.count, "Items per trial (>= 40)");
  dose_cmd->add_option("--trials", dose.trials, "Seeded trials");
  dose_cmd->add_option("--first-stage", dose.params.first_stage_slope, "Budget gain per dose (nats)");
  dose_cmd->add_option("--intercept", dose.params.budget_intercept, "Budget at dose 0");
  dose_cmd->add_option("--noise-sd", dose.params.noise_sd, "Budget noise");
  dose_cmd->add_option("--slope", dose.params.response_slope, "Planted hallucination slope per nat");
  dose_cmd->add_option("--base-rate", dose.params.base_rate, "Hallucination probability at zero budget");
  dose_cmd->add_option("--confounder-budget", dose.params.confounder_budget, "Confounder loading on the budget");
  dose_cmd->add_option("--confounder-outcome", dose.params.confounder_outcome, "Confounder loading on the outcome");
  dose_cmd->add_flag("--expected", dose.expected, "Use hallucination probabilities as outcomes");
  common.add_to(dose_cmd);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit dispersion = a + b ln n on a record file");
  fit_cmd->add_option("--records", fit.records, "Dispersion records (.jsonl)")->required();
  fit_cmd->add_option("--resamples", fit.resamples, "Bootstrap resamples");
  common.add_to(fit_cmd);

  ScoreArgs cert;
  auto* cert_cmd = app.add_subcommand("certify", "Dispersion <= TV <= JSD certificate per item");
  cert_cmd->add_option("--scores", cert.scores, "Score file")->required();
  cert_cmd->add_option("--predicate", cert.predicate, "Comma-separated event labels");
  cert_cmd->add_option("--smoothing", cert.smoothing, "Smoothing epsilon");
  common.add_to(cert_cmd, false);

  std::vector<const char*> argv{"infobudget"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::Usage);
  }

  try {
    common.load();
    if (*plan_cmd) return run_plan(plan, common, out);
    if (*gate_cmd) return run_gate_cmd(gate, common, out, false);
    if (*audit_cmd) return run_gate_cmd(audit, common, out, true);
    if (*disp_cmd) return run_dispersion(disp, common, out);
    if (*jensen_cmd) return run_jensen(jensen, common, out);
    if (*mix_cmd) return run_mixture(mix, common, out);
    if (*dose_cmd) return run_dose(dose, common, out);
    if (*fit_cmd) return run_fit(fit, common, out);
    if (*cert_cmd) return run_certify(cert, common, out);
  } catch (const InputError& e) {
    err << "usage error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Usage);
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Usage);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Data);
  }
  return static_cast<int>(ExitCode::Usage);
}

int execute(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return execute(args, std::cout, std::cerr);
}

}  // namespace infobudget::cli

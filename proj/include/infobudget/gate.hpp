#pragma once

// Permutation-mixture answer/abstain gate: score m evidence orderings, estimate
// the clipped information budget against a reference distribution, plan B2T
// and ISR, decide, and audit batches of labeled items.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infobudget/backend.hpp"
#include "infobudget/dist_core.hpp"
#include "infobudget/info_core.hpp"
#include "infobudget/permute.hpp"
#include "infobudget/stats.hpp"
#include "json.hpp"

namespace infobudget {

inline constexpr const char* kGateSchema = "infobudget.gate/1";

// Where u_k = ln P(y) - ln S_k(y) takes its P from.
enum class ReferenceMode { IdentityOrder, UniformMixture, Supplied };
std::string_view to_string(ReferenceMode m) noexcept;
ReferenceMode reference_mode_from_string(std::string_view s);

struct GateItem {
  std::string item_id;
  std::string question;
  std::vector<std::string> chunks;
  std::vector<std::string> labels{"1", "0"};
  std::vector<std::string> predicate{"1"};  // labels counted as the event
  std::optional<std::string> gold;
  std::optional<FiniteDist> reference;  // required in Supplied mode
};

struct GateConfig {
  Prob h_star{0.05};
  std::size_t m = 6;
  double clip_bound = kDefaultClip;
  ClipMode clip_mode = ClipMode::Symmetric;
  double prior_floor = 0.003;
  IsrThresholds thresholds{};
  DecisionMode decision_mode = DecisionMode::Binary;
  ReferenceMode reference = ReferenceMode::IdentityOrder;
  std::size_t k_bands = 6;
  // Item permutations use derive_seed(seed, fnv1a64(item_id)); the identity
  // ordering is always permutation 0.
  std::uint64_t seed = 0;
  double smoothing = kDefaultSmoothing;
  std::size_t threads = 1;

  void validate() const;
  PlanOptions plan_options() const;
};

nlohmann::json to_json(const GateConfig& config);
GateConfig gate_config_from_json(const nlohmann::json& j, GateConfig base = {});
// FNV-1a of the canonical JSON form; `threads` is excluded.
std::uint64_t config_hash(const GateConfig& config);

struct PermutationScore {
  std::int64_t perm_index = 0;
  Permutation permutation;
  double q = 0.0;    // predicate mass, renormalized over the label set
  double s_y = 0.0;  // smoothed S_k(y) at the canonical label
  double u = 0.0;    // ln P(y) - ln S_k(y), unclipped
};

struct GateOutcome {
  std::string item_id;
  GatePlan plan;
  std::vector<PermutationScore> scores;
  double q_lo_raw = 0.0;   // min_k q_k before flooring
  double delta_raw = 0.0;  // clipped_budget(u, B, mode), possibly negative
  std::string canonical_label;
  std::string predicted_label;  // argmax of the uniform mixture
  double jensen_gap = 0.0;      // at the canonical label
  std::size_t requested_m = 0;
  bool shortfall = false;
  bool escalated = false;
};

// The decision as a function of the recorded (q_bar, q_lo_raw, delta_raw).
GatePlan replan(const GateOutcome& outcome, const GateConfig& config);

GateOutcome run_gate(Scorer& backend, const GateItem& item, const GateConfig& config);

// Runs at m_low and, only when ISR is below the answer threshold, again at
// m_high over a superset of the same permutations.
GateOutcome escalate_gate(Scorer& backend, const GateItem& item, const GateConfig& config,
                          std::size_t m_low = 3, std::size_t m_high = 6);

nlohmann::json to_json(const GateOutcome& outcome);

struct RateCi {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double rate = 0.0;
  stats::Interval ci;
};

struct AuditSummary {
  std::size_t items = 0;
  std::size_t evaluated = 0;
  std::size_t excluded_missing_gold = 0;
  std::size_t failed = 0;
  std::size_t shortfalls = 0;
  std::size_t escalations = 0;
  RateCi abstention;     // non-Answer decisions over evaluated items
  RateCi hallucination;  // wrong answers over attempts
  RateCi accuracy;       // right answers over attempts
  RateCi alignment;      // decision agrees with ISR >= answer threshold
  double mean_delta = 0.0;
  double mean_isr = 0.0;  // over finite ISR values
};

struct AuditItemResult {
  std::string item_id;
  std::optional<GateOutcome> outcome;
  std::string error;  // backend or data failure for this item
  std::optional<bool> correct;
};

struct AuditReport {
  std::vector<AuditItemResult> items;  // input order
  AuditSummary summary;
};

struct AuditOptions {
  bool escalate = false;
  std::size_t m_low = 3;
  // External decision trace keyed by item id; alignment then compares the
  // gate's ISR side against these decisions.
  const std::map<std::string, Decision>* trace = nullptr;
};

// Items without a gold label are excluded and counted; per-item backend
// errors are recorded and counted instead of aborting the batch.
AuditReport batch_audit(Scorer& backend, std::span<const GateItem> items, const GateConfig& config,
                        const AuditOptions& options = {});

nlohmann::json to_json(const AuditSummary& summary);

struct SweepRow {
  std::size_t m = 0;
  double clip_bound = 0.0;
  AuditSummary summary;
};

inline constexpr std::size_t kSweepM[] = {3, 6, 12};
inline constexpr double kSweepB[] = {4.0, 6.0, 8.0};

std::vector<SweepRow> audit_sweep(Scorer& backend, std::span<const GateItem> items,
                                  const GateConfig& config, const AuditOptions& options = {});

// Line-delimited item records:
//   {"item_id":..., "question":..., "chunks":[...], "labels":["1","0"],
//    "predicate":["1"], "gold":"1", "reference":{"1":0.9,"0":0.1}}
GateItem gate_item_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GateItem& item);
std::vector<GateItem> read_items(const std::string& path);

}  // namespace infobudget

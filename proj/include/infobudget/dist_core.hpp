#pragma once

// Finite predictive distributions over labeled supports, divergences between
// them, the Pinsker/JSD dispersion certificate and clipped budget estimators.

#include <span>
#include <string>
#include <vector>

#include "infobudget/info_core.hpp"

namespace infobudget {

inline constexpr double kDefaultSmoothing = 1e-9;

// Normalized probability vector over an ordered list of distinct labels.
class FiniteDist {
 public:
  // Validates: non-empty, distinct labels, non-negative finite masses summing
  // to 1 within 1e-9.
  FiniteDist(std::vector<std::string> labels, std::vector<double> mass);

  // Two-point distribution {"1": q, "0": 1 - q}.
  static FiniteDist bernoulli(double q);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<double>& masses() const noexcept { return mass_; }

  // Throws DataError for an unknown label.
  double mass_of(const std::string& label) const;
  std::size_t index_of(const std::string& label) const;
  bool has_label(const std::string& label) const noexcept;
  // Mass of a label subset.
  double mass_of(std::span<const std::string> subset) const;

  // Same distribution with masses listed in `order` (a permutation of labels()).
  FiniteDist aligned_to(const std::vector<std::string>& order) const;

 private:
  std::vector<std::string> labels_;
  std::vector<double> mass_;
};

// Normalizes raw masses, mixes in epsilon on every label and renormalizes:
// (m_i / sum + eps) / (1 + k eps). Every output mass is >= eps / (1 + k eps).
FiniteDist smooth_normalize(std::vector<std::string> labels, std::span<const double> raw_mass,
                            double epsilon = kDefaultSmoothing);

struct Divergences {
  NatBudget kl;
  double tv = 0.0;
};

// KL(p || q) and total variation. Supports are matched by label; q must put
// positive mass wherever p does.
Divergences divergences(const FiniteDist& p, const FiniteDist& q);

// Convex combination of distributions over a common label set (labels of the
// first member define the output order). Empty weights mean uniform.
FiniteDist mixture(std::span<const FiniteDist> members, std::span<const double> weights = {});

struct JsdCertificate {
  double dispersion_lhs = 0.0;  // mean |q_k - q_bar|
  double tv_mid = 0.0;          // mean TV(S_k, S_bar)
  double jsd_rhs = 0.0;         // sqrt(0.5 * mean KL(S_k || S_bar))
  double jsd = 0.0;             // mean KL(S_k || S_bar)
};

// Dispersion certificate for an equal-weight ensemble and a label predicate.
// Throws InvariantViolation if lhs <= mid <= rhs fails beyond 1e-12.
JsdCertificate jsd_certificate(std::span<const FiniteDist> ensemble,
                               std::span<const std::string> predicate);

// I-projection of `base` onto {Q : Q(predicate) = target}: the exponential tilt
// base(y) * exp(lambda * 1[y in predicate]), renormalized.
FiniteDist exponential_tilt(const FiniteDist& base, std::span<const std::string> predicate,
                            Prob target);

enum class ClipMode { Symmetric, MinClip };

std::string_view to_string(ClipMode m) noexcept;
ClipMode clip_mode_from_string(std::string_view s);

inline constexpr double kDefaultClip = 6.0;

// Per-permutation log-ratio increments and the estimate they produce.
struct BudgetSample {
  std::vector<double> increments;  // clipped
  double clip_bound = kDefaultClip;
  ClipMode mode = ClipMode::Symmetric;
  NatBudget estimate;
};

// Symmetric: mean of clamp(u, -B, B). MinClip: mean of min(u, B), which is a
// lower bound on the KL it estimates.
NatBudget clipped_budget(std::span<const double> log_ratios, double clip_bound = kDefaultClip,
                         ClipMode mode = ClipMode::Symmetric);
BudgetSample clip_sample(std::span<const double> log_ratios, double clip_bound = kDefaultClip,
                         ClipMode mode = ClipMode::Symmetric);

// p_yes / (p_yes + p_no).
Prob label_renormalize(double p_yes, double p_no);

}  // namespace infobudget

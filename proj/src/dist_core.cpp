#include "infobudget/dist_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "infobudget/error.hpp"

namespace infobudget {

namespace {

constexpr double kNormTolerance = 1e-9;
constexpr double kChainTolerance = 1e-12;

std::vector<double> aligned_masses(const FiniteDist& d, const std::vector<std::string>& order) {
  if (d.size() != order.size()) {
    throw DataError("support mismatch: " + std::to_string(d.size()) + " vs " +
                    std::to_string(order.size()) + " labels");
  }
  std::vector<double> out(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) out[i] = d.mass_of(order[i]);
  return out;
}

double kl_vectors(std::span<const double> p, std::span<const double> q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] <= 0.0) throw DomainError("KL undefined: reference has zero mass where p is positive");
    kl += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return std::max(0.0, kl);
}

double tv_vectors(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

}  // namespace

FiniteDist::FiniteDist(std::vector<std::string> labels, std::vector<double> mass)
    : labels_(std::move(labels)), mass_(std::move(mass)) {
  if (labels_.empty()) throw InputError("distribution support must be non-empty");
  if (labels_.size() != mass_.size()) throw InputError("labels and masses differ in length");
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) throw InputError("duplicate label '" + l + "'");
  }
  double total = 0.0;
  for (double m : mass_) {
    if (!std::isfinite(m) || m < 0.0) throw InputError("masses must be finite and non-negative");
    total += m;
  }
  if (std::abs(total - 1.0) > kNormTolerance) {
    throw InputError("masses sum to " + std::to_string(total) + ", expected 1");
  }
}

FiniteDist FiniteDist::bernoulli(double q) {
  const Prob p(q);
  return FiniteDist({"1", "0"}, {p.value(), 1.0 - p.value()});
}

std::size_t FiniteDist::index_of(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw DataError("label '" + label + "' not in support");
  return static_cast<std::size_t>(it - labels_.begin());
}

bool FiniteDist::has_label(const std::string& label) const noexcept {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

double FiniteDist::mass_of(const std::string& label) const { return mass_[index_of(label)]; }

double FiniteDist::mass_of(std::span<const std::string> subset) const {
  double s = 0.0;
  for (const auto& l : subset) s += mass_of(l);
  return s;
}

FiniteDist FiniteDist::aligned_to(const std::vector<std::string>& order) const {
  return FiniteDist(order, aligned_masses(*this, order));
}

FiniteDist smooth_normalize(std::vector<std::string> labels, std::span<const double> raw_mass,
                            double epsilon) {
  if (labels.size() != raw_mass.size()) throw InputError("labels and masses differ in length");
  if (raw_mass.empty()) throw InputError("cannot smooth an empty support");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InputError("smoothing epsilon must be >= 0");
  double total = 0.0;
  for (double m : raw_mass) {
    if (!std::isfinite(m) || m < 0.0) throw InputError("raw masses must be finite and non-negative");
    total += m;
  }
  if (total <= 0.0) throw InputError("cannot normalize an all-zero mass vector");
  const double k = static_cast<double>(raw_mass.size());
  std::vector<double> out(raw_mass.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (raw_mass[i] / total + epsilon) / (1.0 + k * epsilon);
  }
  return FiniteDist(std::move(labels), std::move(out));
}

Divergences divergences(const FiniteDist& p, const FiniteDist& q) {
  const auto pm = p.masses();
  const auto qm = aligned_masses(q, p.labels());
  return {NatBudget(kl_vectors(pm, qm)), tv_vectors(pm, qm)};
}

FiniteDist mixture(std::span<const FiniteDist> members, std::span<const double> weights) {
  if (members.empty()) throw InputError("mixture of an empty ensemble");
  if (!weights.empty() && weights.size() != members.size()) {
    throw InputError("mixture weights do not match ensemble size");
  }
  const auto& order = members.front().labels();
  std::vector<double> acc(order.size(), 0.0);
  const double uniform = 1.0 / static_cast<double>(members.size());
  double wsum = 0.0;
  for (std::size_t k = 0; k < members.size(); ++k) {
    const double w = weights.empty() ? uniform : weights[k];
    if (!(w >= 0.0)) throw InputError("mixture weights must be non-negative");
    wsum += w;
    const auto m = aligned_masses(members[k], order);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * m[i];
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw InputError("mixture weights must sum to 1");
  // Absorb rounding so the FiniteDist invariant holds exactly enough.
  const double total = std::accumulate(acc.begin(), acc.end(), 0.0);
  for (auto& a : acc) a /= total;
  return FiniteDist(order, std::move(acc));
}

JsdCertificate jsd_certificate(std::span<const FiniteDist> ensemble,
                               std::span<const std::string> predicate) {
  if (ensemble.empty()) throw InputError("certificate needs a non-empty ensemble");
  if (ensemble.size() < 2) throw InputError("certificate needs at least two members");
  const FiniteDist center = mixture(ensemble);
  const auto& order = center.labels();
  const double q_bar = center.mass_of(predicate);
  const double m = static_cast<double>(ensemble.size());

  JsdCertificate c;
  for (const auto& member : ensemble) {
    const auto pm = aligned_masses(member, order);
    c.dispersion_lhs += std::abs(member.mass_of(predicate) - q_bar);
    c.tv_mid += tv_vectors(pm, center.masses());
    c.jsd += kl_vectors(pm, center.masses());
  }
  c.dispersion_lhs /= m;
  c.tv_mid /= m;
  c.jsd /= m;
  c.jsd_rhs = std::sqrt(0.5 * c.jsd);

  if (c.dispersion_lhs > c.tv_mid + kChainTolerance || c.tv_mid > c.jsd_rhs + kChainTolerance) {
    throw InvariantViolation("JSD certificate chain violated: " + std::to_string(c.dispersion_lhs) +
                             " <= " + std::to_string(c.tv_mid) + " <= " +
                             std::to_string(c.jsd_rhs));
  }
  return c;
}

FiniteDist exponential_tilt(const FiniteDist& base, std::span<const std::string> predicate,
                            Prob target) {
  const double q = base.mass_of(predicate);
  const double lambda = tilt_lambda(Prob(q), target);
  std::vector<bool> in(base.size(), false);
  for (const auto& l : predicate) in[base.index_of(l)] = true;
  const double boost = std::exp(lambda);
  std::vector<double> out(base.size());
  double z = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = base.masses()[i] * (in[i] ? boost : 1.0);
    z += out[i];
  }
  for (auto& v : out) v /= z;
  return FiniteDist(base.labels(), std::move(out));
}

std::string_view to_string(ClipMode m) noexcept {
  return m == ClipMode::Symmetric ? "symmetric" : "minclip";
}

ClipMode clip_mode_from_string(std::string_view s) {
  if (s == "symmetric") return ClipMode::Symmetric;
  if (s == "minclip" || s == "min") return ClipMode::MinClip;
  throw InputError("unknown clip mode '" + std::string(s) + "'");
}

BudgetSample clip_sample(std::span<const double> log_ratios, double clip_bound, ClipMode mode) {
  if (log_ratios.empty()) throw InputError("clipped budget of an empty sample");
  if (!(clip_bound > 0.0) || !std::isfinite(clip_bound)) throw InputError("clip bound must be > 0");
  BudgetSample s;
  s.clip_bound = clip_bound;
  s.mode = mode;
  s.increments.reserve(log_ratios.size());
  double total = 0.0;
  for (double u : log_ratios) {
    if (!std::isfinite(u)) throw InputError("log-ratio increments must be finite");
    const double c = mode == ClipMode::Symmetric ? std::clamp(u, -clip_bound, clip_bound)
                                                 : std::min(u, clip_bound);
    s.increments.push_back(c);
    total += c;
  }
  s.estimate = NatBudget(total / static_cast<double>(log_ratios.size()));
  return s;
}

NatBudget clipped_budget(std::span<const double> log_ratios, double clip_bound, ClipMode mode) {
  return clip_sample(log_ratios, clip_bound, mode).estimate;
}

Prob label_renormalize(double p_yes, double p_no) {
  if (!std::isfinite(p_yes) || !std::isfinite(p_no) || p_yes < 0.0 || p_no < 0.0) {
    throw InputError("label probabilities must be finite and non-negative");
  }
  if (p_yes + p_no <= 0.0) {
    throw InputError("both label probabilities are zero; smooth the distribution first");
  }
  return Prob(p_yes / (p_yes + p_no));
}

}  // namespace infobudget

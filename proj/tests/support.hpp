#pragma once

// Independent reference implementations and random generators for tests.
// Oracles work in long double and share no code with the library.

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

inline long double ref_kl(long double p, long double q) {
  long double r = 0.0L;
  if (p > 0.0L) r += p * std::log(p / q);
  if (p < 1.0L) r += (1.0L - p) * std::log((1.0L - p) / (1.0L - q));
  return r;
}

// Regula falsi (Illinois variant) for KL(p || q) = delta on p in [q, 1).
inline long double ref_pmax(long double delta, long double q) {
  long double lo = q;
  long double hi = 1.0L - 1e-18L;
  if (ref_kl(hi, q) <= delta) return hi;
  long double flo = -delta;
  long double fhi = ref_kl(hi, q) - delta;
  int side = 0;
  for (int i = 0; i < 2000; ++i) {
    const long double mid = (lo * fhi - hi * flo) / (fhi - flo);
    const long double fm = ref_kl(mid, q) - delta;
    if (std::fabs(fm) < 1e-16L || hi - lo < 1e-17L) return mid;
    if ((fm > 0) == (fhi > 0)) {
      hi = mid;
      fhi = fm;
      if (side == -1) flo /= 2;
      side = -1;
    } else {
      lo = mid;
      flo = fm;
      if (side == 1) fhi /= 2;
      side = 1;
    }
  }
  return (lo + hi) / 2;
}

inline double logistic_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }

  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(eng_);
  }

  // Open-interval probability, avoiding the endpoints.
  double prob(double margin = 1e-6) { return uniform(margin, 1.0 - margin); }

  std::vector<double> simplex(std::size_t k) {
    std::vector<double> w(k);
    double s = 0.0;
    for (auto& x : w) {
      x = std::exponential_distribution<double>(1.0)(eng_) + 1e-12;
      s += x;
    }
    for (auto& x : w) x /= s;
    return w;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

inline std::vector<std::string> label_set(std::size_t k) {
  std::vector<std::string> l;
  for (std::size_t i = 0; i < k; ++i) l.push_back("y" + std::to_string(i));
  return l;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("infobudget-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support

#pragma once

#include <span>
#include <vector>

namespace infobudget::stats {

// Two-sided 95% standard normal quantile.
inline constexpr double kZ95 = 1.959963984540054;

double mean(std::span<const double> x);

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;         // classical
  double slope_robust_se = 0.0;  // HC1 heteroskedasticity-robust
  std::size_t n = 0;
};

// Simple OLS of y on x with an intercept. Throws DataError when x is constant.
LineFit ols(std::span<const double> x, std::span<const double> y);

// Average ranks (ties share the mean rank), 1-based.
std::vector<double> ranks(std::span<const double> x);
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Wilson score interval for k successes out of n at 95%.
Interval wilson95(std::size_t successes, std::size_t trials);

// Linear-interpolated empirical quantile of an unsorted sample, p in [0, 1].
double quantile(std::vector<double> sample, double p);

}  // namespace infobudget::stats

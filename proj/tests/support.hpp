#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace photocoh::testing {

struct ChiSquare2 {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

// Two-sample chi-square on histograms with unequal totals. Bins with fewer
// than `min_count` combined events are pooled into one overflow bin.
template <class A, class B>
ChiSquare2 two_sample_chi2(const A& a, const B& b, double min_count = 10.0) {
  double na = 0, nb = 0;
  for (auto x : a) na += static_cast<double>(x);
  for (auto x : b) nb += static_cast<double>(x);
  const double ka = std::sqrt(nb / na), kb = std::sqrt(na / nb);
  ChiSquare2 r;
  double pool_a = 0, pool_b = 0;
  std::size_t bins = 0;
  auto add = [&](double x, double y) {
    r.statistic += (ka * x - kb * y) * (ka * x - kb * y) / (x + y);
    ++bins;
  };
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = static_cast<double>(a[i]), y = static_cast<double>(b[i]);
    if (x + y < min_count) {
      pool_a += x;
      pool_b += y;
    } else {
      add(x, y);
    }
  }
  if (pool_a + pool_b > 0) add(pool_a, pool_b);
  r.dof = static_cast<double>(bins) - 1.0;
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), r.statistic));
  return r;
}

// Kolmogorov-Smirnov distance of a sample against a CDF.
template <class F>
double ks_distance(std::vector<double> xs, F cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("photocoh_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace photocoh::testing

#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace subdrift {

/// Monte Carlo summary of i.i.d. draws.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t replicates = 0;
  std::uint64_t censored_count = 0;
  std::uint64_t non_finite_count = 0;

  double lower(double z) const { return mean - z * std_error; }
  double upper(double z) const { return mean + z * std_error; }
};

/// Running mean / sum of squared deviations (Welford), mergeable in a fixed
/// order so that blocked reductions are deterministic.
struct Moments {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::uint64_t non_finite = 0;

  void push(double v) {
    if (!std::isfinite(v)) {
      ++non_finite;
      return;
    }
    ++count;
    const double delta = v - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (v - mean);
  }

  void merge(const Moments& other) {
    non_finite += other.non_finite;
    if (other.count == 0) return;
    if (count == 0) {
      const auto nf = non_finite;
      *this = other;
      non_finite = nf;
      return;
    }
    const double n_a = static_cast<double>(count);
    const double n_b = static_cast<double>(other.count);
    const double n = n_a + n_b;
    const double delta = other.mean - mean;
    mean += delta * n_b / n;
    m2 += other.m2 + delta * delta * n_a * n_b / n;
    count += other.count;
  }

  Estimate to_estimate() const {
    Estimate e;
    e.mean = count > 0 ? mean : std::nan("");
    e.replicates = count + non_finite;
    e.non_finite_count = non_finite;
    if (count >= 2) {
      const double var = m2 / static_cast<double>(count - 1);
      e.std_error = std::sqrt(var / static_cast<double>(count));
    }
    return e;
  }
};

/// Serial summary over a span in index order. Non-finite draws are excluded
/// and counted.
inline Estimate summarize(std::span<const double> values) {
  Moments m;
  for (double v : values) m.push(v);
  return m.to_estimate();
}

}  // namespace subdrift

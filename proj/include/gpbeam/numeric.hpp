#ifndef GPBEAM_NUMERIC_HPP
#define GPBEAM_NUMERIC_HPP

#include <cmath>
#include <limits>
#include <span>

namespace gpbeam {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Stable log(sum(exp(xs))) via max shift. Empty input gives -inf.
inline double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline double log2_from_ln(double ln) { return ln / std::log(2.0); }

// Surprisal in bits from a natural-log probability.
inline double bits(double ln_prob) { return -log2_from_ln(ln_prob); }

}  // namespace gpbeam

#endif

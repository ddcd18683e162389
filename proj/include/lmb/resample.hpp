#pragma once

#include <cstdint>
#include <vector>

namespace lmb {

// Systematic resampling: n_out index draws at evenly spaced quantiles offset
// by u01 in [0,1). Weights need not be normalized; their sum must be
// positive. Zero-weight entries are never selected. Output is ordered.
inline std::vector<std::int32_t> systematic_resample_indices(const double* weights, std::size_t n,
                                                             int n_out, double u01) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += weights[i];
  const double step = total / n_out;
  std::vector<std::int32_t> out;
  out.reserve(static_cast<std::size_t>(n_out));
  std::size_t i = 0;
  double cum = weights[0];
  for (int k = 0; k < n_out; ++k) {
    const double u = (u01 + k) * step;
    while (i + 1 < n && cum <= u) {
      ++i;
      cum += weights[i];
    }
    out.push_back(static_cast<std::int32_t>(i));
  }
  return out;
}

}  // namespace lmb

#pragma once

#include <cstddef>
#include <vector>

namespace cjmap {

struct TrendPoint {
  double size = 0;
  double log2_count = 0;
};

struct TrendFit {
  double slope = 0;      // log2 mappings per unit size
  double intercept = 0;
  double r_squared = 0;  // in [0, 1]
  std::size_t points = 0;

  double extrapolate(double size) const { return intercept + slope * size; }
  // Evaluates the line at size shrunk by the fraction of consolidated
  // outputs, loss in [0, 1].
  double predict(double size, double loss = 0) const;
};

enum class TrendAggregate {
  kNone,  // one point per row
  kMean,  // one point per size: mean log2 count
};

// Ordinary least squares of log2 count on size. Throws DegenerateData with
// fewer than three distinct sizes.
TrendFit fit_trend(const std::vector<TrendPoint>& rows,
                   TrendAggregate aggregate = TrendAggregate::kMean);

}  // namespace cjmap

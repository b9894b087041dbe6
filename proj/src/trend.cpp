#include "cjmap/trend.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "cjmap/error.hpp"

namespace cjmap {

double TrendFit::predict(double size, double loss) const {
  if (!(loss >= 0 && loss <= 1)) {
    throw Error(ErrorCode::kInvalidArgument, "loss must lie in [0, 1]");
  }
  return extrapolate(size * (1 - loss));
}

TrendFit fit_trend(const std::vector<TrendPoint>& rows, TrendAggregate aggregate) {
  std::map<double, std::pair<double, std::size_t>> by_size;
  for (const auto& r : rows) {
    if (!std::isfinite(r.size) || !std::isfinite(r.log2_count)) {
      throw Error(ErrorCode::kDegenerateData, "non-finite trend row");
    }
    auto& [sum, n] = by_size[r.size];
    sum += r.log2_count;
    ++n;
  }
  if (by_size.size() < 3) {
    throw Error(ErrorCode::kDegenerateData,
                "need at least three distinct sizes, got " + std::to_string(by_size.size()));
  }
  std::vector<TrendPoint> pts;
  if (aggregate == TrendAggregate::kMean) {
    for (const auto& [size, acc] : by_size) {
      pts.push_back({size, acc.first / static_cast<double>(acc.second)});
    }
  } else {
    pts = rows;
  }

  const double n = static_cast<double>(pts.size());
  double mx = 0, my = 0;
  for (const auto& p : pts) {
    mx += p.size;
    my += p.log2_count;
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : pts) {
    sxx += (p.size - mx) * (p.size - mx);
    sxy += (p.size - mx) * (p.log2_count - my);
    syy += (p.log2_count - my) * (p.log2_count - my);
  }
  TrendFit fit;
  fit.points = pts.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  // A flat response is fitted perfectly by a flat line.
  fit.r_squared = syy == 0 ? 1.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  return fit;
}

}  // namespace cjmap

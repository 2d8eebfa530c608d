#include "webpar/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "webpar/error.hpp"

namespace webpar::stats {

double median(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::aggregation, "median of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return lower + (upper - lower) / 2.0;
}

double mad(std::span<const double> values) {
  const double m = median(values);
  std::vector<double> dev;
  dev.reserve(values.size());
  for (double x : values) dev.push_back(std::fabs(x - m));
  return median(dev);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::aggregation, "mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace webpar::stats

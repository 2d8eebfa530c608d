#pragma once

#include <span>

namespace webpar::stats {

// Exact sample median; even-length samples average the two middle values.
// Throws Error(aggregation) on an empty sample.
double median(std::span<const double> values);

// Median absolute deviation, median(|x_i - median(x)|), unscaled.
double mad(std::span<const double> values);

double mean(std::span<const double> values);

}  // namespace webpar::stats

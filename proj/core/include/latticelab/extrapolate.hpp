#pragma once

#include <vector>

namespace latticelab {

struct Extrapolated {
  double value = 0;
  double err = 0;  // size of the last correction
};

// Fit y = c0 + sum_k c_k h^powers[k] through the points and return c0.
// Needs h.size() == powers.size() + 1. err compares with the fit that drops
// the last power and the first point.
Extrapolated richardson(const std::vector<double>& h, const std::vector<double>& y,
                        const std::vector<double>& powers);

// Bulirsch-Stoer diagonal rational interpolation evaluated at h = 0.
Extrapolated rational_extrapolate(const std::vector<double>& h, const std::vector<double>& y);

}  // namespace latticelab

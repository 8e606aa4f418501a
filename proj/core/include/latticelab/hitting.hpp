#pragma once

#include <string>
#include <vector>

namespace latticelab {

// Law of the entrance site into a target set. Sites are lo, lo+1, ...
struct HittingLaw {
  std::string target;
  std::string source;  // integer, "+inf" or "-inf"
  long lo = 0;
  std::vector<double> masses;
  double deficit = 0;  // 1 - total mass
  double err_est = 0;

  double at(long site) const {
    if (site < lo || site >= lo + static_cast<long>(masses.size())) return 0.0;
    return masses[site - lo];
  }
  long hi() const { return lo + static_cast<long>(masses.size()) - 1; }
  double total() const {
    double s = 0;
    for (double m : masses) s += m;
    return s;
  }
};

}  // namespace latticelab

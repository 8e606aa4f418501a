#include "latticelab/extrapolate.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "latticelab/error.hpp"

namespace latticelab {

namespace {

double solve_c0(const std::vector<double>& h, const std::vector<double>& y,
                const std::vector<double>& powers, size_t first, size_t nterms) {
  const size_t m = nterms + 1;
  Eigen::MatrixXd M(m, m);
  Eigen::VectorXd b(m);
  for (size_t r = 0; r < m; ++r) {
    M(r, 0) = 1.0;
    for (size_t k = 0; k < nterms; ++k) M(r, k + 1) = std::pow(h[first + r], powers[k]);
    b(r) = y[first + r];
  }
  return M.colPivHouseholderQr().solve(b)(0);
}

}  // namespace

Extrapolated richardson(const std::vector<double>& h, const std::vector<double>& y,
                        const std::vector<double>& powers) {
  require(h.size() == y.size(), "richardson: size mismatch");
  require(h.size() == powers.size() + 1, "richardson: need one more point than powers");
  Extrapolated out;
  out.value = solve_c0(h, y, powers, 0, powers.size());
  if (powers.empty()) {
    out.err = 0;
  } else {
    double coarse = solve_c0(h, y, powers, 1, powers.size() - 1);
    out.err = std::fabs(out.value - coarse);
  }
  return out;
}

Extrapolated rational_extrapolate(const std::vector<double>& h, const std::vector<double>& y) {
  require(h.size() == y.size() && !h.empty(), "rational_extrapolate: bad input");
  const size_t n = h.size();
  constexpr double tiny = 1e-300;
  std::vector<double> c(y), d(n);
  size_t ns = 0;
  double hh = std::fabs(h[0]);
  for (size_t i = 0; i < n; ++i) {
    double a = std::fabs(h[i]);
    if (a == 0.0) return {y[i], 0.0};
    if (a < hh) {
      ns = i;
      hh = a;
    }
    d[i] = y[i] + tiny;
  }
  double val = y[ns];
  double dy = 0;
  long nsl = static_cast<long>(ns) - 1;
  for (size_t m = 1; m < n; ++m) {
    for (size_t i = 0; i < n - m; ++i) {
      double w = c[i + 1] - d[i];
      double hm = h[i + m];
      double t = h[i] * d[i] / hm;
      double dd = t - c[i + 1];
      if (dd == 0.0) {
        // pole of the interpolant at 0; fall back to the last column value
        dd = tiny;
      }
      dd = w / dd;
      d[i] = c[i + 1] * dd;
      c[i] = t * dd;
    }
    if (2 * (nsl + 1) < static_cast<long>(n - m)) {
      dy = c[nsl + 1];
    } else {
      dy = d[nsl];
      --nsl;
    }
    val += dy;
  }
  return {val, std::fabs(dy)};
}

}  // namespace latticelab

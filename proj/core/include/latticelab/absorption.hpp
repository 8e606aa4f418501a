#pragma once

#include <string>
#include <vector>

#include "latticelab/hitting.hpp"
#include "latticelab/kernel.hpp"
#include "latticelab/law.hpp"

namespace latticelab {

class PotentialTable;

// Ladder heights, renewal functions and the half-line harmonic functions.
// Tables are indexed by x = 1..xmax (f also at 0).
struct LadderStructures {
  double sigma2 = 1;
  long xmax = 0;
  std::vector<double> ascending_law;   // [h-1]: P_0[first entrance to [1,inf) at h]
  std::vector<double> descending_law;  // [h-1]: P_0[first entrance to (-inf,-1] at -h]
  std::vector<double> v_plus_tab, v_minus_tab;  // [x-1]
  std::vector<double> f_plus_tab, f_minus_tab;  // [x]
  double mean_asc = 0, mean_desc = 0;
  double zeta = 0;  // P_0[first weak ascending height = 0]
  double tail_mass = 0;
  double wiener_hopf_residual = 0;
  std::string method;

  double q_plus(long h) const;
  double q_minus(long h) const;
  double v_plus(long x) const;
  double v_minus(long x) const;
  double f_plus(long x) const;
  double f_minus(long x) const;
  // mean_asc * mean_desc * (1 - zeta) - sigma^2 / 2
  double mean_identity_residual() const { return mean_asc * mean_desc * (1 - zeta) - sigma2 / 2; }
};

// Ladder laws from the duality fixed point, then renewal recursion to xmax.
LadderStructures ladder_structures(const IncrementLaw& law, long xmax);

// Same quantities from killed marches on windows [0, L], extrapolated in 1/L.
LadderStructures ladder_structures_windowed(const IncrementLaw& law, long xmax,
                                            const std::vector<long>& windows);

// g_(-inf,0](x, y) for x, y >= 1.
double green_halfline(const LadderStructures& ls, long x, long y);

// H^{+inf}_(-inf,0] on [ymin, 0] via f-; the summation-by-parts form is the cross-check.
HittingLaw hitting_halfline_inf(const LadderStructures& ls, const IncrementLaw& law, long ymin);

// H^x_(-inf,0] on [ymin, 0] for x >= 1 by the last exit decomposition.
HittingLaw hitting_halfline(const LadderStructures& ls, const IncrementLaw& law, long x, long ymin);

// Hitting laws of a finite set for every start x in [xlo, xhi] and from +-inf.
struct FiniteHitting {
  std::vector<long> sites;  // A, ascending
  long xlo = 0, xhi = -1;
  std::vector<std::vector<double>> mass;  // [x - xlo][slot]
  std::vector<double> plus_inf, minus_inf;
  double err_est = 0;
  std::string method;

  bool covers(long x) const { return x >= xlo && x <= xhi; }
  double at(long x, long xi) const;
  double at_plus_inf(long xi) const;
  double at_minus_inf(long xi) const;
  // E_x[f(S_sigma)] for the tabulated x
  long slot(long xi) const;
  HittingLaw law_from(long x) const;
  HittingLaw law_from_inf(int sign) const;
};

// Killed-march route: one dual march per (window, site) gives every start x at
// once; window results are extrapolated rationally in 1/L. Empty `windows`
// picks a default ladder.
FiniteHitting hitting_finite_table(const IncrementLaw& law, const KillingSet& A, long xlo, long xhi,
                                   std::vector<long> windows = {});

// Potential-kernel route: for each x solve sum_xi H(xi) a(xi - eta) = a(x - eta) - u,
// eta in A, with sum H = 1. The +-inf laws use a(x - eta) - a(x) -> -+eta / sigma^2.
FiniteHitting hitting_finite_potential(const IncrementLaw& law, const KillingSet& A,
                                       const PotentialTable& table, long xlo, long xhi);

// Single source; source is an integer or "+inf" / "-inf".
HittingLaw hitting_finite(const IncrementLaw& law, const KillingSet& A, const std::string& source,
                          std::vector<long> windows = {});

}  // namespace latticelab

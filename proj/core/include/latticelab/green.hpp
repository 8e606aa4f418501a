#pragma once

#include <climits>
#include <string>
#include <vector>

#include "latticelab/absorption.hpp"
#include "latticelab/kernel.hpp"
#include "latticelab/law.hpp"
#include "latticelab/potential.hpp"

namespace latticelab {

struct GreenOptions {
  long xi0 = LONG_MIN;     // reference point in A; default min A
  long table_range = -1;   // g_table on [-t, t]^2; negative skips it
  bool series_route = true;
  bool throw_on_disagreement = true;
  std::vector<long> windows;  // half-widths for the series route; empty picks a ladder
};

// Green-function family of the walk killed on a finite set A, tabulated on
// [lo, hi]. Everything is immutable after construction.
struct GreenBundle {
  IncrementLaw law;
  std::vector<long> A;  // ascending
  long xi0 = 0;
  long lo = 0, hi = -1;
  std::vector<double> u, w, g_plus, g_minus;  // [x - lo]
  std::vector<char> v_plus, v_minus;          // structural: g+- > 0
  // membership of every x < min A (resp. > max A) in V+ (resp. V-)
  bool v_plus_left = false, v_minus_right = false;
  std::vector<double> h_plus_inf, h_minus_inf;  // H^{+-inf}_A by slot of A
  double h_err = 0;

  // g_A(x, y) on [-t, t]^2, row-major in x; potential-kernel route, and the
  // series route when it ran
  long table_lo = 0, table_hi = -1;
  std::vector<double> g_table, g_table_series;
  double route_disagreement = 0;  // max |r1 - r2| / (1 + |r1|)
  double series_tail = 0;         // bound on the discarded terms of the finest window

  double C_A_plus = 0;  // C+ - D_A+ when C+ is known, else the tail value
  double C_A_plus_err = 0;
  bool C_A_plus_divergent = false;
  double C_A_plus_tail = 0;  // sigma^2 g-(x) extrapolated in 1/x
  double C_A_plus_tail_err = 0;
  double D_A_plus = 0;

  bool covers(long x) const { return x >= lo && x <= hi; }
  long slot(long xi) const;  // XiNotInA
  double u_at(long x) const;
  double w_at(long x) const;
  double g_plus_at(long x) const;
  double g_minus_at(long x) const;
  // V+- for any x: tabulated inside [lo, hi], tail rule outside
  bool in_v_plus(long x) const;
  bool in_v_minus(long x) const;
  double g(long x, long y) const;         // g_table entry
  double g_series(long x, long y) const;  // series route entry
  long r_plus() const { return A.back() + 1; }
  long r_minus() const { return A.front() - 1; }
};

// Needs a potential table covering [lo, hi] - A plus one step, and hitting laws
// of A for every x in [lo, hi] (hitting_finite_potential or the march table).
GreenBundle green_bundle(const IncrementLaw& law, const KillingSet& A, long lo, long hi,
                         const PotentialTable& table, const FiniteHitting& hitting,
                         const CPlus* c_plus = nullptr, GreenOptions opts = {});

// Builds the hitting laws by the potential-kernel route.
GreenBundle green_bundle(const IncrementLaw& law, const KillingSet& A, long range,
                         const PotentialTable& table, const CPlus* c_plus = nullptr,
                         GreenOptions opts = {});

// Sum_n p^n_{A u W^c}(x, y) for W = [c - L, c + L], x, y in [qlo, qhi], by
// doubling G_2N = G_N + Q^N G_N until |Q^N| is negligible.
struct WindowSeries {
  long L = 0;
  std::vector<double> g;  // row-major over [qlo, qhi]^2
  double tail = 0;
  long terms = 0;
};
WindowSeries green_window_series(const IncrementLaw& law, const KillingSet& A, long c, long L, long qlo,
                                 long qhi);

// Exact reachability for the killed walk. Sites below min A form one
// communicating class, sites above max A another.
bool reachable(const IncrementLaw& law, const KillingSet& A, long x, long y);

enum class ConditionCase { Generic, C1_unreachable, C2_confined };
const char* to_string(ConditionCase c);

struct ConditionResult {
  bool satisfied = false;
  ConditionCase kind = ConditionCase::Generic;
  double value = 0;  // g+(x) g-_{-A}(-y) + g-(x) g+_{-A}(-y)
};

// dual: bundle of the same law on -A, covering -y.
ConditionResult condition_check(const GreenBundle& b, const GreenBundle& dual, long x, long y);

struct EscapeProb {
  double p_right = 0;             // P_x[sigma_[R,inf) < sigma_A]
  double p_right_first_exit = 0;  // P_x[tau_U(R) = sigma_[R,inf) < sigma_A]
  double p_left = 0;              // P_x[sigma_(-inf,-R] < sigma_A]
  double p_both_exact = 0;        // P_x[tau_U(R) < sigma_A]
  double truncation_err = 0;      // spread of the window extrapolation
};

// Direct solves of the harmonic equations on [-mR, R - 1], (-R, R) and
// [-R + 1, mR], m = 8, 16, 32, extrapolated in 1/m; all x in [xlo, xhi] at once.
std::vector<EscapeProb> escape_profile(const IncrementLaw& law, const KillingSet& A, long R, long xlo,
                                       long xhi);
EscapeProb escape_prob(const IncrementLaw& law, const KillingSet& A, long x, long R);

struct OvershootStats {
  double escape_mass = 0;
  double mean_overshoot_given_escape = 0;
  double overshoot_ratio = 0;  // mean / R
  double bound_check = 0;      // E_x[S; escape] - (sigma^2 a(x - xi0) + x - xi0)/2 - c_A, should be <= 0
  double c_A = 0;
};

OvershootStats overshoot_stats(const IncrementLaw& law, const KillingSet& A, long x, long R,
                               const PotentialTable& table);

}  // namespace latticelab

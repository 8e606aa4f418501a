#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "latticelab/absorption.hpp"
#include "latticelab/green.hpp"
#include "latticelab/kernel.hpp"
#include "latticelab/law.hpp"
#include "latticelab/potential.hpp"

namespace latticelab {

struct ContextOptions {
  long range = 64;         // bundles and hitting laws on [-range, range]
  long table_xmax = -1;    // potential table; negative picks range + span + reach + 64
  long ladder_xmax = -1;   // negative picks max(range, 256)
  double M = 4;            // regime constant
  bool with_cplus = true;  // C+ by both routes, needed for the opposite-sign constants
};

class PmfCache;

// Everything the closed forms need, built once from one law and one finite set.
struct AsymptoticContext {
  IncrementLaw law;
  KillingSet A = KillingSet::finite({0});
  double M = 4;
  long range = 0;
  double sigma2 = 1;
  int nu = 1;

  std::optional<PotentialTable> table;
  std::optional<FiniteHitting> hitting, dual_hitting;  // A and -A, same law
  std::optional<GreenBundle> bundle, dual;             // A and -A, same law
  std::optional<LadderStructures> ladder;
  std::optional<HittingLaw> h_halfline;  // H^{+inf} of (-inf, 0]
  std::optional<CPlus> c_plus;

  double C_plus() const;    // via_limit; NaN when divergent or absent
  double C_A_plus() const;
  double D_A_plus() const;

  // p^n, cached per n; thread safe
  const Pmf& pn(long n) const;
  double pn_at(long n, long z) const { return pn(n).at(z); }

  std::shared_ptr<PmfCache> cache;
};

AsymptoticContext make_context(const IncrementLaw& law, const KillingSet& A, ContextOptions opts = {});

enum class FormulaKind { Asymptotic, UpperBound, LowerBound };

struct FormulaInfo {
  std::string id;
  FormulaKind kind;
  const char* summary;
};

const std::vector<FormulaInfo>& formula_catalog();
const FormulaInfo& formula_info(const std::string& id);  // UnknownFormula

struct Prediction {
  std::string formula_id;
  double value = 0;
  bool nat_c_ok = true;
  bool parity_ok = true;  // p^n(y - x) > 0 (or the formula's own lattice condition)
  bool valid = true;      // false when a constant it needs is divergent
  std::string regime_label;
  long x = 0, y = 0, n = 0;

  std::string flags() const;  // "nat_c=1;parity=1;regime=i"
};

// Killed on A at (x, y): generic form and the both-large form.
std::vector<Prediction> predict_generic(const AsymptoticContext& ctx, long x, long y, long n);
// A = {0}: ratio-limit form, the three parabolic regimes and the first-return law.
std::vector<Prediction> predict_single_point(const AsymptoticContext& ctx, long x, long y, long n);
// Killed on (-inf, 0]: pinned kernel, entrance time (period averaged) and
// the leading term of the space-time entrance law.
std::vector<Prediction> predict_halfline(const AsymptoticContext& ctx, long x, long y, long n);
// y < 0 < x: constants C_A+, D_A+, the heavy-tail form and the bound cofactors.
std::vector<Prediction> predict_opposite(const AsymptoticContext& ctx, long x, long y, long n);
// Entrance into A at time n: total, and at the site xi in A.
std::vector<Prediction> predict_hitting(const AsymptoticContext& ctx, long x, long xi, long n);

// Any catalog id.
Prediction predict(const AsymptoticContext& ctx, const std::string& formula_id, long x, long y, long n);

// The exact quantity a formula approximates, by the killed march.
double exact_value(const AsymptoticContext& ctx, const std::string& formula_id, long x, long y, long n);

// Hitting-site law given sigma_A = n in the limit, mixing H^{+inf} and H^{-inf}
// with weights g+ / (g+ + g-) and g- / (g+ + g-); slot order of A.
std::vector<double> hit_site_mixture(const AsymptoticContext& ctx, long x);

struct StudyPoint {
  long n = 0, x = 0, y = 0;
};

enum class ScheduleKind { Fixed, SqrtScaled, OppositeSign };

// Fixed: (x, y). SqrtScaled: (round(cx sqrt n), round(cy sqrt n)).
// OppositeSign: (round(cx sqrt n), -round(cy sqrt n)), at least (1, -1).
// n runs over 2^log2_lo .. 2^log2_hi, each bumped to the next n with p^n(y - x) > 0.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::Fixed;
  long x = 1, y = 1;
  double cx = 0.25, cy = 0.25;
  int log2_lo = 6, log2_hi = 12;
};

std::vector<StudyPoint> make_schedule(const AsymptoticContext& ctx, const ScheduleSpec& spec);

struct StudyRow {
  long n = 0, x = 0, y = 0;
  double exact = 0, predicted = 0, ratio = 0;
  std::string flags;
};

// Last `band_points` rows within tol of 1, and |ratio - 1| nonincreasing over the
// final two doublings up to a factor 1 + slack.
struct TrendRule {
  double tol = 0.1;
  int band_points = 3;
  double slack = 0.1;
};

struct TrendVerdict {
  bool pass = false;
  std::string reason;
  double last_deviation = 0;
};

TrendVerdict evaluate_trend(const std::vector<StudyRow>& rows, const TrendRule& rule);

// Unknown constants: fit on odd log2 n, verify on even log2 n with room `slack`.
struct BoundFit {
  double constant = 0;
  bool verified = false;
  double worst = 0;  // worst exact / (constant * cofactor) on the verification rows (inverse for lower bounds)
  long calibration_rows = 0, verification_rows = 0;
};

BoundFit fit_bound(const std::vector<StudyRow>& rows, FormulaKind kind, double slack = 0.5);

struct StudyResult {
  std::string formula_id;
  std::vector<StudyRow> rows;  // sorted by n
  std::vector<std::string> warnings;
  TrendVerdict trend;
  std::optional<BoundFit> bound;
  bool pass = false;
};

// RegimeViolation when |x| or |y| exceeds M sqrt n; rows with p^n(y - x) = 0 are dropped.
StudyResult ratio_study(const AsymptoticContext& ctx, std::vector<StudyPoint> schedule,
                        const std::string& formula_id, TrendRule rule = {});

enum class LimitDirection { XPlusInf, YMinusInf };

struct ComparisonLimits {
  double ratio = 0;          // finite-(x, y) limit of p_A^n / p_{0}^n as n -> inf, from the bundles
  double limit = 0;          // its limit in the requested direction, from the bundles
  double limit_closed = 0;   // the same limit from the hitting law and a
  bool star = false;         // the walk can pass through A before 0 (continuity classifier)
  bool strict_structural = false;  // same, by exact reachability
  bool consistent = false;   // ratio <= 1, and < 1 exactly when strict_structural
};

// ctx_A on A with 0 in A and |A| >= 2; ctx_0 on {0}, same law. ZeroDenominator
// when the single-point factor in the requested direction vanishes.
ComparisonLimits single_point_comparison(const AsymptoticContext& ctx_A, const AsymptoticContext& ctx_0, long x, long y,
                                 LimitDirection dir);

// Classifier from the continuity flags and the geometry of A.
bool star_condition(const IncrementLaw& law, const KillingSet& A, long x, long y);

// P_x[S at entrance to (-inf, 0] < -eta | sigma_{0} > n, S_n = y], exactly.
double opposite_conditional(const AsymptoticContext& ctx, long x, long y, long n, long eta);
// Same quantity for any law and x > 0; y > 0 is allowed too (the walk must then
// visit (-inf, 0] and come back). ConditionNull when p_{0}^n(x, y) = 0.
double conditional_entrance(const IncrementLaw& law, long x, long y, long n, long eta);

// max over the grid of (x ^ y) |p_{0}^n - p_A^n| / p_{0}^n, same-side points.
double same_side_constant(const AsymptoticContext& ctx, const std::vector<StudyPoint>& grid);

// Limit of p_A^n / p_{0}^n for y < 0 < x both large: C_A+ / C+ or 1 when C+ diverges.
double dichotomy_target(const AsymptoticContext& ctx);

}  // namespace latticelab

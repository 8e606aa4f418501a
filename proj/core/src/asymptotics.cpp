#include "latticelab/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include "latticelab/error.hpp"
#include "latticelab/parallel.hpp"

namespace latticelab {

class PmfCache {
 public:
  std::mutex mu;
  std::map<long, std::unique_ptr<Pmf>> pmfs;
};

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double gn(double s2, double n, double u) { return gauss_density(s2, n, u); }

double dabs(long v) { return std::abs(static_cast<double>(v)); }

void need(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::ContextIncomplete, what);
}

const PotentialTable& table_of(const AsymptoticContext& ctx) {
  need(ctx.table.has_value(), "context has no potential table");
  return *ctx.table;
}

double a_of(const AsymptoticContext& ctx, long x) {
  const auto& t = table_of(ctx);
  need(t.contains(x), "potential table does not reach " + std::to_string(x));
  return t.a(x);
}

double a_dag(const AsymptoticContext& ctx, long x) { return a_of(ctx, x) + (x == 0 ? 1.0 : 0.0); }

const GreenBundle& bundle_of(const AsymptoticContext& ctx, long x) {
  need(ctx.bundle.has_value(), "context has no Green bundle");
  need(ctx.bundle->covers(x), "Green bundle does not cover " + std::to_string(x));
  return *ctx.bundle;
}

const GreenBundle& dual_of(const AsymptoticContext& ctx, long z) {
  need(ctx.dual.has_value(), "context has no dual Green bundle");
  need(ctx.dual->covers(z), "dual Green bundle does not cover " + std::to_string(z));
  return *ctx.dual;
}

const LadderStructures& ladder_of(const AsymptoticContext& ctx, long x) {
  need(ctx.ladder.has_value(), "context has no ladder structures");
  need(x <= ctx.ladder->xmax, "ladder tables do not reach " + std::to_string(x));
  return *ctx.ladder;
}

Prediction base(const std::string& id, long x, long y, long n) {
  Prediction p;
  p.formula_id = id;
  p.x = x;
  p.y = y;
  p.n = n;
  return p;
}

bool parity(const AsymptoticContext& ctx, long z, long n) { return admissible(ctx.law, z, n) && ctx.pn_at(n, z) > 0; }

// both inside [-M, M sqrt n] on one side, the smaller one small
std::string generic_label(double M, long x, long y, long n) {
  const double s = std::sqrt(static_cast<double>(n));
  const double mn = std::min(dabs(x), dabs(y)), mx = std::max(dabs(x), dabs(y));
  if (mx > M * s) return "outside";
  const bool right = x >= -M && y >= -M, left = x <= M && y <= M;
  if ((right || left) && mn <= s / M) return "i";
  if (static_cast<double>(x) * y > 0 && mn >= s / M) return "ii";
  return "outside";
}

std::string bulk_label(double M, long x, long y, long n) {
  const double s = std::sqrt(static_cast<double>(n));
  const double mn = std::min(dabs(x), dabs(y)), mx = std::max(dabs(x), dabs(y));
  if (static_cast<double>(x) * y > 0 && mn > s / M && mx < M * s) return "ii";
  return "outside";
}

std::string opposite_label(double M, long x, long y, long n) {
  const double s = std::sqrt(static_cast<double>(n));
  if (!(y < 0 && x > 0)) return "outside";
  return std::max(dabs(x), dabs(y)) < M * s ? "opposite" : "outside";
}

double first_return(const IncrementLaw& law, long x, long n) {
  auto evo = killed_kernel(law, KillingSet::finite({0}), x, n);
  return entrance_spacetime(evo).time_law[n];
}

const std::vector<long>& sites_of(const AsymptoticContext& ctx) {
  require(ctx.A.kind() == KillingSet::Kind::FiniteSet && !ctx.A.empty(), "context needs a nonempty finite set");
  return ctx.A.sites();
}

}  // namespace

// ---------------------------------------------------------------- context

double AsymptoticContext::C_plus() const {
  if (!c_plus || c_plus->divergent) return kNaN;
  return c_plus->via_limit;
}

double AsymptoticContext::C_A_plus() const {
  need(bundle.has_value(), "context has no Green bundle");
  return bundle->C_A_plus_divergent ? kNaN : bundle->C_A_plus;
}

double AsymptoticContext::D_A_plus() const {
  need(bundle.has_value(), "context has no Green bundle");
  return bundle->D_A_plus;
}

const Pmf& AsymptoticContext::pn(long n) const {
  need(cache != nullptr, "context has no p^n cache");
  std::lock_guard<std::mutex> lock(cache->mu);
  auto it = cache->pmfs.find(n);
  if (it == cache->pmfs.end()) it = cache->pmfs.emplace(n, std::make_unique<Pmf>(nstep_pmf(law, n))).first;
  return *it->second;
}

AsymptoticContext make_context(const IncrementLaw& law, const KillingSet& A, ContextOptions opts) {
  require(A.kind() == KillingSet::Kind::FiniteSet && !A.empty(), "make_context needs a nonempty finite set");
  require(opts.range >= 1, "make_context: range must be positive");
  require(opts.M >= 1, "make_context: M must be at least 1");
  AsymptoticContext ctx;
  ctx.law = law;
  ctx.A = A;
  ctx.M = opts.M;
  ctx.range = opts.range;
  ctx.sigma2 = law.sigma2();
  ctx.nu = law.period();
  ctx.cache = std::make_shared<PmfCache>();

  long amax = 0;
  for (long s : A.sites()) amax = std::max(amax, std::labs(s));
  const long reach = law.max_abs_offset();
  const long ymin = -std::max(128L, 2 * std::labs(law.min_offset()));
  long xmax = opts.table_xmax > 0 ? opts.table_xmax : opts.range + amax + reach + 64;
  xmax = std::max(xmax, -ymin + 64);
  ctx.table = potential_table(law, xmax, PotentialMethod::QuadratureOnly);

  const long lx = opts.ladder_xmax > 0 ? opts.ladder_xmax
                                       : std::max({opts.range, 256L, 3 * std::labs(law.min_offset())});
  ctx.ladder = ladder_structures(law, lx);
  ctx.h_halfline = hitting_halfline_inf(*ctx.ladder, law, ymin);
  if (opts.with_cplus) ctx.c_plus = cplus(law, *ctx.table, *ctx.h_halfline);

  const KillingSet negA = A.negated();
  ctx.hitting = hitting_finite_potential(law, A, *ctx.table, -opts.range, opts.range);
  ctx.dual_hitting = hitting_finite_potential(law, negA, *ctx.table, -opts.range, opts.range);
  GreenOptions go;
  go.series_route = false;
  const CPlus* cp = ctx.c_plus ? &*ctx.c_plus : nullptr;
  ctx.bundle = green_bundle(law, A, -opts.range, opts.range, *ctx.table, *ctx.hitting, cp, go);
  ctx.dual = green_bundle(law, negA, -opts.range, opts.range, *ctx.table, *ctx.dual_hitting, cp, go);
  return ctx;
}

// ---------------------------------------------------------------- catalog

const std::vector<FormulaInfo>& formula_catalog() {
  static const std::vector<FormulaInfo> cat = {
      {"generic", FormulaKind::Asymptotic, "[g+(x) g-_{-A}(-y) + g-(x) g+_{-A}(-y)] sigma^2 / 2n p^n(y - x)"},
      {"generic_uw", FormulaKind::Asymptotic, "[u(x) u_{-A}(-y) - w(x) w_{-A}(-y)] sigma^2 / n p^n(y - x)"},
      {"bulk", FormulaKind::Asymptotic, "nu [g_n(y - x) - g_n(y + x)]"},
      {"hit_time", FormulaKind::Asymptotic, "P_x[sigma_A = n], summed over the entrance sites"},
      {"hit_site", FormulaKind::Asymptotic, "P_x[sigma_A = n, S = xi]"},
      {"ratio_limit", FormulaKind::Asymptotic, "[a+(x) a+(-y) + xy / sigma^4] f_0(n)"},
      {"single_point", FormulaKind::Asymptotic, "[sigma^4 a+(x) a(-y) + xy] / (sigma^2 n) p^n(y - x)"},
      {"single_point_bulk", FormulaKind::Asymptotic, "nu [g_n(y - x) - g_n(y + x)] for xy > 0, else 0"},
      {"single_point_bound", FormulaKind::UpperBound, "(|x| ^ |y|) / (|x| v |y|) g_4n(|x| v |y|)"},
      {"first_return", FormulaKind::Asymptotic, "sigma^2 a+(x) p^n(-x) / n"},
      {"halfline", FormulaKind::Asymptotic, "2 f+(x) f-(y) p^n(y - x) / (sigma^2 n)"},
      {"halfline_exit_time", FormulaKind::Asymptotic, "f+(x) g_n(x) / n, period averaged"},
      {"halfline_exit_site", FormulaKind::Asymptotic, "nu f+(x) g_n(x) H^{+inf}(y) / n"},
      {"opposite", FormulaKind::Asymptotic, "C_A+ (x + |y|) p^n(y - x) / (sigma^2 n)"},
      {"opposite_heavy", FormulaKind::Asymptotic,
       "[(sigma^2 a(x) - x) |y| + (sigma^2 a(-y) + y) x] / (sigma^2 n) p^n(y - x)"},
      {"opposite_difference", FormulaKind::Asymptotic, "D_A+ (x + |y|) p^n(y - x) / (sigma^2 n)"},
      {"opposite_upper", FormulaKind::UpperBound, "[g+(x) g-_{-A}(-y) + g-(x) g+_{-A}(-y)] n^{-3/2}"},
      {"opposite_lower", FormulaKind::LowerBound,
       "sum_{w=2}^{x ^ |y|} p(-w) w^3 (x + |y|) / (sigma^4 n) p^n(y - x)"},
      {"global_bound", FormulaKind::UpperBound,
       "(|x| v |y|) (|x| ^ |y|) g_4n(y - x) / (|x| v |y| v sqrt n)^2"},
  };
  return cat;
}

const FormulaInfo& formula_info(const std::string& id) {
  for (const auto& f : formula_catalog())
    if (f.id == id) return f;
  fail(ErrorCode::UnknownFormula, "unknown formula id '" + id + "'");
}

std::string Prediction::flags() const {
  std::ostringstream os;
  os << "nat_c=" << (nat_c_ok ? 1 : 0) << ";parity=" << (parity_ok ? 1 : 0) << ";regime=" << regime_label;
  if (!valid) os << ";invalid";
  return os.str();
}

// ---------------------------------------------------------------- predictions

std::vector<Prediction> predict_generic(const AsymptoticContext& ctx, long x, long y, long n) {
  require(n >= 1, "predict_generic needs n >= 1");
  require(!ctx.A.kills(y), "predict_generic needs y outside A");
  const auto& b = bundle_of(ctx, x);
  const auto& d = dual_of(ctx, -y);
  const double s2 = ctx.sigma2;
  const auto cond = condition_check(b, d, x, y);
  const bool par = parity(ctx, y - x, n);
  const double pn = ctx.pn_at(n, y - x);
  const double dn = static_cast<double>(n);

  Prediction gen = base("generic", x, y, n);
  gen.nat_c_ok = cond.satisfied;
  gen.parity_ok = par;
  gen.regime_label = generic_label(ctx.M, x, y, n);
  gen.value = cond.satisfied ? cond.value * s2 / (2 * dn) * pn : 0.0;

  Prediction uw = gen;
  uw.formula_id = "generic_uw";
  const double num = b.u_at(x) * d.u_at(-y) - b.w_at(x) * d.w_at(-y);
  uw.value = cond.satisfied ? std::max(0.0, num) * s2 / dn * pn : 0.0;

  Prediction bk = base("bulk", x, y, n);
  bk.nat_c_ok = cond.satisfied;
  bk.parity_ok = par;
  bk.regime_label = bulk_label(ctx.M, x, y, n);
  if (static_cast<double>(x) * y > 0 && par)
    bk.value = std::max(0.0, ctx.nu * (gn(s2, dn, y - x) - gn(s2, dn, std::labs(x + y))));
  return {gen, uw, bk};
}

std::vector<Prediction> predict_hitting(const AsymptoticContext& ctx, long x, long xi, long n) {
  require(n >= 1, "predict_hitting needs n >= 1");
  const auto& sites = sites_of(ctx);
  const auto& b = bundle_of(ctx, x);
  const double s2 = ctx.sigma2, dn = static_cast<double>(n);
  const double gp = b.g_plus_at(x), gm = b.g_minus_at(x);
  const double s = std::sqrt(dn);

  Prediction tot = base("hit_time", x, xi, n);
  tot.regime_label = dabs(x) < ctx.M * s ? "i" : "outside";
  tot.parity_ok = false;
  for (size_t k = 0; k < sites.size(); ++k) {
    const long z = sites[k] - x;
    const double m = (gp * b.h_plus_inf[k] + gm * b.h_minus_inf[k]) * s2 / (2 * dn);
    tot.parity_ok = tot.parity_ok || parity(ctx, z, n);
    tot.value += m * ctx.pn_at(n, z);
  }
  tot.nat_c_ok = gp + gm > 0;

  Prediction site = base("hit_site", x, xi, n);
  const long k = b.slot(xi);
  site.regime_label = tot.regime_label;
  site.nat_c_ok = gp * b.h_plus_inf[k] + gm * b.h_minus_inf[k] > 0;
  site.parity_ok = parity(ctx, xi - x, n);
  site.value = (gp * b.h_plus_inf[k] + gm * b.h_minus_inf[k]) * s2 / (2 * dn) * ctx.pn_at(n, xi - x);
  return {tot, site};
}

std::vector<double> hit_site_mixture(const AsymptoticContext& ctx, long x) {
  const auto& b = bundle_of(ctx, x);
  const double gp = b.g_plus_at(x), gm = b.g_minus_at(x);
  require(gp + gm > 0, "hit_site_mixture: g+(x) + g-(x) vanishes");
  std::vector<double> out(b.A.size());
  for (size_t k = 0; k < out.size(); ++k) out[k] = (gp * b.h_plus_inf[k] + gm * b.h_minus_inf[k]) / (gp + gm);
  return out;
}

std::vector<Prediction> predict_single_point(const AsymptoticContext& ctx, long x, long y, long n) {
  require(n >= 1, "predict_single_point needs n >= 1");
  const double s2 = ctx.sigma2, dn = static_cast<double>(n), s = std::sqrt(dn);
  const double ax = a_dag(ctx, x), ay = a_of(ctx, -y);
  const double xy = static_cast<double>(x) * y;
  const bool par = parity(ctx, y - x, n);
  const double pn = ctx.pn_at(n, y - x);
  const double mn = std::min(dabs(x), dabs(y)), mx = std::max(dabs(x), dabs(y));

  Prediction k = base("ratio_limit", x, y, n);
  const double f0 = first_return(ctx.law, 0, n);
  k.parity_ok = par && f0 > 0;
  k.regime_label = ctx.nu == 1 ? "fixed" : "periodic";
  k.value = y == 0 ? 0.0 : std::max(0.0, (ax * a_dag(ctx, -y) + xy / (s2 * s2)) * f0);

  Prediction ai = base("single_point", x, y, n);
  ai.parity_ok = par;
  ai.regime_label = (mx < ctx.M * s && mn <= s / ctx.M) ? "i" : "outside";
  ai.value = std::max(0.0, (s2 * s2 * ax * ay + xy) / (s2 * dn) * pn);

  Prediction aii = base("single_point_bulk", x, y, n);
  aii.parity_ok = par;
  aii.regime_label = (mn > s / ctx.M && mx < ctx.M * s) ? "ii" : "outside";
  if (xy > 0 && par) aii.value = std::max(0.0, ctx.nu * (gn(s2, dn, y - x) - gn(s2, dn, std::labs(x + y))));

  Prediction aiii = base("single_point_bound", x, y, n);
  aiii.parity_ok = par;
  aiii.regime_label = (mn >= 1 && mn < s && s < mx) ? "iii" : "outside";
  aiii.value = mx > 0 ? mn / mx * gn(s2, 4 * dn, mx) : 0.0;

  Prediction bb = base("first_return", x, y, n);
  bb.parity_ok = parity(ctx, -x, n);
  bb.regime_label = "any";
  bb.value = s2 * ax * ctx.pn_at(n, -x) / dn;
  return {k, ai, aii, aiii, bb};
}

std::vector<Prediction> predict_halfline(const AsymptoticContext& ctx, long x, long y, long n) {
  require(n >= 1, "predict_halfline needs n >= 1");
  require(x > 0, "predict_halfline needs x > 0");
  const auto& ls = ladder_of(ctx, std::max(x, y));
  const double s2 = ctx.sigma2, dn = static_cast<double>(n), s = std::sqrt(dn);
  const double fx = ls.f_plus(x);

  std::vector<Prediction> out;
  if (y > 0) {
    Prediction c = base("halfline", x, y, n);
    c.parity_ok = parity(ctx, y - x, n);
    c.regime_label = (x <= ctx.M * s && y <= ctx.M * s && static_cast<double>(x) * y <= dn / (ctx.M * ctx.M))
                         ? "small_product"
                         : "outside";
    c.value = 2 * fx * ls.f_minus(y) * ctx.pn_at(n, y - x) / (s2 * dn);
    out.push_back(c);
  }
  Prediction t = base("halfline_exit_time", x, y, n);
  t.regime_label = x < ctx.M * s ? "any" : "outside";
  t.value = fx * gn(s2, dn, static_cast<double>(x)) / dn;
  out.push_back(t);
  if (y <= 0) {
    need(ctx.h_halfline.has_value(), "context has no half-line hitting law");
    Prediction h = base("halfline_exit_site", x, y, n);
    h.parity_ok = parity(ctx, y - x, n);
    h.regime_label = t.regime_label;
    if (h.parity_ok) h.value = ctx.nu * fx * gn(s2, dn, static_cast<double>(x)) * ctx.h_halfline->at(y) / dn;
    out.push_back(h);
  }
  return out;
}

std::vector<Prediction> predict_opposite(const AsymptoticContext& ctx, long x, long y, long n) {
  require(n >= 1, "predict_opposite needs n >= 1");
  const double s2 = ctx.sigma2, dn = static_cast<double>(n), s = std::sqrt(dn);
  const bool par = parity(ctx, y - x, n);
  const double pn = ctx.pn_at(n, y - x);
  const double mn = std::min(dabs(x), dabs(y)), mx = std::max(dabs(x), dabs(y));
  const std::string label = opposite_label(ctx.M, x, y, n);
  const double span = dabs(x) + dabs(y);

  std::vector<Prediction> out;
  if (y < 0 && x > 0) {
    need(ctx.bundle.has_value(), "context has no Green bundle");
    Prediction t2 = base("opposite", x, y, n);
    t2.parity_ok = par;
    t2.regime_label = label;
    t2.valid = !ctx.bundle->C_A_plus_divergent;
    t2.value = t2.valid ? std::max(0.0, ctx.bundle->C_A_plus) * span * pn / (s2 * dn) : 0.0;
    out.push_back(t2);

    Prediction t4 = base("opposite_heavy", x, y, n);
    t4.parity_ok = par;
    t4.regime_label = label;
    const double num = (s2 * a_of(ctx, x) - x) * dabs(y) + (s2 * a_of(ctx, -y) + y) * x;
    t4.value = std::max(0.0, num) / (s2 * dn) * pn;
    out.push_back(t4);

    Prediction d = base("opposite_difference", x, y, n);
    d.parity_ok = par;
    d.regime_label = label;
    d.value = std::max(0.0, ctx.bundle->D_A_plus) * span * pn / (s2 * dn);
    out.push_back(d);

    const auto& b = bundle_of(ctx, x);
    const auto& dd = dual_of(ctx, -y);
    const auto cond = condition_check(b, dd, x, y);
    Prediction up = base("opposite_upper", x, y, n);
    up.nat_c_ok = cond.satisfied;
    up.parity_ok = par;
    up.regime_label = label;
    up.value = std::max(0.0, cond.value) / (dn * s);
    out.push_back(up);

    Prediction lo = base("opposite_lower", x, y, n);
    lo.nat_c_ok = cond.satisfied;
    lo.parity_ok = par;
    lo.regime_label = label;
    double m3 = 0;
    for (long w = 2; w <= std::min(x, -y); ++w) m3 += ctx.law.pmf(-w) * static_cast<double>(w) * w * w;
    lo.value = m3 * span / (s2 * s2 * dn) * pn;
    out.push_back(lo);
  }
  Prediction g = base("global_bound", x, y, n);
  g.parity_ok = par;
  g.regime_label = mn >= 1 ? "any" : "outside";
  const double big = std::max(mx, s);
  g.value = mn >= 1 ? mx / big * mn * gn(s2, 4 * dn, static_cast<double>(y - x)) / big : 0.0;
  out.push_back(g);
  return out;
}

Prediction predict(const AsymptoticContext& ctx, const std::string& id, long x, long y, long n) {
  formula_info(id);
  std::vector<Prediction> all;
  if (id == "generic" || id == "generic_uw" || id == "bulk") all = predict_generic(ctx, x, y, n);
  else if (id == "hit_time" || id == "hit_site") all = predict_hitting(ctx, x, y, n);
  else if (id.rfind("halfline", 0) == 0) all = predict_halfline(ctx, x, y, n);
  else if (id.rfind("opposite", 0) == 0 || id == "global_bound") all = predict_opposite(ctx, x, y, n);
  else all = predict_single_point(ctx, x, y, n);
  for (auto& p : all)
    if (p.formula_id == id) return p;
  fail(ErrorCode::Precondition, "formula '" + id + "' does not apply at (" + std::to_string(x) + ", " +
                                    std::to_string(y) + ")");
}

// ---------------------------------------------------------------- exact side

double exact_value(const AsymptoticContext& ctx, const std::string& id, long x, long y, long n) {
  formula_info(id);
  const auto& law = ctx.law;
  const KillingSet zero = KillingSet::finite({0});
  if (id == "ratio_limit" || id.rfind("single_point", 0) == 0) return killed_kernel(law, zero, x, n).live_at(y);
  if (id == "first_return") return first_return(law, x, n);
  if (id == "hit_time" || id == "hit_site") {
    auto es = entrance_spacetime(killed_kernel(law, ctx.A, x, n));
    if (id == "hit_time") return es.time_law[n];
    for (size_t s = 0; s < es.sites.size(); ++s)
      if (es.sites[s] == y) return es.joint[n][s];
    return 0.0;
  }
  const KillingSet half = KillingSet::half_line_left(0);
  if (id == "halfline") return killed_kernel(law, half, x, n).live_at(y);
  if (id == "halfline_exit_time") {
    auto es = entrance_spacetime(killed_kernel(law, half, x, n + ctx.nu - 1));
    double s = 0;
    for (long j = 0; j < ctx.nu; ++j) s += es.time_law[n + j];
    return s / ctx.nu;
  }
  if (id == "halfline_exit_site") {
    auto es = entrance_spacetime(killed_kernel(law, half, x, n));
    for (size_t s = 0; s < es.sites.size(); ++s)
      if (es.sites[s] == y) return es.joint[n][s];
    return 0.0;
  }
  const double pa = killed_kernel(law, ctx.A, x, n).live_at(y);
  if (id == "opposite_difference") return killed_kernel(law, zero, x, n).live_at(y) - pa;
  return pa;
}

// ---------------------------------------------------------------- studies

std::vector<StudyPoint> make_schedule(const AsymptoticContext& ctx, const ScheduleSpec& spec) {
  require(spec.log2_lo >= 0 && spec.log2_lo <= spec.log2_hi && spec.log2_hi < 40, "schedule: bad dyadic range");
  std::vector<StudyPoint> out;
  for (int e = spec.log2_lo; e <= spec.log2_hi; ++e) {
    const long n0 = 1L << e;
    const double s = std::sqrt(static_cast<double>(n0));
    long x = spec.x, y = spec.y;
    if (spec.kind == ScheduleKind::SqrtScaled) {
      x = std::lround(spec.cx * s);
      y = std::lround(spec.cy * s);
    } else if (spec.kind == ScheduleKind::OppositeSign) {
      x = std::max(1L, std::lround(spec.cx * s));
      y = -std::max(1L, std::lround(spec.cy * s));
    }
    long n = n0;
    while (n < n0 + ctx.nu && !admissible(ctx.law, y - x, n)) ++n;
    out.push_back({n, x, y});
  }
  return out;
}

TrendVerdict evaluate_trend(const std::vector<StudyRow>& rows, const TrendRule& rule) {
  TrendVerdict v;
  const size_t need_rows = static_cast<size_t>(std::max(rule.band_points, 3));
  if (rows.size() < need_rows) {
    v.reason = "fewer than " + std::to_string(need_rows) + " admissible rows";
    return v;
  }
  const size_t m = rows.size();
  std::vector<double> dev(m);
  for (size_t i = 0; i < m; ++i) dev[i] = std::abs(rows[i].ratio - 1.0);
  v.last_deviation = dev[m - 1];
  for (size_t i = m - rule.band_points; i < m; ++i) {
    if (!(dev[i] <= rule.tol)) {
      std::ostringstream os;
      os << "n = " << rows[i].n << ": |ratio - 1| = " << dev[i] << " outside " << rule.tol;
      v.reason = os.str();
      return v;
    }
  }
  const double floor = 1e-3 * rule.tol;
  for (size_t i = m - 2; i < m; ++i) {
    if (dev[i] > floor && dev[i] > (1 + rule.slack) * dev[i - 1]) {
      std::ostringstream os;
      os << "deviation grows from " << dev[i - 1] << " (n = " << rows[i - 1].n << ") to " << dev[i]
         << " (n = " << rows[i].n << ")";
      v.reason = os.str();
      return v;
    }
  }
  v.pass = true;
  v.reason = "ok";
  return v;
}

BoundFit fit_bound(const std::vector<StudyRow>& rows, FormulaKind kind, double slack) {
  require(kind != FormulaKind::Asymptotic, "fit_bound needs a bound formula");
  const bool upper = kind == FormulaKind::UpperBound;
  BoundFit f;
  f.constant = upper ? 0.0 : std::numeric_limits<double>::infinity();
  auto odd = [](long n) { return static_cast<long>(std::floor(std::log2(static_cast<double>(n)))) % 2 == 1; };
  for (const auto& r : rows) {
    if (!odd(r.n) || r.predicted <= 0) continue;
    const double q = r.exact / r.predicted;
    f.constant = upper ? std::max(f.constant, q) : std::min(f.constant, q);
    ++f.calibration_rows;
  }
  if (f.calibration_rows == 0) return f;
  f.verified = true;
  f.worst = 0;
  for (const auto& r : rows) {
    if (odd(r.n)) continue;
    ++f.verification_rows;
    double q;
    if (upper) q = r.predicted > 0 ? r.exact / (f.constant * r.predicted) : (r.exact > 0 ? INFINITY : 0.0);
    else q = r.exact > 0 ? f.constant * r.predicted / r.exact : INFINITY;
    f.worst = std::max(f.worst, q);
    if (!(q <= 1 + slack)) f.verified = false;
  }
  if (f.verification_rows == 0) f.verified = false;
  return f;
}

StudyResult ratio_study(const AsymptoticContext& ctx, std::vector<StudyPoint> schedule, const std::string& formula_id,
                        TrendRule rule) {
  const auto& info = formula_info(formula_id);
  StudyResult res;
  res.formula_id = formula_id;
  std::sort(schedule.begin(), schedule.end(), [](const StudyPoint& a, const StudyPoint& b) { return a.n < b.n; });
  std::vector<Prediction> preds;
  for (const auto& p : schedule) {
    const double lim = ctx.M * std::sqrt(static_cast<double>(p.n));
    if (dabs(p.x) > lim || dabs(p.y) > lim) {
      std::ostringstream os;
      os << formula_id << ": (x, y) = (" << p.x << ", " << p.y << ") exceeds M sqrt n = " << lim << " at n = " << p.n;
      fail(ErrorCode::RegimeViolation, os.str());
    }
    auto pr = predict(ctx, formula_id, p.x, p.y, p.n);
    if (!pr.parity_ok) {
      res.warnings.push_back("n = " + std::to_string(p.n) + ": p^n(y - x) = 0, row dropped");
      continue;
    }
    if (pr.regime_label == "outside")
      res.warnings.push_back("n = " + std::to_string(p.n) + ": point outside the formula's regime");
    if (!pr.valid) res.warnings.push_back("n = " + std::to_string(p.n) + ": formula constant is divergent");
    preds.push_back(std::move(pr));
  }
  res.rows.resize(preds.size());
  parallel_for(preds.size(), [&](size_t i) {
    const auto& pr = preds[i];
    StudyRow& r = res.rows[i];
    r.n = pr.n;
    r.x = pr.x;
    r.y = pr.y;
    r.predicted = pr.value;
    r.exact = exact_value(ctx, formula_id, pr.x, pr.y, pr.n);
    r.ratio = pr.value != 0 ? r.exact / pr.value : kNaN;
    r.flags = pr.flags();
  });
  if (info.kind == FormulaKind::Asymptotic) {
    res.trend = evaluate_trend(res.rows, rule);
    res.pass = res.trend.pass;
  } else {
    res.bound = fit_bound(res.rows, info.kind);
    res.trend.pass = res.bound->verified;
    std::ostringstream os;
    os << "constant " << res.bound->constant << ", worst verification ratio " << res.bound->worst;
    res.trend.reason = os.str();
    res.pass = res.bound->verified;
  }
  return res;
}

// ---------------------------------------------------------------- comparison with {0}

bool star_condition(const IncrementLaw& law, const KillingSet& A, long x, long y) {
  require(A.kind() == KillingSet::Kind::FiniteSet, "star_condition needs a finite set");
  const auto& s = A.sites();
  const bool above = std::any_of(s.begin(), s.end(), [](long v) { return v >= 1; });
  const bool below = std::any_of(s.begin(), s.end(), [](long v) { return v <= -1; });
  if (x > 0) return (y > 0 && above) || (y < 0 && !law.left_continuous());
  if (x < 0) return (y < 0 && below) || (y > 0 && !law.right_continuous());
  for (const auto& at : law.atoms()) {
    const long z = at.offset;
    if (z != 0 && (A.kills(z) || star_condition(law, A, z, y))) return true;
  }
  return false;
}

ComparisonLimits single_point_comparison(const AsymptoticContext& cA, const AsymptoticContext& c0, long x, long y,
                                 LimitDirection dir) {
  const auto& sa = sites_of(cA);
  require(std::binary_search(sa.begin(), sa.end(), 0L) && sa.size() >= 2, "single_point_comparison needs 0 in A and |A| >= 2");
  require(sites_of(c0) == std::vector<long>{0}, "single_point_comparison needs the {0} context");
  require(cA.law == c0.law, "single_point_comparison: contexts built from different laws");
  require(!cA.A.kills(x) && !cA.A.kills(y), "single_point_comparison needs x, y outside A");
  const auto& bA = bundle_of(cA, x);
  const auto& dA = dual_of(cA, -y);
  const auto& b0 = bundle_of(c0, x);
  const auto& d0 = dual_of(c0, -y);
  const double s2 = cA.sigma2;

  ComparisonLimits r;
  const double num = bA.g_plus_at(x) * dA.g_minus_at(-y) + bA.g_minus_at(x) * dA.g_plus_at(-y);
  const double den = b0.g_plus_at(x) * d0.g_minus_at(-y) + b0.g_minus_at(x) * d0.g_plus_at(-y);
  if (!(den > 0)) fail(ErrorCode::ZeroDenominator, "p_{0}^n(x, y) vanishes at the generic order");
  r.ratio = num / den;

  const double tiny = 1e-12;
  if (dir == LimitDirection::XPlusInf) {
    const double dd = s2 * a_of(cA, -y) + y;
    if (std::abs(dd) < tiny) fail(ErrorCode::ZeroDenominator, "sigma^2 a(-y) + y = 0");
    r.limit = dA.g_minus_at(-y) / d0.g_minus_at(-y);
    double e = 0;
    for (long xi : sa) {
      const double h = cA.dual_hitting->at(-y, -xi);
      e += h * (s2 * a_of(cA, -xi) + xi);
    }
    r.limit_closed = 1 - e / dd;
  } else {
    const double dd = s2 * a_dag(cA, x) - x;
    if (std::abs(dd) < tiny) fail(ErrorCode::ZeroDenominator, "sigma^2 a(x) - x = 0");
    r.limit = bA.g_minus_at(x) / b0.g_minus_at(x);
    double e = 0;
    for (long xi : sa) e += cA.hitting->at(x, xi) * (s2 * a_of(cA, xi) - xi);
    r.limit_closed = 1 - e / dd;
  }

  r.star = star_condition(cA.law, cA.A, x, y);
  const KillingSet zero = KillingSet::finite({0});
  for (long xi : sa) {
    if (xi == 0) continue;
    if (reachable(cA.law, zero, x, xi) && reachable(cA.law, zero, xi, y)) r.strict_structural = true;
  }
  const double eps = 1e-9;
  r.consistent = r.ratio <= 1 + eps && ((r.ratio < 1 - eps) == r.strict_structural);
  return r;
}

// ---------------------------------------------------------------- conditional entrance

double conditional_entrance(const IncrementLaw& law, long x, long y, long n, long eta) {
  require(n >= 1 && eta >= 0, "conditional entrance needs n >= 1 and eta >= 0");
  require(x > 0 && y != 0, "conditional entrance needs x > 0 and y != 0");
  const KillingSet zero = KillingSet::finite({0});
  const double den = killed_kernel(law, zero, x, n).live_at(y);
  if (!(den > 0)) fail(ErrorCode::ConditionNull, "p_{0}^n(x, y) = 0");

  // h_x(k, z) from the half-line march, then p_{0}^m(z, y) = p_{0}^m(-y, -z) from one march started at -y
  auto half = killed_kernel(law, KillingSet::half_line_left(0), x, n);
  std::vector<size_t> slots;
  for (size_t s = 0; s < half.entrance_sites.size(); ++s)
    if (half.entrance_sites[s] < -eta) slots.push_back(s);
  long extent = std::labs(y) + 1;
  for (size_t s : slots) extent = std::max(extent, std::labs(half.entrance_sites[s]) + 1);
  KilledMarch back(law, zero, default_window(law, n, extent), -y);
  double num = 0;
  for (long m = 0; m < n; ++m) {
    const auto& row = half.entrance_ledger[n - m - 1];
    for (size_t s : slots)
      if (row[s] > 0) num += row[s] * back.live(-half.entrance_sites[s]);
    back.step();
  }
  return num / den;
}

double opposite_conditional(const AsymptoticContext& ctx, long x, long y, long n, long eta) {
  require(y < 0 && x > 0, "opposite_conditional needs y < 0 < x");
  return conditional_entrance(ctx.law, x, y, n, eta);
}

double same_side_constant(const AsymptoticContext& ctx, const std::vector<StudyPoint>& grid) {
  const KillingSet zero = KillingSet::finite({0});
  std::vector<double> c(grid.size(), 0.0);
  parallel_for(grid.size(), [&](size_t i) {
    const auto& p = grid[i];
    if (static_cast<double>(p.x) * p.y <= 0) return;
    const double p0 = killed_kernel(ctx.law, zero, p.x, p.n).live_at(p.y);
    if (!(p0 > 0)) return;
    const double pa = killed_kernel(ctx.law, ctx.A, p.x, p.n).live_at(p.y);
    c[i] = std::min(dabs(p.x), dabs(p.y)) * std::abs(p0 - pa) / p0;
  });
  double mx = 0;
  for (double v : c) mx = std::max(mx, v);
  return mx;
}

double dichotomy_target(const AsymptoticContext& ctx) {
  need(ctx.c_plus.has_value() && ctx.bundle.has_value(), "dichotomy_target needs C+ and the Green bundle");
  if (ctx.c_plus->divergent) return 1.0;
  return ctx.bundle->C_A_plus / ctx.c_plus->via_limit;
}

}  // namespace latticelab

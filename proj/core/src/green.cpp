#include "latticelab/green.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "latticelab/error.hpp"
#include "latticelab/extrapolate.hpp"
#include "latticelab/parallel.hpp"

namespace latticelab {

namespace {

constexpr double kZeroTol = 1e-12;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<long> sorted_sites(const KillingSet& A) {
  require(A.kind() == KillingSet::Kind::FiniteSet && !A.empty(), "green: A must be a nonempty finite set");
  auto s = A.sites();
  std::sort(s.begin(), s.end());
  return s;
}

// Reachability graph: node 0 is every site below min A, node 1 every site
// above max A, then the non-A sites strictly inside the hull.
class Reach {
 public:
  Reach(const IncrementLaw& law, std::vector<long> A) : law_(law), A_(std::move(A)) {
    lo_ = A_.front();
    hi_ = A_.back();
    index_.assign(hi_ - lo_ + 1, -1);
    long n = 2;
    for (long z = lo_ + 1; z < hi_; ++z)
      if (!in_A(z)) index_[z - lo_] = n++;
    nodes_ = n;
  }

  bool in_A(long z) const { return std::binary_search(A_.begin(), A_.end(), z); }

  // -1 for sites of A
  long node_of(long z) const {
    if (z < lo_) return 0;
    if (z > hi_) return 1;
    return index_[z - lo_];
  }

  // nodes reachable in at least one step from x
  std::vector<char> from_site(long x) const {
    std::vector<char> seen(nodes_, 0);
    std::deque<long> q;
    auto push = [&](long v) {
      if (v >= 0 && !seen[v]) {
        seen[v] = 1;
        q.push_back(v);
      }
    };
    for (long v : first_step(x)) push(v);
    while (!q.empty()) {
      const long v = q.front();
      q.pop_front();
      for (long s : successors(v)) push(s);
    }
    return seen;
  }

  bool reaches_right(long x) const { return from_site(x)[1] != 0; }
  bool reaches_left(long x) const { return from_site(x)[0] != 0; }

 private:
  std::vector<long> first_step(long x) const {
    if (x < lo_) return successors(0);
    if (x > hi_) return successors(1);
    std::vector<long> out;
    for (const auto& at : law_.atoms()) out.push_back(node_of(x + at.offset));
    return out;
  }

  std::vector<long> successors(long v) const {
    std::vector<long> out;
    if (v == 0 || v == 1) {
      // a class reaches every landing site of its members: (-inf, lo - 1 + max]
      // from below, [hi + 1 + min, inf) from above
      const long a = v == 0 ? std::numeric_limits<long>::min() / 4 : hi_ + 1 + law_.min_offset();
      const long b = v == 0 ? lo_ - 1 + law_.max_offset() : std::numeric_limits<long>::max() / 4;
      if (a < lo_) out.push_back(0);
      if (b > hi_) out.push_back(1);
      for (long z = std::max(a, lo_ + 1); z <= std::min(b, hi_ - 1); ++z) out.push_back(node_of(z));
      return out;
    }
    const long z = site_of(v);
    for (const auto& at : law_.atoms()) out.push_back(node_of(z + at.offset));
    return out;
  }

  long site_of(long v) const {
    for (long i = 0; i < static_cast<long>(index_.size()); ++i)
      if (index_[i] == v) return lo_ + i;
    return 0;
  }

  const IncrementLaw& law_;
  std::vector<long> A_;
  long lo_ = 0, hi_ = 0, nodes_ = 2;
  std::vector<long> index_;
};

double a_safe(const PotentialTable& t, long x) {
  if (!t.contains(x)) fail(ErrorCode::OutOfRange, "green: potential table does not cover " + std::to_string(x));
  return t.a(x);
}

// value of y -> sum_k p(k) f(x + k)
template <class F>
double one_step(const IncrementLaw& law, long x, F&& f) {
  double s = 0;
  for (const auto& at : law.atoms()) s += at.prob * f(x + at.offset);
  return s;
}

}  // namespace

long GreenBundle::slot(long xi) const {
  const auto it = std::lower_bound(A.begin(), A.end(), xi);
  if (it == A.end() || *it != xi) fail(ErrorCode::XiNotInA, "site " + std::to_string(xi) + " not in A");
  return it - A.begin();
}

namespace {
double bundle_at(const GreenBundle& b, const std::vector<double>& v, long x) {
  if (!b.covers(x)) fail(ErrorCode::OutOfRange, "green bundle: x = " + std::to_string(x) + " outside range");
  return v[x - b.lo];
}
}  // namespace

double GreenBundle::u_at(long x) const { return bundle_at(*this, u, x); }
double GreenBundle::w_at(long x) const { return bundle_at(*this, w, x); }
double GreenBundle::g_plus_at(long x) const { return bundle_at(*this, g_plus, x); }
double GreenBundle::g_minus_at(long x) const { return bundle_at(*this, g_minus, x); }

bool GreenBundle::in_v_plus(long x) const {
  if (covers(x)) return v_plus[x - lo] != 0;
  if (x > A.back()) return true;
  return v_plus_left;
}

bool GreenBundle::in_v_minus(long x) const {
  if (covers(x)) return v_minus[x - lo] != 0;
  if (x < A.front()) return true;
  return v_minus_right;
}

double GreenBundle::g(long x, long y) const {
  if (x < table_lo || x > table_hi || y < table_lo || y > table_hi)
    fail(ErrorCode::OutOfRange, "green bundle: g_table does not cover the pair");
  return g_table[(x - table_lo) * (table_hi - table_lo + 1) + (y - table_lo)];
}

double GreenBundle::g_series(long x, long y) const {
  if (g_table_series.empty()) fail(ErrorCode::OutOfRange, "green bundle: series route was not run");
  if (x < table_lo || x > table_hi || y < table_lo || y > table_hi)
    fail(ErrorCode::OutOfRange, "green bundle: g_table does not cover the pair");
  return g_table_series[(x - table_lo) * (table_hi - table_lo + 1) + (y - table_lo)];
}

WindowSeries green_window_series(const IncrementLaw& law, const KillingSet& A, long c, long L, long qlo,
                                 long qhi) {
  require(qlo >= c - L && qhi <= c + L, "green_window_series: query outside the window");
  std::vector<long> idx(2 * L + 1, -1), sites;
  for (long z = c - L; z <= c + L; ++z)
    if (!A.kills(z)) {
      idx[z - c + L] = static_cast<long>(sites.size());
      sites.push_back(z);
    }
  const long n = static_cast<long>(sites.size());
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (long i = 0; i < n; ++i)
    for (const auto& at : law.atoms()) {
      const long z = sites[i] + at.offset;
      if (z < c - L || z > c + L) continue;
      const long j = idx[z - c + L];
      if (j >= 0) P(i, j) += at.prob;
    }
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd tmp(n, n);
  WindowSeries out;
  out.L = L;
  long terms = 1;
  double tail = 1;
  for (int it = 0; it < 64; ++it) {
    tmp.noalias() = P * G;
    G += tmp;
    tmp.noalias() = P * P;
    P.swap(tmp);
    terms *= 2;
    const double pn = P.cwiseAbs().rowwise().sum().maxCoeff();
    const double gn = G.cwiseAbs().rowwise().sum().maxCoeff();
    tail = pn < 1 ? pn * gn / (1 - pn) : std::numeric_limits<double>::infinity();
    if (tail < 1e-14 * gn) break;
  }
  out.tail = tail;
  out.terms = terms;
  const long m = qhi - qlo + 1;
  out.g.assign(m * m, 0.0);
  for (long x = qlo; x <= qhi; ++x) {
    const long i = idx[x - c + L];
    if (i < 0) continue;
    for (long y = qlo; y <= qhi; ++y) {
      const long j = idx[y - c + L];
      if (j >= 0) out.g[(x - qlo) * m + (y - qlo)] = G(i, j);
    }
  }
  return out;
}

GreenBundle green_bundle(const IncrementLaw& law, const KillingSet& A, long lo, long hi, const PotentialTable& table,
                         const FiniteHitting& hitting, const CPlus* c_plus, GreenOptions opts) {
  require(lo <= hi, "green_bundle: empty range");
  GreenBundle b;
  b.law = law;
  b.A = sorted_sites(A);
  require(hitting.sites == b.A, "green_bundle: hitting laws belong to another set");
  require(hitting.covers(lo) && hitting.covers(hi), "green_bundle: hitting laws do not cover the range");
  b.xi0 = opts.xi0 == LONG_MIN ? b.A.front() : opts.xi0;
  b.slot(b.xi0);
  b.lo = lo;
  b.hi = hi;
  const double s2 = law.sigma2();
  const long k = static_cast<long>(b.A.size());
  const long xi0 = b.xi0;

  std::vector<double> a_xi(k);
  for (long s = 0; s < k; ++s) a_xi[s] = a_safe(table, b.A[s] - xi0);

  const long m = hi - lo + 1;
  b.u.resize(m);
  b.w.resize(m);
  b.g_plus.resize(m);
  b.g_minus.resize(m);
  for (long x = lo; x <= hi; ++x) {
    const auto& h = hitting.mass[x - hitting.xlo];
    double ea = 0, es = 0;
    for (long s = 0; s < k; ++s) {
      ea += h[s] * a_xi[s];
      es += h[s] * static_cast<double>(b.A[s]);
    }
    const long i = x - lo;
    b.u[i] = a_safe(table, x - xi0) + (x == xi0 ? 1.0 : 0.0) - ea;
    b.w[i] = (static_cast<double>(x) - es) / s2;
    b.g_plus[i] = b.u[i] + b.w[i];
    b.g_minus[i] = b.u[i] - b.w[i];
  }
  b.h_err = hitting.err_est;

  const Reach reach(law, b.A);
  b.v_plus.resize(m);
  b.v_minus.resize(m);
  const bool left_up = reach.reaches_right(b.A.front() - 1);
  const bool right_down = reach.reaches_left(b.A.back() + 1);
  b.v_plus_left = left_up;
  b.v_minus_right = right_down;
  for (long x = lo; x <= hi; ++x) {
    const long i = x - lo;
    if (x < b.A.front()) {
      b.v_plus[i] = left_up;
      b.v_minus[i] = 1;
    } else if (x > b.A.back()) {
      b.v_plus[i] = 1;
      b.v_minus[i] = right_down;
    } else {
      const auto seen = reach.from_site(x);
      b.v_plus[i] = seen[1];
      b.v_minus[i] = seen[0];
    }
  }

  b.h_plus_inf = hitting.plus_inf;
  b.h_minus_inf = hitting.minus_inf;
  for (long s = 0; s < k; ++s)
    b.D_A_plus += b.h_plus_inf[s] * (s2 * a_xi[s] - static_cast<double>(b.A[s] - xi0));

  // sigma^2 g-(x) as x -> inf, Richardson in 1/x
  const long span = hi - b.A.back();
  if (span >= 16) {
    const long x1 = b.A.back() + span / 4, x2 = b.A.back() + span / 2, x3 = hi;
    const std::vector<double> hs{1.0 / x1, 1.0 / x2, 1.0 / x3};
    const std::vector<double> ys{s2 * b.g_minus[x1 - lo], s2 * b.g_minus[x2 - lo], s2 * b.g_minus[x3 - lo]};
    const auto r = richardson(hs, ys, {1.0, 2.0});
    b.C_A_plus_tail = r.value;
    b.C_A_plus_tail_err = std::max(r.err, std::abs(ys[2] - ys[1]));
  } else {
    b.C_A_plus_tail = kNaN;
    b.C_A_plus_tail_err = kNaN;
  }
  if (c_plus) {
    b.C_A_plus_divergent = c_plus->divergent;
    b.C_A_plus = c_plus->divergent ? kNaN : c_plus->via_limit - b.D_A_plus;
    b.C_A_plus_err = c_plus->via_limit_err + s2 * b.h_err;
  } else {
    b.C_A_plus = b.C_A_plus_tail;
    b.C_A_plus_err = b.C_A_plus_tail_err;
  }

  if (opts.table_range >= 0) {
    const long t = opts.table_range;
    require(t >= 0 && -t >= lo && t <= hi, "green_bundle: table range must lie inside the bundle range");
    b.table_lo = -t;
    b.table_hi = t;
    const long q = 2 * t + 1;
    b.g_table.assign(q * q, 0.0);
    for (long x = -t; x <= t; ++x) {
      const auto& h = hitting.mass[x - hitting.xlo];
      const double base = a_safe(table, x - xi0) + (x == xi0 ? 1.0 : 0.0);
      for (long y = -t; y <= t; ++y) {
        double e = 0;
        for (long s = 0; s < k; ++s) e += h[s] * (a_safe(table, b.A[s] - y) - a_xi[s]);
        b.g_table[(x + t) * q + (y + t)] = base - a_safe(table, x - y) + e;
      }
    }

    const long reach_off = law.max_abs_offset();
    const long c = (b.A.front() + b.A.back()) / 2;
    const long qlo = -t - reach_off, qhi = t + reach_off;
    const long ext = std::max(std::abs(qlo - c), std::abs(qhi - c));
    std::vector<long> Ls = opts.windows;
    if (Ls.empty()) {
      const long L0 = std::max<long>(32, 2 * ext + 2 * reach_off);
      for (double f : {1.0, 1.5, 2.0, 3.0, 4.0}) Ls.push_back(static_cast<long>(f * L0));
    }
    // dense doubling costs O(L^3 log L); wide laws keep only the potential route
    const bool run_series = opts.series_route && Ls.back() <= 600;
    if (run_series) {
      for (long L : Ls) require(L >= ext, "green_bundle: series window narrower than the table");
      std::vector<WindowSeries> runs(Ls.size());
      parallel_for(Ls.size(), [&](std::size_t i) { runs[i] = green_window_series(law, A, c, Ls[i], qlo, qhi); });
      const long qm = qhi - qlo + 1;
      std::vector<double> hs;
      for (long L : Ls) hs.push_back(1.0 / static_cast<double>(L));
      b.series_tail = runs.back().tail;
      // series over non-A starts, extrapolated entrywise
      std::vector<double> gs(qm * qm, 0.0);
      std::vector<double> ys(Ls.size());
      for (long e = 0; e < qm * qm; ++e) {
        for (std::size_t i = 0; i < Ls.size(); ++i) ys[i] = runs[i].g[e];
        gs[e] = ys.back() == 0.0 ? 0.0 : rational_extrapolate(hs, ys).value;
      }
      auto gsz = [&](long x, long y) { return gs[(x - qlo) * qm + (y - qlo)]; };
      b.g_table_series.assign(q * q, 0.0);
      for (long x = -t; x <= t; ++x)
        for (long y = -t; y <= t; ++y) {
          double v;
          if (A.kills(y)) {
            v = x == y ? 1.0 : 0.0;
          } else if (A.kills(x)) {
            v = one_step(law, x, [&](long z) { return A.kills(z) ? 0.0 : gsz(z, y); });
          } else {
            v = gsz(x, y);
          }
          b.g_table_series[(x + t) * q + (y + t)] = v;
        }
      double worst = 0;
      for (long e = 0; e < q * q; ++e)
        worst = std::max(worst, std::abs(b.g_table_series[e] - b.g_table[e]) / (1 + std::abs(b.g_table_series[e])));
      b.route_disagreement = worst;
      if (opts.throw_on_disagreement && worst > 1e-5)
        fail(ErrorCode::RoutesDisagree, "green_bundle: g_table routes differ by " + std::to_string(worst));
    } else {
      b.route_disagreement = kNaN;
      b.series_tail = kNaN;
    }
  }
  return b;
}

GreenBundle green_bundle(const IncrementLaw& law, const KillingSet& A, long range, const PotentialTable& table,
                         const CPlus* c_plus, GreenOptions opts) {
  require(range >= 0, "green_bundle: range must be nonnegative");
  const auto h = hitting_finite_potential(law, A, table, -range, range);
  return green_bundle(law, A, -range, range, table, h, c_plus, std::move(opts));
}

bool reachable(const IncrementLaw& law, const KillingSet& A, long x, long y) {
  if (x == y) return true;
  if (A.kills(y)) return false;
  const Reach r(law, sorted_sites(A));
  return r.from_site(x)[r.node_of(y)] != 0;
}

const char* to_string(ConditionCase c) {
  switch (c) {
    case ConditionCase::Generic: return "Generic";
    case ConditionCase::C1_unreachable: return "C1_unreachable";
    case ConditionCase::C2_confined: return "C2_confined";
  }
  return "?";
}

ConditionResult condition_check(const GreenBundle& b, const GreenBundle& dual, long x, long y) {
  std::vector<long> neg;
  for (long a : b.A) neg.push_back(-a);
  std::sort(neg.begin(), neg.end());
  require(dual.A == neg, "condition_check: dual bundle must be built on -A");
  ConditionResult r;
  r.value = b.g_plus_at(x) * dual.g_minus_at(-y) + b.g_minus_at(x) * dual.g_plus_at(-y);
  const double scale = 1 + std::abs(static_cast<double>(x)) + std::abs(static_cast<double>(y));
  r.satisfied = r.value > kZeroTol * scale * scale;
  if (r.satisfied) return r;
  r.kind = reachable(b.law, KillingSet::finite(b.A), x, y) ? ConditionCase::C2_confined
                                                          : ConditionCase::C1_unreachable;
  return r;
}

namespace {

enum class FarSide { None, Left, Right };

// Solves h = Q h + rhs on the non-A sites of [wlo, whi]. Sites outside take
// boundary(z), except beyond a far end (the side the window was stretched on),
// which take one constant c fixed by c = h(far edge). A sites are 0.
class HarmonicSolver {
 public:
  HarmonicSolver(const IncrementLaw& law, const KillingSet& A, long wlo, long whi, FarSide far)
      : law_(law), A_(A), wlo_(wlo), whi_(whi), far_(far) {
    idx_.assign(whi - wlo + 1, -1);
    long n = 0;
    for (long z = wlo; z <= whi; ++z)
      if (!A.kills(z)) idx_[z - wlo] = n++;
    n_ = n;
    std::vector<Eigen::Triplet<double>> trip;
    for (long z = wlo; z <= whi; ++z) {
      const long i = idx_[z - wlo];
      if (i < 0) continue;
      trip.emplace_back(i, i, 1.0);
      for (const auto& at : law.atoms()) {
        const long y = z + at.offset;
        if (y < wlo || y > whi) continue;
        const long j = idx_[y - wlo];
        if (j >= 0) trip.emplace_back(i, j, -at.prob);
      }
    }
    Eigen::SparseMatrix<double> M(n, n);
    M.setFromTriplets(trip.begin(), trip.end());
    lu_.compute(M);
    if (lu_.info() != Eigen::Success) fail(ErrorCode::Precondition, "escape: singular harmonic system");
    if (far_ == FarSide::None) return;
    edge_ = far_ == FarSide::Left ? wlo : whi;
    while (idx_[edge_ - wlo_] < 0) edge_ += far_ == FarSide::Left ? 1 : -1;
    ones_ = raw([&](long z) { return beyond_far(z) ? 1.0 : 0.0; });
  }

  template <class F>
  std::vector<double> solve(F&& boundary, long xlo, long xhi) const {
    const Eigen::VectorXd h0 = raw([&](long z) { return beyond_far(z) ? 0.0 : boundary(z); });
    double c = 0;
    Eigen::VectorXd h = h0;
    if (far_ != FarSide::None) {
      const long e = idx_[edge_ - wlo_];
      c = h0[e] / (1 - ones_[e]);
      h += c * ones_;
    }
    auto value = [&](long z) {
      if (beyond_far(z)) return c;
      if (z < wlo_ || z > whi_) return boundary(z);
      const long i = idx_[z - wlo_];
      return i < 0 ? 0.0 : h[i];
    };
    std::vector<double> out;
    for (long x = xlo; x <= xhi; ++x) out.push_back(A_.kills(x) ? one_step(law_, x, value) : value(x));
    return out;
  }

 private:
  bool beyond_far(long z) const {
    return (far_ == FarSide::Left && z < wlo_) || (far_ == FarSide::Right && z > whi_);
  }

  template <class F>
  Eigen::VectorXd raw(F&& outside) const {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_);
    for (long z = wlo_; z <= whi_; ++z) {
      const long i = idx_[z - wlo_];
      if (i < 0) continue;
      for (const auto& at : law_.atoms()) {
        const long y = z + at.offset;
        if (y < wlo_ || y > whi_) rhs[i] += at.prob * outside(y);
      }
    }
    return lu_.solve(rhs);
  }

  const IncrementLaw& law_;
  const KillingSet& A_;
  long wlo_, whi_, n_ = 0, edge_ = 0;
  FarSide far_;
  std::vector<long> idx_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  Eigen::VectorXd ones_;
};

void check_escape_pre(const KillingSet& A, long R, long xlo, long xhi) {
  const auto s = sorted_sites(A);
  require(R >= 1, "escape: R must be positive");
  require(s.front() > -R && s.back() < R, "escape: A must lie inside U(R)");
  require(xlo > -R && xhi < R && xlo <= xhi, "escape: need |x| < R");
}

// The closed far boundary leaves an O(1/W) error; three stretch factors and a
// rational fit in 1/W remove it. Returns values and the spread of the fit.
constexpr long kStretch[] = {8, 16, 32};

template <class Solve>
std::pair<std::vector<double>, double> stretched(Solve&& solve_for) {
  std::vector<double> hs;
  std::vector<std::vector<double>> runs;
  for (long m : kStretch) {
    hs.push_back(1.0 / static_cast<double>(m));
    runs.push_back(solve_for(m));
  }
  std::vector<double> out(runs[0].size());
  double err = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::vector<double> ys{runs[0][i], runs[1][i], runs[2][i]};
    if (ys[0] == ys[1] && ys[1] == ys[2]) {
      out[i] = ys[2];
      continue;
    }
    const auto r = rational_extrapolate(hs, ys);
    out[i] = r.value;
    err = std::max(err, std::max(r.err, std::abs(r.value - ys[2]) * 1e-3));
  }
  return {out, err};
}

}  // namespace

std::vector<EscapeProb> escape_profile(const IncrementLaw& law, const KillingSet& A, long R, long xlo, long xhi) {
  check_escape_pre(A, R, xlo, xhi);
  std::vector<EscapeProb> out(xhi - xlo + 1);
  const auto [pr, er] = stretched([&](long m) {
    const HarmonicSolver hs(law, A, -m * R, R - 1, FarSide::Left);
    return hs.solve([&](long z) { return z >= R ? 1.0 : 0.0; }, xlo, xhi);
  });
  const auto [pl, el] = stretched([&](long m) {
    const HarmonicSolver hs(law, A, -R + 1, m * R, FarSide::Right);
    return hs.solve([&](long z) { return z <= -R ? 1.0 : 0.0; }, xlo, xhi);
  });
  const HarmonicSolver box(law, A, -R + 1, R - 1, FarSide::None);
  auto right = box.solve([&](long z) { return z >= R ? 1.0 : 0.0; }, xlo, xhi);
  auto left = box.solve([&](long z) { return z <= -R ? 1.0 : 0.0; }, xlo, xhi);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].p_right = pr[i];
    out[i].p_left = pl[i];
    out[i].p_right_first_exit = right[i];
    out[i].p_both_exact = right[i] + left[i];
    out[i].truncation_err = std::max(er, el);
  }
  if (std::max(er, el) > 1e-10)
    fail(ErrorCode::HorizonExceeded, "escape: window extrapolation spread " + std::to_string(std::max(er, el)));
  return out;
}

EscapeProb escape_prob(const IncrementLaw& law, const KillingSet& A, long x, long R) {
  return escape_profile(law, A, R, x, x).front();
}

OvershootStats overshoot_stats(const IncrementLaw& law, const KillingSet& A, long x, long R,
                               const PotentialTable& table) {
  check_escape_pre(A, R, x, x);
  const auto s = sorted_sites(A);
  const long xi0 = s.front();
  const double s2 = law.sigma2();
  const auto [v, err] = stretched([&](long m) {
    const HarmonicSolver hs(law, A, -m * R, R - 1, FarSide::Left);
    const double mass = hs.solve([&](long z) { return z >= R ? 1.0 : 0.0; }, x, x)[0];
    const double over = hs.solve([&](long z) { return z >= R ? static_cast<double>(z - R) : 0.0; }, x, x)[0];
    return std::vector<double>{mass, over};
  });
  if (err > 1e-10) fail(ErrorCode::HorizonExceeded, "overshoot: window extrapolation spread " + std::to_string(err));
  const double mass = v[0], over = v[1];
  if (mass <= 0) fail(ErrorCode::ZeroEscapeMass, "overshoot: escape probability is zero");
  OvershootStats o;
  o.escape_mass = mass;
  o.mean_overshoot_given_escape = over / mass;
  o.overshoot_ratio = o.mean_overshoot_given_escape / static_cast<double>(R);
  double sup = -std::numeric_limits<double>::infinity();
  for (long xi : s) sup = std::max(sup, s2 * a_safe(table, xi - xi0) + static_cast<double>(xi - xi0));
  o.c_A = 0.5 * s2 + 0.5 * sup;
  const double lhs = over + static_cast<double>(R) * mass;
  o.bound_check = lhs - 0.5 * (s2 * a_safe(table, x - xi0) + static_cast<double>(x - xi0)) - o.c_A;
  return o;
}

}  // namespace latticelab

#include "latticelab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft.hpp"
#include "latticelab/error.hpp"
#include "latticelab/extrapolate.hpp"
#include "latticelab/parallel.hpp"

namespace latticelab {

namespace {

// sin(t) - t without cancellation
double sin_minus_id(double t) {
  if (std::abs(t) < 0.25) {
    const double t2 = t * t;
    return t * t2 *
           (-1.0 / 6 + t2 * (1.0 / 120 + t2 * (-1.0 / 5040 + t2 * (1.0 / 362880 - t2 / 39916800.0))));
  }
  return std::sin(t) - t;
}

// Vector on consecutive sites starting at lo.
struct Span {
  long lo = 0;
  std::vector<double> v;
  double at(long z) const {
    const long i = z - lo;
    return i < 0 || i >= static_cast<long>(v.size()) ? 0.0 : v[i];
  }
};

Span clip(Span s, long lo, long hi) {
  long a = std::max(s.lo, lo), b = std::min(s.lo + static_cast<long>(s.v.size()) - 1, hi);
  while (a <= b && s.v[a - s.lo] == 0.0) ++a;
  while (b >= a && s.v[b - s.lo] == 0.0) --b;
  Span out;
  out.lo = a;
  if (a <= b) out.v.assign(s.v.begin() + (a - s.lo), s.v.begin() + (b - s.lo + 1));
  return out;
}

Span conv(const Span& a, const Span& b, long lo, long hi) {
  Span out;
  out.lo = a.lo + b.lo;
  out.v = detail::convolve(a.v, b.v);
  return clip(std::move(out), lo, hi);
}

Span add(const Span& a, const Span& b) {
  if (a.v.empty()) return b;
  if (b.v.empty()) return a;
  Span out;
  out.lo = std::min(a.lo, b.lo);
  const long hi = std::max(a.lo + static_cast<long>(a.v.size()), b.lo + static_cast<long>(b.v.size()));
  out.v.assign(hi - out.lo, 0.0);
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[a.lo - out.lo + i] += a.v[i];
  for (std::size_t i = 0; i < b.v.size(); ++i) out.v[b.lo - out.lo + i] += b.v[i];
  return out;
}

}  // namespace

std::vector<double> potential_quadrature(const IncrementLaw& law, long xmax, long nodes) {
  require(xmax >= 0 && nodes >= 4, "potential_quadrature: bad arguments");
  // integrand is even in theta; midpoint nodes on (0, pi)
  const long half = nodes / 2;
  const double h = std::numbers::pi / static_cast<double>(half);
  std::vector<double> re_d(half), im_d(half), inv_mod(half);
  parallel_for(static_cast<std::size_t>(half), [&](std::size_t j) {
    const double th = (static_cast<double>(j) + 0.5) * h;
    double r = 0, i = 0;
    for (const auto& at : law.atoms()) {
      const double s = std::sin(0.5 * static_cast<double>(at.offset) * th);
      r += at.prob * 2.0 * s * s;
      i -= at.prob * sin_minus_id(static_cast<double>(at.offset) * th);
    }
    re_d[j] = r;
    im_d[j] = i;
    if (r * r + i * i < 1e-300) fail(ErrorCode::QuadratureSingularity, "potential: 1 - phi vanishes at a node");
    inv_mod[j] = 1.0 / (r * r + i * i);
  });
  std::vector<double> out(2 * xmax + 1, 0.0);
  parallel_for(static_cast<std::size_t>(xmax), [&](std::size_t k) {
    const long x = static_cast<long>(k) + 1;
    long double even = 0, odd = 0;
    for (long j = 0; j < half; ++j) {
      const double th = (static_cast<double>(j) + 0.5) * h;
      const double s = std::sin(0.5 * static_cast<double>(x) * th);
      const double re_n = 2.0 * s * s, im_n = -std::sin(static_cast<double>(x) * th);
      even += re_n * re_d[j] * inv_mod[j];
      odd += im_n * im_d[j] * inv_mod[j];
    }
    const double scale = h / std::numbers::pi;
    out[xmax + x] = static_cast<double>((even + odd) * scale);
    out[xmax - x] = static_cast<double>((even - odd) * scale);
  });
  return out;
}

std::vector<double> potential_partial_sums(const IncrementLaw& law, long xmax, long horizon) {
  require(xmax >= 0, "potential_partial_sums: xmax < 0");
  long N = 1;
  const long target = horizon > 0 ? horizon : std::max(64 * xmax * xmax, 4096L);
  while (N < target) N <<= 1;
  const int nu = law.period();
  N *= nu;
  const int levels = 6;
  const long half = static_cast<long>(std::ceil(12.0 * law.sigma() * std::sqrt(static_cast<double>(N)))) +
                    xmax + 2 * law.max_abs_offset();

  Span p;
  p.lo = law.min_offset();
  for (long z = law.min_offset(); z <= law.max_offset(); ++z) p.v.push_back(law.pmf(z));

  // block-average kernel: (1/nu) sum_{j=0}^{nu-2} (nu-1-j) p^j
  Span block;
  {
    Span pj;
    pj.lo = 0;
    pj.v = {1.0};
    for (int j = 0; j + 1 < nu; ++j) {
      Span term = pj;
      for (double& t : term.v) t *= static_cast<double>(nu - 1 - j) / nu;
      block = add(block, term);
      pj = conv(pj, p, -half, half);
    }
  }

  // levels are nu * 2^j so that every level sits at the same phase of the period
  Span P, S;
  P.lo = 0;
  P.v = {1.0};
  for (int j = 0; j < nu; ++j) {
    S = add(S, P);
    P = conv(P, p, -half, half);
  }
  std::vector<double> hs;
  std::vector<std::vector<double>> vals;
  for (long m = nu; m <= N; m <<= 1) {
    if (m >= (N >> (levels - 1))) {
      const Span avg = block.v.empty() ? S : add(S, conv(P, block, -half, half));
      std::vector<double> row(2 * xmax + 1);
      for (long x = -xmax; x <= xmax; ++x) row[x + xmax] = avg.at(0) - avg.at(-x);
      hs.push_back(1.0 / std::sqrt(static_cast<double>(m)));
      vals.push_back(std::move(row));
    }
    if (m == N) break;
    S = add(S, conv(P, S, -half, half));
    P = conv(P, P, -half, half);
  }
  std::vector<double> out(2 * xmax + 1);
  const std::vector<double> powers{1, 2, 3, 4, 5};
  for (long i = 0; i <= 2 * xmax; ++i) {
    std::vector<double> y;
    for (const auto& r : vals) y.push_back(r[i]);
    out[i] = richardson(hs, y, powers).value;
  }
  out[xmax] = 0.0;
  return out;
}

double PotentialTable::a(long x) const {
  if (!contains(x)) fail(ErrorCode::OutOfRange, "potential table: x = " + std::to_string(x) + " outside range");
  return a_[x + xmax_];
}

double PotentialTable::err_est(long x) const {
  if (!contains(x)) fail(ErrorCode::OutOfRange, "potential table: x outside range");
  return err_[x + xmax_];
}

const std::string& PotentialTable::method_tag(long x) const {
  if (!contains(x)) fail(ErrorCode::OutOfRange, "potential table: x outside range");
  return tag_[x + xmax_];
}

PotentialTable potential_table(const IncrementLaw& law, long xmax, PotentialMethod method) {
  require(xmax >= 1, "potential_table: xmax >= 1");
  PotentialTable t;
  t.xmax_ = xmax;
  t.sigma2_ = law.sigma2();
  const std::size_t n = 2 * xmax + 1;
  t.err_.assign(n, 0.0);
  if (method != PotentialMethod::PartialSumsOnly) {
    try {
      t.m2_ = potential_quadrature(law, xmax);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::QuadratureSingularity) throw;
      method = PotentialMethod::PartialSumsOnly;
    }
  }
  if (method != PotentialMethod::QuadratureOnly) t.m1_ = potential_partial_sums(law, xmax);
  switch (method) {
    case PotentialMethod::Both:
      t.a_ = t.m2_;
      t.tag_.assign(n, "m2+m1");
      for (std::size_t i = 0; i < n; ++i) {
        t.err_[i] = std::abs(t.m1_[i] - t.m2_[i]);
        const long x = static_cast<long>(i) - xmax;
        if (t.err_[i] > 1e-6 * (1.0 + std::abs(static_cast<double>(x))))
          fail(ErrorCode::MethodsDisagree, "potential: methods disagree at x = " + std::to_string(x) +
                                               " by " + std::to_string(t.err_[i]));
      }
      break;
    case PotentialMethod::QuadratureOnly: {
      t.a_ = t.m2_;
      t.tag_.assign(n, "m2");
      const auto coarse = potential_quadrature(law, xmax, 1L << 15);
      for (std::size_t i = 0; i < n; ++i) t.err_[i] = std::abs(coarse[i] - t.m2_[i]);
      break;
    }
    case PotentialMethod::PartialSumsOnly: {
      t.a_ = t.m1_;
      t.tag_.assign(n, "m1");
      const auto coarse = potential_partial_sums(law, xmax, std::max(16 * xmax * xmax, 1024L));
      for (std::size_t i = 0; i < n; ++i) t.err_[i] = std::abs(coarse[i] - t.m1_[i]);
      break;
    }
  }
  return t;
}

double green_punctured(const PotentialTable& table, long x, long y) {
  if (!table.contains(x) || !table.contains(y) || !table.contains(x - y))
    fail(ErrorCode::OutOfRange, "green_punctured: arguments outside table");
  return table.a(x) + table.a(-y) - table.a(x - y);
}

CPlus cplus(const IncrementLaw& law, const PotentialTable& table, const HittingLaw& h_inf) {
  const double s2 = law.sigma2();
  const long xm = table.xmax();
  require(xm >= 8, "cplus: table too small");
  CPlus c;
  auto tail = [&](long x) { return s2 * table.a(x) - static_cast<double>(x); };
  {
    const std::vector<double> hs{4.0 / xm, 2.0 / xm, 1.0 / xm};
    const std::vector<double> ys{tail(xm / 4), tail(xm / 2), tail(xm)};
    const auto r = richardson(hs, ys, {1.0, 2.0});
    c.via_limit = r.value;
    c.via_limit_err = std::max(r.err, std::abs(ys[2] - ys[1]));
  }
  // partial sums over -K <= y <= 0 for K = 8, 16, ...
  const long ymin = std::max(-xm, h_inf.lo);
  double s = 0, mass = 0;
  long next = 8;
  for (long y = 0; y >= ymin; --y) {
    const double h = h_inf.at(y);
    s += h * (s2 * table.a(y) + static_cast<double>(-y));
    mass += h;
    if (-y == next || y == ymin) {
      c.sum_cutoffs.push_back(-y);
      c.partial_sums.push_back(s);
      next *= 2;
    }
  }
  c.via_sum = s;
  // unaccounted hitting mass sits beyond the table; bound its weight linearly
  const double missing = std::max(0.0, 1.0 - mass);
  c.via_sum_err = missing * 2.0 * static_cast<double>(-ymin);
  // judge growth below half the largest downward jump, where a truncated tail
  // still looks like the untruncated one
  std::vector<double> ps;
  const long kcap = -law.min_offset() / 2;
  for (std::size_t i = 0; i < c.sum_cutoffs.size(); ++i)
    if (c.sum_cutoffs[i] <= kcap) ps.push_back(c.partial_sums[i]);
  if (ps.size() < 3) ps = c.partial_sums;
  if (ps.size() >= 3) {
    const double d1 = ps[ps.size() - 2] - ps[ps.size() - 3];
    const double d2 = ps.back() - ps[ps.size() - 2];
    c.divergent = d2 > 1e-6 * (1.0 + std::abs(ps.back())) && d1 > 0 && d2 / d1 > 0.9;
  }
  if (!c.divergent && c.via_limit_err > 1e-3 * (1.0 + std::abs(c.via_limit)))
    fail(ErrorCode::NotConverged, "cplus: tail of s2 a(x) - x has not settled by xmax");
  return c;
}

ConditionHProfile condition_H_profile(const IncrementLaw& law, const PotentialTable& table,
                                      const HittingLaw& h_inf, long xmax) {
  require(xmax >= 1 && xmax + 1 <= table.xmax(), "condition_H_profile: xmax beyond table");
  const double s2 = law.sigma2();
  ConditionHProfile out;
  // G(z) = sum_{w <= z} H(w) = 1 - sum_{z < w <= 0} H(w)
  double upper = 0;
  std::vector<double> G(xmax + 2);  // G[k] for z = -k
  for (long k = 0; k <= xmax + 1; ++k) {
    // upper = sum over -k < w <= 0
    G[k] = 1.0 - upper;
    upper += h_inf.at(-k);
  }
  // T2(m) = m(m+1)/2 for m > 0; sum_{w<=z} sum_{j<=w} F(j) = sum_i p_i T2(z+1-i)
  auto tri = [](long m) { return m > 0 ? 0.5 * static_cast<double>(m) * static_cast<double>(m + 1) : 0.0; };
  auto inner2 = [&](long z) {
    double s = 0;
    for (const auto& a : law.atoms()) s += a.prob * tri(z + 1 - a.offset);
    return s;
  };
  double dsum = 0, tsum = inner2(-1);  // triple sum starts at z = -x-1; z = -1 is always present
  for (long x = 1; x <= xmax; ++x) {
    dsum += G[x];  // z = -x
    tsum += inner2(-x - 1);
    out.x.push_back(x);
    out.ratio.push_back((s2 * table.a(x) - static_cast<double>(x)) / static_cast<double>(x));
    out.lambda.push_back(table.lambda(x));
    out.double_sum.push_back(2.0 / s2 * dsum);
    out.triple_sum.push_back(4.0 / (s2 * s2) * tsum);
  }
  // verdict: ratio at the largest x with 4x in range versus at x/4
  const long xa = xmax / 4;
  if (xa >= 1) {
    const double r1 = out.ratio[xa - 1], r4 = out.ratio[4 * xa - 1];
    out.h_plausible = std::abs(r1) < 1e-12 || r4 / r1 < 0.8;
  } else {
    out.h_plausible = true;
  }
  return out;
}

}  // namespace latticelab

#include "latticelab/absorption.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>

#include "latticelab/error.hpp"
#include "latticelab/extrapolate.hpp"
#include "latticelab/parallel.hpp"
#include "latticelab/potential.hpp"

namespace latticelab {

namespace {

// v(1) = 1, v(x) = sum_h q(h) v(x-h); returns v(1..n)
std::vector<double> renewal(const std::vector<double>& q, long n) {
  std::vector<double> v(std::max(n, 0L), 0.0);
  if (n <= 0) return v;
  v[0] = 1.0;
  const long m = static_cast<long>(q.size());
  for (long x = 2; x <= n; ++x) {
    double s = 0;
    for (long h = 1; h <= std::min(x - 1, m); ++h) s += q[h - 1] * v[x - 1 - h];
    v[x - 1] = s;
  }
  return v;
}

struct LadderPair {
  std::vector<double> asc, desc;
  double zeta = 0;
};

// One pass of the duality map with the ascending law as the unknown.
LadderPair duality_map(const IncrementLaw& law, const std::vector<double>& q_asc) {
  const long mp = law.max_offset(), mm = -law.min_offset();
  LadderPair out;
  const auto vp = renewal(q_asc, mm + 1);
  for (long k = 0; k <= mm; ++k) out.zeta += vp[k] * law.pmf(-k);
  const double norm = 1.0 / (1.0 - out.zeta);
  out.desc.assign(mm, 0.0);
  for (long h = 1; h <= mm; ++h) {
    double s = 0;
    for (long k = 0; k <= mm - h; ++k) s += vp[k] * law.pmf(-h - k);
    out.desc[h - 1] = s * norm;
  }
  const auto vm = renewal(out.desc, mp);
  out.asc.assign(mp, 0.0);
  for (long h = 1; h <= mp; ++h) {
    double s = 0;
    for (long k = 0; k <= mp - h; ++k) s += vm[k] * law.pmf(h + k);
    out.asc[h - 1] = s * norm;
  }
  return out;
}

LadderPair solve_fixed_point(const IncrementLaw& law) {
  const long mp = law.max_offset();
  Eigen::VectorXd q(mp);
  double tot = 0;
  for (long h = 1; h <= mp; ++h) {
    q[h - 1] = 1.0 - law.cdf(h - 1);
    tot += q[h - 1];
  }
  q /= tot;
  auto as_vec = [](const Eigen::VectorXd& e) { return std::vector<double>(e.data(), e.data() + e.size()); };
  auto residual = [&](const Eigen::VectorXd& x) {
    const auto m = duality_map(law, as_vec(x));
    Eigen::VectorXd r(mp);
    for (long i = 0; i < mp; ++i) r[i] = m.asc[i] - x[i];
    // the map only fixes the product of the two factors near theta = 0; the
    // unit mass pins the split of the double root
    r[mp - 1] = x.sum() - 1.0;
    return r;
  };
  for (int it = 0; it < 60; ++it) {
    const Eigen::VectorXd r = residual(q);
    if (r.lpNorm<Eigen::Infinity>() < 1e-15) break;
    Eigen::MatrixXd J(mp, mp);
    for (long j = 0; j < mp; ++j) {
      Eigen::VectorXd qj = q;
      const double h = 1e-7 * std::max(1e-3, std::abs(q[j]));
      qj[j] += h;
      J.col(j) = (residual(qj) - r) / h;
    }
    const Eigen::VectorXd step = J.partialPivLu().solve(-r);
    q += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-16) break;
  }
  auto out = duality_map(law, as_vec(q));
  return out;
}

void finish_structures(LadderStructures& ls, const IncrementLaw& law) {
  ls.sigma2 = law.sigma2();
  ls.mean_asc = ls.mean_desc = 0;
  double sa = 0, sd = 0;
  for (std::size_t h = 0; h < ls.ascending_law.size(); ++h) {
    ls.mean_asc += static_cast<double>(h + 1) * ls.ascending_law[h];
    sa += ls.ascending_law[h];
  }
  for (std::size_t h = 0; h < ls.descending_law.size(); ++h) {
    ls.mean_desc += static_cast<double>(h + 1) * ls.descending_law[h];
    sd += ls.descending_law[h];
  }
  ls.tail_mass = std::max(std::abs(1 - sa), std::abs(1 - sd));
  ls.v_plus_tab = renewal(ls.ascending_law, ls.xmax);
  ls.v_minus_tab = renewal(ls.descending_law, ls.xmax);
  ls.f_plus_tab.assign(ls.xmax + 1, 0.0);
  ls.f_minus_tab.assign(ls.xmax + 1, 0.0);
  for (long x = 1; x <= ls.xmax; ++x) {
    ls.f_plus_tab[x] = ls.f_plus_tab[x - 1] + ls.mean_desc * ls.v_minus_tab[x - 1];
    ls.f_minus_tab[x] = ls.f_minus_tab[x - 1] + ls.mean_asc * ls.v_plus_tab[x - 1];
  }
  // 1 - phi = (1 - zeta)(1 - chi+)(1 - chi-)
  double worst = 0;
  for (double th : {0.1, 0.7, 1.9, 3.0}) {
    std::complex<double> phi = 0, cp = 0, cm = 0;
    for (const auto& a : law.atoms()) phi += a.prob * std::polar(1.0, th * static_cast<double>(a.offset));
    for (std::size_t h = 0; h < ls.ascending_law.size(); ++h)
      cp += ls.ascending_law[h] * std::polar(1.0, th * static_cast<double>(h + 1));
    for (std::size_t h = 0; h < ls.descending_law.size(); ++h)
      cm += ls.descending_law[h] * std::polar(1.0, -th * static_cast<double>(h + 1));
    const std::complex<double> lhs = 1.0 - phi, rhs = (1.0 - ls.zeta) * (1.0 - cp) * (1.0 - cm);
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
  }
  ls.wiener_hopf_residual = worst;
}

}  // namespace

double LadderStructures::q_plus(long h) const {
  return h >= 1 && h <= static_cast<long>(ascending_law.size()) ? ascending_law[h - 1] : 0.0;
}
double LadderStructures::q_minus(long h) const {
  return h >= 1 && h <= static_cast<long>(descending_law.size()) ? descending_law[h - 1] : 0.0;
}
double LadderStructures::v_plus(long x) const {
  if (x < 1 || x > xmax) fail(ErrorCode::OutOfRange, "v_plus: x outside 1..xmax");
  return v_plus_tab[x - 1];
}
double LadderStructures::v_minus(long x) const {
  if (x < 1 || x > xmax) fail(ErrorCode::OutOfRange, "v_minus: x outside 1..xmax");
  return v_minus_tab[x - 1];
}
double LadderStructures::f_plus(long x) const {
  if (x > xmax) fail(ErrorCode::OutOfRange, "f_plus: x beyond xmax");
  return x <= 0 ? 0.0 : f_plus_tab[x];
}
double LadderStructures::f_minus(long x) const {
  if (x > xmax) fail(ErrorCode::OutOfRange, "f_minus: x beyond xmax");
  return x <= 0 ? 0.0 : f_minus_tab[x];
}

LadderStructures ladder_structures(const IncrementLaw& law, long xmax) {
  require(xmax >= 1, "ladder_structures: xmax >= 1");
  LadderStructures ls;
  ls.xmax = xmax;
  ls.method = "fixed-point";
  // the unknown is the ladder law with the shorter support
  if (law.max_offset() <= -law.min_offset()) {
    auto lp = solve_fixed_point(law);
    ls.ascending_law = std::move(lp.asc);
    ls.descending_law = std::move(lp.desc);
    ls.zeta = lp.zeta;
  } else {
    auto lp = solve_fixed_point(reflect_law(law));
    ls.ascending_law = std::move(lp.desc);
    ls.descending_law = std::move(lp.asc);
    ls.zeta = lp.zeta;
  }
  finish_structures(ls, law);
  if (ls.tail_mass >= 1e-6 || ls.wiener_hopf_residual > 1e-9)
    fail(ErrorCode::LadderNotConverged,
         "ladder fixed point: tail mass " + std::to_string(ls.tail_mass) + ", factorization residual " +
             std::to_string(ls.wiener_hopf_residual));
  return ls;
}

LadderStructures ladder_structures_windowed(const IncrementLaw& law, long xmax, const std::vector<long>& windows) {
  require(xmax >= 1 && windows.size() >= 2, "ladder_structures_windowed: need xmax >= 1 and two windows");
  const IncrementLaw refl = reflect_law(law);
  // entrance law of (-inf,-1] from 0 for `l`, by heights 1..depth
  auto ladder = [](const IncrementLaw& l, long L) {
    KilledMarch m(l, KillingSet::half_line_left(-1), Window{0, L}, 0);
    const long cap = 4 * L * L;
    while (m.live_mass() > 1e-14 && m.steps() < cap) m.step();
    std::vector<double> q(-l.min_offset());
    for (long h = 1; h <= -l.min_offset(); ++h) q[h - 1] = m.entrance_at(-h);
    return q;
  };
  const std::size_t nw = windows.size();
  std::vector<std::vector<double>> asc(nw), desc(nw);
  parallel_for(2 * nw, [&](std::size_t k) {
    const std::size_t w = k % nw;
    if (k < nw) {
      asc[w] = ladder(refl, windows[w]);
    } else {
      desc[w] = ladder(law, windows[w]);
    }
  });
  std::vector<double> hs;
  for (long L : windows) hs.push_back(1.0 / static_cast<double>(L));
  auto extrap = [&](const std::vector<std::vector<double>>& rows) {
    std::vector<double> out(rows.front().size());
    for (std::size_t h = 0; h < out.size(); ++h) {
      std::vector<double> ys;
      for (const auto& r : rows) ys.push_back(r[h]);
      out[h] = std::max(0.0, rational_extrapolate(hs, ys).value);
    }
    return out;
  };
  LadderStructures ls;
  ls.xmax = xmax;
  ls.method = "windowed";
  ls.ascending_law = extrap(asc);
  ls.descending_law = extrap(desc);
  const auto vm = renewal(ls.descending_law, law.max_offset() + 1);
  for (long k = 0; k <= law.max_offset(); ++k) ls.zeta += vm[k] * law.pmf(k);
  finish_structures(ls, law);
  if (ls.tail_mass >= 1e-6)
    fail(ErrorCode::LadderNotConverged, "windowed ladder: tail mass " + std::to_string(ls.tail_mass));
  return ls;
}

double green_halfline(const LadderStructures& ls, long x, long y) {
  if (x < 1 || y < 1 || x > ls.xmax || y > ls.xmax) fail(ErrorCode::OutOfRange, "green_halfline: x, y in 1..xmax");
  double s = 0;
  for (long z = 0; z < std::min(x, y); ++z) s += ls.v_minus(x - z) * ls.v_plus(y - z);
  return 2.0 / ls.sigma2 * ls.mean_desc * ls.mean_asc * s;
}

HittingLaw hitting_halfline_inf(const LadderStructures& ls, const IncrementLaw& law, long ymin) {
  require(ymin <= 0, "hitting_halfline_inf: ymin <= 0");
  const long wmax = -ymin - law.min_offset();
  if (wmax > ls.xmax) fail(ErrorCode::OutOfRange, "hitting_halfline_inf: ladder table too short");
  HittingLaw h;
  h.target = "(-inf,0]";
  h.source = "+inf";
  h.lo = ymin;
  h.masses.assign(-ymin + 1, 0.0);
  double worst = 0;
  for (long y = ymin; y <= 0; ++y) {
    double s1 = 0, s2 = 0;
    for (long w = 1; w <= y - law.min_offset(); ++w) {
      s1 += ls.f_minus(w) * law.pmf(y - w);
      s2 += ls.mean_asc * ls.v_plus(w) * law.cdf(y - w);
    }
    s1 *= 2.0 / ls.sigma2;
    s2 *= 2.0 / ls.sigma2;
    worst = std::max(worst, std::abs(s1 - s2));
    h.masses[y - ymin] = s1;
  }
  if (worst > 1e-8)
    fail(ErrorCode::Disagreement, "hitting_halfline_inf: forms differ by " + std::to_string(worst));
  h.err_est = worst;
  h.deficit = 1.0 - h.total();
  return h;
}

HittingLaw hitting_halfline(const LadderStructures& ls, const IncrementLaw& law, long x, long ymin) {
  require(x >= 1 && ymin <= 0, "hitting_halfline: x >= 1, ymin <= 0");
  HittingLaw h;
  h.target = "(-inf,0]";
  h.source = std::to_string(x);
  h.lo = ymin;
  h.masses.assign(-ymin + 1, 0.0);
  for (long y = ymin; y <= 0; ++y) {
    double s = 0;
    for (long w = 1; w <= y - law.min_offset(); ++w) s += green_halfline(ls, x, w) * law.pmf(y - w);
    h.masses[y - ymin] = s;
  }
  h.deficit = 1.0 - h.total();
  return h;
}

long FiniteHitting::slot(long xi) const {
  const auto it = std::lower_bound(sites.begin(), sites.end(), xi);
  if (it == sites.end() || *it != xi) fail(ErrorCode::XiNotInA, "site " + std::to_string(xi) + " not in A");
  return it - sites.begin();
}

double FiniteHitting::at(long x, long xi) const {
  if (!covers(x)) fail(ErrorCode::OutOfRange, "hitting table: x = " + std::to_string(x) + " not covered");
  return mass[x - xlo][slot(xi)];
}

double FiniteHitting::at_plus_inf(long xi) const { return plus_inf[slot(xi)]; }
double FiniteHitting::at_minus_inf(long xi) const { return minus_inf[slot(xi)]; }

namespace {
HittingLaw to_hitting_law(const std::vector<long>& sites, const std::vector<double>& m, const std::string& source,
                          double err) {
  HittingLaw h;
  h.target = "{";
  for (std::size_t i = 0; i < sites.size(); ++i) h.target += (i ? "," : "") + std::to_string(sites[i]);
  h.target += "}";
  h.source = source;
  h.lo = sites.front();
  h.masses.assign(sites.back() - sites.front() + 1, 0.0);
  for (std::size_t i = 0; i < sites.size(); ++i) h.masses[sites[i] - h.lo] = m[i];
  h.deficit = 1.0 - h.total();
  h.err_est = err;
  return h;
}
}  // namespace

HittingLaw FiniteHitting::law_from(long x) const {
  if (!covers(x)) fail(ErrorCode::OutOfRange, "hitting table: x not covered");
  return to_hitting_law(sites, mass[x - xlo], std::to_string(x), err_est);
}

HittingLaw FiniteHitting::law_from_inf(int sign) const {
  return to_hitting_law(sites, sign > 0 ? plus_inf : minus_inf, sign > 0 ? "+inf" : "-inf", err_est);
}

FiniteHitting hitting_finite_table(const IncrementLaw& law, const KillingSet& A, long xlo, long xhi,
                                   std::vector<long> windows) {
  require(A.kind() == KillingSet::Kind::FiniteSet && !A.empty(), "hitting_finite: A must be a nonempty finite set");
  require(xlo <= xhi, "hitting_finite: xlo <= xhi");
  FiniteHitting out;
  out.sites = A.sites();
  std::sort(out.sites.begin(), out.sites.end());
  out.xlo = xlo;
  out.xhi = xhi;
  out.method = "dual-march";
  const long k = static_cast<long>(out.sites.size());
  const long amin = out.sites.front(), amax = out.sites.back();
  const long c = (amin + amax) / 2;
  const long reach = law.max_abs_offset();
  const long ext = std::max({std::abs(xlo - c), std::abs(xhi - c), amax - c, c - amin}) + reach;
  if (windows.empty()) {
    const long L0 = std::max(32L, 2 * ext + 2 * reach);
    for (double f : {1.0, 1.5, 2.0, 3.0, 4.0}) windows.push_back(static_cast<long>(f * static_cast<double>(L0)));
  }
  std::sort(windows.begin(), windows.end());
  require(windows.front() >= 2 * ext, "hitting_finite: smallest window must contain the range and probes");
  const IncrementLaw dual = reflect_law(law);
  const std::size_t nw = windows.size();
  const long nx = xhi - xlo + 1;
  // per (window, site): values at xlo..xhi, then probe +, probe -
  std::vector<std::vector<double>> raw(nw * k);
  parallel_for(nw * k, [&](std::size_t job) {
    const std::size_t w = job / k;
    const long xi = out.sites[job % k];
    const long L = windows[w];
    const Window win{c - L, c + L};
    std::vector<std::pair<long, double>> init;
    for (const auto& at : law.atoms()) {
      const long z = xi - at.offset;
      if (!A.kills(z) && win.contains(z)) init.emplace_back(z, at.prob);
    }
    KilledMarch::Options opts;
    opts.accumulate_green = true;
    KilledMarch m(dual, A, win, init, opts);
    const long cap = 64 * L * L;
    const double stop = 1e-12 * m.initial_mass();
    while (m.live_mass() > stop && m.steps() < cap) m.step();
    auto value = [&](long x) { return A.kills(x) ? m.entrance_at(x) + law.pmf(xi - x) : m.green_at(x); };
    std::vector<double> v(nx + 2);
    for (long x = xlo; x <= xhi; ++x) v[x - xlo] = value(x);
    v[nx] = value(c + L / 2);
    v[nx + 1] = value(c - L / 2);
    raw[job] = std::move(v);
  });
  std::vector<double> hs;
  for (long L : windows) hs.push_back(1.0 / static_cast<double>(L));
  double err = 0;
  out.mass.assign(nx, std::vector<double>(k, 0.0));
  for (long i = 0; i < nx; ++i) {
    for (long s = 0; s < k; ++s) {
      std::vector<double> ys;
      for (std::size_t w = 0; w < nw; ++w) ys.push_back(raw[w * k + s][i]);
      for (std::size_t w = 1; w < nw; ++w)
        if (ys[w] < ys[w - 1] - 1e-10)
          fail(ErrorCode::ExtrapolationUnstable,
               "hitting_finite: window estimates decrease at x = " + std::to_string(xlo + i));
      const auto r = rational_extrapolate(hs, ys);
      out.mass[i][s] = std::clamp(r.value, 0.0, 1.0);
      err = std::max(err, r.err);
    }
  }
  auto from_inf = [&](long col) {
    std::vector<double> res(k);
    std::vector<std::vector<double>> norm(nw, std::vector<double>(k));
    for (std::size_t w = 0; w < nw; ++w) {
      double tot = 0;
      for (long s = 0; s < k; ++s) tot += raw[w * k + s][col];
      if (tot <= 0) fail(ErrorCode::ExtrapolationUnstable, "hitting_finite: probe never reaches A");
      for (long s = 0; s < k; ++s) norm[w][s] = raw[w * k + s][col] / tot;
    }
    for (long s = 0; s < k; ++s) {
      std::vector<double> ys;
      for (std::size_t w = 0; w < nw; ++w) ys.push_back(norm[w][s]);
      const auto r = rational_extrapolate(hs, ys);
      res[s] = std::clamp(r.value, 0.0, 1.0);
      err = std::max(err, r.err);
    }
    return res;
  };
  out.plus_inf = from_inf(nx);
  out.minus_inf = from_inf(nx + 1);
  out.err_est = err;
  return out;
}

FiniteHitting hitting_finite_potential(const IncrementLaw& law, const KillingSet& A, const PotentialTable& table,
                                       long xlo, long xhi) {
  require(A.kind() == KillingSet::Kind::FiniteSet && !A.empty(), "hitting_finite: A must be a nonempty finite set");
  FiniteHitting out;
  out.sites = A.sites();
  std::sort(out.sites.begin(), out.sites.end());
  out.xlo = xlo;
  out.xhi = xhi;
  out.method = "potential";
  const long k = static_cast<long>(out.sites.size());
  const double s2 = law.sigma2();
  Eigen::MatrixXd M(k + 1, k + 1);
  for (long r = 0; r < k; ++r) {
    for (long s = 0; s < k; ++s) M(r, s) = table.a(out.sites[s] - out.sites[r]);
    M(r, k) = 1.0;
  }
  for (long s = 0; s < k; ++s) M(k, s) = 1.0;
  M(k, k) = 0.0;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) fail(ErrorCode::Precondition, "hitting_finite_potential: singular system");
  auto solve_rhs = [&](const Eigen::VectorXd& rhs) {
    const Eigen::VectorXd sol = lu.solve(rhs);
    return std::vector<double>(sol.data(), sol.data() + k);
  };
  auto outside = [&](long x) {
    Eigen::VectorXd rhs(k + 1);
    for (long r = 0; r < k; ++r) rhs[r] = table.a(x - out.sites[r]);
    rhs[k] = 1.0;
    return solve_rhs(rhs);
  };
  double err = 0;
  for (long r = 0; r < k; ++r)
    for (long s = 0; s < k; ++s) err = std::max(err, table.err_est(out.sites[s] - out.sites[r]));
  out.mass.assign(xhi - xlo + 1, std::vector<double>(k, 0.0));
  for (long x = xlo; x <= xhi; ++x) {
    auto& row = out.mass[x - xlo];
    if (!A.kills(x)) {
      row = outside(x);
    } else {
      // one step, then the law from the landing site
      for (const auto& at : law.atoms()) {
        const long z = x + at.offset;
        if (A.kills(z)) {
          row[std::lower_bound(out.sites.begin(), out.sites.end(), z) - out.sites.begin()] += at.prob;
        } else {
          const auto hz = outside(z);
          for (long s = 0; s < k; ++s) row[s] += at.prob * hz[s];
        }
      }
    }
    for (double& v : row) v = std::max(v, 0.0);
  }
  for (int sign : {1, -1}) {
    Eigen::VectorXd rhs(k + 1);
    for (long r = 0; r < k; ++r) rhs[r] = -sign * static_cast<double>(out.sites[r]) / s2;
    rhs[k] = 1.0;
    auto h = solve_rhs(rhs);
    for (double& v : h) v = std::max(v, 0.0);
    (sign > 0 ? out.plus_inf : out.minus_inf) = std::move(h);
  }
  out.err_est = err;
  return out;
}

HittingLaw hitting_finite(const IncrementLaw& law, const KillingSet& A, const std::string& source,
                          std::vector<long> windows) {
  if (source == "+inf" || source == "-inf") {
    const long c = (A.sites().empty() ? 0 : (*std::min_element(A.sites().begin(), A.sites().end()) +
                                             *std::max_element(A.sites().begin(), A.sites().end())) /
                                                2);
    const auto t = hitting_finite_table(law, A, c, c, std::move(windows));
    return t.law_from_inf(source == "+inf" ? 1 : -1);
  }
  long x = 0;
  try {
    x = std::stol(source);
  } catch (const std::exception&) {
    fail(ErrorCode::Precondition, "hitting_finite: source must be an integer, +inf or -inf");
  }
  const auto t = hitting_finite_table(law, A, x, x, std::move(windows));
  return t.law_from(x);
}

}  // namespace latticelab

#include <cmath>

#include "doctest.h"
#include "latticelab/absorption.hpp"
#include "latticelab/error.hpp"
#include "latticelab/extrapolate.hpp"
#include "latticelab/kernel.hpp"
#include "latticelab/potential.hpp"

using namespace latticelab;

namespace {

IncrementLaw two_sided() { return build_law({{-3, 0.2}, {-1, 0.2}, {1, 0.4}, {2, 0.2}}); }

// sum_n p^n_(-inf,0](x, y) for y = 1..ymax on windows [1, L] killed outside, extrapolated in 1/L
std::vector<double> halfline_green_series(const IncrementLaw& law, long x, long ymax) {
  std::vector<double> hs;
  std::vector<std::vector<double>> ys(ymax + 1);
  for (long L : {50L, 100L, 200L, 400L}) {
    KilledMarch::Options o;
    o.accumulate_green = true;
    KilledMarch m(law, KillingSet::half_line_left(0), Window{1, L}, {{x, 1.0}}, o);
    while (m.live_mass() > 1e-14) m.step();
    hs.push_back(1.0 / L);
    for (long y = 1; y <= ymax; ++y) ys[y].push_back(m.green_at(y));
  }
  std::vector<double> out(ymax + 1);
  for (long y = 1; y <= ymax; ++y) out[y] = rational_extrapolate(hs, ys[y]).value;
  return out;
}

}  // namespace

TEST_CASE("ladder structures of skip-free walks") {
  auto sw = ladder_structures(simple_walk(), 50);
  CHECK(sw.q_plus(1) == doctest::Approx(1.0));
  CHECK(sw.q_minus(1) == doctest::Approx(1.0));
  for (long x = 1; x <= 50; ++x) {
    CHECK(sw.v_plus(x) == doctest::Approx(1.0));
    CHECK(sw.f_plus(x) == doctest::Approx(static_cast<double>(x)));
    CHECK(sw.f_minus(x) == doctest::Approx(static_cast<double>(x)));
  }
  auto ll = ladder_structures(light_law(), 50);
  CHECK(ll.q_plus(1) == doctest::Approx(1.0));
  CHECK(ll.q_minus(1) == doctest::Approx(0.5));
  CHECK(ll.q_minus(2) == doctest::Approx(0.5));
  CHECK(ll.mean_desc == doctest::Approx(1.5));
  CHECK(ll.zeta == doctest::Approx(1.0 / 3));
  for (long x = 1; x <= 50; ++x) CHECK(ll.f_minus(x) == doctest::Approx(ll.mean_asc * x));
}

TEST_CASE("ladder mean identity with the weak-ladder correction") {
  for (const auto& law : {simple_walk(), light_law(), two_sided(), heavy_tail_family(3.5, 400)}) {
    auto ls = ladder_structures(law, 20);
    CHECK(std::abs(ls.mean_identity_residual()) < 1e-4);
    CHECK(ls.tail_mass < 1e-6);
    CHECK(ls.wiener_hopf_residual < 1e-9);
  }
}

TEST_CASE("fixed point and windowed marches agree") {
  for (const auto& law : {light_law(), two_sided(), build_law({{-4, 0.125}, {-1, 0.375}, {1, 0.375}, {4, 0.125}})}) {
    auto a = ladder_structures(law, 40);
    auto b = ladder_structures_windowed(law, 40, {32, 48, 64, 96, 128});
    for (long h = 1; h <= 4; ++h) {
      CHECK(std::abs(a.q_plus(h) - b.q_plus(h)) < 1e-9);
      CHECK(std::abs(a.q_minus(h) - b.q_minus(h)) < 1e-9);
    }
    CHECK(std::abs(a.f_plus(40) - b.f_plus(40)) < 1e-7);
  }
}

TEST_CASE("f+- harmonic, linear growth and strict bounds") {
  for (const auto& law : {light_law(), two_sided(), heavy_tail_family(3.5, 400)}) {
    const long xm = 600;
    auto ls = ladder_structures(law, xm);
    auto t = potential_table(law, 200, PotentialMethod::QuadratureOnly);
    for (long x = 1; x + law.max_abs_offset() <= xm; ++x) {
      double ep = 0, em = 0;
      for (const auto& at : law.atoms()) {
        ep += at.prob * ls.f_plus(x + at.offset);
        em += at.prob * ls.f_minus(x - at.offset);
      }
      CHECK(std::abs(ls.f_plus(x) - ep) < 1e-9 * (1 + x));
      CHECK(std::abs(ls.f_minus(x) - em) < 1e-9 * (1 + x));
    }
    CHECK(ls.f_plus(xm) / xm == doctest::Approx(1.0).epsilon(0.05));
    CHECK(ls.f_minus(xm) / xm == doctest::Approx(1.0).epsilon(0.05));
    const bool lc = law.left_continuous();
    for (long x = 1; x <= 200; ++x) {
      if (lc) {
        CHECK(ls.f_plus(x) == doctest::Approx(static_cast<double>(x)));
      } else {
        CHECK(ls.f_plus(x) > x);
        CHECK(ls.f_plus(x) < law.sigma2() * t.a(x));
      }
    }
  }
}

TEST_CASE("half-line Green function against the series") {
  for (const auto& law : {simple_walk(), light_law(), two_sided()}) {
    auto ls = ladder_structures(law, 64);
    for (long x : {1L, 2L, 5L}) {
      const auto s = halfline_green_series(law, x, 6);
      for (long y = 1; y <= 6; ++y) CHECK(std::abs(green_halfline(ls, x, y) - s[y]) < 1e-6 * (1 + s[y]));
    }
  }
  auto sw = ladder_structures(simple_walk(), 20);
  CHECK(green_halfline(sw, 3, 7) == doctest::Approx(6.0));
  CHECK_THROWS_AS(green_halfline(sw, 0, 3), Error);
}

TEST_CASE("hitting law of the half-line from +inf") {
  auto sw = simple_walk();
  auto hs = hitting_halfline_inf(ladder_structures(sw, 64), sw, -10);
  CHECK(hs.at(0) == doctest::Approx(1.0));
  CHECK(hs.at(-1) == 0.0);

  auto law = light_law();
  auto ls = ladder_structures(law, 64);
  auto h = hitting_halfline_inf(ls, law, -10);
  CHECK(h.at(0) + h.at(-1) == doctest::Approx(1.0));
  CHECK(h.at(-1) == doctest::Approx(2.0 / law.sigma2() * ls.f_minus(1) * law.pmf(-2)));
  CHECK(h.at(0) == doctest::Approx(2.0 / 3));

  auto heavy = heavy_tail_family(3.5, 400);
  auto lh = ladder_structures(heavy, 1024);
  auto hh = hitting_halfline_inf(lh, heavy, -400);
  CHECK(std::abs(hh.deficit) < 1e-9);
  for (long y = 0; y > -400; --y) CHECK(hh.at(y - 1) <= hh.at(y) + 1e-15);
}

TEST_CASE("half-line hitting from x: last exit vs march, and domination by H from +inf") {
  for (const auto& law : {light_law(), two_sided()}) {
    auto ls = ladder_structures(law, 256);
    auto hinf = hitting_halfline_inf(ls, law, -8);
    double cmax = 0;
    for (long x = 1; x <= 6; ++x) {
      auto hx = hitting_halfline(ls, law, x, -8);
      std::vector<double> hsz;
      std::vector<std::vector<double>> ys(9);
      for (long L : {100L, 200L, 400L}) {
        KilledMarch m(law, KillingSet::half_line_left(0), Window{1, L}, x);
        while (m.live_mass() > 1e-14) m.step();
        hsz.push_back(1.0 / L);
        for (long y = 0; y >= -8; --y) ys[-y].push_back(m.entrance_at(y));
      }
      for (long y = 0; y >= -8; --y) {
        CHECK(std::abs(hx.at(y) - rational_extrapolate(hsz, ys[-y]).value) < 1e-8);
        if (hinf.at(y) > 0) cmax = std::max(cmax, hx.at(y) / hinf.at(y));
        else CHECK(hx.at(y) == 0.0);
      }
      CHECK(std::abs(hx.deficit) < 1e-9);
    }
    MESSAGE("H^x <= C H^{+inf} with C = " << cmax);
    CHECK(cmax < 10);
  }
}

TEST_CASE("hitting identities through the potential kernel") {
  for (const auto& law : {light_law(), two_sided(), heavy_tail_family(3.5, 400)}) {
    const double s2 = law.sigma2();
    auto t = potential_table(law, 1000, PotentialMethod::QuadratureOnly);
    auto ls = ladder_structures(law, 1200);
    const long ymin = law.min_offset() - 1;
    auto h = hitting_halfline_inf(ls, law, ymin);
    for (long y = 0; y >= -20; --y) {
      double s = 0;
      for (long z = ymin; z <= 0; ++z) s += h.at(z) * green_punctured(t, z, y);
      CHECK(std::abs(s - (t.a(-y) + y / s2)) < 1e-6);
    }
    for (long x = 1; x <= 20; ++x) {
      auto hx = hitting_halfline(ls, law, x, ymin);
      double s = 0;
      for (long z = ymin; z <= 0; ++z) s += hx.at(z) * (t.a(z) - z / s2);
      CHECK(std::abs(s - (t.a(x) - x / s2)) < 1e-6);
    }
  }
}

TEST_CASE("finite-set hitting: trivial cases") {
  auto sw = simple_walk();
  auto h0 = hitting_finite(sw, KillingSet::finite({0}), "7");
  CHECK(h0.at(0) == doctest::Approx(1.0));
  auto hp = hitting_finite(sw, KillingSet::finite({0, 2}), "+inf");
  CHECK(hp.at(2) == doctest::Approx(1.0));
  auto hm = hitting_finite(sw, KillingSet::finite({0, 2}), "-inf");
  CHECK(hm.at(0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(hitting_finite(sw, KillingSet::finite({0}), "north"), Error);
}

TEST_CASE("finite-set hitting: march route vs potential-kernel route") {
  for (const auto& law : {light_law(), two_sided()}) {
    for (const auto& A : {KillingSet::finite({0, 3}), KillingSet::finite({-2, 0, 5})}) {
      auto t = potential_table(law, 128, PotentialMethod::QuadratureOnly);
      auto hp = hitting_finite_potential(law, A, t, -20, 20);
      auto hd = hitting_finite_table(law, A, -20, 20);
      for (long x = -20; x <= 20; ++x) {
        double tot = 0;
        for (long xi : A.sites()) {
          CHECK(std::abs(hp.at(x, xi) - hd.at(x, xi)) < 1e-8);
          tot += hp.at(x, xi);
        }
        CHECK(tot == doctest::Approx(1.0).epsilon(1e-10));
      }
      for (long xi : A.sites()) {
        CHECK(std::abs(hp.at_plus_inf(xi) - hd.at_plus_inf(xi)) < 1e-7);
        CHECK(std::abs(hp.at_minus_inf(xi) - hd.at_minus_inf(xi)) < 1e-7);
      }
      CHECK(std::abs(hd.law_from_inf(1).deficit) < 1e-4);
    }
  }
}

TEST_CASE("finite-set hitting from far away approaches the +inf law") {
  auto law = light_law();
  auto A = KillingSet::finite({0, 3});
  auto t = potential_table(law, 600, PotentialMethod::QuadratureOnly);
  auto hp = hitting_finite_potential(law, A, t, 400, 400);
  CHECK(std::abs(hp.at(400, 0) - hp.at_plus_inf(0)) < 1e-6);
}

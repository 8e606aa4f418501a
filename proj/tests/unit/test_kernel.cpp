#include <cmath>

#include "doctest.h"
#include "latticelab/error.hpp"
#include "latticelab/kernel.hpp"
#include "latticelab/law.hpp"
#include "oracle.hpp"

using namespace latticelab;

TEST_CASE("n-step pmf of the simple walk") {
  auto law = simple_walk();
  auto p2 = nstep_pmf(law, 2);
  CHECK(p2.at(-2) == doctest::Approx(0.25));
  CHECK(p2.at(0) == doctest::Approx(0.5));
  CHECK(p2.at(2) == doctest::Approx(0.25));
  CHECK(p2.at(1) == 0.0);
  auto p4 = nstep_pmf(law, 4);
  CHECK(std::fabs(p4.at(0) - 6.0 / 16) < 1e-15);
}

TEST_CASE("three-step return of the light law") {
  auto p3 = nstep_pmf(light_law(), 3);
  CHECK(std::fabs(p3.at(0) - 4.0 / 9) < 1e-15);
}

TEST_CASE("killed kernel small cases") {
  auto law = simple_walk();
  auto evo = killed_kernel(law, KillingSet::finite({0}), 1, 2);
  CHECK(evo.live_at(1) == doctest::Approx(0.25));
  auto e4 = killed_kernel(law, KillingSet::finite({0}), 3, 4);
  auto p4 = nstep_pmf(law, 4);
  CHECK(std::fabs(e4.live_at(1) - (p4.at(-2) - p4.at(4))) < 1e-15);
}

TEST_CASE("time zero keeps the source even on A") {
  KilledMarch m(simple_walk(), KillingSet::finite({0}), {-10, 10}, 0);
  CHECK(m.live(0) == 1.0);
  m.step();
  CHECK(m.live(0) == 0.0);
}

TEST_CASE("first passage of the simple walk") {
  auto evo = killed_kernel(simple_walk(), KillingSet::finite({0}), 1, 5);
  auto es = entrance_spacetime(evo);
  CHECK(es.time_law[1] == doctest::Approx(0.5));
  CHECK(es.time_law[3] == doctest::Approx(0.125));
  double total = es.live + es.leak;
  for (double v : es.time_law) total += v;
  CHECK(std::fabs(total - 1) < 1e-12);
}

TEST_CASE("half-line entrance of the simple walk is at 0") {
  auto evo = killed_kernel(simple_walk(), KillingSet::half_line_left(0), 2, 40);
  auto es = entrance_spacetime(evo);
  for (size_t s = 0; s < es.sites.size(); ++s)
    if (es.sites[s] != 0) CHECK(es.site_law[s] == 0.0);
}

TEST_CASE("oracle: killed kernels match path enumeration") {
  struct Case {
    IncrementLaw law;
    std::vector<oracle::QAtom> q;
  };
  std::vector<Case> cases = {{simple_walk(), oracle::simple_walk()}, {light_law(), oracle::light_law()}};
  std::vector<std::vector<long>> sets = {{0}, {0, 3}};
  for (const auto& c : cases)
    for (const auto& A : sets)
      for (long x : {-2L, 1L, 2L, 5L}) {
        auto kill = KillingSet::finite(A);
        auto en = oracle::enumerate_paths(c.q, x, 10, [&](long z) { return kill.kills(z); });
        KilledMarch::Options o;
        o.record_entrance_history = true;
        KilledMarch m(c.law, kill, {-40, 40}, x, o);
        for (int k = 1; k <= 10; ++k) {
          m.step();
          for (long y = -30; y <= 30; ++y) {
            auto it = en.live[k].find(y);
            double want = it == en.live[k].end() ? 0.0 : oracle::to_double(it->second);
            CHECK(std::fabs(m.live(y) - want) < 1e-12);
          }
          for (size_t s = 0; s < m.entrance_sites().size(); ++s) {
            auto it = en.entrance[k].find(m.entrance_sites()[s]);
            double want = it == en.entrance[k].end() ? 0.0 : oracle::to_double(it->second);
            CHECK(std::fabs(m.entrance_history()[k - 1][s] - want) < 1e-12);
          }
        }
      }
}

TEST_CASE("oracle: half-line entrance joint law") {
  auto kill = KillingSet::half_line_left(0);
  auto en = oracle::enumerate_paths(oracle::light_law(), 1, 8, [&](long z) { return z <= 0; });
  auto evo = killed_kernel(light_law(), kill, 1, 8);
  auto es = entrance_spacetime(evo);
  for (int k = 1; k <= 8; ++k)
    for (size_t s = 0; s < es.sites.size(); ++s) {
      auto it = en.entrance[k].find(es.sites[s]);
      double want = it == en.entrance[k].end() ? 0.0 : oracle::to_double(it->second);
      CHECK(std::fabs(es.joint[k][s] - want) < 1e-12);
    }
}

TEST_CASE("mass conservation along a march") {
  for (const auto& law : {light_law(), heavy_tail_family(3.5, 60)}) {
    KilledMarch m(law, KillingSet::finite({0, 3}), {-300, 300}, 7);
    for (int k = 0; k < 400; ++k) {
      m.step();
      double total = m.live_mass() + m.entrance_mass() + m.leak();
      CHECK(std::fabs(total - 1) < 1e-12);
    }
  }
}

TEST_CASE("fft and direct paths agree") {
  auto law = heavy_tail_family(3.5, 200);
  KilledMarch::Options a, b;
  b.allow_fft = false;
  KilledMarch fa(law, KillingSet::finite({0}), {-3000, 3000}, 5, a);
  KilledMarch fb(law, KillingSet::finite({0}), {-3000, 3000}, 5, b);
  for (int k = 0; k < 200; ++k) {
    fa.step();
    fb.step();
  }
  double worst = 0;
  for (long y = -3000; y <= 3000; ++y) worst = std::max(worst, std::fabs(fa.live(y) - fb.live(y)));
  CHECK(worst < 1e-14);
  CHECK(std::fabs(fa.live_mass() + fa.entrance_mass() + fa.leak() - 1) < 1e-10);
}

TEST_CASE("duality of killed kernels") {
  // p_A^n(x,y) = p_{-A}^n(-y,-x) for the same law
  auto law = light_law();
  std::vector<long> A = {0, 3};
  auto kA = KillingSet::finite(A);
  auto kmA = kA.negated();
  for (long x : {-4L, 2L, 5L}) {
    KilledMarch fwd(law, kA, {-200, 200}, x);
    fwd.advance(60);
    for (long y : {-5L, -1L, 1L, 4L, 7L}) {
      if (kA.kills(y)) continue;
      KilledMarch back(law, kmA, {-200, 200}, -y);
      back.advance(60);
      CHECK(std::fabs(fwd.live(y) - back.live(-x)) < 1e-13);
    }
  }
}

TEST_CASE("window guard") {
  CHECK_THROWS_AS(nstep_pmf(simple_walk(), 400, Window{-10, 10}), Error);
}

TEST_CASE("gaussian comparison") {
  auto law = simple_walk();
  auto g = gauss_lclt(law, 64);
  CHECK(gauss_density(1.0, 64, 0) == doctest::Approx(1 / std::sqrt(2 * M_PI * 64)));
  auto g4 = gauss_lclt(law, 256);
  CHECK(g4.sup_scaled_error < g.sup_scaled_error);
  // one period class carries nu * g_n over a stride of nu
  double s = 0;
  for (size_t i = 0; i < g4.gauss.size(); ++i) {
    long x = g4.lo + static_cast<long>(i);
    if (((x % 2) + 2) % 2 == 0) s += g4.gauss[i];
  }
  CHECK(std::fabs(s - 1) < 1.0 / 256);
}

TEST_CASE("killing set parsing") {
  CHECK(parse_killing_set("{0,3}").sites() == std::vector<long>{0, 3});
  CHECK(parse_killing_set("0, -2").sites() == std::vector<long>{-2, 0});
  CHECK(parse_killing_set("halfline:0").kind() == KillingSet::Kind::HalfLineLeft);
  CHECK(parse_killing_set("(-inf,2]").boundary() == 2);
  CHECK_THROWS_AS(parse_killing_set("a,b"), Error);
}

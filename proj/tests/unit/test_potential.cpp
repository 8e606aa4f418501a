#include <cmath>

#include "doctest.h"
#include "latticelab/absorption.hpp"
#include "latticelab/error.hpp"
#include "latticelab/potential.hpp"
#include "oracle.hpp"

using namespace latticelab;

namespace {

// a for {-2: 1/3, +1: 2/3} from a(-x) = x/2 and P a - a = delta_0, in rationals
std::vector<oracle::Q> light_potential_exact(long xmax) {
  using oracle::Q;
  std::vector<Q> a(xmax + 3);  // a[i] = a(i - 2)
  a[0] = Q(1);
  a[1] = Q(1, 2);
  a[2] = Q(0);
  for (long y = 0; y + 1 <= xmax; ++y) {
    const Q delta = y == 0 ? Q(1) : Q(0);
    a[y + 3] = Q(3, 2) * (a[y + 2] + delta) - Q(1, 2) * a[y];
  }
  return a;
}

const PotentialTable& light_table() {
  static const PotentialTable t = potential_table(light_law(), 128);
  return t;
}

const PotentialTable& heavy_table() {
  static const PotentialTable t = potential_table(heavy_tail_family(3.5, 400), 256);
  return t;
}

}  // namespace

TEST_CASE("simple walk potential is |x|") {
  auto t = potential_table(simple_walk(), 64);
  for (long x = -64; x <= 64; ++x) CHECK(std::abs(t.a(x) - std::abs(x)) < 1e-10);
  CHECK(t.a(0) == 0.0);
  CHECK(t.a_dagger(0) == 1.0);
  CHECK(t.method_tag(5) == "m2+m1");
}

TEST_CASE("light law potential against the exact recursion") {
  const auto& t = light_table();
  const auto exact = light_potential_exact(128);
  for (long x = 0; x <= 128; ++x) CHECK(std::abs(t.a(x) - oracle::to_double(exact[x + 2])) < 1e-10);
  for (long x = 0; x <= 128; ++x) CHECK(std::abs(t.a(-x) - 0.5 * static_cast<double>(x)) < 1e-10);
  for (long x = 1; x <= 128; ++x) CHECK(t.a(x) > 0.5 * static_cast<double>(x) + 1e-6);
}

TEST_CASE("table invariants") {
  for (const PotentialTable* t : {&light_table(), &heavy_table()}) {
    const double s2 = t->sigma2();
    for (long x = -t->xmax(); x <= t->xmax(); ++x) {
      CHECK(s2 * t->a(x) >= std::abs(static_cast<double>(x)) - 1e-9);
      CHECK(t->err_est(x) <= 1e-6 * (1.0 + std::abs(static_cast<double>(x))));
    }
    const long e = t->xmax();
    CHECK(std::abs(t->a(e) - t->a(e - 1) - 1.0 / s2) < 0.05 / s2);
    CHECK(std::abs(t->a(-e) - t->a(-e + 1) - 1.0 / s2) < 0.05 / s2);
    CHECK(t->lambda(7) == doctest::Approx(t->a(7) - 7.0 / s2));
    CHECK(t->lambda_hat(7) == doctest::Approx(t->a(-7) - 7.0 / s2));
  }
}

TEST_CASE("periodic walk: both methods agree") {
  auto law = build_law({{-3, 0.25}, {1, 0.75}});
  REQUIRE(law.period() == 4);
  auto t = potential_table(law, 48);
  // left-continuous: s2 a(x) = x for x > 0
  for (long x = 1; x <= 48; ++x) CHECK(std::abs(3.0 * t.a(-x) - x) < 1e-9);
  for (long x = -48; x <= 48; ++x) CHECK(t.err_est(x) < 1e-7 * (1 + std::abs(x)));
}

TEST_CASE("mean-value property") {
  for (const auto& [law, t] : {std::pair{light_law(), &light_table()},
                               std::pair{heavy_tail_family(3.5, 400), &heavy_table()}}) {
    const long span = law.max_abs_offset();
    double worst = 0;
    for (long x = -20; x <= 20; ++x) {
      for (long y = -20; y <= 20; ++y) {
        if (std::abs(x - y) + span > t->xmax()) continue;
        double s = 0;
        for (const auto& at : law.atoms()) s += at.prob * t->a(x + at.offset - y);
        worst = std::max(worst, std::abs(s - t->a_dagger(x - y)));
      }
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("punctured Green function") {
  auto t = potential_table(simple_walk(), 32);
  for (long x = 1; x <= 10; ++x)
    for (long y = 1; y <= 10; ++y) CHECK(std::abs(green_punctured(t, x, y) - 2.0 * std::min(x, y)) < 1e-9);
  const auto& lt = light_table();
  CHECK(green_punctured(lt, 1, -1) == doctest::Approx(lt.a(1) + lt.a(1) - lt.a(2)));
  CHECK(green_punctured(lt, 4, 4) == doctest::Approx(lt.a(4) + lt.a(-4)));
  CHECK_THROWS_AS(green_punctured(lt, 100, -100), Error);
  for (long x = -30; x <= 30; ++x)
    for (long y = -30; y <= 30; ++y) CHECK(green_punctured(lt, x, y) >= -1e-12);
}

TEST_CASE("lambda subadditivity and g >= 0") {
  for (const PotentialTable* t : {&light_table(), &heavy_table()}) {
    const long m = t->xmax() / 2;
    for (long x = 1; x <= m; ++x)
      for (long y = 0; y <= m; ++y) {
        CHECK(t->lambda(x + y) - t->lambda(y) <= t->lambda(x) + 1e-10);
        CHECK(green_punctured(*t, x, -y) >= -1e-12);
      }
  }
}

TEST_CASE("C+ for the light law: both routes") {
  auto law = light_law();
  auto ls = ladder_structures(law, 512);
  auto h = hitting_halfline_inf(ls, law, -128);
  auto c = cplus(law, light_table(), h);
  CHECK_FALSE(c.divergent);
  CHECK(c.via_limit == doctest::Approx(2.0 / 3).epsilon(1e-8));
  CHECK(std::abs(c.via_limit - c.via_sum) < 0.02 * c.via_limit);
}

TEST_CASE("C+ vanishes for the simple walk") {
  auto law = simple_walk();
  auto t = potential_table(law, 64);
  auto ls = ladder_structures(law, 256);
  auto c = cplus(law, t, hitting_halfline_inf(ls, law, -64));
  CHECK(std::abs(c.via_limit) < 1e-8);
  CHECK(std::abs(c.via_sum) < 1e-8);
}

TEST_CASE("heavy tail: C+ partial sums diverge before the cutoff") {
  auto law = heavy_tail_family(3.5, 200);
  auto t = potential_table(law, 256, PotentialMethod::QuadratureOnly);
  auto ls = ladder_structures(law, 1024);
  auto c = cplus(law, t, hitting_halfline_inf(ls, law, -256));
  CHECK(c.divergent);
}

TEST_CASE("condition (H) profile") {
  auto law = heavy_tail_family(3.5, 400);
  auto ls = ladder_structures(law, 1024);
  auto h = hitting_halfline_inf(ls, law, -256);
  auto pr = condition_H_profile(law, heavy_table(), h, 200);
  for (long x = 20; x <= 100; ++x) {
    const double r = pr.lambda[x - 1] / pr.triple_sum[x - 1];
    CHECK(std::abs(r - 1) < 0.15);
  }
  CHECK(pr.h_plausible);

  auto sw = simple_walk();
  auto ts = potential_table(sw, 64);
  auto ps = condition_H_profile(sw, ts, hitting_halfline_inf(ladder_structures(sw, 128), sw, -32), 60);
  for (double r : ps.ratio) CHECK(std::abs(r) < 1e-9);
  CHECK(ps.h_plausible);

  // light law: x * ratio -> C+
  auto ll = light_law();
  auto pl = condition_H_profile(ll, light_table(), hitting_halfline_inf(ladder_structures(ll, 256), ll, -64), 120);
  CHECK(120 * pl.ratio.back() == doctest::Approx(2.0 / 3).epsilon(1e-6));
}

TEST_CASE("appendix B ratio is stable under doubling") {
  auto sup_ratio = [](const PotentialTable& t, long xm) {
    double s = 0;
    for (long y = 1; y <= xm; ++y)
      for (long x = -y; x <= y; ++x) {
        if (x == 0) continue;
        const double d = t.lambda_hat(std::abs(x));
        if (d <= 1e-12) continue;
        s = std::max(s, std::abs(t.lambda_hat(y - x) - t.lambda_hat(y)) / d);
      }
    return s;
  };
  const auto& t = heavy_table();
  const double r1 = sup_ratio(t, 64), r2 = sup_ratio(t, 128);
  CHECK(r2 < 1.1 * r1);
}

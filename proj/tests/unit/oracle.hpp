#pragma once

// Exact path enumeration over rational step probabilities. Independent of the
// dynamic-programming code: every step sequence is visited explicitly.

#include <boost/multiprecision/cpp_int.hpp>
#include <functional>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

using Q = boost::multiprecision::cpp_rational;

struct QAtom {
  long offset;
  Q prob;
};

inline std::vector<QAtom> simple_walk() { return {{-1, Q(1, 2)}, {1, Q(1, 2)}}; }
inline std::vector<QAtom> light_law() { return {{-2, Q(1, 3)}, {1, Q(2, 3)}}; }

struct Enumeration {
  // live[k][y] = P_x[S_k = y, sigma_A > k]
  std::vector<std::map<long, Q>> live;
  // entrance[k][xi] = P_x[sigma_A = k, S_k = xi]
  std::vector<std::map<long, Q>> entrance;
};

// Killing predicate applies at times 1..n; time 0 is never killed.
inline Enumeration enumerate_paths(const std::vector<QAtom>& law, long x, int n,
                                   const std::function<bool(long)>& killed) {
  Enumeration e;
  e.live.resize(n + 1);
  e.entrance.resize(n + 1);
  std::function<void(long, int, const Q&)> rec = [&](long pos, int k, const Q& w) {
    e.live[k][pos] += w;
    if (k == n) return;
    for (const auto& a : law) {
      long next = pos + a.offset;
      Q nw = w * a.prob;
      if (killed(next)) {
        e.entrance[k + 1][next] += nw;
      } else {
        rec(next, k + 1, nw);
      }
    }
  };
  rec(x, 0, Q(1));
  return e;
}

inline double to_double(const Q& q) { return static_cast<double>(q); }

}  // namespace oracle

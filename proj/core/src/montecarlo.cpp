#include "latticelab/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "latticelab/asymptotics.hpp"
#include "latticelab/error.hpp"
#include "latticelab/parallel.hpp"

namespace latticelab {

AliasTable::AliasTable(const IncrementLaw& law) {
  const auto& atoms = law.atoms();
  const std::size_t m = atoms.size();
  require(m > 0, "alias table needs a nonempty law");
  offset_.resize(m);
  prob_.assign(m, 1.0);
  alias_.resize(m);
  std::vector<double> scaled(m);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < m; ++i) {
    offset_[i] = atoms[i].offset;
    alias_[i] = i;
    scaled[i] = atoms[i].prob * static_cast<double>(m);
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back(), l = large.back();
    small.pop_back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // leftovers are 1 up to rounding
  for (auto i : small) prob_[i] = 1.0;
  for (auto i : large) prob_[i] = 1.0;
}

long AliasTable::sample(double u1, double u2) const {
  const std::size_t m = offset_.size();
  std::size_t i = std::min(static_cast<std::size_t>(u1 * static_cast<double>(m)), m - 1);
  return u2 < prob_[i] ? offset_[i] : offset_[alias_[i]];
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double unit(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

struct Trial {
  bool alive = false;
  bool entered = false;  // visited (-inf, 0] at some k >= 1 before sigma
  long end = 0;
  long sigma = 0;  // 0 when alive
  long site = 0;
  long entry = 0;
};

McEstimate indicator_estimate(long count, long trials, std::uint64_t seed) {
  McEstimate e;
  e.trials = trials;
  e.seed_root = seed;
  const double p = static_cast<double>(count) / static_cast<double>(trials);
  e.mean = p;
  const double var = p * (1 - p) * static_cast<double>(trials) / static_cast<double>(trials - 1);
  e.std_error = std::sqrt(var / static_cast<double>(trials));
  return e;
}

// sum and sum of squares are exact integers for the values used here
McEstimate integer_estimate(long double sum, long double sumsq, long trials, std::uint64_t seed) {
  McEstimate e;
  e.trials = trials;
  e.seed_root = seed;
  const long double T = trials;
  const long double mean = sum / T;
  const long double var = (sumsq - T * mean * mean) / (T - 1);
  e.mean = static_cast<double>(mean);
  e.std_error = static_cast<double>(std::sqrt(std::max<long double>(var, 0) / T));
  return e;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t seed_root, std::uint64_t trial) {
  return splitmix64(splitmix64(seed_root) ^ (trial * 0xD1B54A32D192ED03ULL + 1));
}

std::map<std::string, McEstimate> simulate(const IncrementLaw& law, const KillingSet& killing, long x, long n,
                                           long trials, std::uint64_t seed_root, const McFunctionals& f) {
  require(trials >= 1000, "simulate needs trials >= 1000");
  require(n >= 1, "simulate needs n >= 1");
  for (long R : f.overshoot_R) {
    require(R > x, "escape level R must exceed x");
    if (killing.kind() == KillingSet::Kind::FiniteSet && !killing.empty())
      require(R > killing.sites().back(), "escape level R must exceed max A");
  }
  const bool need_entry = !f.conditional.empty();
  if (need_entry) require(x > 0, "conditional functional needs x > 0");

  const AliasTable alias(law);
  const std::size_t T = static_cast<std::size_t>(trials);
  const std::size_t nR = f.overshoot_R.size();
  std::vector<Trial> out(T);
  // per trial and level: overshoot + 1, or 0 when the level was not reached
  std::vector<long> over(T * nR, 0);

  parallel_for(T, [&](std::size_t t) {
    std::mt19937_64 g(trial_seed(seed_root, t));
    Trial tr;
    long pos = x;
    long* ov = nR ? &over[t * nR] : nullptr;
    std::size_t pending = nR;
    for (long k = 1; k <= n; ++k) {
      const double u1 = unit(g), u2 = unit(g);
      pos += alias.sample(u1, u2);
      if (killing.kills(pos)) {
        tr.sigma = k;
        tr.site = pos;
        break;
      }
      if (need_entry && !tr.entered && pos <= 0) {
        tr.entered = true;
        tr.entry = pos;
      }
      if (pending) {
        for (std::size_t r = 0; r < nR; ++r) {
          if (ov[r] == 0 && pos >= f.overshoot_R[r]) {
            ov[r] = pos - f.overshoot_R[r] + 1;
            --pending;
          }
        }
      }
    }
    tr.alive = tr.sigma == 0;
    tr.end = pos;
    out[t] = tr;
  });

  std::map<std::string, McEstimate> res;
  if (f.survival) {
    long c = 0;
    for (const auto& tr : out) c += tr.alive;
    res["survival"] = indicator_estimate(c, trials, seed_root);
  }
  if (f.sigma_time) {
    long double s = 0, s2 = 0;
    for (const auto& tr : out) {
      const long double v = tr.alive ? n : tr.sigma;
      s += v;
      s2 += v * v;
    }
    res["sigma_time"] = integer_estimate(s, s2, trials, seed_root);
  }
  if (f.endpoint_histogram) {
    std::map<long, long> counts;
    for (const auto& tr : out)
      if (tr.alive) ++counts[tr.end];
    for (const auto& [y, c] : counts) res["endpoint:" + std::to_string(y)] = indicator_estimate(c, trials, seed_root);
  }
  if (f.sigma_site) {
    std::map<long, long> counts;
    for (const auto& tr : out)
      if (!tr.alive) ++counts[tr.site];
    if (killing.kind() == KillingSet::Kind::FiniteSet)
      for (long a : killing.sites()) counts.emplace(a, 0);
    for (const auto& [xi, c] : counts)
      res["sigma_site:" + std::to_string(xi)] = indicator_estimate(c, trials, seed_root);
  }
  for (std::size_t r = 0; r < nR; ++r) {
    const std::string R = std::to_string(f.overshoot_R[r]);
    long c = 0;
    long double s = 0, s2 = 0;
    for (std::size_t t = 0; t < T; ++t) {
      const long v = over[t * nR + r];
      if (v == 0) continue;
      ++c;
      s += v - 1;
      s2 += static_cast<long double>(v - 1) * (v - 1);
    }
    res["escape:" + R] = indicator_estimate(c, trials, seed_root);
    res["overshoot:" + R] = integer_estimate(s, s2, trials, seed_root);
  }
  for (const auto& [y, eta] : f.conditional) {
    long a = 0, b = 0;
    for (const auto& tr : out) {
      if (!tr.alive || tr.end != y) continue;
      ++b;
      if (tr.entered && tr.entry < -eta) ++a;
    }
    McEstimate e;
    e.trials = b;
    e.seed_root = seed_root;
    if (b == 0) {
      e.mean = e.std_error = std::numeric_limits<double>::quiet_NaN();
    } else {
      // delta method for a/b with a a sub-indicator of b
      e.mean = static_cast<double>(a) / static_cast<double>(b);
      e.std_error = std::sqrt(e.mean * (1 - e.mean) / static_cast<double>(b));
    }
    res["conditional:" + std::to_string(y) + ":" + std::to_string(eta)] = e;
  }
  return res;
}

std::map<std::string, double> dp_truth(const IncrementLaw& law, const KillingSet& killing, long x, long n,
                                       const McFunctionals& f) {
  require(n >= 1, "dp_truth needs n >= 1");
  std::map<std::string, double> res;
  if (f.survival || f.endpoint_histogram || f.sigma_time || f.sigma_site) {
    const KilledEvolution evo = killed_kernel(law, killing, x, n);
    const EntranceSpacetime es = entrance_spacetime(evo);
    if (f.survival) res["survival"] = evo.live_mass();
    if (f.sigma_time) {
      double s = static_cast<double>(n) * es.live;
      for (long k = 1; k <= n; ++k) s += static_cast<double>(k) * es.time_law[k];
      res["sigma_time"] = s;
    }
    if (f.endpoint_histogram)
      for (std::size_t i = 0; i < evo.live.size(); ++i)
        if (evo.live[i] > 0) res["endpoint:" + std::to_string(evo.window.lo + static_cast<long>(i))] = evo.live[i];
    if (f.sigma_site)
      for (std::size_t s = 0; s < es.sites.size(); ++s)
        if (es.site_law[s] > 0 || killing.kind() == KillingSet::Kind::FiniteSet)
          res["sigma_site:" + std::to_string(es.sites[s])] = es.site_law[s];
  }
  for (long R : f.overshoot_R) {
    require(R > x, "escape level R must exceed x");
    Window w = default_window(law, n, std::max(std::labs(x), std::labs(R)));
    w.hi = R - 1;
    KilledMarch::Options o;
    o.record_exit_sites = true;
    KilledMarch march(law, killing, w, x, o);
    march.advance(n);
    double p = 0, m = 0;
    const auto& e = march.exit_right_sites();
    for (std::size_t d = 0; d < e.size(); ++d) {
      p += e[d];
      m += static_cast<double>(d) * e[d];
    }
    res["escape:" + std::to_string(R)] = p;
    res["overshoot:" + std::to_string(R)] = m;
  }
  if (!f.conditional.empty()) {
    require(killing.kind() == KillingSet::Kind::FiniteSet && killing.sites() == std::vector<long>{0},
            "conditional functional needs killing = {0}");
    for (const auto& [y, eta] : f.conditional)
      res["conditional:" + std::to_string(y) + ":" + std::to_string(eta)] = conditional_entrance(law, x, y, n, eta);
  }
  return res;
}

CoverageResult coverage_check(const IncrementLaw& law, const KillingSet& killing, long x, long n, long trials,
                              const std::string& key, double truth, const McFunctionals& f, int seeds,
                              std::uint64_t first_seed) {
  require(seeds >= 1, "coverage needs at least one seed");
  CoverageResult cr;
  cr.seeds = seeds;
  for (int s = 0; s < seeds; ++s) {
    const auto est = simulate(law, killing, x, n, trials, first_seed + static_cast<std::uint64_t>(s), f);
    auto it = est.find(key);
    const double mean = it == est.end() ? 0.0 : it->second.mean;
    const double se = it == est.end() ? 0.0 : it->second.std_error;
    if (std::fabs(mean - truth) <= 2 * se + 1e-15) ++cr.inside;
  }
  cr.pass = cr.inside * 50 >= 40 * seeds;
  return cr;
}

}  // namespace latticelab

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "latticelab/kernel.hpp"
#include "latticelab/law.hpp"

namespace latticelab {

struct McEstimate {
  double mean = 0;
  double std_error = 0;  // sample std / sqrt(trials)
  long trials = 0;
  std::uint64_t seed_root = 0;
};

// Keys of the result map:
//   survival              P_x[sigma > n]
//   sigma_time            E_x[sigma ^ n]
//   endpoint:<y>          P_x[sigma > n, S_n = y], for every y reached
//   sigma_site:<xi>       P_x[sigma <= n, S_sigma = xi]
//   escape:<R>            P_x[the walk enters [R, inf) at some k <= n before sigma]
//   overshoot:<R>         E_x[S - R at that entrance; it happens]
//   conditional:<y>:<eta> P_x[entrance site of (-inf, 0] < -eta | sigma > n, S_n = y] (ratio estimate)
struct McFunctionals {
  bool survival = true;
  bool endpoint_histogram = false;
  bool sigma_time = false;
  bool sigma_site = false;
  std::vector<long> overshoot_R;
  std::vector<std::pair<long, long>> conditional;  // (y, eta)
};

// Walker alias table (Vose), built once per law.
class AliasTable {
 public:
  explicit AliasTable(const IncrementLaw& law);
  // u1, u2 uniform in [0, 1)
  long sample(double u1, double u2) const;
  std::size_t size() const { return offset_.size(); }

 private:
  std::vector<long> offset_;
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

// Per-trial seed: splitmix64 finalizer over seed_root and the trial index.
std::uint64_t trial_seed(std::uint64_t seed_root, std::uint64_t trial);

std::map<std::string, McEstimate> simulate(const IncrementLaw& law, const KillingSet& killing, long x, long n,
                                           long trials, std::uint64_t seed_root, const McFunctionals& functionals);

// The same functionals computed by the killed march (endpoint over the whole
// window, sigma_site over the sites of a finite set). conditional needs killing = {0}.
std::map<std::string, double> dp_truth(const IncrementLaw& law, const KillingSet& killing, long x, long n,
                                       const McFunctionals& functionals);

struct CoverageResult {
  int inside = 0;  // seeds whose +-2 SE interval holds the truth
  int seeds = 0;
  bool pass = false;  // inside >= 40 for 50 seeds (scaled otherwise)
};

CoverageResult coverage_check(const IncrementLaw& law, const KillingSet& killing, long x, long n, long trials,
                              const std::string& key, double truth, const McFunctionals& functionals,
                              int seeds = 50, std::uint64_t first_seed = 1);

}  // namespace latticelab

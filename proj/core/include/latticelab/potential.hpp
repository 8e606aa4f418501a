#pragma once

#include <string>
#include <vector>

#include "latticelab/hitting.hpp"
#include "latticelab/law.hpp"

namespace latticelab {

enum class PotentialMethod { Both, QuadratureOnly, PartialSumsOnly };

class PotentialTable {
 public:
  long xmax() const { return xmax_; }
  double sigma2() const { return sigma2_; }
  double a(long x) const;
  double a_dagger(long x) const { return a(x) + (x == 0 ? 1.0 : 0.0); }
  double lambda(long x) const { return a(x) - static_cast<double>(x) / sigma2_; }
  double lambda_hat(long x) const { return a(-x) - static_cast<double>(x) / sigma2_; }
  double err_est(long x) const;
  const std::string& method_tag(long x) const;
  bool contains(long x) const { return x >= -xmax_ && x <= xmax_; }

  // raw per-method values where computed (empty otherwise)
  const std::vector<double>& quadrature() const { return m2_; }
  const std::vector<double>& partial_sums() const { return m1_; }

 private:
  friend PotentialTable potential_table(const IncrementLaw&, long, PotentialMethod);
  long xmax_ = 0;
  double sigma2_ = 1;
  std::vector<double> a_, err_, m1_, m2_;
  std::vector<std::string> tag_;
};

PotentialTable potential_table(const IncrementLaw& law, long xmax, PotentialMethod method = PotentialMethod::Both);

// a(x) on [-xmax, xmax] by Fourier quadrature with `nodes` midpoint nodes.
std::vector<double> potential_quadrature(const IncrementLaw& law, long xmax, long nodes = 1L << 16);

// a(x) on [-xmax, xmax] from partial sums up to horizon N (0: automatic),
// period-block averaged and extrapolated in N.
std::vector<double> potential_partial_sums(const IncrementLaw& law, long xmax, long horizon = 0);

// g(x,y) = a(x) + a(-y) - a(x-y)
double green_punctured(const PotentialTable& table, long x, long y);

struct CPlus {
  double via_limit = 0;
  double via_limit_err = 0;
  double via_sum = 0;
  double via_sum_err = 0;
  bool divergent = false;
  std::vector<long> sum_cutoffs;        // K values
  std::vector<double> partial_sums;     // sum over -K <= y <= 0
};

CPlus cplus(const IncrementLaw& law, const PotentialTable& table, const HittingLaw& h_inf);

struct ConditionHProfile {
  std::vector<long> x;
  std::vector<double> ratio;        // (s2 a(x) - x) / x
  std::vector<double> lambda;       // a(x) - x / s2
  std::vector<double> double_sum;   // (2/s2) sum sum H
  std::vector<double> triple_sum;   // (4/s2^2) sum sum sum F
  bool h_plausible = false;
};

ConditionHProfile condition_H_profile(const IncrementLaw& law, const PotentialTable& table,
                                      const HittingLaw& h_inf, long xmax);

}  // namespace latticelab

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace latticelab {

struct Atom {
  long offset;
  double prob;
};

// Validated increment distribution. Immutable once built.
class IncrementLaw {
 public:
  const std::vector<Atom>& atoms() const { return atoms_; }
  double sigma2() const { return sigma2_; }
  double sigma() const;
  double mean_residual() const { return mean_residual_; }
  double third_moment() const { return m3_; }
  int period() const { return period_; }
  bool left_continuous() const { return left_continuous_; }
  bool right_continuous() const { return right_continuous_; }
  long support_gcd() const { return support_gcd_; }
  long min_offset() const { return min_off_; }
  long max_offset() const { return max_off_; }
  long max_abs_offset() const;
  // residue of every offset modulo the period
  long residue() const { return residue_; }

  double pmf(long z) const;
  // F(t) = P[X <= t]
  double cdf(long t) const;

  const std::map<std::string, double>& metadata() const { return metadata_; }
  void set_metadata(const std::string& key, double value) { metadata_[key] = value; }

  bool operator==(const IncrementLaw& o) const;

 private:
  friend IncrementLaw build_law(std::vector<Atom> atoms);
  std::vector<Atom> atoms_;
  std::vector<double> dense_;  // pmf on [min_off_, max_off_]
  std::vector<double> cdf_;
  double sigma2_ = 0, mean_residual_ = 0, m3_ = 0;
  int period_ = 1;
  bool left_continuous_ = false, right_continuous_ = false;
  long support_gcd_ = 1, min_off_ = 0, max_off_ = 0, residue_ = 0;
  std::map<std::string, double> metadata_;
};

IncrementLaw build_law(std::vector<Atom> atoms);

// gcd of return times to 0, found by an exact reachability DP.
int period(const IncrementLaw& law);

IncrementLaw reflect_law(const IncrementLaw& law);

// P[X = -w] ~ w^-beta on 2..cutoff plus atoms at +1, +2 fixing mass and mean.
IncrementLaw heavy_tail_family(double beta, long cutoff);

// Common test laws.
IncrementLaw simple_walk();
IncrementLaw light_law();  // {-2: 1/3, +1: 2/3}

// {"atoms": [[offset, prob], ...]}; a "family" object is also accepted on input.
IncrementLaw law_from_json(const std::string& text);
std::string law_to_json(const IncrementLaw& law);
IncrementLaw load_law_file(const std::string& path);

}  // namespace latticelab

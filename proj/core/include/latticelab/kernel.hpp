#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "latticelab/law.hpp"

namespace latticelab {

struct Window {
  long lo = 0;
  long hi = 0;
  long size() const { return hi - lo + 1; }
  bool contains(long x) const { return x >= lo && x <= hi; }
};

class KillingSet {
 public:
  enum class Kind { FiniteSet, HalfLineLeft };

  static KillingSet finite(std::vector<long> sites);
  static KillingSet half_line_left(long boundary);
  static KillingSet none();  // empty finite set: plain n-step march

  Kind kind() const { return kind_; }
  const std::vector<long>& sites() const { return sites_; }
  long boundary() const { return boundary_; }
  bool empty() const { return kind_ == Kind::FiniteSet && sites_.empty(); }
  bool kills(long z) const;
  long r_plus() const;   // 1 + max A
  long r_minus() const;  // -1 + min A
  KillingSet negated() const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::FiniteSet;
  std::vector<long> sites_;
  long boundary_ = 0;
};

// "0,3", "{0,3}", "halfline:0" or "(-inf,0]".
KillingSet parse_killing_set(const std::string& spec);

// 12 sigma sqrt(n) + extent + 2 max|offset|, symmetric about 0.
Window default_window(const IncrementLaw& law, long n, long extent = 0);

// Time march of a (sub)probability vector: convolve, then move mass landing on
// killing sites to the entrance ledger and mass leaving the window to the leak.
class KilledMarch {
 public:
  struct Options {
    bool record_entrance_history = false;
    bool accumulate_green = false;
    bool record_exit_sites = false;
    bool allow_fft = true;
  };

  KilledMarch(const IncrementLaw& law, KillingSet killing, Window window, long source);
  KilledMarch(const IncrementLaw& law, KillingSet killing, Window window, long source, Options opts);
  KilledMarch(const IncrementLaw& law, KillingSet killing, Window window,
              const std::vector<std::pair<long, double>>& initial, Options opts);
  ~KilledMarch();
  KilledMarch(KilledMarch&&) noexcept;
  KilledMarch& operator=(KilledMarch&&) noexcept;

  void step();
  void advance(long steps);
  long steps() const { return k_; }

  const Window& window() const { return window_; }
  const KillingSet& killing() const { return killing_; }
  double live(long site) const;
  const std::vector<double>& live_vector() const { return live_; }
  double live_mass() const;

  // entrance slots: finite sets in site order; half-line slot j is site boundary - j
  const std::vector<long>& entrance_sites() const { return entrance_sites_; }
  const std::vector<double>& entrance_last() const { return entrance_last_; }
  const std::vector<double>& entrance_total() const { return entrance_total_; }
  double entrance_at(long site) const;  // total over all steps so far
  double entrance_mass() const;
  // history[k-1][slot] = P[sigma = k, S_k = site(slot)]
  const std::vector<std::vector<double>>& entrance_history() const { return history_; }

  double leak_left() const { return leak_left_; }
  double leak_right() const { return leak_right_; }
  double leak() const { return leak_left_ + leak_right_; }
  // exit tallies by distance d >= 0 beyond the edge: site lo-1-d or hi+1+d
  const std::vector<double>& exit_left_sites() const { return exit_left_; }
  const std::vector<double>& exit_right_sites() const { return exit_right_; }
  const std::vector<double>& exit_right_last() const { return exit_right_last_; }

  // sum over k of the live vector, including k = 0
  const std::vector<double>& green() const { return green_; }
  double green_at(long site) const;
  double initial_mass() const { return initial_mass_; }

 private:
  struct FftState;
  void init(const std::vector<std::pair<long, double>>& initial);
  void convolve_direct(long a0, long a1);
  void convolve_fft(long a0, long a1);

  IncrementLaw law_;
  KillingSet killing_;
  Window window_;
  Options opts_;
  long k_ = 0;
  long span_ = 0;
  std::vector<double> live_, ext_, green_;
  long a0_ = 0, a1_ = -1;
  std::vector<long> entrance_sites_;
  std::vector<long> kill_index_;  // window index of finite killing sites
  std::vector<double> entrance_last_, entrance_total_;
  std::vector<std::vector<double>> history_;
  double leak_left_ = 0, leak_right_ = 0, initial_mass_ = 0;
  std::vector<double> exit_left_, exit_right_, exit_right_last_;
  std::unique_ptr<FftState> fft_;
};

struct Pmf {
  long lo = 0;
  long n = 0;
  std::vector<double> p;
  double leak = 0;
  double at(long z) const;
  long hi() const { return lo + static_cast<long>(p.size()) - 1; }
};

Pmf nstep_pmf(const IncrementLaw& law, long n, std::optional<Window> window = std::nullopt);

// p^n for every n in `ns` (sorted) from one march.
std::map<long, Pmf> nstep_pmfs(const IncrementLaw& law, const std::vector<long>& ns,
                               std::optional<Window> window = std::nullopt);

struct KilledEvolution {
  long source = 0;
  long n = 0;
  Window window;
  KillingSet killing;
  std::vector<double> live;  // p_A^n(x, lo + i)
  std::vector<long> entrance_sites;
  std::vector<std::vector<double>> entrance_ledger;  // [k-1][slot]
  double far_field_leak = 0;
  double live_at(long y) const;
  double live_mass() const;
};

KilledEvolution killed_kernel(const IncrementLaw& law, const KillingSet& killing, long x, long n,
                              std::optional<Window> window = std::nullopt);

struct EntranceSpacetime {
  std::vector<double> time_law;                // index k = 0..n
  std::vector<long> sites;                     // slot -> site
  std::vector<double> site_law;                // per slot
  std::vector<std::vector<double>> joint;      // [k][slot], k = 0..n
  double live = 0;
  double leak = 0;
};

EntranceSpacetime entrance_spacetime(const KilledEvolution& evo);

// (2 pi sigma^2 t)^{-1/2} exp(-u^2 / 2 sigma^2 t)
double gauss_density(double sigma2, double t, double u);

struct GaussLclt {
  long lo = 0;
  std::vector<double> gauss;  // nu * g_n(x)
  double sup_scaled_error = 0;
};

GaussLclt gauss_lclt(const IncrementLaw& law, long n, std::optional<Window> window = std::nullopt);

// Necessary lattice condition for p^n(z) > 0: congruence and range.
bool admissible(const IncrementLaw& law, long z, long n);

}  // namespace latticelab

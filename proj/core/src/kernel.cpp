#include "latticelab/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

#include "fft.hpp"
#include "latticelab/error.hpp"

namespace latticelab {

// ---------------------------------------------------------------- KillingSet

KillingSet KillingSet::finite(std::vector<long> sites) {
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  KillingSet k;
  k.kind_ = Kind::FiniteSet;
  k.sites_ = std::move(sites);
  return k;
}

KillingSet KillingSet::half_line_left(long boundary) {
  KillingSet k;
  k.kind_ = Kind::HalfLineLeft;
  k.boundary_ = boundary;
  return k;
}

KillingSet KillingSet::none() { return finite({}); }

bool KillingSet::kills(long z) const {
  if (kind_ == Kind::HalfLineLeft) return z <= boundary_;
  return std::binary_search(sites_.begin(), sites_.end(), z);
}

long KillingSet::r_plus() const {
  require(kind_ == Kind::FiniteSet && !sites_.empty(), "r_plus needs a nonempty finite set");
  return sites_.back() + 1;
}

long KillingSet::r_minus() const {
  require(kind_ == Kind::FiniteSet && !sites_.empty(), "r_minus needs a nonempty finite set");
  return sites_.front() - 1;
}

KillingSet KillingSet::negated() const {
  require(kind_ == Kind::FiniteSet, "only finite sets can be negated");
  std::vector<long> s;
  for (long z : sites_) s.push_back(-z);
  return finite(std::move(s));
}

std::string KillingSet::describe() const {
  std::ostringstream os;
  if (kind_ == Kind::HalfLineLeft) {
    os << "(-inf," << boundary_ << "]";
  } else {
    os << "{";
    for (size_t i = 0; i < sites_.size(); ++i) os << (i ? "," : "") << sites_[i];
    os << "}";
  }
  return os.str();
}

KillingSet parse_killing_set(const std::string& spec) {
  std::string s;
  for (char c : spec)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  auto bad = [&] { fail(ErrorCode::ConfigError, "cannot parse killing set '" + spec + "'"); };
  try {
    if (s.rfind("halfline:", 0) == 0) return KillingSet::half_line_left(std::stol(s.substr(9)));
    if (s.rfind("(-inf,", 0) == 0 && s.back() == ']')
      return KillingSet::half_line_left(std::stol(s.substr(6, s.size() - 7)));
    if (!s.empty() && s.front() == '{') {
      if (s.back() != '}') bad();
      s = s.substr(1, s.size() - 2);
    }
    std::vector<long> sites;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) bad();
      size_t used = 0;
      long v = std::stol(tok, &used);
      if (used != tok.size()) bad();
      sites.push_back(v);
    }
    if (sites.empty()) bad();
    return KillingSet::finite(std::move(sites));
  } catch (const Error&) {
    throw;
  } catch (...) {
    bad();
  }
  return KillingSet::none();
}

Window default_window(const IncrementLaw& law, long n, long extent) {
  long half = static_cast<long>(std::ceil(12.0 * law.sigma() * std::sqrt(static_cast<double>(std::max(n, 1L))))) +
              std::labs(extent) + 2 * law.max_abs_offset();
  return {-half, half};
}

// ---------------------------------------------------------------- KilledMarch

struct KilledMarch::FftState {
  std::size_t n = 0;
  std::unique_ptr<detail::RealFft> fft;
  std::vector<std::complex<double>> kernel_hat, buf_hat;
  std::vector<double> buf;
};

KilledMarch::KilledMarch(const IncrementLaw& law, KillingSet killing, Window window, long source)
    : KilledMarch(law, std::move(killing), window, source, Options{}) {}

KilledMarch::KilledMarch(const IncrementLaw& law, KillingSet killing, Window window, long source, Options opts)
    : law_(law), killing_(std::move(killing)), window_(window), opts_(opts) {
  require(window_.contains(source), "source outside window");
  init({{source, 1.0}});
}

KilledMarch::KilledMarch(const IncrementLaw& law, KillingSet killing, Window window,
                         const std::vector<std::pair<long, double>>& initial, Options opts)
    : law_(law), killing_(std::move(killing)), window_(window), opts_(opts) {
  init(initial);
}

KilledMarch::~KilledMarch() = default;
KilledMarch::KilledMarch(KilledMarch&&) noexcept = default;
KilledMarch& KilledMarch::operator=(KilledMarch&&) noexcept = default;

void KilledMarch::init(const std::vector<std::pair<long, double>>& initial) {
  require(window_.lo < window_.hi, "window needs lo < hi");
  const long W = window_.size();
  span_ = law_.max_offset() - law_.min_offset();
  live_.assign(W, 0.0);
  ext_.assign(W + span_, 0.0);
  if (killing_.kind() == KillingSet::Kind::FiniteSet) {
    for (long s : killing_.sites()) {
      require(s > window_.lo && s < window_.hi, "killing site outside window");
      entrance_sites_.push_back(s);
      kill_index_.push_back(s - window_.lo);
    }
  } else {
    require(window_.lo <= killing_.boundary() + 1, "half-line boundary must touch the window");
    const long ext_lo = window_.lo + law_.min_offset();
    for (long z = killing_.boundary(); z >= ext_lo; --z) entrance_sites_.push_back(z);
  }
  entrance_last_.assign(entrance_sites_.size(), 0.0);
  entrance_total_.assign(entrance_sites_.size(), 0.0);
  if (opts_.record_exit_sites) {
    exit_left_.assign(-law_.min_offset(), 0.0);
    exit_right_.assign(law_.max_offset(), 0.0);
    exit_right_last_.assign(law_.max_offset(), 0.0);
  }
  a0_ = W;
  a1_ = -1;
  for (const auto& [site, mass] : initial) {
    require(window_.contains(site), "initial mass outside window");
    long i = site - window_.lo;
    live_[i] += mass;
    initial_mass_ += mass;
    a0_ = std::min(a0_, i);
    a1_ = std::max(a1_, i);
  }
  if (opts_.accumulate_green) green_ = live_;
}

void KilledMarch::convolve_direct(long a0, long a1) {
  // ext index e <-> site lo + min_off + e; live index i contributes to e = i + (off - min_off)
  const long mo = law_.min_offset();
  for (const auto& at : law_.atoms()) {
    const double p = at.prob;
    double* out = ext_.data() + (at.offset - mo);
    const double* in = live_.data();
    for (long i = a0; i <= a1; ++i) out[i] += p * in[i];
  }
}

void KilledMarch::convolve_fft(long a0, long a1) {
  const long width = a1 - a0 + 1;
  const std::size_t need = static_cast<std::size_t>(width + span_);
  if (!fft_ || fft_->n < need || fft_->n > 4 * need + 64) {
    auto st = std::make_unique<FftState>();
    st->n = detail::good_fft_size(need);
    st->fft = std::make_unique<detail::RealFft>(st->n);
    st->buf.assign(st->n, 0.0);
    st->kernel_hat.resize(st->n / 2 + 1);
    st->buf_hat.resize(st->n / 2 + 1);
    std::fill(st->buf.begin(), st->buf.end(), 0.0);
    for (const auto& at : law_.atoms()) st->buf[at.offset - law_.min_offset()] = at.prob;
    st->fft->forward(st->buf.data(), st->kernel_hat.data());
    fft_ = std::move(st);
  }
  auto& st = *fft_;
  std::fill(st.buf.begin(), st.buf.end(), 0.0);
  std::copy(live_.begin() + a0, live_.begin() + a1 + 1, st.buf.begin());
  st.fft->forward(st.buf.data(), st.buf_hat.data());
  for (std::size_t k = 0; k < st.buf_hat.size(); ++k) st.buf_hat[k] *= st.kernel_hat[k];
  st.fft->inverse(st.buf_hat.data(), st.buf.data());
  const double inv = 1.0 / static_cast<double>(st.n);
  for (long e = 0; e < width + span_; ++e) ext_[a0 + e] += st.buf[e] * inv;
}

void KilledMarch::step() {
  const long W = window_.size();
  std::fill(entrance_last_.begin(), entrance_last_.end(), 0.0);
  if (opts_.record_exit_sites) std::fill(exit_right_last_.begin(), exit_right_last_.end(), 0.0);
  ++k_;
  if (a1_ < a0_) {
    if (opts_.record_entrance_history) history_.push_back(entrance_last_);
    return;
  }
  const long a0 = a0_, a1 = a1_;
  const long e_lo = a0, e_hi = a1 + span_;  // ext range written this step
  std::fill(ext_.begin() + e_lo, ext_.begin() + e_hi + 1, 0.0);

  const double width = static_cast<double>(a1 - a0 + 1);
  const double direct_cost = width * static_cast<double>(law_.atoms().size());
  const double fft_n = width + static_cast<double>(span_);
  const double fft_cost = 6.0 * fft_n * std::log2(std::max(fft_n, 2.0)) + 200.0;
  if (opts_.allow_fft && law_.atoms().size() > 16 && fft_cost < direct_cost)
    convolve_fft(a0, a1);
  else
    convolve_direct(a0, a1);

  std::fill(live_.begin() + a0, live_.begin() + a1 + 1, 0.0);
  const long mo = law_.min_offset();
  const long lo = window_.lo;

  // Half-line entrances first: every site <= boundary in the written range.
  if (killing_.kind() == KillingSet::Kind::HalfLineLeft) {
    const long b = killing_.boundary();
    for (long e = e_lo; e <= e_hi; ++e) {
      long site = lo + mo + e;
      if (site > b) break;
      long slot = b - site;
      entrance_last_[slot] += ext_[e];
      ext_[e] = 0.0;
    }
  }
  // Leak outside the window.
  for (long e = e_lo; e <= e_hi; ++e) {
    long i = e + mo;  // window index
    if (i >= 0) break;
    double m = ext_[e];
    if (m == 0.0) continue;
    leak_left_ += m;
    if (opts_.record_exit_sites) exit_left_[-i - 1] += m;
    ext_[e] = 0.0;
  }
  for (long e = e_hi; e >= e_lo; --e) {
    long i = e + mo;
    if (i < W) break;
    double m = ext_[e];
    if (m == 0.0) continue;
    leak_right_ += m;
    if (opts_.record_exit_sites) {
      exit_right_[i - W] += m;
      exit_right_last_[i - W] += m;
    }
    ext_[e] = 0.0;
  }
  // Copy back into the window.
  const long new0 = std::max(0L, a0 + mo), n1 = std::min(W - 1, a1 + law_.max_offset());
  for (long i = new0; i <= n1; ++i) live_[i] = ext_[i - mo];
  if (killing_.kind() == KillingSet::Kind::FiniteSet) {
    for (size_t s = 0; s < kill_index_.size(); ++s) {
      long i = kill_index_[s];
      entrance_last_[s] += live_[i];
      live_[i] = 0.0;
    }
  }
  for (size_t s = 0; s < entrance_last_.size(); ++s) entrance_total_[s] += entrance_last_[s];
  if (opts_.record_entrance_history) history_.push_back(entrance_last_);

  // active range: exact zeros trimmed
  long b0 = new0, b1 = n1;
  while (b0 <= b1 && live_[b0] == 0.0) ++b0;
  while (b1 >= b0 && live_[b1] == 0.0) --b1;
  a0_ = b0;
  a1_ = b1;
  if (opts_.accumulate_green)
    for (long i = a0_; i <= a1_; ++i) green_[i] += live_[i];
}

void KilledMarch::advance(long steps) {
  for (long s = 0; s < steps; ++s) step();
}

double KilledMarch::live(long site) const {
  if (!window_.contains(site)) return 0.0;
  return live_[site - window_.lo];
}

double KilledMarch::live_mass() const {
  double s = 0;
  for (long i = std::max(a0_, 0L); i <= a1_; ++i) s += live_[i];
  return s;
}

double KilledMarch::entrance_at(long site) const {
  for (size_t s = 0; s < entrance_sites_.size(); ++s)
    if (entrance_sites_[s] == site) return entrance_total_[s];
  return 0.0;
}

double KilledMarch::entrance_mass() const {
  double s = 0;
  for (double v : entrance_total_) s += v;
  return s;
}

double KilledMarch::green_at(long site) const {
  if (green_.empty() || !window_.contains(site)) return 0.0;
  return green_[site - window_.lo];
}

// ---------------------------------------------------------------- Pmf

double Pmf::at(long z) const {
  if (z < lo || z > hi()) return 0.0;
  return p[z - lo];
}

std::map<long, Pmf> nstep_pmfs(const IncrementLaw& law, const std::vector<long>& ns, std::optional<Window> window) {
  require(!ns.empty(), "nstep_pmfs: empty n list");
  std::vector<long> sorted(ns);
  std::sort(sorted.begin(), sorted.end());
  require(sorted.front() >= 0, "n must be nonnegative");
  Window w = window ? *window : default_window(law, sorted.back());
  KilledMarch march(law, KillingSet::none(), w, 0);
  std::map<long, Pmf> out;
  for (long n : sorted) {
    march.advance(n - march.steps());
    if (march.leak() > 1e-8)
      fail(ErrorCode::WindowTooSmall, "leak " + std::to_string(march.leak()) + " at n = " + std::to_string(n));
    Pmf pm;
    pm.lo = w.lo;
    pm.n = n;
    pm.p = march.live_vector();
    pm.leak = march.leak();
    out.emplace(n, std::move(pm));
  }
  return out;
}

Pmf nstep_pmf(const IncrementLaw& law, long n, std::optional<Window> window) {
  require(n >= 1, "nstep_pmf needs n >= 1");
  return nstep_pmfs(law, {n}, window).at(n);
}

// ---------------------------------------------------------------- killed kernel

double KilledEvolution::live_at(long y) const {
  if (!window.contains(y)) return 0.0;
  return live[y - window.lo];
}

double KilledEvolution::live_mass() const { return std::accumulate(live.begin(), live.end(), 0.0); }

KilledEvolution killed_kernel(const IncrementLaw& law, const KillingSet& killing, long x, long n,
                              std::optional<Window> window) {
  require(n >= 0, "n must be nonnegative");
  long extent = std::labs(x);
  if (killing.kind() == KillingSet::Kind::FiniteSet)
    for (long s : killing.sites()) extent = std::max(extent, std::labs(s) + 1);
  else
    extent = std::max(extent, std::labs(killing.boundary()) + 1);
  Window w = window ? *window : default_window(law, n, extent);
  if (killing.kind() == KillingSet::Kind::HalfLineLeft && !window) w.lo = killing.boundary() + 1;
  KilledMarch::Options opts;
  opts.record_entrance_history = true;
  KilledMarch march(law, killing, w, x, opts);
  march.advance(n);
  if (march.leak() > 1e-8)
    fail(ErrorCode::WindowTooSmall, "leak " + std::to_string(march.leak()) + " exceeds 1e-8");
  KilledEvolution evo;
  evo.source = x;
  evo.n = n;
  evo.window = w;
  evo.killing = killing;
  evo.live = march.live_vector();
  evo.entrance_sites = march.entrance_sites();
  evo.entrance_ledger = march.entrance_history();
  evo.far_field_leak = march.leak();
  return evo;
}

EntranceSpacetime entrance_spacetime(const KilledEvolution& evo) {
  EntranceSpacetime es;
  es.sites = evo.entrance_sites;
  es.site_law.assign(es.sites.size(), 0.0);
  es.time_law.assign(evo.n + 1, 0.0);
  es.joint.assign(evo.n + 1, std::vector<double>(es.sites.size(), 0.0));
  for (long k = 1; k <= evo.n; ++k) {
    const auto& row = evo.entrance_ledger[k - 1];
    for (size_t s = 0; s < row.size(); ++s) {
      es.joint[k][s] = row[s];
      es.time_law[k] += row[s];
      es.site_law[s] += row[s];
    }
  }
  es.live = evo.live_mass();
  es.leak = evo.far_field_leak;
  return es;
}

// ---------------------------------------------------------------- LCLT

double gauss_density(double sigma2, double t, double u) {
  return std::exp(-u * u / (2.0 * sigma2 * t)) / std::sqrt(2.0 * M_PI * sigma2 * t);
}

bool admissible(const IncrementLaw& law, long z, long n) {
  if (n == 0) return z == 0;
  if (z < n * law.min_offset() || z > n * law.max_offset()) return false;
  const long nu = law.period();
  long r = ((z - n * law.residue()) % nu + nu) % nu;
  return r == 0;
}

GaussLclt gauss_lclt(const IncrementLaw& law, long n, std::optional<Window> window) {
  require(n >= 1, "gauss_lclt needs n >= 1");
  Pmf pm = nstep_pmf(law, n, window);
  GaussLclt g;
  g.lo = pm.lo;
  g.gauss.resize(pm.p.size());
  const double nu = law.period();
  const double sq = std::sqrt(static_cast<double>(n));
  for (size_t i = 0; i < pm.p.size(); ++i) {
    long x = pm.lo + static_cast<long>(i);
    g.gauss[i] = nu * gauss_density(law.sigma2(), static_cast<double>(n), static_cast<double>(x));
    if (admissible(law, x, n)) {
      double scale = std::max(static_cast<double>(n), static_cast<double>(x) * x) / sq;
      g.sup_scaled_error = std::max(g.sup_scaled_error, std::fabs(pm.p[i] - g.gauss[i]) * scale);
    }
  }
  return g;
}

}  // namespace latticelab

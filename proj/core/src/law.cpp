#include "latticelab/law.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "latticelab/error.hpp"

namespace latticelab {

namespace {

constexpr double kMassTol = 1e-12;
constexpr int kReturnCap = 512;
constexpr int kStableReturns = 8;

// Exact set of reachable partial sums, one bit per site. Steps can always be
// reordered so that partial sums stay in [min_off, max_off], so returns to 0
// at time n are decided inside that window.
int compute_period(const std::vector<Atom>& atoms, long lo, long hi) {
  const long w = hi - lo + 1;
  std::vector<char> cur(w, 0), nxt(w, 0);
  cur[-lo] = 1;
  long g = 0;
  int unchanged = 0;
  bool found = false;
  for (int n = 1; n <= kReturnCap; ++n) {
    std::fill(nxt.begin(), nxt.end(), 0);
    for (long i = 0; i < w; ++i) {
      if (!cur[i]) continue;
      for (const auto& a : atoms) {
        long j = i + a.offset;
        if (j >= 0 && j < w) nxt[j] = 1;
      }
    }
    std::swap(cur, nxt);
    if (cur[-lo]) {
      long ng = std::gcd(g, static_cast<long>(n));
      if (found && ng == g) {
        if (++unchanged >= kStableReturns) return static_cast<int>(g);
      } else {
        unchanged = 0;
      }
      g = ng;
      found = true;
      if (g == 1) return 1;
    }
  }
  if (!found) fail(ErrorCode::NoReturnFound, "no return to 0 within 512 steps");
  return static_cast<int>(g);
}

}  // namespace

double IncrementLaw::sigma() const { return std::sqrt(sigma2_); }

long IncrementLaw::max_abs_offset() const { return std::max(-min_off_, max_off_); }

double IncrementLaw::pmf(long z) const {
  if (z < min_off_ || z > max_off_) return 0.0;
  return dense_[z - min_off_];
}

double IncrementLaw::cdf(long t) const {
  if (t < min_off_) return 0.0;
  if (t >= max_off_) return 1.0;
  return cdf_[t - min_off_];
}

bool IncrementLaw::operator==(const IncrementLaw& o) const {
  if (atoms_.size() != o.atoms_.size()) return false;
  for (size_t i = 0; i < atoms_.size(); ++i)
    if (atoms_[i].offset != o.atoms_[i].offset || atoms_[i].prob != o.atoms_[i].prob) return false;
  return true;
}

IncrementLaw build_law(std::vector<Atom> atoms) {
  require(!atoms.empty(), "law needs at least one atom");
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.offset < b.offset; });
  for (size_t i = 0; i < atoms.size(); ++i) {
    require(atoms[i].prob > 0.0 && std::isfinite(atoms[i].prob), "atom probabilities must be positive");
    if (i > 0) require(atoms[i].offset != atoms[i - 1].offset, "atom offsets must be distinct");
  }

  long double mass = 0, mean = 0, m2 = 0, m3 = 0;
  for (const auto& a : atoms) {
    long double p = a.prob, z = a.offset;
    mass += p;
    mean += p * z;
    m2 += p * z * z;
    m3 += p * z * z * z;
  }
  if (std::fabs(static_cast<double>(mass - 1.0L)) > kMassTol)
    fail(ErrorCode::NotNormalized, "probabilities sum to " + std::to_string(static_cast<double>(mass)));
  if (atoms.front().offset >= 0 || atoms.back().offset <= 0)
    fail(ErrorCode::OneSidedSupport, "support must contain positive and negative offsets");
  if (std::fabs(static_cast<double>(mean)) > kMassTol)
    fail(ErrorCode::NonzeroMean, "mean is " + std::to_string(static_cast<double>(mean)));

  long g = 0;
  for (const auto& a : atoms) g = std::gcd(g, std::labs(a.offset));
  if (g != 1) fail(ErrorCode::Reducible, "gcd of offsets is " + std::to_string(g));

  IncrementLaw law;
  law.atoms_ = std::move(atoms);
  law.min_off_ = law.atoms_.front().offset;
  law.max_off_ = law.atoms_.back().offset;
  law.sigma2_ = static_cast<double>(m2 - mean * mean);
  law.mean_residual_ = std::fabs(static_cast<double>(mean));
  law.m3_ = static_cast<double>(m3);
  law.support_gcd_ = g;
  law.left_continuous_ = law.min_off_ >= -1;
  law.right_continuous_ = law.max_off_ <= 1;

  law.dense_.assign(law.max_off_ - law.min_off_ + 1, 0.0);
  for (const auto& a : law.atoms_) law.dense_[a.offset - law.min_off_] = a.prob;
  law.cdf_.resize(law.dense_.size());
  long double acc = 0;
  for (size_t i = 0; i < law.dense_.size(); ++i) {
    acc += law.dense_[i];
    law.cdf_[i] = static_cast<double>(acc);
  }

  law.period_ = compute_period(law.atoms_, law.min_off_, law.max_off_);
  long nu = law.period_;
  law.residue_ = ((law.atoms_.front().offset % nu) + nu) % nu;
  return law;
}

int period(const IncrementLaw& law) { return law.period(); }

IncrementLaw reflect_law(const IncrementLaw& law) {
  std::vector<Atom> atoms;
  atoms.reserve(law.atoms().size());
  for (const auto& a : law.atoms()) atoms.push_back({-a.offset, a.prob});
  IncrementLaw r = build_law(std::move(atoms));
  for (const auto& [k, v] : law.metadata()) r.set_metadata(k, v);
  return r;
}

IncrementLaw heavy_tail_family(double beta, long cutoff) {
  require(beta > 3.0 && beta <= 4.0, "beta must lie in (3, 4]");
  require(cutoff >= 2, "cutoff must be at least 2");
  long double s0 = 0, s1 = 0;
  for (long w = 2; w <= cutoff; ++w) {
    long double t = std::pow(static_cast<long double>(w), -static_cast<long double>(beta));
    s0 += t;
    s1 += t * w;
  }
  // Equal masses on +1 and +2 before recentering: mean balance 3p = c s1, mass c s0 + 2p = 1.
  const long double c = 1.0L / (s0 + 2.0L * s1 / 3.0L);
  const long double neg_mass = c * s0, neg_mean = c * s1;
  // p1 + p2 = 1 - neg_mass, p1 + 2 p2 = neg_mean
  const long double p2 = neg_mean - (1.0L - neg_mass);
  const long double p1 = 2.0L * (1.0L - neg_mass) - neg_mean;
  if (p1 <= 0 || p2 <= 0)
    fail(ErrorCode::InfeasibleRecentering, "two-atom recentering gives a nonpositive mass");

  std::vector<Atom> atoms;
  for (long w = cutoff; w >= 2; --w)
    atoms.push_back({-w, static_cast<double>(c * std::pow(static_cast<long double>(w), -static_cast<long double>(beta)))});
  atoms.push_back({1, static_cast<double>(p1)});
  atoms.push_back({2, static_cast<double>(p2)});
  IncrementLaw law = build_law(std::move(atoms));
  law.set_metadata("beta", beta);
  law.set_metadata("cutoff", static_cast<double>(cutoff));
  return law;
}

IncrementLaw simple_walk() { return build_law({{-1, 0.5}, {1, 0.5}}); }

IncrementLaw light_law() { return build_law({{-2, 1.0 / 3.0}, {1, 2.0 / 3.0}}); }

IncrementLaw law_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::ConfigError, std::string("law JSON does not parse: ") + e.what());
  }
  if (j.contains("family")) {
    const auto& f = j["family"];
    std::string name = f.value("name", "");
    if (name == "heavy_tail") return heavy_tail_family(f.at("beta").get<double>(), f.at("cutoff").get<long>());
    if (name == "simple") return simple_walk();
    fail(ErrorCode::ConfigError, "unknown law family '" + name + "'");
  }
  if (!j.contains("atoms") || !j["atoms"].is_array()) fail(ErrorCode::ConfigError, "law JSON needs an \"atoms\" array");
  std::vector<Atom> atoms;
  for (const auto& a : j["atoms"]) {
    if (!a.is_array() || a.size() != 2) fail(ErrorCode::ConfigError, "each atom is [offset, prob]");
    atoms.push_back({a[0].get<long>(), a[1].get<double>()});
  }
  return build_law(std::move(atoms));
}

std::string law_to_json(const IncrementLaw& law) {
  nlohmann::json j;
  j["atoms"] = nlohmann::json::array();
  for (const auto& a : law.atoms()) j["atoms"].push_back({a.offset, a.prob});
  return j.dump();
}

IncrementLaw load_law_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return law_from_json(ss.str());
}

}  // namespace latticelab

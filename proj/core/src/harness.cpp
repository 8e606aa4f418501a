#include "latticelab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "latticelab/error.hpp"

#ifndef LATTICELAB_VERSION
#define LATTICELAB_VERSION "0.0.0"
#endif

namespace latticelab {

using nlohmann::json;

const char* version() { return LATTICELAB_VERSION; }

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

[[noreturn]] void config_error(const std::string& what) { fail(ErrorCode::ConfigError, what); }

template <class T>
T get_or(const json& j, const char* key, T dflt) {
  if (!j.contains(key)) return dflt;
  try {
    return j.at(key).get<T>();
  } catch (const std::exception& e) {
    config_error(std::string("field '") + key + "': " + e.what());
  }
}

IncrementLaw parse_law(const json& j, const std::string& base_dir) {
  if (!j.is_object()) config_error("\"law\" must be an object");
  if (j.contains("file")) {
    std::filesystem::path p = j.at("file").get<std::string>();
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    return load_law_file(p.string());
  }
  if (j.contains("family")) {
    const auto& f = j.at("family");
    const std::string name = f.is_string() ? f.get<std::string>() : get_or<std::string>(f, "name", "");
    if (name == "simple") return simple_walk();
    if (name == "light") return light_law();
    if (name == "heavy_tail") {
      if (!f.is_object()) config_error("heavy_tail family needs beta and cutoff");
      return heavy_tail_family(get_or<double>(f, "beta", 3.5), get_or<long>(f, "cutoff", 400));
    }
    config_error("unknown law family '" + name + "'");
  }
  return law_from_json(j.dump());
}

ScheduleSpec parse_schedule(const json& j) {
  ScheduleSpec s;
  const std::string kind = get_or<std::string>(j, "kind", "fixed");
  if (kind == "fixed")
    s.kind = ScheduleKind::Fixed;
  else if (kind == "sqrt")
    s.kind = ScheduleKind::SqrtScaled;
  else if (kind == "opposite")
    s.kind = ScheduleKind::OppositeSign;
  else
    config_error("unknown schedule kind '" + kind + "'");
  s.x = get_or<long>(j, "x", s.x);
  s.y = get_or<long>(j, "y", s.y);
  s.cx = get_or<double>(j, "cx", s.cx);
  s.cy = get_or<double>(j, "cy", s.cy);
  if (j.contains("log2")) {
    const auto& r = j.at("log2");
    if (!r.is_array() || r.size() != 2) config_error("\"log2\" is [lo, hi]");
    s.log2_lo = r[0].get<int>();
    s.log2_hi = r[1].get<int>();
  }
  if (s.log2_lo < 0 || s.log2_hi < s.log2_lo || s.log2_hi > 24) config_error("n grid is empty or out of range");
  return s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    config_error(std::string("config does not parse: ") + e.what());
  }
  if (!j.is_object()) config_error("config must be a JSON object");
  ExperimentConfig c;
  c.canonical = j.dump();
  c.hash = fnv1a(c.canonical);
  c.name = get_or<std::string>(j, "name", c.name);
  if (!j.contains("law")) config_error("config needs \"law\"");
  if (!j.contains("set")) config_error("config needs \"set\"");
  try {
    c.law = parse_law(j.at("law"), base_dir);
    c.set_spec = j.at("set").get<std::string>();
    c.A = parse_killing_set(c.set_spec);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(std::string("law or set: ") + e.what());
  } catch (const std::exception& e) {
    config_error(std::string("law or set: ") + e.what());
  }
  if (c.A.kind() != KillingSet::Kind::FiniteSet || c.A.empty()) config_error("\"set\" must be a nonempty finite set");
  if (j.contains("context")) {
    const auto& cj = j.at("context");
    c.context.range = get_or<long>(cj, "range", c.context.range);
    c.context.M = get_or<double>(cj, "M", c.context.M);
    c.context.with_cplus = get_or<bool>(cj, "with_cplus", c.context.with_cplus);
    if (c.context.range < 8) config_error("context range must be >= 8");
  }
  if (j.contains("studies")) {
    if (!j.at("studies").is_array()) config_error("\"studies\" must be an array");
    int idx = 0;
    for (const auto& sj : j.at("studies")) {
      StudyConfig s;
      s.formula_id = get_or<std::string>(sj, "formula", "");
      formula_info(s.formula_id);  // UnknownFormula
      s.name = get_or<std::string>(sj, "name", s.formula_id + "_" + std::to_string(idx));
      if (s.name.empty() || s.name.find_first_of("/\\") != std::string::npos) config_error("bad study name");
      s.schedule = parse_schedule(sj.contains("schedule") ? sj.at("schedule") : json::object());
      s.rule.tol = get_or<double>(sj, "tol", s.rule.tol);
      s.rule.band_points = get_or<int>(sj, "band_points", s.rule.band_points);
      s.rule.slack = get_or<double>(sj, "slack", s.rule.slack);
      s.bound_slack = get_or<double>(sj, "bound_slack", s.bound_slack);
      if (s.rule.tol <= 0 || s.rule.band_points < 1) config_error("study " + s.name + ": bad tolerances");
      for (const auto& o : c.studies)
        if (o.name == s.name) config_error("duplicate study name " + s.name);
      c.studies.push_back(std::move(s));
      ++idx;
    }
  }
  if (j.contains("monte_carlo")) {
    const auto& mj = j.at("monte_carlo");
    McStudyConfig m;
    m.x = get_or<long>(mj, "x", m.x);
    m.n = get_or<long>(mj, "n", m.n);
    m.trials = get_or<long>(mj, "trials", m.trials);
    m.z_max = get_or<double>(mj, "z_max", m.z_max);
    m.functionals.endpoint_histogram = get_or<bool>(mj, "endpoint", false);
    m.functionals.sigma_time = get_or<bool>(mj, "sigma_time", false);
    m.functionals.sigma_site = get_or<bool>(mj, "sigma_site", false);
    m.functionals.overshoot_R = get_or<std::vector<long>>(mj, "escape", {});
    for (const auto& pr : get_or<std::vector<std::vector<long>>>(mj, "conditional", {})) {
      if (pr.size() != 2) config_error("conditional entries are [y, eta]");
      m.functionals.conditional.emplace_back(pr[0], pr[1]);
    }
    if (m.trials < 1000 || m.n < 1) config_error("monte_carlo needs trials >= 1000 and n >= 1");
    c.monte_carlo = m;
  }
  c.invariants = get_or<bool>(j, "invariants", true);
  if (j.contains("output")) {
    c.out_dir = get_or<std::string>(j.at("output"), "dir", c.out_dir);
    c.format = get_or<std::string>(j.at("output"), "format", c.format);
  }
  if (c.format != "csv" && c.format != "json") config_error("output format is csv or json");
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto base = std::filesystem::path(path).parent_path();
  return parse_config(ss.str(), base.empty() ? "." : base.string());
}

ScheduleSpec parse_schedule_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    config_error(std::string("schedule does not parse: ") + e.what());
  }
  if (!j.is_object()) config_error("schedule must be a JSON object");
  return parse_schedule(j.contains("schedule") ? j.at("schedule") : j);
}

// ---------------------------------------------------------------- invariants

std::vector<InvariantResult> invariant_suite(const AsymptoticContext& ctx) {
  require(ctx.bundle && ctx.table && ctx.ladder && ctx.h_halfline, "invariant suite needs a full context");
  std::vector<InvariantResult> out;
  auto add = [&](std::string name, double residual, double tol) {
    out.push_back({std::move(name), residual, tol, residual <= tol});
  };
  const auto& law = ctx.law;
  const auto& b = *ctx.bundle;
  const auto& t = *ctx.table;
  const auto& ls = *ctx.ladder;
  const long span = law.max_abs_offset();
  const double s2 = law.sigma2();

  double uw = 0, neg = 0;
  for (std::size_t i = 0; i < b.u.size(); ++i) {
    uw = std::max({uw, std::fabs(b.g_plus[i] - b.u[i] - b.w[i]), std::fabs(b.g_minus[i] - b.u[i] + b.w[i])});
    neg = std::max({neg, -b.g_plus[i], -b.g_minus[i]});
  }
  add("g_pm_equals_u_pm_w", uw, 1e-12);
  add("g_pm_nonnegative", std::max(neg, 0.0), 1e-10);

  double hp = 0, hm = 0, hu = 0, hw = 0;
  long pts = 0;
  for (long x = b.lo + span; x <= b.hi - span; ++x) {
    if (ctx.A.kills(x)) continue;
    double sp = 0, sm = 0, su = 0, sw = 0;
    for (const auto& at : law.atoms()) {
      const long z = x + at.offset;
      if (ctx.A.kills(z)) continue;
      sp += at.prob * b.g_plus_at(z);
      sm += at.prob * b.g_minus_at(z);
      su += at.prob * b.u_at(z);
      sw += at.prob * b.w_at(z);
    }
    hp = std::max(hp, std::fabs(sp - b.g_plus_at(x)));
    hm = std::max(hm, std::fabs(sm - b.g_minus_at(x)));
    hu = std::max(hu, std::fabs(su - b.u_at(x)));
    hw = std::max(hw, std::fabs(sw - b.w_at(x)));
    ++pts;
  }
  if (pts > 0) {
    add("harmonic_g_plus", hp, 1e-9);
    add("harmonic_g_minus", hm, 1e-9);
    add("harmonic_u", hu, 1e-9);
    add("harmonic_w", hw, 1e-9);
  }

  double fp = 0, fm = 0;
  for (long x = 1; x + span <= ls.xmax; ++x) {
    double ep = 0, em = 0;
    for (const auto& at : law.atoms()) {
      ep += at.prob * ls.f_plus(x + at.offset);
      em += at.prob * ls.f_minus(x - at.offset);
    }
    fp = std::max(fp, std::fabs(ls.f_plus(x) - ep) / (1.0 + x));
    fm = std::max(fm, std::fabs(ls.f_minus(x) - em) / (1.0 + x));
  }
  add("harmonic_f_plus", fp, 1e-9);
  add("harmonic_f_minus", fm, 1e-9);

  double sp = 0, sm = 0;
  for (long xi : ctx.A.sites()) {
    sp += b.g_plus_at(xi);
    sm += b.g_minus_at(xi);
  }
  add("g_plus_sum_on_A", std::fabs(sp - 1), 1e-5);
  add("g_minus_sum_on_A", std::fabs(sm - 1), 1e-5);

  const long reach = std::min<long>(20, t.xmax() - span);
  double mv = 0;
  for (long x = -reach; x <= reach; ++x) {
    for (long y = -reach; y <= reach; ++y) {
      if (std::labs(x - y) + span > t.xmax()) continue;
      double s = 0;
      for (const auto& at : law.atoms()) s += at.prob * t.a(x + at.offset - y);
      mv = std::max(mv, std::fabs(s - t.a_dagger(x - y)));
    }
  }
  add("mean_value_a", mv, 1e-9);

  // half-line identities: H^{+inf} against the punctured Green function, and H^x against a(z) - z / s2
  const auto& H = *ctx.h_halfline;
  double id_inf = 0;
  for (long y = -20; y <= 0; ++y) {
    double s = 0;
    for (long z = H.lo; z <= 0; ++z) {
      const double h = H.at(z);
      if (h == 0) continue;
      if (!t.contains(z) || !t.contains(z - y)) continue;
      s += h * (t.a(z) + t.a(-y) - t.a(z - y));
    }
    id_inf = std::max(id_inf, std::fabs(s - (t.a(-y) + y / s2)));
  }
  add("halfline_entrance_from_infinity", id_inf, 1e-6);
  double id_x = 0;
  for (long x = 1; x <= 20; ++x) {
    const auto hx = hitting_halfline(ls, law, x, H.lo);
    double s = 0;
    for (long z = hx.lo; z <= hx.hi(); ++z)
      if (t.contains(z)) s += hx.at(z) * (t.a(z) - z / s2);
    id_x = std::max(id_x, std::fabs(s - (t.a(x) - x / s2)));
  }
  add("halfline_entrance_from_x", id_x, 1e-6);

  {
    const long n = 128, x = ctx.A.sites().back() + 3;
    KilledMarch m(law, ctx.A, default_window(law, n, std::labs(x)), x);
    m.advance(n);
    add("kernel_mass_balance", std::fabs(m.live_mass() + m.entrance_mass() + m.leak() - 1.0), 1e-9);
  }
  return out;
}

// ---------------------------------------------------------------- run

Report run_config(const ExperimentConfig& c) {
  Report r;
  r.name = c.name;
  r.version = version();
  r.config_hash = hex16(c.hash);
  const AsymptoticContext ctx = make_context(c.law, c.A, c.context);
  bool ok = true;
  for (const auto& s : c.studies) {
    StudyResult res;
    try {
      res = ratio_study(ctx, make_schedule(ctx, s.schedule), s.formula_id, s.rule);
    } catch (const Error& e) {
      std::string msg = e.what();
      const std::string prefix = std::string(to_string(e.code())) + ": ";
      if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
      fail(e.code(), "study " + s.name + ": " + msg);
    }
    if (res.bound && s.bound_slack != 0.5) {
      res.bound = fit_bound(res.rows, formula_info(s.formula_id).kind, s.bound_slack);
      res.pass = res.trend.pass = res.bound->verified;
    }
    ok = ok && res.pass;
    r.study_names.push_back(s.name);
    r.studies.push_back(std::move(res));
  }
  if (c.invariants) {
    r.invariants = invariant_suite(ctx);
    for (const auto& iv : r.invariants) ok = ok && iv.pass;
  }
  if (c.monte_carlo) {
    const auto& m = *c.monte_carlo;
    const auto mc = simulate(c.law, c.A, m.x, m.n, m.trials, c.seed, m.functionals);
    const auto truth = dp_truth(c.law, c.A, m.x, m.n, m.functionals);
    for (const auto& [key, e] : mc) {
      McRow row;
      row.key = key;
      row.mean = e.mean;
      row.std_error = e.std_error;
      row.trials = e.trials;
      auto it = truth.find(key);
      row.truth = it == truth.end() ? 0.0 : it->second;
      row.pass = std::fabs(e.mean - row.truth) <= m.z_max * e.std_error + 1e-12;
      ok = ok && row.pass;
      r.monte_carlo.push_back(row);
    }
  }
  r.pass = ok;
  return r;
}

// ---------------------------------------------------------------- emit

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double from_jnum(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

void write_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + p.string());
  out << body;
  if (!out) fail(ErrorCode::IoFailure, "write failed: " + p.string());
}

}  // namespace

std::string study_csv(const StudyResult& s) {
  std::string out = "n,x,y,exact,predicted,ratio,flags\n";
  for (const auto& row : s.rows) {
    out += std::to_string(row.n) + "," + std::to_string(row.x) + "," + std::to_string(row.y) + "," + num(row.exact) +
           "," + num(row.predicted) + "," + num(row.ratio) + "," + row.flags + "\n";
  }
  return out;
}

std::string report_json(const Report& r) {
  json j;
  j["schema"] = "1";
  j["name"] = r.name;
  j["version"] = r.version;
  j["config_hash"] = r.config_hash;
  j["pass"] = r.pass;
  j["studies"] = json::array();
  for (std::size_t i = 0; i < r.studies.size(); ++i) {
    const auto& s = r.studies[i];
    json sj;
    sj["name"] = i < r.study_names.size() ? r.study_names[i] : s.formula_id;
    sj["formula"] = s.formula_id;
    sj["pass"] = s.pass;
    sj["reason"] = s.trend.reason;
    sj["last_deviation"] = jnum(s.trend.last_deviation);
    sj["warnings"] = s.warnings;
    if (s.bound) {
      sj["bound"] = {{"constant", jnum(s.bound->constant)},
                     {"verified", s.bound->verified},
                     {"worst", jnum(s.bound->worst)},
                     {"calibration_rows", s.bound->calibration_rows},
                     {"verification_rows", s.bound->verification_rows}};
    } else {
      sj["bound"] = nullptr;
    }
    sj["rows"] = json::array();
    for (const auto& row : s.rows)
      sj["rows"].push_back({{"n", row.n},
                            {"x", row.x},
                            {"y", row.y},
                            {"exact", jnum(row.exact)},
                            {"predicted", jnum(row.predicted)},
                            {"ratio", jnum(row.ratio)},
                            {"flags", row.flags}});
    j["studies"].push_back(std::move(sj));
  }
  j["invariants"] = json::array();
  for (const auto& iv : r.invariants)
    j["invariants"].push_back({{"name", iv.name}, {"residual", jnum(iv.residual)}, {"tol", iv.tol}, {"pass", iv.pass}});
  j["monte_carlo"] = json::array();
  for (const auto& m : r.monte_carlo)
    j["monte_carlo"].push_back({{"key", m.key},
                                {"mean", jnum(m.mean)},
                                {"std_error", jnum(m.std_error)},
                                {"truth", jnum(m.truth)},
                                {"trials", m.trials},
                                {"pass", m.pass}});
  return j.dump(2) + "\n";
}

Report report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
    if (j.at("schema").get<std::string>() != "1") config_error("unsupported report schema");
    Report r;
    r.name = j.at("name").get<std::string>();
    r.version = j.at("version").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.pass = j.at("pass").get<bool>();
    for (const auto& sj : j.at("studies")) {
      StudyResult s;
      s.formula_id = sj.at("formula").get<std::string>();
      s.pass = sj.at("pass").get<bool>();
      s.trend.pass = s.pass;
      s.trend.reason = sj.at("reason").get<std::string>();
      s.trend.last_deviation = from_jnum(sj.at("last_deviation"));
      s.warnings = sj.at("warnings").get<std::vector<std::string>>();
      if (!sj.at("bound").is_null()) {
        const auto& bj = sj.at("bound");
        BoundFit b;
        b.constant = from_jnum(bj.at("constant"));
        b.verified = bj.at("verified").get<bool>();
        b.worst = from_jnum(bj.at("worst"));
        b.calibration_rows = bj.at("calibration_rows").get<long>();
        b.verification_rows = bj.at("verification_rows").get<long>();
        s.bound = b;
      }
      for (const auto& rj : sj.at("rows")) {
        StudyRow row;
        row.n = rj.at("n").get<long>();
        row.x = rj.at("x").get<long>();
        row.y = rj.at("y").get<long>();
        row.exact = from_jnum(rj.at("exact"));
        row.predicted = from_jnum(rj.at("predicted"));
        row.ratio = from_jnum(rj.at("ratio"));
        row.flags = rj.at("flags").get<std::string>();
        s.rows.push_back(std::move(row));
      }
      r.study_names.push_back(sj.at("name").get<std::string>());
      r.studies.push_back(std::move(s));
    }
    for (const auto& ij : j.at("invariants"))
      r.invariants.push_back({ij.at("name").get<std::string>(), from_jnum(ij.at("residual")),
                              ij.at("tol").get<double>(), ij.at("pass").get<bool>()});
    for (const auto& mj : j.at("monte_carlo")) {
      McRow m;
      m.key = mj.at("key").get<std::string>();
      m.mean = from_jnum(mj.at("mean"));
      m.std_error = from_jnum(mj.at("std_error"));
      m.truth = from_jnum(mj.at("truth"));
      m.trials = mj.at("trials").get<long>();
      m.pass = mj.at("pass").get<bool>();
      r.monte_carlo.push_back(m);
    }
    return r;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    config_error(std::string("report JSON: ") + e.what());
  }
}

std::vector<std::string> emit_report(const Report& r, const std::string& dir, const std::string& format) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir + ": " + ec.message());
  std::vector<std::string> files;
  auto put = [&](const std::string& name, const std::string& body) {
    const fs::path p = fs::path(dir) / name;
    write_file(p, body);
    files.push_back(p.string());
  };
  if (format == "json") {
    put("report.json", report_json(r));
    return files;
  }
  require(format == "csv", "format is csv or json");
  for (std::size_t i = 0; i < r.studies.size(); ++i) {
    const std::string name = i < r.study_names.size() ? r.study_names[i] : r.studies[i].formula_id;
    put(name + ".csv", study_csv(r.studies[i]));
  }
  std::string inv = "name,residual,tol,pass\n";
  for (const auto& iv : r.invariants)
    inv += iv.name + "," + num(iv.residual) + "," + num(iv.tol) + "," + (iv.pass ? "1" : "0") + "\n";
  put("invariants.csv", inv);
  if (!r.monte_carlo.empty()) {
    std::string mc = "functional,mean,std_error,truth,trials,pass\n";
    for (const auto& m : r.monte_carlo)
      mc += m.key + "," + num(m.mean) + "," + num(m.std_error) + "," + num(m.truth) + "," + std::to_string(m.trials) +
            "," + (m.pass ? "1" : "0") + "\n";
    put("monte_carlo.csv", mc);
  }
  json stamp = {{"schema", "1"}, {"name", r.name}, {"version", r.version}, {"config_hash", r.config_hash},
                {"pass", r.pass}};
  put("stamp.json", stamp.dump(2) + "\n");
  return files;
}

}  // namespace latticelab

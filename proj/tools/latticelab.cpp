// latticelab command-line tool. Every subcommand writes CSV (or JSON) to stdout.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "latticelab/absorption.hpp"
#include "latticelab/asymptotics.hpp"
#include "latticelab/error.hpp"
#include "latticelab/green.hpp"
#include "latticelab/harness.hpp"
#include "latticelab/kernel.hpp"
#include "latticelab/law.hpp"
#include "latticelab/montecarlo.hpp"
#include "latticelab/parallel.hpp"
#include "latticelab/potential.hpp"

using namespace latticelab;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// A law file, or one of the built-ins: simple, light, heavy_tail:<beta>,<cutoff>.
IncrementLaw resolve_law(const std::string& arg) {
  if (std::filesystem::exists(arg)) return load_law_file(arg);
  if (arg == "simple") return simple_walk();
  if (arg == "light") return light_law();
  if (arg.rfind("heavy_tail:", 0) == 0) {
    double beta = 0;
    long cutoff = 0;
    if (std::sscanf(arg.c_str() + 11, "%lf,%ld", &beta, &cutoff) == 2) return heavy_tail_family(beta, cutoff);
  }
  fail(ErrorCode::IoFailure, "no law file or built-in law named '" + arg + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_law_validate(const std::string& file) {
  try {
    const auto law = resolve_law(file);
    std::cout << "sigma2," << num(law.sigma2()) << "\n"
              << "period," << law.period() << "\n"
              << "support_gcd," << law.support_gcd() << "\n"
              << "min_offset," << law.min_offset() << "\n"
              << "max_offset," << law.max_offset() << "\n"
              << "third_moment," << num(law.third_moment()) << "\n"
              << "left_continuous," << law.left_continuous() << "\n"
              << "right_continuous," << law.right_continuous() << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}

int cmd_kernel(const std::string& law_arg, const std::string& set, long x, long n, long window, bool live) {
  const auto law = resolve_law(law_arg);
  const auto A = parse_killing_set(set);
  std::optional<Window> w;
  if (window > 0) w = Window{x - window, x + window};
  const auto evo = killed_kernel(law, A, x, n, w);
  std::cout << "k,site,mass\n";
  double absorbed = 0;
  for (long k = 1; k <= n; ++k) {
    const auto& row = evo.entrance_ledger[k - 1];
    for (std::size_t s = 0; s < row.size(); ++s) {
      if (row[s] == 0) continue;
      absorbed += row[s];
      std::cout << k << "," << evo.entrance_sites[s] << "," << num(row[s]) << "\n";
    }
  }
  if (live) {
    std::cout << "\n# live at k = n\nk,site,mass\n";
    for (std::size_t i = 0; i < evo.live.size(); ++i)
      if (evo.live[i] > 0) std::cout << n << "," << evo.window.lo + static_cast<long>(i) << "," << num(evo.live[i]) << "\n";
  }
  std::cout << "\n# ledger\nquantity,value\n"
            << "survival," << num(evo.live_mass()) << "\n"
            << "absorbed," << num(absorbed) << "\n"
            << "far_field_leak," << num(evo.far_field_leak) << "\n"
            << "window_lo," << evo.window.lo << "\n"
            << "window_hi," << evo.window.hi << "\n";
  return 0;
}

int cmd_potential(const std::string& law_arg, long xmax, const std::string& method) {
  const auto law = resolve_law(law_arg);
  PotentialMethod m = PotentialMethod::Both;
  if (method == "quadrature") m = PotentialMethod::QuadratureOnly;
  else if (method == "sums") m = PotentialMethod::PartialSumsOnly;
  const auto t = potential_table(law, xmax, m);
  std::cout << "x,a,a_dagger,lambda,lambda_hat,err_est\n";
  for (long x = -xmax; x <= xmax; ++x)
    std::cout << x << "," << num(t.a(x)) << "," << num(t.a_dagger(x)) << "," << num(t.lambda(x)) << ","
              << num(t.lambda_hat(x)) << "," << num(t.err_est(x)) << "\n";
  return 0;
}

int cmd_absorb(const std::string& law_arg, const std::string& set, const std::string& source, long ymin) {
  const auto law = resolve_law(law_arg);
  const auto A = parse_killing_set(set);
  HittingLaw h;
  if (A.kind() == KillingSet::Kind::HalfLineLeft) {
    const long b = A.boundary();
    const long lo = ymin != 0 ? ymin - b : -std::max<long>(128, 2 * std::labs(law.min_offset()));
    const auto ls = ladder_structures(law, std::max<long>({256, 3 * std::labs(law.min_offset())}));
    if (source == "+inf") {
      h = hitting_halfline_inf(ls, law, lo);
    } else {
      const long x = std::stol(source) - b;
      require(x >= 1, "start must lie right of the half-line");
      h = hitting_halfline(ls, law, x, lo);
    }
    h.lo += b;  // back to absolute sites
  } else {
    h = hitting_finite(law, A, source);
  }
  std::cout << "site,mass,deficit\n";
  for (long z = h.lo; z <= h.hi(); ++z)
    if (h.at(z) != 0) std::cout << z << "," << num(h.at(z)) << "," << num(h.deficit) << "\n";
  return 0;
}

int cmd_green(const std::string& law_arg, const std::string& set, long range) {
  const auto law = resolve_law(law_arg);
  const auto A = parse_killing_set(set);
  ContextOptions o;
  o.range = range;
  const auto ctx = make_context(law, A, o);
  const auto& b = *ctx.bundle;
  std::cout << "x,u,w,g_plus,g_minus,in_Vplus,in_Vminus\n";
  for (long x = -range; x <= range; ++x)
    std::cout << x << "," << num(b.u_at(x)) << "," << num(b.w_at(x)) << "," << num(b.g_plus_at(x)) << ","
              << num(b.g_minus_at(x)) << "," << b.in_v_plus(x) << "," << b.in_v_minus(x) << "\n";
  std::cout << "\n# scalars\nquantity,value\n";
  std::cout << "C_A_plus," << (b.C_A_plus_divergent ? std::string("divergent") : num(b.C_A_plus)) << "\n";
  std::cout << "D_A_plus," << num(b.D_A_plus) << "\n";
  std::cout << "xi0," << b.xi0 << "\n";
  return 0;
}

int cmd_verify(const std::string& law_arg, const std::string& set, const std::string& formula,
               const std::string& schedule_file, double tol, long range) {
  const auto law = resolve_law(law_arg);
  const auto A = parse_killing_set(set);
  const auto spec = parse_schedule_spec(read_file(schedule_file));
  ContextOptions o;
  o.range = range;
  formula_info(formula);
  const auto ctx = make_context(law, A, o);
  TrendRule rule;
  rule.tol = tol;
  const auto res = ratio_study(ctx, make_schedule(ctx, spec), formula, rule);
  std::cout << "n,x,y,exact,predicted,ratio,regime_flags\n";
  for (const auto& r : res.rows)
    std::cout << r.n << "," << r.x << "," << r.y << "," << num(r.exact) << "," << num(r.predicted) << ","
              << num(r.ratio) << "," << r.flags << "\n";
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  std::cerr << (res.pass ? "PASS" : "FAIL") << ": " << res.trend.reason << "\n";
  return res.pass ? 0 : 2;
}

int cmd_mc(const std::string& law_arg, const std::string& set, long x, long n, long trials, std::uint64_t seed,
           const McFunctionals& f, bool truth) {
  const auto law = resolve_law(law_arg);
  const auto A = parse_killing_set(set);
  const auto est = simulate(law, A, x, n, trials, seed, f);
  std::map<std::string, double> dp;
  if (truth) dp = dp_truth(law, A, x, n, f);
  std::cout << "functional,mean,std_error" << (truth ? ",truth" : "") << "\n";
  for (const auto& [key, e] : est) {
    std::cout << key << "," << num(e.mean) << "," << num(e.std_error);
    if (truth) {
      auto it = dp.find(key);
      std::cout << "," << num(it == dp.end() ? 0.0 : it->second);
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_run(const std::string& config, const std::string& out, const std::string& format) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
  const std::string dir = out.empty() ? cfg.out_dir : out;
  const std::string fmt = format.empty() ? cfg.format : format;
  if (fmt != "csv" && fmt != "json") {
    std::cerr << "format is csv or json\n";
    return 3;
  }
  Report r;
  try {
    r = run_config(cfg);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == ErrorCode::RegimeViolation || e.code() == ErrorCode::UnknownFormula ? 3 : 1;
  }
  for (const auto& f : emit_report(r, dir, fmt)) std::cerr << "wrote " << f << "\n";
  for (std::size_t i = 0; i < r.studies.size(); ++i)
    std::cerr << (r.studies[i].pass ? "PASS " : "FAIL ") << r.study_names[i] << ": " << r.studies[i].trend.reason
              << "\n";
  for (const auto& iv : r.invariants)
    if (!iv.pass) std::cerr << "FAIL invariant " << iv.name << ": residual " << iv.residual << "\n";
  for (const auto& m : r.monte_carlo)
    if (!m.pass) std::cerr << "FAIL mc " << m.key << "\n";
  return r.exit_code();
}

int cmd_formulas() {
  std::cout << "id,kind,summary\n";
  for (const auto& f : formula_catalog()) {
    const char* kind = f.kind == FormulaKind::Asymptotic ? "asymptotic" : f.kind == FormulaKind::UpperBound ? "upper" : "lower";
    std::cout << f.id << "," << kind << ",\"" << f.summary << "\"\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latticelab: killed lattice random walks, exact kernels and their asymptotics"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker cap (overrides LATTICE_LAB_THREADS)");

  std::string law_arg, set = "0", source = "+inf", method = "both", schedule, formula, out, format, config;
  long x = 1, n = 64, window = 0, xmax = 64, range = 64, ymin = 0, trials = 100000;
  std::uint64_t seed = 1;
  double tol = 0.1;
  bool live = false, truth = false;
  McFunctionals mcf;
  std::vector<long> escape;
  std::vector<std::string> conditional;

  auto* law_cmd = app.add_subcommand("law", "Increment laws");
  law_cmd->require_subcommand(1);
  auto* law_validate = law_cmd->add_subcommand("validate", "Validate a law file and print its constants");
  law_validate->add_option("file", law_arg, "Law file or built-in name")->required();
  auto* law_emit = law_cmd->add_subcommand("emit", "Print a built-in law as JSON");
  law_emit->add_option("name", law_arg, "simple, light or heavy_tail:<beta>,<cutoff>")->required();

  auto* kernel_cmd = app.add_subcommand("kernel", "Killed kernels");
  kernel_cmd->require_subcommand(1);
  auto* killed = kernel_cmd->add_subcommand("killed", "Entrance ledger of the walk killed on a set");
  killed->add_option("--law", law_arg)->required();
  killed->add_option("--set", set)->required();
  killed->add_option("--x", x)->required();
  killed->add_option("--n", n)->required();
  killed->add_option("--window", window, "Half-width about x; default is automatic");
  killed->add_flag("--live", live, "Also print the live distribution at time n");

  auto* pot = app.add_subcommand("potential", "Potential kernel table");
  pot->add_option("--law", law_arg)->required();
  pot->add_option("--xmax", xmax)->required();
  pot->add_option("--method", method, "both, quadrature or sums");

  auto* absorb = app.add_subcommand("absorb", "Hitting law of a finite set or a left half-line");
  absorb->add_option("--law", law_arg)->required();
  absorb->add_option("--set", set)->required();
  absorb->add_option("--source", source, "Integer, +inf or -inf")->required();
  absorb->add_option("--ymin", ymin, "Lowest tabulated site for half-lines");

  auto* green = app.add_subcommand("green", "Green-function bundle of a finite set");
  green->add_option("--law", law_arg)->required();
  green->add_option("--set", set)->required();
  green->add_option("--range", range)->required();

  auto* verify = app.add_subcommand("verify", "Ratio study of one formula");
  verify->add_option("--law", law_arg)->required();
  verify->add_option("--set", set)->required();
  verify->add_option("--formula", formula)->required();
  verify->add_option("--schedule", schedule, "Schedule JSON file")->required();
  verify->add_option("--tol", tol);
  verify->add_option("--range", range);

  auto* mc = app.add_subcommand("mc", "Monte Carlo estimates of killed-walk functionals");
  mc->add_option("--law", law_arg)->required();
  mc->add_option("--set", set)->required();
  mc->add_option("--x", x)->required();
  mc->add_option("--n", n)->required();
  mc->add_option("--trials", trials)->required();
  mc->add_option("--seed", seed)->required();
  mc->add_flag("--endpoint", mcf.endpoint_histogram);
  mc->add_flag("--sigma-time", mcf.sigma_time);
  mc->add_flag("--sigma-site", mcf.sigma_site);
  mc->add_option("--escape", escape, "Escape levels R");
  mc->add_option("--conditional", conditional, "y:eta pairs");
  mc->add_flag("--truth", truth, "Add the killed-march value of each functional");

  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config)->required();
  run->add_option("--out", out);
  run->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));

  auto* formulas = app.add_subcommand("formulas", "List formula ids");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) set_worker_count(threads);

  try {
    if (*law_validate) return cmd_law_validate(law_arg);
    if (*law_emit) {
      std::cout << law_to_json(resolve_law(law_arg)) << "\n";
      return 0;
    }
    if (*killed) return cmd_kernel(law_arg, set, x, n, window, live);
    if (*pot) return cmd_potential(law_arg, xmax, method);
    if (*absorb) return cmd_absorb(law_arg, set, source, ymin);
    if (*green) return cmd_green(law_arg, set, range);
    if (*verify) return cmd_verify(law_arg, set, formula, schedule, tol, range);
    if (*mc) {
      mcf.overshoot_R = escape;
      for (const auto& c : conditional) {
        const auto colon = c.find(':');
        if (colon == std::string::npos) fail(ErrorCode::ConfigError, "conditional is y:eta");
        mcf.conditional.emplace_back(std::stol(c.substr(0, colon)), std::stol(c.substr(colon + 1)));
      }
      return cmd_mc(law_arg, set, x, n, trials, seed, mcf, truth);
    }
    if (*run) return cmd_run(config, out, format);
    if (*formulas) return cmd_formulas();
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::UnknownFormula ? 3 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

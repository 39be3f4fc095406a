// lyacanon: validate, canonize, analyse and simulate systems with a complete
// set of first integrals.
//
// Exit codes: 0 success, 1 analysis failure, 2 usage or load error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lyacanon/errors.hpp"
#include "lyacanon/pipeline.hpp"
#include "lyacanon/repro.hpp"
#include "lyacanon/report.hpp"

namespace fs = std::filesystem;
using namespace lyacanon;

namespace {

constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

struct Options {
  std::string input;
  std::string out_dir = "lyacanon-out";
  PipelineConfig cfg;
  std::string c_points;
  bool c_points_set = false;
};

/// Raised for configuration problems detected after parsing.
struct UsageError : Error {
  using Error::Error;
};

std::vector<LevelVec> parse_points(const std::string& text) {
  std::vector<LevelVec> out;
  std::stringstream all(text);
  std::string chunk;
  while (std::getline(all, chunk, ';')) {
    if (chunk.find_first_not_of(" \t") == std::string::npos) continue;
    LevelVec p;
    std::stringstream one(chunk);
    std::string v;
    while (std::getline(one, v, ',')) {
      try {
        std::size_t used = 0;
        p.push_back(std::stod(v, &used));
        if (v.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(v);
      } catch (const std::exception&) {
        throw UsageError("--c-points: malformed number '" + v + "'");
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_json(const fs::path& dir, const std::string& name, const Json& j) {
  fs::create_directories(dir);
  std::ofstream os(dir / name, std::ios::binary);
  if (!os) throw Error("cannot write " + (dir / name).string());
  os << j.dump(2) << '\n';
}

SystemDef load(const Options& o) {
  if (o.input.empty()) throw UsageError("--input is required");
  SystemDef s;
  try {
    s = load_system(o.input);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
  return s;
}

void finalize(Options& o, std::size_t n) {
  if (o.c_points_set) o.cfg.curves = parse_points(o.c_points);
  try {
    o.cfg.validate(n);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

int cmd_validate(Options& o) {
  SystemDef s = load(o);
  finalize(o, s.n);
  const ParamPoint xi = s.param_box.nominal();
  const auto v = validate_integrals(s, validation_grid(s, xi));
  write_json(o.out_dir, "validation.json", validation_report(s, xi, v));
  for (const auto& c : v.integrals) {
    std::cout << c.name << ": max |Lie derivative| = " << c.max_abs_lie
              << (c.ok ? "" : "  FAILED") << '\n';
    if (!c.ok && c.witness) std::cout << "  witness: " << to_json(*c.witness).dump() << '\n';
  }
  std::cout << "jacobian full rank on " << v.rank_fraction * 100 << "% of valid points\n";
  std::cout << (v.ok ? "integrals valid" : "integral validation failed") << '\n';
  return v.ok ? kOk : kFail;
}

int cmd_canonize(Options& o) {
  SystemDef s = load(o);
  finalize(o, s.n);
  const auto v = validate_integrals(s, validation_grid(s, s.param_box.nominal()));
  if (!v.ok) {
    std::cerr << "error: first integrals failed validation; run 'validate' for details\n";
    return kFail;
  }
  const CanonicalSystem cs = build_canonical(s, cascade_options(o.cfg));
  const CanonicalChecks checks = check_canonical(cs, o.cfg);
  write_json(o.out_dir, "canonical.json", canonical_report(cs, checks));
  for (const auto& st : cs.stages) {
    std::cout << "stage " << st.k << ": " << s.state_names[st.component] << " = "
              << cs.canon_names[st.component] << " + " << st.phi << "  [" << to_string(st.source)
              << "]\n";
  }
  for (std::size_t i = 0; i < cs.n; ++i) {
    std::cout << "d" << cs.canon_names[i] << "/dt = " << cs.rhs_canon[i] << '\n';
  }
  for (const auto& f : checks.flatness) {
    std::cout << "flatness " << cs.canon_names[f.component] << ": max |f| = " << f.max_abs
              << (f.ok ? "" : "  FAILED") << '\n';
    if (!f.ok && f.witness) std::cout << "  witness: " << to_json(*f.witness).dump() << '\n';
  }
  std::cout << "round trip: max error " << checks.round_trip.max_abs
            << (checks.round_trip.ok ? "" : "  FAILED") << '\n';
  std::cout << "uniform convergence (evidence): "
            << (checks.convergence.verdict ? "yes" : "no") << ", K = "
            << checks.convergence.lipschitz << '\n';
  return checks.ok ? kOk : kFail;
}

int cmd_stability(Options& o) {
  SystemDef s = load(o);
  finalize(o, s.n);
  const CanonicalSystem cs = build_canonical(s, cascade_options(o.cfg));
  const StabilityReport rep = assess_stability(cs, o.cfg);
  write_json(o.out_dir, "stability.json", stability_report(rep, o.cfg.lyapunov));
  for (const auto& c : rep.components.components) {
    std::cout << "component " << c.component + 1 << ": ";
    if (c.rank.degenerate) {
      std::cout << "degenerate beyond order " << o.cfg.s_max;
    } else {
      std::cout << "rank " << c.rank.rank << " (" << to_string(c.rank.parity) << "), sign "
                << (c.rank.sign ? (*c.rank.sign < 0 ? "-" : "+") : "mixed");
    }
    std::cout << ", sign-pattern violations " << c.amap.violations << " -> "
              << to_string(c.verdict) << '\n';
    if (c.amap.witness) std::cout << "  witness: " << to_json(*c.amap.witness).dump() << '\n';
  }
  const auto& l = rep.lyapunov;
  std::cout << "V = " << l.V << "\nmin V = " << l.min_V << ", max dV/dt = " << l.max_dVdt
            << ", trajectories " << l.trajectories.size() << " -> "
            << (l.verified ? "verified" : "not verified") << '\n';
  std::size_t failing = 0;
  for (const auto& p : rep.scan.per_curve) {
    if (p.stable) continue;
    ++failing;
    std::cout << "  failing grid point c=" << Json(p.c).dump() << " xi=" << Json(p.xi).dump();
    for (auto v : p.components) std::cout << ' ' << to_string(v);
    std::cout << '\n';
  }
  std::cout << "scan: " << rep.scan.per_curve.size() - failing << "/" << rep.scan.per_curve.size()
            << " grid points stable-evidence (" << rep.scan.label << ")\n";
  return rep.ok ? kOk : kFail;
}

int cmd_simulate(Options& o) {
  SystemDef s = load(o);
  finalize(o, s.n);
  const CanonicalSystem cs = build_canonical(s, cascade_options(o.cfg));
  const SimulationReport rep = simulate(s, cs, o.cfg);
  write_plots(rep, o.out_dir);
  write_json(o.out_dir, "simulation.json", simulation_report(rep));
  for (const auto& p : rep.original.points) {
    if (!p.ok) std::cout << "curve c=" << Json(p.c).dump() << " failed: " << p.error << '\n';
  }
  std::cout << "max integral drift " << rep.max_drift << '\n';
  for (std::size_t k = 0; k < rep.oracle_deviation.size(); ++k) {
    std::cout << "oracle deviation " << rep.oracle_deviation[k] << " (tolerance " << rep.oracle_tol
              << ")\n";
  }
  for (const auto& p : rep.plots) std::cout << "wrote " << (fs::path(o.out_dir) / p.file).string() << '\n';
  return rep.ok ? kOk : kFail;
}

int cmd_reproduce(Options& o) {
  finalize(o, 2);
  const ReproResult r = reproduce_example(o.cfg);
  const fs::path dir = o.out_dir;
  write_json(dir, "validation.json",
             validation_report(r.system, r.system.param_box.nominal(), r.validation));
  write_json(dir, "canonical.json", canonical_report(r.canonical, r.checks));
  write_json(dir, "stability.json", stability_report(r.stability, o.cfg.lyapunov));
  write_json(dir, "simulation.json", simulation_report(r.simulation));
  write_plots(r.simulation, dir);
  Json summary;
  summary["ok"] = r.ok;
  summary["profile"] = r.loosened ? "loosened" : "default";
  summary["seed"] = o.cfg.seed;
  summary["label"] = "sampled checks are evidence, not proof";
  Json crit = Json::array();
  for (const auto& c : r.criteria) {
    crit.push_back({{"id", c.id},
                    {"name", c.name},
                    {"pass", c.pass},
                    {"detail", c.detail},
                    {"seconds", c.seconds}});
    std::cout << (c.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name << " ("
              << c.detail << ")\n";
  }
  summary["criteria"] = crit;
  if (!r.ok) summary["first_failure"] = r.first_failure;
  write_json(dir, "summary.json", summary);
  if (!r.ok) std::cerr << "error: first failing criterion " << r.first_failure << '\n';
  return r.ok ? kOk : kFail;
}

void add_common(CLI::App* sub, Options& o, bool needs_input) {
  if (needs_input) sub->add_option("--input", o.input, "System definition file")->required();
  sub->add_option("--out-dir", o.out_dir, "Directory for reports and CSV files");
  sub->add_option("--rel-tol", o.cfg.rel_tol, "Integrator relative tolerance");
  sub->add_option("--abs-tol", o.cfg.abs_tol, "Integrator absolute tolerance");
  sub->add_option("--grid-t", o.cfg.grid_t, "Time samples of the grid checks");
  sub->add_option("--grid-y", o.cfg.grid_y, "Samples per canonical axis");
  sub->add_option("--xi-box-scale", o.cfg.xi_box_scale,
                  "Scale of the parameter box about its nominal point in the scan");
  sub->add_option("--seed", o.cfg.seed, "Seed of randomized sampling");
  sub->add_flag("--oracle", o.cfg.oracle,
                "Compare integrated curves with the closed-form integral curves");
  sub->add_option("--lambda", o.cfg.lyapunov.lambda, "Lyapunov lambda (>= 1)");
  sub->add_option("--lyap-exponent", o.cfg.lyapunov.exponent, "Lyapunov exponent (even, >= 2)");
  sub->add_option("--lyap-weights", o.cfg.lyapunov.weights, "Lyapunov weights a_i > 0")
      ->delimiter(',');
  sub->add_option("--c-points", o.c_points,
                  "Level points for curves, e.g. \"0,0;0.5,0.5\" (empty for none)")
      ->each([&o](const std::string&) { o.c_points_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Canonical forms and stability evidence for parametric ODE systems"};
  app.require_subcommand(1);
  Options o;
  auto* validate = app.add_subcommand("validate", "Check the first integrals of a system");
  auto* canonize = app.add_subcommand("canonize", "Build and verify the canonical form");
  auto* stability = app.add_subcommand("stability", "Criteria, Lyapunov check and region scan");
  auto* simulate_cmd = app.add_subcommand("simulate", "Integrate and write plot data");
  auto* repro = app.add_subcommand("reproduce-example", "Run the bundled example end to end");
  for (auto* sub : {validate, canonize, stability, simulate_cmd}) add_common(sub, o, true);
  add_common(repro, o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*canonize) return cmd_canonize(o);
    if (*stability) return cmd_stability(o);
    if (*simulate_cmd) return cmd_simulate(o);
    if (*repro) return cmd_reproduce(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const LoadError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFail;
  }
  return kUsage;
}

#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spinal/experiments.hpp"
#include "spinal/lln.hpp"
#include "spinal/model.hpp"
#include "spinal/msolver.hpp"
#include "spinal/popsim.hpp"
#include "spinal/spine.hpp"

namespace spinal {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string model = "preset:toy";
  std::vector<std::string> params;
  int K = 0;
  double t = 1.0;
  std::size_t N = 10000;
  std::uint64_t seed = 1;
  std::string out;
  double tol = 3.0;
  std::string svg;
  std::string init;
  std::string z0;
  std::string x0;
  std::vector<std::string> functionals;
  std::string kladder;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--model", c.model, "model file, or preset:NAME")->capture_default_str();
  app->add_option("--param", c.params, "preset parameter NAME=VALUE (repeatable)");
  app->add_option("--K", c.K, "capacity override");
  app->add_option("--t", c.t, "time horizon")->capture_default_str();
  app->add_option("--N", c.N, "Monte-Carlo replicas")->capture_default_str();
  app->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  app->add_option("--out", c.out, "output file (stdout when omitted)");
  app->add_option("--tol", c.tol, "tolerance in standard errors, or solver tolerance for msolve");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

double to_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw UsageError("not a number: " + s);
    return v;
  } catch (const std::logic_error&) {
    throw UsageError("not a number: " + s);
  }
}

ModelSpec load(const Common& c) {
  ModelSpec m;
  if (c.model.rfind("preset:", 0) == 0) {
    std::map<std::string, double> params;
    for (const auto& p : c.params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) throw UsageError("--param expects NAME=VALUE");
      params[p.substr(0, eq)] = to_double(p.substr(eq + 1));
    }
    m = make_preset(c.model.substr(7), params, c.K);
  } else {
    if (!c.params.empty()) throw UsageError("--param only applies to presets");
    m = load_model(c.model);
    if (c.K > 0 && c.K != m.K()) m = m.with_capacity(c.K);
  }
  return m;
}

int parse_type(const ModelSpec& m, const std::string& name) {
  if (name.empty()) return 0;
  return m.types().index_of(name);
}

Counts parse_counts(const ModelSpec& m, const std::string& s, int x0) {
  if (s.empty()) {
    Counts z(static_cast<std::size_t>(m.dim()), 0);
    z[static_cast<std::size_t>(x0)] = 1;
    return z;
  }
  const auto parts = split(s, ',');
  if (static_cast<int>(parts.size()) != m.dim()) throw UsageError("--init needs one count per type");
  Counts z;
  for (const auto& p : parts) {
    const double v = to_double(p);
    if (v < 0 || v != std::floor(v)) throw UsageError("--init counts must be nonnegative integers");
    z.push_back(static_cast<int>(v));
  }
  return z;
}

std::vector<double> parse_reals(const ModelSpec& m, const std::string& s) {
  if (s.empty()) return std::vector<double>(static_cast<std::size_t>(m.dim()), 0.5 / m.dim());
  const auto parts = split(s, ',');
  if (static_cast<int>(parts.size()) != m.dim()) throw UsageError("--z0 needs one coordinate per type");
  std::vector<double> z;
  for (const auto& p : parts) z.push_back(to_double(p));
  return z;
}

std::vector<int> parse_ladder(const std::string& s, std::vector<int> fallback) {
  if (s.empty()) return fallback;
  std::vector<int> out;
  for (const auto& p : split(s, ',')) out.push_back(static_cast<int>(to_double(p)));
  return out;
}

std::vector<Functional> parse_functionals(const ModelSpec& m, const std::vector<std::string>& specs,
                                          std::vector<std::string> fallback) {
  std::vector<Functional> out;
  for (const auto& s : specs.empty() ? fallback : specs) out.push_back(Functional::parse(s, m.types()));
  return out;
}

// Writes to --out when given, else stdout.
template <class Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream f(path);
  if (!f) throw UsageError("cannot open " + path);
  fn(f);
}

int finish_report(const ExperimentReport& r, const std::string& out) {
  if (out.empty()) {
    r.write_csv(std::cout);
  } else {
    emit(out, [&](std::ostream& os) { r.write_csv(os); });
  }
  std::cerr << r.summary();
  return r.pass ? 0 : 1;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"spinal: spinal decompositions of density-dependent population processes"};
  app.require_subcommand(1);
  Common c;
  double b = 1.0, cc = 2.0, s = 0.0;
  std::string forest_out;

  auto* sim = app.add_subcommand("simulate", "Gillespie simulation with genealogy");
  add_common(sim, c);
  sim->add_option("--init", c.init, "initial counts, comma separated");
  sim->add_option("--forest", forest_out, "genealogy export (TSV)");

  auto* ms = app.add_subcommand("msolve", "m-function on the state space");
  add_common(ms, c);
  ms->add_option("--x0", c.x0, "type of the queried state");
  ms->add_option("--init", c.init, "composition of the queried state");

  auto* sp = app.add_subcommand("spine", "time-inhomogeneous spine at finite K");
  add_common(sp, c);
  sp->add_option("--x0", c.x0, "initial spine type");
  sp->add_option("--init", c.init, "initial composition (counts, spine included)");
  sp->add_option("--svg", c.svg, "line plot of the spine rates");

  auto* lim = app.add_subcommand("limit", "flow, characteristic and limit spines");
  add_common(lim, c);
  lim->add_option("--x0", c.x0, "initial spine type");
  lim->add_option("--z0", c.z0, "initial normalized composition");

  auto* ver = app.add_subcommand("verify", "statistical verification experiments");
  ver->require_subcommand(1);
  auto* v_mto = ver->add_subcommand("many-to-one", "finite-K many-to-one identity");
  add_common(v_mto, c);
  v_mto->add_option("--init", c.init, "initial counts");
  v_mto->add_option("--functional", c.functionals, "functional (repeatable)");
  auto* v_lln = ver->add_subcommand("lln", "large-population many-to-one convergence");
  add_common(v_lln, c);
  v_lln->add_option("--z0", c.z0, "initial normalized composition");
  v_lln->add_option("--functional", c.functionals, "functional");
  v_lln->add_option("--Kladder", c.kladder, "capacities, comma separated");
  auto* v_sc = ver->add_subcommand("scaling", "deviation and coupling scaling in K");
  add_common(v_sc, c);
  v_sc->add_option("--z0", c.z0, "initial normalized composition");
  v_sc->add_option("--x0", c.x0, "spine type");
  v_sc->add_option("--Kladder", c.kladder, "capacities, comma separated");

  auto* toy = app.add_subcommand("toy-closed-form", "closed-form m and spine rate of the two-type toy model");
  toy->add_option("--b", b, "rate b")->capture_default_str();
  toy->add_option("--c", cc, "rate c")->capture_default_str();
  toy->add_option("--t", c.t, "horizon")->capture_default_str();
  toy->add_option("--s", s, "spine time for the rate")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*sim) {
      const auto m = load(c);
      const Counts init = parse_counts(m, c.init, 0);
      const auto run = simulate_population(m, init, c.t, c.seed);
      emit(c.out, [&](std::ostream& os) { run.path.write(os, m.types()); });
      if (!forest_out.empty()) emit(forest_out, [&](std::ostream& os) { run.forest.write(os, m.types()); });
      return 0;
    }
    if (*ms) {
      const auto m = load(c);
      MSolveOptions opt;
      if (c.tol < 1.0) opt.tol = c.tol;
      const auto idx = enumerate_states(m);
      const auto mt = solve_m(build_generator(m, idx), psi_vector(m, *idx), c.t, opt);
      emit(c.out, [&](std::ostream& os) { mt.write(os); });
      if (!c.init.empty() || !c.x0.empty()) {
        const int x = parse_type(m, c.x0);
        const Counts z = parse_counts(m, c.init, x);
        std::cerr.precision(15);
        std::cerr << "m = " << mt.m_at(x, z, c.t) << '\n';
      }
      return 0;
    }
    if (*sp) {
      const auto m = load(c);
      const int x = parse_type(m, c.x0);
      const Counts z = parse_counts(m, c.init, x);
      const auto mt = solve_m(m, c.t);
      const auto path = simulate_inhom_spine(m, mt, x, z, c.t, c.seed);
      emit(c.out, [&](std::ostream& os) { path.write(os, m.types()); });
      if (!c.svg.empty()) {
        std::ofstream f(c.svg);
        if (!f) throw UsageError("cannot open " + c.svg);
        write_rate_svg(f, m, mt, x, z, c.t);
      }
      return 0;
    }
    if (*lim) {
      const auto m = load(c);
      const int x = parse_type(m, c.x0);
      const auto z0 = parse_reals(m, c.z0);
      const FlowBundle flow(m, z0, c.t);
      const MCharacteristic mc(flow, c.t);
      emit(c.out, [&](std::ostream& os) { mc.write(os, flow); });
      const auto rep = run_feynman_kac(m, z0, x, c.t, c.N, c.seed, c.tol);
      std::cerr << rep.summary();
      return rep.pass ? 0 : 1;
    }
    if (*v_mto) {
      const auto m = load(c);
      const Counts z0 = parse_counts(m, c.init, 0);
      const auto Fs = parse_functionals(m, c.functionals, {"one", "final-type:" + m.types().names.back()});
      return finish_report(run_many_to_one(m, z0, c.t, Fs, c.N, c.seed, c.tol), c.out);
    }
    if (*v_lln) {
      const auto m = load(c);
      const auto z0 = parse_reals(m, c.z0);
      const auto Fs = parse_functionals(m, c.functionals, {"final-type:" + m.types().names.front()});
      if (Fs.size() != 1) throw UsageError("verify lln takes one functional");
      return finish_report(
          run_lln_convergence(m, z0, c.t, Fs.front(), parse_ladder(c.kladder, {50, 200, 800, 3200}), c.N, c.seed),
          c.out);
    }
    if (*v_sc) {
      const auto m = load(c);
      const auto z0 = parse_reals(m, c.z0);
      return finish_report(run_scaling_suite(m, z0, parse_type(m, c.x0), c.t,
                                             parse_ladder(c.kladder, {100, 400, 1600, 6400}), c.N, c.seed),
                           c.out);
    }
    if (*toy) {
      const ToyClosedForm cf(b, cc);
      const auto mv = cf.m(c.t);
      std::cout.precision(17);
      std::cout << "state,m\n";
      const char* names[] = {"(A;1;0)", "(A;2;0)", "(A;1;1)", "(B;1;1)"};
      for (int i = 0; i < 4; ++i) std::cout << names[i] << ',' << mv[static_cast<std::size_t>(i)] << '\n';
      std::cout << "rho(t=" << c.t << ";s=" << s << ")," << cf.rho(c.t, s) << '\n';
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace spinal

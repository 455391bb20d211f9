#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tvoc/analytic.hpp"
#include "tvoc/core.hpp"
#include "tvoc/oracle.hpp"
#include "tvoc/pareto.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitSolverFailure = 1;
constexpr int kExitInvalidInput = 2;

tvoc::BoundaryConditions parse_bc(const std::string& spec) {
  std::vector<double> v;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
  if (v.size() != 4)
    throw CLI::ValidationError("--bc", "expected s0,sf,v0,vf");
  tvoc::BoundaryConditions bc{v[0], v[1], v[2], v[3]};
  if (!bc.valid()) throw CLI::ValidationError("--bc", "values must be finite");
  return bc;
}

tvoc::Weight parse_alpha(const std::string& s) {
  if (s == "inf" || s == "infinity") return tvoc::Weight::infinity();
  return tvoc::Weight(std::stod(s));
}

/// Alpha list: either a file with one value per line, or
/// "log:<lo>:<hi>:<count>" / comma-separated values.
std::vector<tvoc::Weight> parse_alphas(const std::string& spec) {
  std::vector<tvoc::Weight> out;
  if (spec.rfind("log:", 0) == 0) {
    std::stringstream ss(spec.substr(4));
    std::string lo_s, hi_s, n_s;
    std::getline(ss, lo_s, ':');
    std::getline(ss, hi_s, ':');
    std::getline(ss, n_s, ':');
    const double lo = std::stod(lo_s), hi = std::stod(hi_s);
    const int n = std::stoi(n_s);
    if (!(lo > 0.0 && hi > lo && n >= 2))
      throw CLI::ValidationError("--alphas", "bad log:<lo>:<hi>:<count> spec");
    for (int i = 0; i < n; ++i)
      out.emplace_back(std::pow(
          10.0, std::log10(lo) + (std::log10(hi) - std::log10(lo)) * i /
                                     double(n - 1)));
    return out;
  }
  if (fs::exists(spec)) {
    std::ifstream in(spec);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      out.push_back(parse_alpha(line));
    }
    return out;
  }
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_alpha(tok));
  return out;
}

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path().empty() ? "." : p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

struct CommonOpts {
  std::string bc_spec = "0,0,1,0";
  std::string alpha_spec = "0.4";
  std::string alphas_spec;
  int n_steps = 1000;
  double tol = 1e-9;
  std::string out_dir = ".";
  std::string format = "json";
  bool allow_unverified = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_alpha = true) {
  cmd->add_option("--bc", o.bc_spec, "boundary conditions s0,sf,v0,vf")
      ->capture_default_str();
  if (with_alpha)
    cmd->add_option("--alpha", o.alpha_spec,
                    "trade-off weight (nonnegative, or 'inf')")
        ->capture_default_str();
  cmd->add_option("--n", o.n_steps, "discretization steps")
      ->capture_default_str();
  cmd->add_option("--tol", o.tol, "solver tolerance")->capture_default_str();
  cmd->add_option("--out", o.out_dir, "output directory")
      ->capture_default_str();
  cmd->add_option("--format", o.format, "output format: json, csv or svg")
      ->capture_default_str();
  cmd->add_flag("--allow-unverified", o.allow_unverified,
                "write solution files even when the optimality check fails");
}

int emit_solution(const tvoc::StructuralSolution& sol, const CommonOpts& o,
                  const std::string& stem) {
  const auto rep = tvoc::check_optimality(sol, o.tol);
  nlohmann::json j = sol.to_json();
  j["optimality_report"] = rep.to_json();
  if (!rep.pass() && !o.allow_unverified) {
    std::cerr << "optimality check failed (worst residual "
              << rep.worst_residual()
              << "); pass --allow-unverified to write anyway\n";
    write_file(fs::path(o.out_dir) / (stem + ".diagnostic.json"), j.dump(2));
    return kExitSolverFailure;
  }
  write_file(fs::path(o.out_dir) / (stem + ".json"), j.dump(2));
  return 0;
}

int run_energy(const CommonOpts& o) {
  const auto sol = tvoc::solve_min_energy(parse_bc(o.bc_spec));
  return emit_solution(sol, o, "energy");
}

int run_tv(const CommonOpts& o) {
  const auto bc = parse_bc(o.bc_spec);
  const auto alpha = parse_alpha(o.alpha_spec);
  tvoc::StructuralSolution sol;
  if (alpha.is_zero())
    sol = tvoc::solve_min_energy(bc);
  else if (alpha.is_infinite())
    sol = tvoc::asymptotic_solution();
  else if (tvoc::detail_pareto::is_particular_instance(bc))
    sol = tvoc::solve_tv_particular(alpha);
  else
    sol = tvoc::solve_tv_general(bc, alpha);
  return emit_solution(sol, o, "tv");
}

int run_asymptotic(const CommonOpts& o) {
  return emit_solution(tvoc::asymptotic_solution(), o, "asymptotic");
}

int run_oracle(const CommonOpts& o) {
  const auto dp = tvoc::discretize(parse_bc(o.bc_spec),
                                   parse_alpha(o.alpha_spec), o.n_steps);
  const auto sol = tvoc::solve(dp, o.tol);
  if (o.format == "csv") {
    std::ostringstream csv;
    tvoc::write_csv(csv, sol, dp);
    write_file(fs::path(o.out_dir) / "oracle.csv", csv.str());
  } else {
    nlohmann::json j = sol.to_json();
    for (const auto& [k, v] : tvoc::residual_report(sol, dp))
      j["residuals"][k] = v;
    write_file(fs::path(o.out_dir) / "oracle.json", j.dump(2));
  }
  return 0;
}

int run_lqptv(const CommonOpts& o, const std::string& problem_file) {
  std::ifstream in(problem_file);
  if (!in) {
    std::cerr << "cannot read problem file " << problem_file << "\n";
    return kExitInvalidInput;
  }
  nlohmann::json pj;
  in >> pj;
  const auto dp = tvoc::load_lqptv_json(pj);
  const auto sol = tvoc::solve_lqptv(dp, o.tol);
  if (o.format == "csv") {
    std::ostringstream csv;
    tvoc::write_csv(csv, sol, dp);
    write_file(fs::path(o.out_dir) / "lqptv.csv", csv.str());
  } else {
    write_file(fs::path(o.out_dir) / "lqptv.json", sol.to_json().dump(2));
  }
  return 0;
}

int run_verify(const CommonOpts& o) {
  const auto bc = parse_bc(o.bc_spec);
  const auto alpha = parse_alpha(o.alpha_spec);
  if (alpha.is_infinite()) {
    std::cerr << "verify requires a finite alpha\n";
    return kExitInvalidInput;
  }
  tvoc::StructuralSolution an;
  if (alpha.is_zero())
    an = tvoc::solve_min_energy(bc);
  else if (tvoc::detail_pareto::is_particular_instance(bc))
    an = tvoc::solve_tv_particular(alpha);
  else
    an = tvoc::solve_tv_general(bc, alpha);

  const auto dp = tvoc::discretize(bc, alpha, o.n_steps);
  const auto num = tvoc::solve(dp, o.tol);

  double control_gap = 0.0, eta_gap = 0.0;
  for (int k = 0; k < o.n_steps; ++k) {
    const double t = (k + 0.5) / o.n_steps;
    control_gap =
        std::max(control_gap, std::abs(num.controls[std::size_t(k)] -
                                       an.u.evaluate(t)));
  }
  for (int k = 0; k <= o.n_steps; ++k) {
    const double t = double(k) / o.n_steps;
    eta_gap = std::max(eta_gap, std::abs(num.eta[std::size_t(k)] -
                                         an.eta.evaluate(t)));
  }
  const double obj_an = an.phi1 + (alpha.is_zero() ? 0.0 : alpha.alpha * an.phi2);
  const double obj_gap =
      std::abs(num.objective - obj_an) / std::max(1.0, std::abs(obj_an));

  nlohmann::json j = {{"alpha", alpha.alpha},
                      {"n_steps", o.n_steps},
                      {"analytic_objective", obj_an},
                      {"oracle_objective", num.objective},
                      {"objective_gap_rel", obj_gap},
                      {"control_gap_linf", control_gap},
                      {"eta_gap_linf", eta_gap},
                      {"oracle_kkt_residual", num.kkt_residual},
                      {"optimality_report",
                       tvoc::check_optimality(an, 1e-9).to_json()}};
  write_file(fs::path(o.out_dir) / "verify.json", j.dump(2));
  std::cout << "objective gap (rel): " << obj_gap
            << "\ncontrol gap (Linf):  " << control_gap
            << "\neta gap (Linf):      " << eta_gap << "\n";
  return 0;
}

int run_pareto(const CommonOpts& o, bool with_frames) {
  const auto bc = parse_bc(o.bc_spec);
  std::vector<tvoc::Weight> alphas;
  if (!o.alphas_spec.empty())
    alphas = parse_alphas(o.alphas_spec);
  else
    alphas = tvoc::default_alpha_grid();
  const auto front = tvoc::sweep(bc, alphas);

  int failed = 0;
  for (const auto& p : front.points)
    if (p.failed) ++failed;
  if (failed > 0)
    std::cerr << failed << " of " << front.points.size()
              << " sweep points failed (recorded in output)\n";
  if (failed == int(front.points.size()) && !o.allow_unverified) return kExitSolverFailure;

  std::ostringstream csv;
  tvoc::write_front_csv(csv, front);
  write_file(fs::path(o.out_dir) / "front.csv", csv.str());
  write_file(fs::path(o.out_dir) / "front.json",
             tvoc::front_to_json(front).dump(2));
  if (o.format == "svg") {
    std::ostringstream svg;
    tvoc::write_front_svg(svg, front);
    write_file(fs::path(o.out_dir) / "front.svg", svg.str());
  }
  if (with_frames) {
    const auto fr = tvoc::frames(front);
    nlohmann::json bundle = nlohmann::json::array();
    for (const auto& f : fr) bundle.push_back(f.to_json());
    write_file(fs::path(o.out_dir) / "frames.json", bundle.dump());
    if (o.format == "svg")
      for (const auto& f : fr) {
        std::ostringstream svg;
        tvoc::write_frame_svg(svg, f, front);
        write_file(fs::path(o.out_dir) /
                       ("frame_" + std::to_string(f.front_index) + ".svg"),
                   svg.str());
      }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal control of the double integrator with energy and "
               "total-variation objectives"};
  app.require_subcommand(1);

  CommonOpts o;
  bool pareto_frames = false;
  std::string problem_file;

  auto* energy = app.add_subcommand("energy", "closed-form minimum-energy solution");
  add_common(energy, o, false);
  auto* tv = app.add_subcommand("tv", "weighted energy + total-variation solution");
  add_common(tv, o);
  auto* asym = app.add_subcommand("asymptotic", "piecewise-constant limit solution");
  add_common(asym, o, false);
  auto* verify = app.add_subcommand("verify", "analytic vs direct-transcription comparison");
  add_common(verify, o);
  auto* pareto = app.add_subcommand("pareto", "trade-off front sweep");
  add_common(pareto, o, false);
  pareto->add_option("--alphas", o.alphas_spec,
                     "weights: file, comma list, or log:<lo>:<hi>:<count>");
  pareto->add_flag("--frames", pareto_frames, "also emit per-weight frame data");
  auto* oracle = app.add_subcommand("oracle", "direct-transcription numerical solve");
  add_common(oracle, o);
  auto* lqptv = app.add_subcommand("lqptv", "general linear-quadratic + TV solve");
  add_common(lqptv, o, false);
  lqptv->add_option("problem", problem_file, "JSON problem file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitInvalidInput;
  }

  try {
    if (energy->parsed()) return run_energy(o);
    if (tv->parsed()) return run_tv(o);
    if (asym->parsed()) return run_asymptotic(o);
    if (verify->parsed()) return run_verify(o);
    if (pareto->parsed()) return run_pareto(o, pareto_frames);
    if (oracle->parsed()) return run_oracle(o);
    if (lqptv->parsed()) return run_lqptv(o, problem_file);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const tvoc::NoStructuralSolution& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolverFailure;
  }
  return kExitInvalidInput;
}

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "fracgrid/fracgrid.hpp"

namespace fs = std::filesystem;
using namespace fracgrid;

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 0;
};

ConfigTree load_or_empty(const std::string& path) { return path.empty() ? ConfigTree{} : load_config(path); }

int finish(Report& rep, const fs::path& out) {
  fs::create_directories(out);
  for (const auto& [name, csv] : rep.tables) {
    std::string file = name + ".csv";
    for (char& c : file)
      if (c == '=' || c == ' ') c = '_';
    write_text(out / file, csv);
    rep.artifacts.push_back((out / file).string());
  }
  emit_plotdata(rep, out / "plotdata");
  const fs::path reportPath = out / (rep.scenario + "_report.json");
  rep.artifacts.push_back(reportPath.string());
  write_text(reportPath, rep.to_json().dump(2) + "\n");
  for (const auto& v : rep.verdicts)
    std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << (v.detail.empty() ? "" : "  [" + v.detail + "]") << "\n";
  std::cout << rep.scenario << ": " << (rep.passed() ? "all verdicts pass" : "some verdicts fail") << "  ("
            << reportPath.string() << ")\n";
  return rep.passed() ? 0 : 1;
}

int run(const std::string& scenario, const Common& c) {
  Report rep = run_scenario({scenario, load_or_empty(c.config), c.seed});
  return finish(rep, c.out);
}

int run_exponents(const Common& c) {
  const auto sp = parse_structure(load_or_empty(c.config));
  const auto e = derive_exponents(sp);
  const auto j = exponents_json(e);
  fs::create_directories(c.out);
  write_text(fs::path(c.out) / "exponents.json", j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return e.gammaAdmissible && e.sAdmissible ? 0 : 1;
}

int run_solve(const Common& c) {
  const auto cfg = parse_solve_config(load_or_empty(c.config), c.seed);
  const auto res = solve(cfg);
  const fs::path out = c.out;
  fs::create_directories(out);
  write_text(out / "solution.csv", solution_csv(res.u));
  const auto& d = res.diagnostics;
  Json j{{"seed", c.seed},
         {"maxU", res.u.max()},
         {"minU", res.u.min()},
         {"kernelMonotone", d.kernelMonotone},
         {"capActive", d.capActive},
         {"innerIterations", d.innerIterations},
         {"fixedPointIterations", d.fixedPointIterations},
         {"gradientNorms", d.gradientNorms},
         {"sliceMax", d.sliceMax},
         {"sliceMin", d.sliceMin},
         {"seconds", d.seconds}};
  write_text(out / "diagnostics.json", j.dump(2) + "\n");
  std::cout << "solved " << res.u.slices() - 1 << " steps on " << cfg.domain.size() << " cells; max u "
            << format_double(res.u.max()) << ", min u " << format_double(res.u.min()) << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"fracgrid: nonlocal-in-time p-Laplace experiments"};
  app.require_subcommand(1);
  Common c;
  auto common = [&c](CLI::App* sub) {
    sub->add_option("--config", c.config, "INI configuration file");
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
    sub->add_option("--seed", c.seed, "seed for random data")->capture_default_str();
  };

  auto* kernels = app.add_subcommand("kernels", "kernel grids and pair/resolvent diagnostics");
  auto* exponents = app.add_subcommand("exponents", "derived exponent set as JSON");
  auto* solveCmd = app.add_subcommand("solve", "run the time-stepping solver");
  auto* verify = app.add_subcommand("verify", "run a verification scenario");
  auto* sharpness = app.add_subcommand("sharpness", "omega1/omega2 sweep across s");
  for (auto* sub : {kernels, exponents, solveCmd, verify, sharpness}) common(sub);

  const std::map<std::string, std::string> targets = {{"max-principle", "maxPrinciple"}, {"energy", "energyEstimate"},
                                                      {"bound", "aprioriBound"},         {"lemmas", "lemmas"},
                                                      {"embedding", "embedding"},        {"fractional-ode", "fractionalODE"},
                                                      {"natural-growth", "naturalGrowth"},
                                                      {"classical-limit", "classicalLimit"}};
  std::string target;
  verify->add_option("target", target, "max-principle|energy|bound|lemmas|embedding|fractional-ode")
      ->required()
      ->check(CLI::IsMember(targets));

  CLI11_PARSE(app, argc, argv);
  try {
    if (kernels->parsed()) return run("kernelDiagnostics", c);
    if (exponents->parsed()) return run_exponents(c);
    if (solveCmd->parsed()) return run_solve(c);
    if (sharpness->parsed()) return run("sharpnessSweep", c);
    if (verify->parsed()) return run(targets.at(target), c);
  } catch (const std::exception& e) {
    std::cerr << "fracgrid: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

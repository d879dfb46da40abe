#include <algorithm>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ghzdd/ghzdd.hpp"

using namespace ghzdd;

namespace {

std::vector<std::size_t> resolve_targets(const Register& reg, const std::vector<std::string>& labels) {
  require(!labels.empty(), "no target spins: pass --targets or a case file with \"spins\"");
  std::vector<std::size_t> idx;
  for (const auto& l : labels) idx.push_back(reg.index_of(l));
  return idx;
}

json amplitudes_json(const VecX& psi) {
  json a = json::array();
  for (Eigen::Index i = 0; i < psi.size(); ++i) a.push_back({round12(psi[i].real()), round12(psi[i].imag())});
  return a;
}

struct PlanArgs {
  std::string plan;
  std::size_t index = 0;
  std::vector<std::string> targets;
};

struct Loaded {
  Register reg;
  SequencePlan plan;
  std::vector<std::size_t> targets;
};

Loaded load_plan_args(const RunConfig& cfg, const PlanArgs& a) {
  Loaded l{cfg.load(), {}, {}};
  auto [plan, spins] = load_plan(a.plan, a.index);
  l.plan = std::move(plan);
  l.targets = resolve_targets(l.reg, a.targets.empty() ? spins : a.targets);
  return l;
}

int cmd_evolve(const RunConfig& cfg, const PlanArgs& a) {
  const auto l = load_plan_args(cfg, a);
  const auto rot = compose_register(l.reg, l.plan);
  std::vector<ConditionalRotation> tr;
  for (auto i : l.targets) tr.push_back(rot[i]);
  const int M = static_cast<int>(tr.size()) + 1;
  std::vector<Qubit> q{ket_plus()};
  q.resize(M, ket0());
  const VecX psi = apply_cr(tr, product_state(q));
  const double tau = mtangle_pure(psi, M, true);
  json out{{"spins", json::array()},
           {"plan", plan_to_json(l.plan)},
           {"ghz_size", M},
           {"amplitudes", amplitudes_json(psi)},
           {"tau_M", round12(tau)}};
  for (auto i : l.targets) out["spins"].push_back(l.reg.spins[i].label);
  std::ostringstream csv;
  csv << "index,re,im\n";
  for (Eigen::Index i = 0; i < psi.size(); ++i)
    csv << i << ',' << fmt12(psi[i].real()) << ',' << fmt12(psi[i].imag()) << '\n';
  write_text(cfg.output_dir / "evolve.json", out.dump(2) + "\n");
  write_text(cfg.output_dir / "evolve.csv", csv.str());
  std::cout << "tau_" << M << " = " << fmt12(tau) << "\n";
  return 0;
}

int cmd_metrics(const RunConfig& cfg, const PlanArgs& a) {
  const auto l = load_plan_args(cfg, a);
  const auto m = evaluate_metrics(l.reg, l.plan, l.targets);
  json out{{"plan", plan_to_json(l.plan)}, {"metrics", metrics_to_json(m)}};
  std::ostringstream csv;
  csv << "label,phi0,phi1,axis_dot,g1,one_tangle_scaled,target\n";
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    const bool t = std::find(l.targets.begin(), l.targets.end(), i) != l.targets.end();
    csv << m.labels[i] << ',' << fmt12(m.phi0[i]) << ',' << fmt12(m.phi1[i]) << ',' << fmt12(m.axis_dot[i]) << ','
        << fmt12(m.g1[i]) << ',' << fmt12(m.one_tangles_scaled[i]) << ',' << (t ? 1 : 0) << '\n';
  }
  write_text(cfg.output_dir / "metrics.json", out.dump(2) + "\n");
  write_text(cfg.output_dir / "metrics.csv", csv.str());
  std::cout << "ep_scaled " << fmt12(m.ep_scaled) << "  gate_error " << fmt12(m.gate_error) << "  T_ms "
            << fmt12(m.total_time * 1e3) << "\n";
  return 0;
}

int cmd_search(const RunConfig& cfg, Scheme scheme) {
  require(cfg.scheme == scheme, "config scheme is " + scheme_name(cfg.scheme) + ", subcommand expects " +
                                    scheme_name(scheme));
  const Register reg = cfg.load();
  auto cases = scheme == Scheme::sequential ? search_sequential(reg, cfg.unit, cfg.tolerances, cfg.options)
                                            : search_multispin(reg, cfg.unit, cfg.tolerances, cfg.options);
  cases = rank_cases(std::move(cases), cfg.rank_weights, cfg.tolerances);
  write_archive(cfg.output_dir, cfg, cases);
  std::cout << cases.size() << " " << scheme_name(scheme) << " GHZ" << cfg.tolerances.ghz_size << " cases -> "
            << cfg.output_dir.string() << "\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(cases.size(), 5); ++i) {
    const auto& c = cases[i];
    std::string labels;
    for (const auto& s : c.spin_labels) labels += (labels.empty() ? "" : " ") + s;
    std::cout << "  #" << i << "  " << labels << "  T " << fmt12(c.metrics.total_time / microsecond) << " us  ep "
              << fmt12(c.metrics.ep_scaled) << "  err " << fmt12(c.metrics.gate_error) << "\n";
  }
  return 0;
}

int cmd_mixed_state(const RunConfig& cfg, const PlanArgs& a) {
  const auto l = load_plan_args(cfg, a);
  require(l.targets.size() == 2, "mixed-state analysis is implemented for GHZ3 (two targets)");
  const auto rot = compose_register(l.reg, l.plan);
  std::vector<ConditionalRotation> tr, un;
  for (std::size_t i = 0; i < rot.size(); ++i)
    (std::find(l.targets.begin(), l.targets.end(), i) != l.targets.end() ? tr : un).push_back(rot[i]);
  const auto init = initial_state_search(tr);
  const std::vector<Qubit> bath = cfg.bath_state(un.size());
  const std::vector<Qubit> target_init(init.qubits.begin() + 1, init.qubits.end());
  const auto d = reduced_decomposition(init.qubits[0][0], init.qubits[0][1], tr, un, bath, target_init);
  const auto roof = convex_roof(d.v_plus, d.v_minus, uniform_grid(0.0, 1.0, cfg.p_points), cfg.chi_resolution);
  const auto at = trial_state_minimize(d, cfg.chi_resolution);
  const double tp = three_tangle(d.v_plus), tm = three_tangle(d.v_minus);

  json qubits = json::array();
  for (const auto& q : init.qubits) qubits.push_back(amplitudes_json(q));
  json out{{"spins", json::array()},
           {"initial_state", qubits},
           {"initial_tau3", round12(init.tau3)},
           {"used_default_state", init.used_default},
           {"lambda_plus", round12(d.lambda_plus)},
           {"lambda_minus", round12(d.lambda_minus)},
           {"degenerate", d.degenerate},
           {"f01", {round12(d.f01.real()), round12(d.f01.imag())}},
           {"tau3_v_plus", round12(tp)},
           {"tau3_v_minus", round12(tm)},
           {"eigenvector_tangles_coincide", std::abs(tp - tm) < 1e-8},
           {"tau3_min", round12(at.value)},
           {"chi_argmin", round12(at.chi)}};
  for (auto i : l.targets) out["spins"].push_back(l.reg.spins[i].label);
  write_text(cfg.output_dir / "mixed_state.json", out.dump(2) + "\n");
  write_text(cfg.output_dir / "convex_roof.csv", convex_roof_to_csv(roof));
  if (std::abs(tp - tm) >= 1e-8)
    std::cerr << "note: eigenvector three-tangles differ (" << fmt12(tp) << " vs " << fmt12(tm) << ")\n";
  std::cout << "lambda+ " << fmt12(d.lambda_plus) << "  tau3 min " << fmt12(at.value) << "\n";
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  const auto rep = run_verify(cfg.load(), cfg.rng_seed, cfg.verify_samples, cfg.options.threads);
  json checks = json::array();
  for (const auto& c : rep.checks) {
    checks.push_back({{"name", c.name},
                      {"deviation", c.deviation},
                      {"tolerance", c.tolerance},
                      {"passed", c.passed}});
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  " << c.deviation << "\n";
  }
  write_text(cfg.output_dir / "verify.json",
             json{{"passed", rep.passed()}, {"version", tool_version}, {"checks", checks}}.dump(2) + "\n");
  ensure(rep.passed(), "oracle suite reported failures");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Electron-nuclear GHZ state preparation with dynamical decoupling"};
  app.require_subcommand(1);
  std::string config;
  PlanArgs pa;

  auto add_config = [&](CLI::App* s) { s->add_option("--config", config, "run configuration JSON")->required(); };
  auto add_plan = [&](CLI::App* s, const char* flag) {
    s->add_option(flag, pa.plan, "plan, case, or case-array JSON")->required()->check(CLI::ExistingFile);
    s->add_option("--case", pa.index, "index into a case array");
    s->add_option("--targets", pa.targets, "target spin labels")->delimiter(',');
  };

  auto* evolve = app.add_subcommand("evolve", "evolve |+>|0..0> under a plan and report tau_M");
  auto* metrics = app.add_subcommand("metrics", "closed-form metrics of a plan");
  auto* seq = app.add_subcommand("search-sequential", "sequential-scheme search");
  auto* multi = app.add_subcommand("search-multispin", "multi-spin-scheme search");
  auto* mixed = app.add_subcommand("mixed-state", "reduced-state convex roof for a GHZ3 case");
  auto* verify = app.add_subcommand("verify", "cross-check closed forms against brute-force oracles");
  for (auto* s : {evolve, metrics, seq, multi, mixed, verify}) add_config(s);
  add_plan(evolve, "--plan");
  add_plan(metrics, "--plan");
  add_plan(mixed, "--cases");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (app.exit(e) == 0) return 0;
    std::cerr << app.help();
    return 1;
  }

  try {
    const RunConfig cfg = load_run_config(config);
    if (*evolve) return cmd_evolve(cfg, pa);
    if (*metrics) return cmd_metrics(cfg, pa);
    if (*seq) return cmd_search(cfg, Scheme::sequential);
    if (*multi) return cmd_search(cfg, Scheme::multispin);
    if (*mixed) return cmd_mixed_state(cfg, pa);
    if (*verify) return cmd_verify(cfg);
  } catch (const invariant_error& e) {
    std::cerr << "invariant violated: " << e.what() << "\n";
    return 2;
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const cap_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

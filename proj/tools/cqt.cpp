// Command-line driver for the controlled-teleportation laboratory.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "cqt/experiment.hpp"
#include "cqt/nonlocality.hpp"
#include "cqt/povm.hpp"
#include "cqt/teleport.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalidArgs = 1;
constexpr int kNumericalFailure = 2;

int run_sweep_command(cqt::SweepConfig cfg) {
  cfg.validate();
  const auto result = cqt::run_sweep(cfg);
  for (const auto& f : result.failures)
    std::fprintf(stderr, "failed: channel=%s p=%s: %s\n", cqt::to_string(f.channel).c_str(),
                 cqt::format_real(f.p).c_str(), f.message.c_str());
  if (!result.rows.empty()) {
    cqt::emit_csv(result.rows, cfg.output_path);
    std::printf("wrote %zu rows to %s\n", result.rows.size(), cfg.output_path.c_str());
    if (cfg.plot_data)
      for (const auto& path : cqt::emit_plot_data(result.rows, cfg.output_path)) std::printf("wrote %s\n", path.c_str());
  }
  return result.failures.empty() ? kOk : kNumericalFailure;
}

int run_demo_bounds(int restarts, std::uint64_t seed) {
  const auto r = cqt::demo_bounds(restarts, seed);
  std::printf("classical broadcast  svetlichny %.12g  mermin %.12g\n", r.broadcast_svetlichny, r.broadcast_mermin);
  std::printf("classical local      svetlichny %.12g  mermin %.12g\n", r.local_svetlichny, r.local_mermin);
  std::printf("GHZ optimised        svetlichny %.12g  (4 sqrt 2 = %.12g)\n", r.ghz_svetlichny.value,
              4.0 * std::numbers::sqrt2);
  std::fputs(cqt::describe(r.ghz_svetlichny.settings).c_str(), stdout);
  std::printf("GHZ optimised        mermin %.12g\n", r.ghz_mermin.value);
  std::fputs(cqt::describe(r.ghz_mermin.settings).c_str(), stdout);
  return kOk;
}

int run_teleport(const std::string& channel, double p, double sdp_tol) {
  const auto rep = cqt::ecp_report(cqt::parse_channel(channel), p, {sdp_tol, 5000});
  std::printf("channel    %s\np          %.12g\n", channel.c_str(), p);
  std::printf("f_c_ne     %.12g\nf_nc_e     %.12g\nf_nc_guess %.12g\necp        %.12g\n", rep.f_c_ne, rep.f_nc_e,
              rep.f_nc_guess, rep.ecp);
  std::printf("sdp_gap    %.3g (%d iterations)\n", rep.sdp_gap, rep.sdp_iterations);
  return kOk;
}

int run_povm_selftest(double tol) {
  using cqt::ComplexMatrix;
  bool ok = true;
  // |0><0| against |+><+| with equal priors.
  cqt::DiscriminationInstance helstrom;
  helstrom.rho_tilde = {ComplexMatrix{{0.5, 0.0}, {0.0, 0.0}}, ComplexMatrix{{0.25, 0.25}, {0.25, 0.25}}};
  helstrom.labels = {"0", "+"};
  const double expected = 0.5 * (1.0 + cqt::trace_norm(helstrom.rho_tilde[0] - helstrom.rho_tilde[1]));

  cqt::DiscriminationInstance orthogonal;
  orthogonal.rho_tilde = {ComplexMatrix{{0.5, 0.0}, {0.0, 0.0}}, ComplexMatrix{{0.0, 0.0}, {0.0, 0.5}}};
  orthogonal.labels = {"0", "1"};

  for (const auto& [name, inst, target] :
       {std::tuple{"helstrom", helstrom, expected}, std::tuple{"orthogonal", orthogonal, 1.0}}) {
    const auto res = cqt::solve_discrimination(inst, tol);
    const auto v = cqt::verify_result(inst, res);
    const bool pass = std::abs(v.primal_value - target) <= 1e-7 && v.gap <= tol && v.primal_feasible() &&
                      v.dual_feasible();
    ok = ok && pass;
    std::printf("%-10s value %.12f expected %.12f gap %.2e iterations %d  %s\n", name, v.primal_value, target, v.gap,
                res.iterations, pass ? "ok" : "FAIL");
  }
  return ok ? kOk : kNumericalFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Controlled teleportation with an untrusted receiver: fidelities, nonlocality and adversary SDP"};
  app.require_subcommand(1);

  cqt::SweepConfig defaults;
  std::string config_path;
  std::string channel = cqt::to_string(defaults.channel);
  cqt::SweepConfig cli = defaults;

  auto* sweep = app.add_subcommand("sweep", "Sweep depolarising strength and write a CSV");
  sweep->add_option("--config", config_path, "Flat key=value file; flags given here take precedence");
  auto* o_channel = sweep->add_option("--channel", channel, "total, qubit or both")
                        ->check(CLI::IsMember({"total", "qubit", "both"}));
  auto* o_pmin = sweep->add_option("--p-min", cli.p_min, "Smallest p")->check(CLI::Range(0.0, 1.0));
  auto* o_pmax = sweep->add_option("--p-max", cli.p_max, "Largest p")->check(CLI::Range(0.0, 1.0));
  auto* o_pstep = sweep->add_option("--p-step", cli.p_step, "Grid spacing")->check(CLI::PositiveNumber);
  auto* o_tol = sweep->add_option("--sdp-tol", cli.sdp_tol, "Certified duality gap")->check(CLI::PositiveNumber);
  auto* o_restarts =
      sweep->add_option("--restarts", cli.optimizer_restarts, "Random starts for the S search")->check(CLI::PositiveNumber);
  auto* o_seed = sweep->add_option("--seed", cli.seed, "Base seed");
  auto* o_out = sweep->add_option("--out", cli.output_path, "CSV path");
  auto* o_plot = sweep->add_flag("--plot-data", cli.plot_data, "Also write <stem>_<channel>.dat with columns s ecp");
  auto* o_jobs = sweep->add_option("--jobs", cli.jobs, "Worker threads")->check(CLI::PositiveNumber);

  int demo_restarts = 20;
  std::uint64_t demo_seed = 42;
  auto* demo = app.add_subcommand("demo-bounds", "Classical broadcast bounds against optimised GHZ values");
  demo->add_option("--restarts", demo_restarts, "Random starts for the settings search")->check(CLI::PositiveNumber);
  demo->add_option("--seed", demo_seed, "Seed for the settings search");

  std::string tp_channel = "total";
  double tp_p = 0.0;
  double tp_tol = 1e-7;
  auto* teleport = app.add_subcommand("teleport", "Fidelities and ECP for one resource");
  teleport->add_option("--channel", tp_channel, "total or qubit")->required()->check(CLI::IsMember({"total", "qubit"}));
  teleport->add_option("--p", tp_p, "Depolarising strength")->required()->check(CLI::Range(0.0, 1.0));
  teleport->add_option("--sdp-tol", tp_tol, "Certified duality gap")->check(CLI::PositiveNumber);

  double selftest_tol = 1e-7;
  auto* selftest = app.add_subcommand("povm-selftest", "Solve the Helstrom and orthogonal instances");
  selftest->add_option("--sdp-tol", selftest_tol, "Certified duality gap")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalidArgs;
  }

  try {
    if (sweep->parsed()) {
      cqt::SweepConfig cfg = defaults;
      if (!config_path.empty()) cqt::apply_config(cqt::read_config_file(config_path), cfg);
      if (o_channel->count()) cfg.channel = cqt::parse_channel_selection(channel);
      if (o_pmin->count()) cfg.p_min = cli.p_min;
      if (o_pmax->count()) cfg.p_max = cli.p_max;
      if (o_pstep->count()) cfg.p_step = cli.p_step;
      if (o_tol->count()) cfg.sdp_tol = cli.sdp_tol;
      if (o_restarts->count()) cfg.optimizer_restarts = cli.optimizer_restarts;
      if (o_seed->count()) cfg.seed = cli.seed;
      if (o_out->count()) cfg.output_path = cli.output_path;
      if (o_plot->count()) cfg.plot_data = true;
      if (o_jobs->count()) cfg.jobs = cli.jobs;
      try {
        cfg.validate();
      } catch (const cqt::Error& e) {
        std::fprintf(stderr, "invalid arguments: %s\n", e.what());
        return kInvalidArgs;
      }
      return run_sweep_command(cfg);
    }
    if (demo->parsed()) return run_demo_bounds(demo_restarts, demo_seed);
    if (teleport->parsed()) return run_teleport(tp_channel, tp_p, tp_tol);
    if (selftest->parsed()) return run_povm_selftest(selftest_tol);
  } catch (const cqt::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumericalFailure;
  } catch (const cqt::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalidArgs;
  }
  return kInvalidArgs;
}

// smra: command-line front end.
//
//   smra generate   --L 60 --q 0.2 --n 5000 --sigma 1 --out run/
//   smra estimate   --obs run/observations.json --out run/
//   smra solve rrr  --ps run/power_spectrum.csv --M 12
//   smra solve em   --obs run/observations.json --sigma 1 --q 0.2
//   smra solve bispectrum --invariants run/invariants.json
//   smra solve sdp  --ps run/power_spectrum.csv
//   smra score      --est run/rrr_estimate.json --truth run/signal.json [--reflection]
//   smra experiment fig1|fig2|fig3 [--config cfg.json] [--paper-scale]

#include "smra/smra.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using smra::io::json;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string out = ".";
  int threads = 1;
  bool paper_scale = false;
  std::string config;
};

json estimate_json(const std::string& solver, const smra::SparseSignal& est, const smra::RealVector* continuous) {
  json j = smra::io::signal_to_json(est);
  j["solver"] = solver;
  j["support"] = est.support();
  if (continuous) j["continuous"] = smra::io::to_std(*continuous);
  return j;
}

void emit(const Globals& g, const std::string& file, const json& j) {
  const fs::path p = fs::path(g.out) / file;
  smra::io::write_json_file(p, j);
  std::cout << "wrote " << p.string() << '\n';
}

// ---------------------------------------------------------------------------

void cmd_generate(const Globals& g, int L, int M, double q, int n, double sigma) {
  smra::Rng rng(g.seed);
  smra::Rng signal_rng = rng.split(0);
  const smra::SparseSignal x =
      M >= 0 ? smra::sample_fixed_sparsity(L, M, signal_rng) : smra::sample_bernoulli_signal(L, q, signal_rng);
  const auto obs = smra::generate_observations(x, smra::AtomProfile::delta(L), n, sigma, rng.split(1));
  emit(g, "signal.json", smra::io::signal_to_json(x));
  json oj = smra::io::observations_to_json(obs);
  oj["true_shifts"] = obs.true_shifts;
  emit(g, "observations.json", oj);
}

void cmd_estimate(const Globals& g, const std::string& obs_file, std::optional<double> sigma_opt, bool no_debias) {
  const auto obs = smra::io::read_observations(obs_file, sigma_opt.value_or(0.0));
  const double sigma = sigma_opt.value_or(obs.sigma);
  const auto est = smra::estimate_invariants(obs, sigma, smra::AtomProfile::delta(obs.length), !no_debias);
  emit(g, "invariants.json", smra::io::invariants_to_json(est));
  std::ostringstream os;
  smra::io::write_power_spectrum_csv(os, est.power_spectrum_est);
  smra::io::write_text_file(fs::path(g.out) / "power_spectrum.csv", os.str());
  std::cout << "wrote " << (fs::path(g.out) / "power_spectrum.csv").string() << '\n';
}

void cmd_solve_rrr(const Globals& g, const std::string& ps_file, int M, smra::RrrConfig cfg) {
  const smra::RealVector ps = smra::io::read_power_spectrum(ps_file);
  cfg.sparsity = M >= 0 ? M : smra::infer_sparsity(ps);
  cfg.seed = g.seed;
  const auto res = smra::rrr_solve(ps, cfg);
  json j = estimate_json("rrr", res.estimate, nullptr);
  j["iterations"] = res.iterations;
  j["converged"] = res.converged;
  j["final_residual"] = res.final_residual;
  j["config"] = {{"M", cfg.sparsity}, {"beta", cfg.beta}, {"tol", cfg.tol}, {"max_iter", cfg.max_iter},
                 {"seed", cfg.seed}, {"initialization", "iid uniform(0,1)"}};
  emit(g, "rrr_estimate.json", j);
}

void cmd_solve_em(const Globals& g, const std::string& obs_file, std::optional<double> sigma_opt, smra::EmConfig cfg) {
  const auto obs = smra::io::read_observations(obs_file, sigma_opt.value_or(0.0));
  const double sigma = sigma_opt.value_or(obs.sigma);
  cfg.seed = g.seed;
  const auto res = smra::em_solve(obs, sigma, cfg);
  json j = estimate_json("em", res.estimate, &res.continuous);
  j["iterations"] = res.iterations;
  j["converged"] = res.converged;
  j["log_likelihood"] = res.log_likelihood;
  j["config"] = {{"sigma", sigma}, {"q", cfg.q}, {"tol", cfg.tol}, {"max_iter", cfg.max_iter},
                 {"restarts", cfg.restarts}, {"seed", cfg.seed}};
  emit(g, "em_estimate.json", j);
  std::ostringstream os;
  os.precision(17);
  os << "iteration,delta\n";
  for (std::size_t i = 0; i < res.deltas.size(); ++i) os << i + 1 << ',' << res.deltas[i] << '\n';
  smra::io::write_text_file(fs::path(g.out) / "em_deltas.csv", os.str());
  std::cout << "wrote " << (fs::path(g.out) / "em_deltas.csv").string() << '\n';
}

void cmd_solve_bispectrum(const Globals& g, const std::string& inv_file) {
  const auto est = smra::io::invariants_from_json(smra::io::read_json_file(inv_file));
  const auto res = smra::invert_bispectrum(est);
  json j = estimate_json("bispectrum", res.estimate, &res.continuous);
  j["marching_residual"] = res.marching_residual;
  j["refined_residual"] = res.refined_residual;
  j["refinement_steps"] = res.refinement_steps;
  j["imag_residue"] = res.imag_residue;
  j["imag_warning"] = res.imag_warning;
  j["phases"] = smra::io::to_std(res.phases.phases);
  j["least_squares"] = "unweighted phase-only residual";
  emit(g, "bispectrum_estimate.json", j);
}

void cmd_solve_sdp(const Globals& g, const std::string& ps_file, smra::SdpOptions opts) {
  const smra::RealVector ps = smra::io::read_power_spectrum(ps_file);
  smra::Rng rng(g.seed);
  const auto problem = smra::build_sdp(ps, rng);
  const auto sol = smra::solve_sdp(problem, opts);
  json j;
  j["solver"] = "sdp";
  j["iterations"] = sol.iterations;
  j["converged"] = sol.converged;
  j["infeasible"] = sol.infeasible;
  j["objective"] = sol.objective;
  j["rank1_gap"] = sol.rank1_gap;
  j["eigenvalues"] = smra::io::to_std(sol.eigenvalues);
  j["residuals"] = {{"affine_max", sol.residuals.affine.maxCoeff()},
                    {"negativity", sol.residuals.negativity},
                    {"psd", sol.residuals.psd},
                    {"consensus", sol.residuals.consensus},
                    {"dual", sol.residuals.dual}};
  try {
    const auto ex = smra::extract_signal(sol, problem.ps);
    j.update(estimate_json("sdp", ex.estimate, &ex.continuous));
    j["ps_relative_error"] = ex.ps_relative_error;
    j["verified"] = ex.verified;
  } catch (const smra::DegenerateError& e) {
    j["extraction_error"] = e.what();
  }
  emit(g, "sdp_estimate.json", j);
}

void cmd_score(const std::string& est_file, const std::string& truth_file, bool reflection) {
  const auto est = smra::io::signal_values_from_json(smra::io::read_json_file(est_file));
  const auto truth = smra::io::signal_values_from_json(smra::io::read_json_file(truth_file));
  const auto err = smra::align_to_orbit(est, truth, reflection);
  const json j{{"relative_error", err.relative_error},
               {"best_shift", err.best_shift},
               {"reflected", err.reflected},
               {"include_reflection", err.include_reflection}};
  std::cout << j.dump(2) << '\n';
}

// Keys in the JSON config override the corresponding flags.
void apply_config(smra::experiment::ExperimentConfig& c, const json& j) {
  if (j.contains("lengths")) c.lengths = j["lengths"].get<std::vector<int>>();
  if (j.contains("sparsities")) c.sparsities = j["sparsities"].get<std::vector<int>>();
  if (j.contains("qs")) c.qs = j["qs"].get<std::vector<double>>();
  if (j.contains("sigmas")) c.sigmas = j["sigmas"].get<std::vector<double>>();
  c.n = j.value("n", c.n);
  c.trials = j.value("trials", c.trials);
  c.master_seed = j.value("seed", c.master_seed);
  c.threads = j.value("threads", c.threads);
  c.out_dir = j.value("out", c.out_dir);
  c.low_sigma_max = j.value("low_sigma_max", c.low_sigma_max);
  c.high_sigma_min = j.value("high_sigma_min", c.high_sigma_min);
  c.high_sigma_max = j.value("high_sigma_max", c.high_sigma_max);
  if (j.contains("rrr")) {
    const auto& r = j["rrr"];
    c.rrr.beta = r.value("beta", c.rrr.beta);
    c.rrr.tol = r.value("tol", c.rrr.tol);
    c.rrr.max_iter = r.value("max_iter", c.rrr.max_iter);
  }
  if (j.contains("em")) {
    const auto& e = j["em"];
    c.em.tol = e.value("tol", c.em.tol);
    c.em.max_iter = e.value("max_iter", c.em.max_iter);
    c.em.restarts = e.value("restarts", c.em.restarts);
  }
  if (j.contains("sdp")) {
    const auto& s = j["sdp"];
    c.sdp.tol = s.value("tol", c.sdp.tol);
    c.sdp.max_iter = s.value("max_iter", c.sdp.max_iter);
    c.sdp.inner_max_iter = s.value("inner_max_iter", c.sdp.inner_max_iter);
  }
}

void cmd_experiment(const Globals& g, const std::string& id, std::optional<int> trials) {
  auto cfg = smra::experiment::default_config(id, g.paper_scale);
  cfg.master_seed = g.seed;
  cfg.threads = g.threads;
  cfg.out_dir = g.out;
  if (trials) cfg.trials = *trials;
  if (!g.config.empty()) apply_config(cfg, smra::io::read_json_file(g.config));
  fs::create_directories(cfg.out_dir);
  smra::io::write_json_file(fs::path(cfg.out_dir) / "metadata.json", smra::experiment::metadata(cfg));

  if (id == "fig1") {
    const auto r = smra::experiment::run_fig1(cfg);
    for (const auto& s : r.summary)
      std::printf("L=%d M=%d median_iterations=%g converged=%.2f\n", s.L, s.M, s.median_iterations,
                  s.converged_fraction);
  } else if (id == "fig2") {
    const auto r = smra::experiment::run_fig2(cfg);
    for (const auto& s : r.slopes)
      std::printf("q=%g %s low_slope=%g high_slope=%g\n", s.q, s.solver.c_str(), s.low_slope, s.high_slope);
  } else {
    const auto r = smra::experiment::run_fig3(cfg);
    for (const auto& s : r.summary)
      std::printf("L=%d M=%d recovered=%d/%d mean_orbit_error=%g\n", s.L, s.M, s.recovered, s.trials,
                  s.mean_orbit_error);
  }
  std::cout << "wrote tables to " << cfg.out_dir << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse multi-reference alignment toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads for experiments")->check(CLI::PositiveNumber);
  app.add_flag("--paper-scale", g.paper_scale, "Use the full trial counts");
  app.add_option("--config", g.config, "JSON file whose keys override flags")->check(CLI::ExistingFile);

  // generate
  auto* gen = app.add_subcommand("generate", "Sample a signal and noisy shifted observations");
  int gen_L = 60, gen_M = -1, gen_n = 1000;
  double gen_q = 0.2, gen_sigma = 1.0;
  gen->add_option("--L", gen_L, "Signal length")->check(CLI::PositiveNumber);
  gen->add_option("--M", gen_M, "Fixed sparsity (otherwise Bernoulli(q))");
  gen->add_option("--q", gen_q, "Bernoulli density");
  gen->add_option("--n", gen_n, "Number of observations")->check(CLI::NonNegativeNumber);
  gen->add_option("--sigma", gen_sigma, "Noise level")->check(CLI::NonNegativeNumber);

  // estimate
  auto* est = app.add_subcommand("estimate", "Estimate power spectrum and bispectrum from observations");
  std::string est_obs;
  std::optional<double> est_sigma;
  bool est_raw = false;
  est->add_option("--obs", est_obs, "Observations (JSON or CSV)")->required()->check(CLI::ExistingFile);
  est->add_option("--sigma", est_sigma, "Noise level (default: from the file)");
  est->add_flag("--no-debias", est_raw, "Skip noise-bias subtraction");

  // solve
  auto* solve = app.add_subcommand("solve", "Recover a signal");
  solve->require_subcommand(1);
  auto* s_rrr = solve->add_subcommand("rrr", "RRR from a power spectrum");
  std::string rrr_ps;
  int rrr_M = -1;
  smra::RrrConfig rrr_cfg;
  s_rrr->add_option("--ps", rrr_ps, "Power spectrum (JSON or CSV)")->required()->check(CLI::ExistingFile);
  s_rrr->add_option("--M", rrr_M, "Sparsity (default: sqrt(ps[0]))");
  s_rrr->add_option("--beta", rrr_cfg.beta, "Relaxation parameter");
  s_rrr->add_option("--tol", rrr_cfg.tol, "Relative power-spectrum tolerance");
  s_rrr->add_option("--max-iter", rrr_cfg.max_iter, "Iteration cap");

  auto* s_em = solve->add_subcommand("em", "EM from observations");
  std::string em_obs;
  std::optional<double> em_sigma;
  smra::EmConfig em_cfg;
  em_cfg.q = 0.2;
  s_em->add_option("--obs", em_obs, "Observations (JSON or CSV)")->required()->check(CLI::ExistingFile);
  s_em->add_option("--sigma", em_sigma, "Noise level (default: from the file)");
  s_em->add_option("--q", em_cfg.q, "Prior density");
  s_em->add_option("--tol", em_cfg.tol, "Stopping tolerance on the update norm");
  s_em->add_option("--max-iter", em_cfg.max_iter, "Iteration cap");
  s_em->add_option("--restarts", em_cfg.restarts, "Random restarts");

  auto* s_bs = solve->add_subcommand("bispectrum", "Invert estimated invariants");
  std::string bs_inv;
  s_bs->add_option("--invariants", bs_inv, "Invariants JSON from `estimate`")->required()->check(CLI::ExistingFile);

  auto* s_sdp = solve->add_subcommand("sdp", "Convex relaxation from a power spectrum");
  std::string sdp_ps;
  smra::SdpOptions sdp_opts;
  s_sdp->add_option("--ps", sdp_ps, "Power spectrum (JSON or CSV)")->required()->check(CLI::ExistingFile);
  s_sdp->add_option("--tol", sdp_opts.tol, "Residual tolerance");
  s_sdp->add_option("--max-iter", sdp_opts.max_iter, "Outer iteration cap");
  s_sdp->add_option("--inner-max-iter", sdp_opts.inner_max_iter, "Inner Dykstra cap");

  // score
  auto* score = app.add_subcommand("score", "Relative error up to shift (and reflection)");
  std::string sc_est, sc_truth;
  bool sc_refl = false;
  score->add_option("--est", sc_est, "Estimate JSON")->required()->check(CLI::ExistingFile);
  score->add_option("--truth", sc_truth, "Reference signal JSON")->required()->check(CLI::ExistingFile);
  score->add_flag("--reflection", sc_refl, "Also allow reflection");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Seeded, resumable experiment sweeps");
  std::string exp_id;
  std::optional<int> exp_trials;
  exp->add_option("id", exp_id, "fig1 | fig2 | fig3")->required()->check(CLI::IsMember({"fig1", "fig2", "fig3"}));
  exp->add_option("--trials", exp_trials, "Trials per cell");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) cmd_generate(g, gen_L, gen_M, gen_q, gen_n, gen_sigma);
    else if (*est) cmd_estimate(g, est_obs, est_sigma, est_raw);
    else if (*s_rrr) cmd_solve_rrr(g, rrr_ps, rrr_M, rrr_cfg);
    else if (*s_em) cmd_solve_em(g, em_obs, em_sigma, em_cfg);
    else if (*s_bs) cmd_solve_bispectrum(g, bs_inv);
    else if (*s_sdp) cmd_solve_sdp(g, sdp_ps, sdp_opts);
    else if (*score) cmd_score(sc_est, sc_truth, sc_refl);
    else if (*exp) cmd_experiment(g, exp_id, exp_trials);
  } catch (const smra::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#pragma once

// Seeded, resumable batch runs for the three experiments:
//   fig1  RRR iteration counts vs sparsity (noiseless power spectra)
//   fig2  EM and bispectrum-inversion error vs noise level
//   fig3  SDP recovery over an (L, M) grid
//
// Each grid cell is checkpointed to <out>/cells/ once finished; a rerun with
// the same output directory skips completed cells.

#include "smra/bispectrum_inversion.hpp"
#include "smra/em.hpp"
#include "smra/invariants.hpp"
#include "smra/io.hpp"
#include "smra/orbit.hpp"
#include "smra/rrr.hpp"
#include "smra/sdp.hpp"
#include "smra/signal.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace smra::experiment {

inline constexpr int kCsvSchemaVersion = 1;

struct ExperimentConfig {
  std::string id;  // fig1 | fig2 | fig3
  std::vector<int> lengths;
  std::vector<int> sparsities;
  std::vector<double> qs;
  std::vector<double> sigmas;
  int n = 5000;
  int trials = 0;
  std::uint64_t master_seed = 0;
  std::string out_dir;  // empty: no files
  int threads = 1;
  bool paper_scale = false;

  RrrConfig rrr;
  EmConfig em;
  BispectrumInversionOptions bispectrum;
  SdpOptions sdp;

  // Log-log fit windows for the fig2 slopes.
  double low_sigma_max = 0.3;
  double high_sigma_min = 1.0;
  double high_sigma_max = 3.0;
};

// 17 points, four per decade, on [0.1, 10].
inline std::vector<double> default_sigma_grid() {
  std::vector<double> s;
  for (int i = 0; i <= 16; ++i) s.push_back(std::pow(10.0, -1.0 + i / 8.0));
  return s;
}

inline ExperimentConfig default_config(const std::string& id, bool paper_scale = false) {
  ExperimentConfig c;
  c.id = id;
  c.paper_scale = paper_scale;
  if (id == "fig1") {
    c.lengths = {80, 120};
    for (int m = 2; m <= 20; m += 2) c.sparsities.push_back(m);
    c.trials = paper_scale ? 500 : 50;
  } else if (id == "fig2") {
    c.lengths = {60};
    c.qs = {0.2, 0.5};
    c.sigmas = default_sigma_grid();
    c.n = 5000;
    c.trials = paper_scale ? 100 : 10;
  } else if (id == "fig3") {
    for (int l = 8; l <= 32; l += 4) c.lengths.push_back(l);
    for (int m = 1; m <= 6; ++m) c.sparsities.push_back(m);
    c.trials = 10;
  } else {
    throw ParameterError("unknown experiment id: " + id);
  }
  return c;
}

// Child stream for (cell, trial).
inline Rng trial_rng(std::uint64_t master_seed, std::uint64_t cell, std::uint64_t trial) {
  return Rng(master_seed).split(cell, trial);
}

// Runs body(i) for i in [0, count) on `threads` workers pulling from a shared
// counter.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Ordinary least squares slope of y on x.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "ols_slope: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  require(sxx > 0.0, "ols_slope: x values are all equal");
  return sxy / sxx;
}

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return ols_slope(lx, ly);
}

inline double median(std::vector<double> v) {
  require(!v.empty(), "median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// ---------------------------------------------------------------------------
// Rows

struct Fig1Row {
  int L = 0;
  int M = 0;
  int trial = 0;
  long iterations = 0;
  bool converged = false;
};

struct Fig2Row {
  double q = 0.0;
  double sigma = 0.0;
  int trial = 0;
  std::string solver;  // em | bispectrum
  double relative_error = 0.0;             // shift-only alignment
  double relative_error_reflection = 0.0;  // shifts and reflection
  bool converged = true;
  long iterations = 0;
};

struct Fig3Row {
  int L = 0;
  int M = 0;
  int trial = 0;
  bool recovered = false;
  double orbit_error = 0.0;
  double rank1_gap = 1.0;
  long iterations = 0;
  bool converged = false;
  bool infeasible = false;
};

inline const char* fig1_header() { return "L,M,trial,iterations,converged"; }
inline const char* fig2_header() {
  return "q,sigma,trial,solver,relative_error,relative_error_reflection,converged,iterations";
}
inline const char* fig3_header() { return "L,M,trial,recovered,orbit_error,rank1_gap,iterations,converged,infeasible"; }

inline std::string format_row(const Fig1Row& r) {
  std::ostringstream os;
  os << r.L << ',' << r.M << ',' << r.trial << ',' << r.iterations << ',' << (r.converged ? 1 : 0);
  return os.str();
}

inline std::string format_row(const Fig2Row& r) {
  std::ostringstream os;
  os << std::setprecision(17) << r.q << ',' << r.sigma << ',' << r.trial << ',' << r.solver << ',' << r.relative_error
     << ',' << r.relative_error_reflection << ',' << (r.converged ? 1 : 0) << ',' << r.iterations;
  return os.str();
}

inline std::string format_row(const Fig3Row& r) {
  std::ostringstream os;
  os << std::setprecision(17) << r.L << ',' << r.M << ',' << r.trial << ',' << (r.recovered ? 1 : 0) << ','
     << r.orbit_error << ',' << r.rank1_gap << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
     << (r.infeasible ? 1 : 0);
  return os.str();
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

inline std::optional<Fig1Row> parse_fig1(const std::vector<std::string>& c) {
  if (c.size() != 5) return std::nullopt;
  return Fig1Row{std::stoi(c[0]), std::stoi(c[1]), std::stoi(c[2]), std::stol(c[3]), c[4] == "1"};
}

inline std::optional<Fig2Row> parse_fig2(const std::vector<std::string>& c) {
  if (c.size() != 8) return std::nullopt;
  return Fig2Row{std::stod(c[0]), std::stod(c[1]), std::stoi(c[2]), c[3], std::stod(c[4]), std::stod(c[5]),
                 c[6] == "1", std::stol(c[7])};
}

inline std::optional<Fig3Row> parse_fig3(const std::vector<std::string>& c) {
  if (c.size() != 9) return std::nullopt;
  return Fig3Row{std::stoi(c[0]), std::stoi(c[1]), std::stoi(c[2]), c[3] == "1", std::stod(c[4]),
                 std::stod(c[5]), std::stol(c[6]), c[7] == "1", c[8] == "1"};
}

inline std::string table_text(const std::string& id, const char* header, const std::vector<std::string>& rows) {
  std::ostringstream os;
  os << "# smra " << id << " schema v" << kCsvSchemaVersion << '\n' << header << '\n';
  for (const auto& r : rows) os << r << '\n';
  return os.str();
}

// Cell checkpoints: written once, atomically, when the cell is complete.
template <class Row, class Parse>
std::optional<std::vector<Row>> load_cell(const ExperimentConfig& cfg, const std::string& cell_name, Parse parse) {
  if (cfg.out_dir.empty()) return std::nullopt;
  const auto path = std::filesystem::path(cfg.out_dir) / "cells" / (cell_name + ".csv");
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::vector<Row> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    auto row = parse(split_csv(line));
    if (!row) return std::nullopt;
    rows.push_back(*row);
  }
  if (static_cast<int>(rows.size()) != cfg.trials * (std::is_same_v<Row, Fig2Row> ? 2 : 1)) return std::nullopt;
  return rows;
}

template <class Row>
void save_cell(const ExperimentConfig& cfg, const std::string& cell_name, const char* header, const std::vector<Row>& rows) {
  if (cfg.out_dir.empty()) return;
  const auto dir = std::filesystem::path(cfg.out_dir) / "cells";
  std::filesystem::create_directories(dir);
  std::vector<std::string> lines;
  for (const auto& r : rows) lines.push_back(format_row(r));
  const auto tmp = dir / (cell_name + ".csv.tmp");
  io::write_text_file(tmp, table_text(cfg.id, header, lines));
  std::filesystem::rename(tmp, dir / (cell_name + ".csv"));
}

template <class Row>
void write_table(const ExperimentConfig& cfg, const std::string& file, const char* header, const std::vector<Row>& rows) {
  if (cfg.out_dir.empty()) return;
  std::vector<std::string> lines;
  for (const auto& r : rows) lines.push_back(format_row(r));
  io::write_text_file(std::filesystem::path(cfg.out_dir) / file, table_text(cfg.id, header, lines));
}

inline std::string sigma_tag(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// fig1

struct Fig1Summary {
  int L = 0;
  int M = 0;
  double median_iterations = 0.0;  // censored runs count at max_iter
  double converged_fraction = 0.0;
  int trials = 0;
};

struct Fig1Result {
  std::vector<Fig1Row> rows;
  std::vector<Fig1Summary> summary;
};

inline Fig1Row fig1_trial(const ExperimentConfig& cfg, int L, int M, std::uint64_t cell, int trial) {
  Rng rng = trial_rng(cfg.master_seed, cell, static_cast<std::uint64_t>(trial));
  const SparseSignal x = sample_fixed_sparsity(L, M, rng);
  RrrConfig rc = cfg.rrr;
  rc.sparsity = M;
  rc.seed = rng.split(1).seed();
  const RrrResult res = rrr_solve(power_spectrum(x.values()), rc);
  return {L, M, trial, res.iterations, res.converged};
}

inline Fig1Result run_fig1(const ExperimentConfig& cfg) {
  require(cfg.trials >= 0, "run_fig1: trials must be non-negative");
  struct Cell {
    int L, M;
  };
  std::vector<Cell> cells;
  for (int L : cfg.lengths)
    for (int M : cfg.sparsities) {
      require(M >= 1 && M <= L, "run_fig1: M must lie in [1, L]");
      cells.push_back({L, M});
    }

  std::vector<std::vector<Fig1Row>> per_cell(cells.size());
  parallel_for(cells.size(), cfg.threads, [&](std::size_t ci) {
    const auto [L, M] = cells[ci];
    const std::string name = "fig1_L" + std::to_string(L) + "_M" + std::to_string(M);
    if (auto done = detail::load_cell<Fig1Row>(cfg, name, detail::parse_fig1)) {
      per_cell[ci] = std::move(*done);
      return;
    }
    std::vector<Fig1Row> rows;
    for (int t = 0; t < cfg.trials; ++t) rows.push_back(fig1_trial(cfg, L, M, ci, t));
    detail::save_cell(cfg, name, fig1_header(), rows);
    per_cell[ci] = std::move(rows);
  });

  Fig1Result out;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    out.rows.insert(out.rows.end(), per_cell[ci].begin(), per_cell[ci].end());
    if (per_cell[ci].empty()) continue;
    std::vector<double> its;
    int conv = 0;
    for (const auto& r : per_cell[ci]) {
      its.push_back(static_cast<double>(r.iterations));
      conv += r.converged;
    }
    out.summary.push_back({cells[ci].L, cells[ci].M, median(its),
                           static_cast<double>(conv) / static_cast<double>(its.size()), static_cast<int>(its.size())});
  }

  detail::write_table(cfg, "fig1.csv", fig1_header(), out.rows);
  if (!cfg.out_dir.empty()) {
    std::ostringstream os;
    os << "# smra fig1_summary schema v" << kCsvSchemaVersion << "\nL,M,median_iterations,converged_fraction,trials\n";
    for (const auto& s : out.summary)
      os << s.L << ',' << s.M << ',' << s.median_iterations << ',' << s.converged_fraction << ',' << s.trials << '\n';
    io::write_text_file(std::filesystem::path(cfg.out_dir) / "fig1_summary.csv", os.str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// fig2

struct Fig2Slopes {
  double q = 0.0;
  std::string solver;
  double low_slope = std::nan("");
  double high_slope = std::nan("");
  int low_points = 0;
  int high_points = 0;
};

struct Fig2Summary {
  double q = 0.0;
  double sigma = 0.0;
  std::string solver;
  double mean_relative_error = 0.0;
  double mean_relative_error_reflection = 0.0;
  int nonconverged = 0;
};

struct Fig2Result {
  std::vector<Fig2Row> rows;
  std::vector<Fig2Summary> summary;
  std::vector<Fig2Slopes> slopes;
};

// Bernoulli(q) signal, redrawn from fresh substreams until nonzero.
inline SparseSignal sample_nonzero_bernoulli(int L, double q, Rng& rng) {
  require(q > 0.0, "sample_nonzero_bernoulli: q must be positive");
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng sub = rng.split(1000 + attempt);
    SparseSignal x = sample_bernoulli_signal(L, q, sub);
    if (x.sparsity() > 0) return x;
  }
}

inline std::vector<Fig2Row> fig2_trial(const ExperimentConfig& cfg, int L, double q, double sigma, std::uint64_t cell,
                                       int trial) {
  Rng rng = trial_rng(cfg.master_seed, cell, static_cast<std::uint64_t>(trial));
  const SparseSignal x = sample_nonzero_bernoulli(L, q, rng);
  const AtomProfile atom = AtomProfile::delta(L);
  const ObservationSet obs = generate_observations(x, atom, cfg.n, sigma, rng.split(2));

  std::vector<Fig2Row> rows;
  {
    EmConfig ec = cfg.em;
    ec.q = q;
    ec.seed = rng.split(3).seed();
    const EmResult em = em_solve(obs, sigma, ec);
    rows.push_back({q, sigma, trial, "em", align_to_orbit(em.continuous, x.values(), false).relative_error,
                    align_to_orbit(em.continuous, x.values(), true).relative_error, em.converged, em.iterations});
  }
  {
    const InvariantEstimates est = estimate_invariants(obs, sigma, atom);
    Fig2Row row{q, sigma, trial, "bispectrum", 0.0, 0.0, true, 0};
    try {
      const BispectrumInversionResult inv = invert_bispectrum(est, cfg.bispectrum);
      row.relative_error = align_to_orbit(inv.continuous, x.values(), false).relative_error;
      row.relative_error_reflection = align_to_orbit(inv.continuous, x.values(), true).relative_error;
      row.iterations = inv.refinement_steps;
    } catch (const DegenerateError&) {
      row.converged = false;
      row.relative_error = row.relative_error_reflection = 1.0;
    }
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<Fig2Slopes> fit_fig2_slopes(const std::vector<Fig2Summary>& summary, const ExperimentConfig& cfg) {
  std::vector<Fig2Slopes> out;
  for (double q : cfg.qs)
    for (const std::string solver : {"em", "bispectrum"}) {
      std::vector<double> ls, le, hs, he;
      for (const auto& s : summary) {
        if (s.q != q || s.solver != solver || !(s.mean_relative_error > 0.0)) continue;
        if (s.sigma <= cfg.low_sigma_max) {
          ls.push_back(s.sigma);
          le.push_back(s.mean_relative_error);
        }
        if (s.sigma >= cfg.high_sigma_min && s.sigma < cfg.high_sigma_max) {
          hs.push_back(s.sigma);
          he.push_back(s.mean_relative_error);
        }
      }
      Fig2Slopes sl;
      sl.q = q;
      sl.solver = solver;
      sl.low_points = static_cast<int>(ls.size());
      sl.high_points = static_cast<int>(hs.size());
      if (ls.size() >= 2) sl.low_slope = loglog_slope(ls, le);
      if (hs.size() >= 2) sl.high_slope = loglog_slope(hs, he);
      out.push_back(sl);
    }
  return out;
}

inline Fig2Result run_fig2(const ExperimentConfig& cfg) {
  require(cfg.trials >= 0, "run_fig2: trials must be non-negative");
  require(cfg.lengths.size() == 1, "run_fig2: exactly one signal length");
  require(cfg.n >= 1, "run_fig2: n must be positive");
  const int L = cfg.lengths.front();
  struct Cell {
    double q, sigma;
  };
  std::vector<Cell> cells;
  for (double q : cfg.qs)
    for (double s : cfg.sigmas) {
      require(s > 0.0, "run_fig2: sigma must be positive");
      cells.push_back({q, s});
    }

  std::vector<std::vector<Fig2Row>> per_cell(cells.size());
  parallel_for(cells.size(), cfg.threads, [&](std::size_t ci) {
    const auto [q, sigma] = cells[ci];
    const std::string name = "fig2_q" + detail::sigma_tag(q) + "_s" + detail::sigma_tag(sigma);
    if (auto done = detail::load_cell<Fig2Row>(cfg, name, detail::parse_fig2)) {
      per_cell[ci] = std::move(*done);
      return;
    }
    std::vector<Fig2Row> rows;
    for (int t = 0; t < cfg.trials; ++t) {
      auto r = fig2_trial(cfg, L, q, sigma, ci, t);
      rows.insert(rows.end(), r.begin(), r.end());
    }
    detail::save_cell(cfg, name, fig2_header(), rows);
    per_cell[ci] = std::move(rows);
  });

  Fig2Result out;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    out.rows.insert(out.rows.end(), per_cell[ci].begin(), per_cell[ci].end());
    for (const std::string solver : {"em", "bispectrum"}) {
      Fig2Summary s{cells[ci].q, cells[ci].sigma, solver, 0.0, 0.0, 0};
      int count = 0;
      for (const auto& r : per_cell[ci]) {
        if (r.solver != solver) continue;
        s.mean_relative_error += r.relative_error;
        s.mean_relative_error_reflection += r.relative_error_reflection;
        s.nonconverged += !r.converged;
        ++count;
      }
      if (count == 0) continue;
      s.mean_relative_error /= count;
      s.mean_relative_error_reflection /= count;
      out.summary.push_back(s);
    }
  }
  out.slopes = fit_fig2_slopes(out.summary, cfg);

  detail::write_table(cfg, "fig2.csv", fig2_header(), out.rows);
  if (!cfg.out_dir.empty()) {
    std::ostringstream os;
    os << std::setprecision(17) << "# smra fig2_summary schema v" << kCsvSchemaVersion
       << "\nq,sigma,solver,mean_relative_error,mean_relative_error_reflection,nonconverged\n";
    for (const auto& s : out.summary)
      os << s.q << ',' << s.sigma << ',' << s.solver << ',' << s.mean_relative_error << ','
         << s.mean_relative_error_reflection << ',' << s.nonconverged << '\n';
    io::write_text_file(std::filesystem::path(cfg.out_dir) / "fig2_summary.csv", os.str());

    std::ostringstream sl;
    sl << "# smra fig2_slopes schema v" << kCsvSchemaVersion << " low: sigma <= " << cfg.low_sigma_max
       << ", high: " << cfg.high_sigma_min << " <= sigma < " << cfg.high_sigma_max
       << "\nq,solver,low_slope,high_slope,low_points,high_points\n";
    for (const auto& s : out.slopes)
      sl << s.q << ',' << s.solver << ',' << s.low_slope << ',' << s.high_slope << ',' << s.low_points << ','
         << s.high_points << '\n';
    io::write_text_file(std::filesystem::path(cfg.out_dir) / "fig2_slopes.csv", sl.str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// fig3

struct Fig3Summary {
  int L = 0;
  int M = 0;
  double mean_orbit_error = 0.0;
  int recovered = 0;
  int trials = 0;
  int infeasible = 0;
  int nonconverged = 0;
};

struct Fig3Result {
  std::vector<Fig3Row> rows;
  std::vector<Fig3Summary> summary;
};

inline constexpr double kRecoveryThreshold = 1e-3;

inline Fig3Row fig3_trial(const ExperimentConfig& cfg, int L, int M, std::uint64_t cell, int trial) {
  Rng rng = trial_rng(cfg.master_seed, cell, static_cast<std::uint64_t>(trial));
  const SparseSignal x = sample_fixed_sparsity(L, M, rng);
  const RealVector ps = power_spectrum(x.values());
  Rng obj_rng = rng.split(5);
  const SdpProblem problem = build_sdp(ps, obj_rng);
  const SdpSolution sol = solve_sdp(problem, cfg.sdp);

  Fig3Row row{L, M, trial, false, 1.0, sol.rank1_gap, sol.iterations, sol.converged, sol.infeasible};
  try {
    const SdpExtraction ex = extract_signal(sol, ps);
    row.orbit_error = align_to_orbit(ex.estimate.values(), x.values(), true).relative_error;
  } catch (const DegenerateError&) {
    row.orbit_error = 1.0;
  }
  row.recovered = row.orbit_error < kRecoveryThreshold;
  return row;
}

inline Fig3Result run_fig3(const ExperimentConfig& cfg) {
  require(cfg.trials >= 0, "run_fig3: trials must be non-negative");
  struct Cell {
    int L, M;
  };
  std::vector<Cell> cells;
  for (int L : cfg.lengths)
    for (int M : cfg.sparsities) {
      require(M >= 1, "run_fig3: M must be at least 1");
      if (M <= L) cells.push_back({L, M});
    }

  std::vector<std::vector<Fig3Row>> per_cell(cells.size());
  parallel_for(cells.size(), cfg.threads, [&](std::size_t ci) {
    const auto [L, M] = cells[ci];
    const std::string name = "fig3_L" + std::to_string(L) + "_M" + std::to_string(M);
    if (auto done = detail::load_cell<Fig3Row>(cfg, name, detail::parse_fig3)) {
      per_cell[ci] = std::move(*done);
      return;
    }
    std::vector<Fig3Row> rows;
    for (int t = 0; t < cfg.trials; ++t) rows.push_back(fig3_trial(cfg, L, M, ci, t));
    detail::save_cell(cfg, name, fig3_header(), rows);
    per_cell[ci] = std::move(rows);
  });

  Fig3Result out;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    out.rows.insert(out.rows.end(), per_cell[ci].begin(), per_cell[ci].end());
    if (per_cell[ci].empty()) continue;
    Fig3Summary s{cells[ci].L, cells[ci].M, 0.0, 0, 0, 0, 0};
    for (const auto& r : per_cell[ci]) {
      s.mean_orbit_error += r.orbit_error;
      s.recovered += r.recovered;
      s.infeasible += r.infeasible;
      s.nonconverged += !r.converged;
      ++s.trials;
    }
    s.mean_orbit_error /= s.trials;
    out.summary.push_back(s);
  }

  detail::write_table(cfg, "fig3.csv", fig3_header(), out.rows);
  if (!cfg.out_dir.empty()) {
    std::ostringstream os;
    os << std::setprecision(17) << "# smra fig3_summary schema v" << kCsvSchemaVersion
       << "\nL,M,mean_orbit_error,recovered,trials,infeasible,nonconverged\n";
    for (const auto& s : out.summary)
      os << s.L << ',' << s.M << ',' << s.mean_orbit_error << ',' << s.recovered << ',' << s.trials << ','
         << s.infeasible << ',' << s.nonconverged << '\n';
    io::write_text_file(std::filesystem::path(cfg.out_dir) / "fig3_summary.csv", os.str());
  }
  return out;
}

// Run settings recorded next to the tables.
inline io::json metadata(const ExperimentConfig& cfg) {
  io::json j;
  j["experiment"] = cfg.id;
  j["csv_schema_version"] = kCsvSchemaVersion;
  j["master_seed"] = cfg.master_seed;
  j["trials"] = cfg.trials;
  j["paper_scale"] = cfg.paper_scale;
  j["lengths"] = cfg.lengths;
  if (cfg.id == "fig1") {
    j["sparsities"] = cfg.sparsities;
    j["rrr"] = {{"beta", cfg.rrr.beta},
                {"tol", cfg.rrr.tol},
                {"max_iter", cfg.rrr.max_iter},
                {"initialization", "iid uniform(0,1)"},
                {"median_counts_censored_runs_at", "max_iter"}};
  } else if (cfg.id == "fig2") {
    j["qs"] = cfg.qs;
    j["sigmas"] = cfg.sigmas;
    j["sigma_grid"] = "log-spaced";
    j["n"] = cfg.n;
    j["em"] = {{"tol", cfg.em.tol},
               {"max_iter", cfg.em.max_iter},
               {"restarts", cfg.em.restarts},
               {"initialization", "iid uniform(0,1)"},
               {"prior_term", "additive constant 2 sigma^2/n log(q/(1-q))"}};
    j["bispectrum"] = {{"debiased", true},
                       {"least_squares", "unweighted phase-only residual"},
                       {"max_steps", cfg.bispectrum.max_steps},
                       {"rel_decrease_tol", cfg.bispectrum.rel_decrease_tol}};
    j["slope_windows"] = {{"low_sigma_max", cfg.low_sigma_max},
                          {"high_sigma_min", cfg.high_sigma_min},
                          {"high_sigma_max", cfg.high_sigma_max}};
    j["alignment"] = "relative_error: shifts only; relative_error_reflection: shifts and reflection";
  } else {
    j["sparsities"] = cfg.sparsities;
    j["sdp"] = {{"tol", cfg.sdp.tol},
                {"max_iter", cfg.sdp.max_iter},
                {"inner_max_iter", cfg.sdp.inner_max_iter},
                {"recovery_threshold", kRecoveryThreshold},
                {"alignment", "shifts and reflection"}};
  }
  return j;
}

}  // namespace smra::experiment

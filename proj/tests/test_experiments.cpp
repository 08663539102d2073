#include "smra/experiments.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace smra;
using namespace smra::experiment;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("smra_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("zero trials produce header-only tables", "[experiments]") {
  auto cfg = default_config("fig1");
  cfg.lengths = {20};
  cfg.sparsities = {3};
  cfg.trials = 0;
  const auto dir = fresh_dir("fig1_empty");
  cfg.out_dir = dir.string();
  const auto res = run_fig1(cfg);
  CHECK(res.rows.empty());
  const auto text = slurp(dir / "fig1.csv");
  CHECK(text == "# smra fig1 schema v1\nL,M,trial,iterations,converged\n");
  std::filesystem::remove_all(dir);
}

TEST_CASE("fig1 runs converge quickly at M = 2", "[experiments]") {
  auto cfg = default_config("fig1");
  cfg.lengths = {80};
  cfg.sparsities = {2};
  cfg.trials = 5;
  const auto res = run_fig1(cfg);
  REQUIRE(res.rows.size() == 5);
  for (const auto& r : res.rows) {
    CHECK(r.converged);
    CHECK(r.iterations < 1000);
  }
  REQUIRE(res.summary.size() == 1);
  CHECK(res.summary[0].converged_fraction == 1.0);
}

TEST_CASE("runs are deterministic and independent of the thread count", "[experiments]") {
  auto cfg = default_config("fig1");
  cfg.lengths = {30};
  cfg.sparsities = {3, 5};
  cfg.trials = 4;
  cfg.master_seed = 9;
  const auto a = run_fig1(cfg);
  cfg.threads = 2;
  const auto b = run_fig1(cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(format_row(a.rows[i]) == format_row(b.rows[i]));
  cfg.master_seed = 10;
  const auto c = run_fig1(cfg);
  bool differ = false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) differ = differ || format_row(a.rows[i]) != format_row(c.rows[i]);
  CHECK(differ);
}

TEST_CASE("completed cells are reused on rerun", "[experiments]") {
  auto cfg = default_config("fig1");
  cfg.lengths = {30};
  cfg.sparsities = {3};
  cfg.trials = 2;
  const auto dir = fresh_dir("fig1_resume");
  cfg.out_dir = dir.string();
  run_fig1(cfg);
  const auto cell = dir / "cells" / "fig1_L30_M3.csv";
  REQUIRE(std::filesystem::exists(cell));
  // Replace the cell with a sentinel; a rerun must pick it up instead of recomputing.
  io::write_text_file(cell, "# smra fig1 schema v1\nL,M,trial,iterations,converged\n30,3,0,424242,1\n30,3,1,7,1\n");
  const auto res = run_fig1(cfg);
  REQUIRE(res.rows.size() == 2);
  CHECK(res.rows[0].iterations == 424242);
  // A cell with the wrong number of rows is recomputed.
  io::write_text_file(cell, "# smra fig1 schema v1\nL,M,trial,iterations,converged\n30,3,0,424242,1\n");
  CHECK(run_fig1(cfg).rows[0].iterations != 424242);
  std::filesystem::remove_all(dir);
}

TEST_CASE("fig3 recovers every M = 1 trial", "[experiments]") {
  auto cfg = default_config("fig3");
  cfg.lengths = {16};
  cfg.sparsities = {1, 2};
  cfg.trials = 3;
  const auto res = run_fig3(cfg);
  REQUIRE(res.rows.size() == 6);
  for (const auto& r : res.rows) {
    if (r.M == 1) CHECK(r.recovered);
    if (r.recovered) CHECK(r.orbit_error < 1e-3);
  }
}

TEST_CASE("fig2 errors shrink with more observations", "[experiments]") {
  auto cfg = default_config("fig2");
  cfg.lengths = {20};
  cfg.qs = {0.3};
  cfg.sigmas = {0.1, 1.0};
  cfg.trials = 3;
  cfg.em.max_iter = 300;
  const auto dir = fresh_dir("fig2_small");
  cfg.out_dir = dir.string();
  cfg.n = 100;
  const auto small = run_fig2(cfg);
  REQUIRE(small.rows.size() == 12);
  REQUIRE(std::filesystem::exists(dir / "fig2_slopes.csv"));
  std::filesystem::remove_all(dir);
  cfg.out_dir.clear();
  cfg.n = 3000;
  const auto large = run_fig2(cfg);

  auto mean_error = [](const Fig2Result& r, double sigma) {
    for (const auto& s : r.summary)
      if (s.solver == "bispectrum" && s.sigma == sigma) return s.mean_relative_error;
    return -1.0;
  };
  CHECK(mean_error(large, 1.0) < mean_error(small, 1.0));
  CHECK(mean_error(large, 0.1) < mean_error(small, 0.1));
  for (const auto& row : small.rows) CHECK(row.relative_error_reflection <= row.relative_error + 1e-12);
}

TEST_CASE("slope helpers", "[experiments]") {
  CHECK(ols_slope({0, 1, 2, 3}, {1, 3, 5, 7}) == Catch::Approx(2.0));
  CHECK(loglog_slope({1, 10, 100}, {2, 200, 20000}) == Catch::Approx(2.0));
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
}

TEST_CASE("metadata names the experiment", "[experiments]") {
  const auto j = metadata(default_config("fig2"));
  CHECK(j.at("experiment") == "fig2");
  CHECK(j.at("sigmas").size() == 17);
}

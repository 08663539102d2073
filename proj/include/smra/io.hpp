#pragma once

// JSON and CSV serialization for signals, observation sets, invariant
// estimates and power spectra.

#include "smra/core.hpp"
#include "smra/invariants.hpp"
#include "smra/signal.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace smra::io {

using nlohmann::json;

inline std::vector<double> to_std(const RealVector& v) { return {v.data(), v.data() + v.size()}; }

inline RealVector from_std(const std::vector<double>& v) {
  return Eigen::Map<const RealVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// ---------------------------------------------------------------------------
// Signals: {"L": ..., "values": [...]}

inline json signal_to_json(const RealVector& values) {
  return json{{"L", values.size()}, {"values", to_std(values)}};
}

inline json signal_to_json(const SparseSignal& s) { return signal_to_json(s.values()); }

inline RealVector signal_values_from_json(const json& j) {
  const auto values = j.at("values").get<std::vector<double>>();
  if (j.contains("L") && j.at("L").get<std::size_t>() != values.size())
    throw DataError("signal JSON: L does not match the number of values");
  return from_std(values);
}

// ---------------------------------------------------------------------------
// Observation sets: {"L", "sigma", "n", "observations": [[...], ...], "seed"}

inline json observations_to_json(const ObservationSet& obs) {
  json rows = json::array();
  for (const auto& y : obs.observations) rows.push_back(to_std(y));
  return json{{"L", obs.length}, {"sigma", obs.sigma}, {"n", obs.size()}, {"observations", rows}, {"seed", obs.seed}};
}

inline ObservationSet observations_from_json(const json& j) {
  ObservationSet obs;
  obs.length = j.at("L").get<int>();
  obs.sigma = j.value("sigma", 0.0);
  obs.seed = j.value("seed", std::uint64_t{0});
  for (const auto& row : j.at("observations")) {
    RealVector y = from_std(row.get<std::vector<double>>());
    if (y.size() != obs.length) throw DataError("observation JSON: row length differs from L");
    obs.observations.push_back(std::move(y));
  }
  if (j.contains("n") && j.at("n").get<std::size_t>() != obs.size())
    throw DataError("observation JSON: n does not match the number of rows");
  return obs;
}

inline void write_observations_csv(std::ostream& os, const ObservationSet& obs) {
  os << std::setprecision(17);
  for (const auto& y : obs.observations) {
    for (Eigen::Index l = 0; l < y.size(); ++l) os << (l ? "," : "") << y[l];
    os << '\n';
  }
}

inline std::vector<std::vector<double>> read_numeric_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (numeric && !row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

// One observation per row; sigma and seed are not carried by the CSV form.
inline ObservationSet read_observations_csv(std::istream& is, double sigma = 0.0) {
  ObservationSet obs;
  obs.sigma = sigma;
  for (auto& row : read_numeric_csv(is)) {
    if (obs.length == 0) obs.length = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != obs.length) throw DataError("observation CSV: ragged rows");
    obs.observations.push_back(from_std(row));
  }
  return obs;
}

// ---------------------------------------------------------------------------
// Invariant estimates. The bispectrum is stored row by row with real and
// imaginary parts interleaved: [re(0,0), im(0,0), re(0,1), im(0,1), ...].

inline json invariants_to_json(const InvariantEstimates& est) {
  const long L = est.length();
  json bs = json::array();
  for (long k1 = 0; k1 < L; ++k1) {
    std::vector<double> row;
    row.reserve(2 * L);
    for (long k2 = 0; k2 < L; ++k2) {
      row.push_back(est.bispectrum_est(k1, k2).real());
      row.push_back(est.bispectrum_est(k1, k2).imag());
    }
    bs.push_back(std::move(row));
  }
  return json{{"L", L},
              {"n", est.n_used},
              {"sigma", est.sigma_assumed},
              {"debiased", est.debiased},
              {"mean", est.mean_est},
              {"power_spectrum", to_std(est.power_spectrum_est)},
              {"bispectrum", bs}};
}

inline InvariantEstimates invariants_from_json(const json& j) {
  InvariantEstimates est;
  const long L = j.at("L").get<long>();
  est.n_used = j.value("n", 0L);
  est.sigma_assumed = j.value("sigma", 0.0);
  est.debiased = j.value("debiased", true);
  est.mean_est = j.at("mean").get<double>();
  est.power_spectrum_est = from_std(j.at("power_spectrum").get<std::vector<double>>());
  if (est.power_spectrum_est.size() != L) throw DataError("invariants JSON: power spectrum length differs from L");
  const auto& bs = j.at("bispectrum");
  if (static_cast<long>(bs.size()) != L) throw DataError("invariants JSON: bispectrum must have L rows");
  est.bispectrum_est.resize(L, L);
  for (long k1 = 0; k1 < L; ++k1) {
    const auto row = bs.at(k1).get<std::vector<double>>();
    if (static_cast<long>(row.size()) != 2 * L) throw DataError("invariants JSON: bispectrum rows need 2L entries");
    for (long k2 = 0; k2 < L; ++k2) est.bispectrum_est(k1, k2) = Complex(row[2 * k2], row[2 * k2 + 1]);
  }
  return est;
}

inline void write_power_spectrum_csv(std::ostream& os, const RealVector& ps) {
  os << "k,power\n" << std::setprecision(17);
  for (Eigen::Index k = 0; k < ps.size(); ++k) os << k << ',' << ps[k] << '\n';
}

// ---------------------------------------------------------------------------
// Files

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open " + path.string());
  return json::parse(in);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write " + path.string());
  out << text;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

// Power spectrum from a JSON array, a JSON object with "power_spectrum",
// a CSV of (k, power) rows, or a single-column CSV.
inline RealVector read_power_spectrum(const std::filesystem::path& path) {
  if (path.extension() == ".json") {
    const json j = read_json_file(path);
    if (j.is_array()) return from_std(j.get<std::vector<double>>());
    return from_std(j.at("power_spectrum").get<std::vector<double>>());
  }
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open " + path.string());
  std::vector<double> ps;
  for (const auto& row : read_numeric_csv(in)) ps.push_back(row.back());
  return from_std(ps);
}

inline ObservationSet read_observations(const std::filesystem::path& path, double sigma = 0.0) {
  if (path.extension() == ".csv") {
    std::ifstream in(path);
    if (!in) throw ParameterError("cannot open " + path.string());
    return read_observations_csv(in, sigma);
  }
  return observations_from_json(read_json_file(path));
}

}  // namespace smra::io

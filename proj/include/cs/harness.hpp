#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cs/lasso.hpp"
#include "cs/model.hpp"
#include "cs/operators.hpp"
#include "cs/replica.hpp"
#include "cs/spectrum.hpp"

namespace cs {

enum class OutputFormat { CSV, JSON };

struct ExperimentConfig {
  EnsembleSpec ensemble;
  std::string ensemble_id = "ensemble";
  SignalPrior prior;
  double sigma0_sq = 1e-2;
  std::vector<double> lambda_grid = {0.1};  // single entry = scalar lambda
  int trials = 2000;
  uint64_t master_seed = 1;
  std::vector<int> n_grid;  // base sizes for extrapolation
  std::string output_path;
  OutputFormat format = OutputFormat::CSV;
  LassoConfig lasso;  // lambda is taken from lambda_grid per run
  int threads = 0;    // 0 = hardware concurrency
};

struct ExperimentRecord {
  std::string ensemble_id;
  double mu = 0, nu = 0, lambda = 0, sigma0_sq = 0, rho_x = 0;
  double theory_db = 0, empirical_db = 0, stderr_db = 0;
  int trials = 0, n = 0;
  bool theory_converged = false;
  double wall_time_s = 0;
};

ReplicaSpec replica_spec_for(const EnsembleSpec& ensemble, double lambda,
                             double sigma0_sq, double rho_x);

// Replica prediction only; no Monte Carlo fields populated.
ExperimentRecord predict(const ExperimentConfig& config, double lambda);

// Monte Carlo average over independent per-trial seed streams; empirical dB
// is 10 log10(mean mse), stderr propagated to dB.
ExperimentRecord simulate(const ExperimentConfig& config, double lambda);

// Theory + Monte Carlo per lambda in the grid.
std::vector<ExperimentRecord> run_table(const ExperimentConfig& config);

struct SweepResult {
  std::vector<ExperimentRecord> records;
  double argmin_lambda = 0;
  double min_theory_db = 0;
};

// Theory across the lambda grid (empirical optional via with_empirical).
SweepResult sweep_lambda(const ExperimentConfig& config,
                         bool with_empirical = false);

struct ExtrapolationResult {
  std::vector<double> coeffs;  // dB = c0 + c1/N + c2/N^2
  double intercept_db = 0;
  double theory_db = 0;
  double gap_db = 0;
  std::vector<ExperimentRecord> points;
};

// Quadratic fit of empirical MSE (dB) against 1/N over config.n_grid.
ExtrapolationResult extrapolate_n(const ExperimentConfig& config);

// Fit only; exposed for the synthetic-data exactness check.
std::vector<double> fit_quadratic_in_inv_n(const std::vector<double>& n,
                                           const std::vector<double>& value);

struct SpectrumReport {
  SpectralDensity law;
  std::vector<double> eigenvalues;
  double ks = 0, l1 = 0;
};

SpectrumReport spectrum_report(const EnsembleSpec& ensemble, uint64_t seed);

// serialization
std::string records_to_csv(const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> records_from_csv(const std::string& csv);
std::string records_to_json(const std::vector<ExperimentRecord>& records);
void write_records(const std::vector<ExperimentRecord>& records,
                   const std::string& path, OutputFormat format);

// canonical JSON config schema (documented in the README); throws on
// malformed input
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig config_from_file(const std::string& path);

}  // namespace cs

#ifndef XCFLAB_EXPERIMENT_HPP
#define XCFLAB_EXPERIMENT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>

#include "xcflab/flow_engine.hpp"
#include "xcflab/linearization.hpp"

namespace xcflab {

/// Orchestration configuration: flat key=value config file plus command-line
/// overrides; all numeric fields are validated against module preconditions
/// before any computation.
struct ExperimentConfig {
  std::string command;          ///< simulate | linearize | verify | rescale-check | spectrum
  std::string flow = "kxcf";
  double K = -1.0;
  double perturb = 0.0;
  std::uint64_t seed = 0;
  double t_end = 6.0;
  double tol = 1e-12;
  int grid_n = 33;
  double grid_l = 0.5;
  int cases = 10;               ///< number of seeded cases for sweep commands
  std::string suite = "koiso";  ///< verify sub-suite
  std::string out_csv;          ///< trajectory CSV path; empty = skip
  std::string out_json;         ///< summary JSON path; empty = stdout
  double lam[6] = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0}; ///< 11,22,33,12,13,23
};

/// Reads `key=value` lines into an existing config (unknown keys rejected).
void load_config_file(const std::string& path, ExperimentConfig& cfg);
/// Applies one `key=value` override.
void apply_config_entry(const std::string& key, const std::string& value,
                        ExperimentConfig& cfg);

/// Exit statuses of run_experiment.
enum ExitStatus : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitRegime = 3,
  kExitNumerical = 4,
};

/// Runs the configured experiment, writing CSV/JSON artifacts. Errors are
/// reported as machine-readable JSON on the diagnostic stream.
int run_experiment(const ExperimentConfig& cfg, std::ostream& out,
                   std::ostream& diag);

/// Seeded symmetric matrix with unit Frobenius norm (the perturbation spec).
Mat3 seeded_unit_perturbation(std::uint64_t seed);

/// Worker count: min(requested, XCFLAB_THREADS) with a hardware fallback.
int worker_count(int requested);

/// Writes the trajectory CSV (17 significant digits, '.' decimal):
/// t, g11,g22,g33,g12,g13,g23, a,b,c, j_density, effvol_density, y_norm,
/// deviation.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

} // namespace xcflab

#endif

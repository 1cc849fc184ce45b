#pragma once

#include <armadillo>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "panelbreak/breakci.hpp"
#include "panelbreak/ftests.hpp"
#include "panelbreak/panel.hpp"
#include "panelbreak/types.hpp"

namespace panelbreak {

// Factor-augmented panel generator. Regressors load on the common factors,
// so defactoring is genuinely load-bearing in every experiment. All marginal
// standard deviations are held fixed when AR coefficients change, keeping
// signal-to-noise bookkeeping simple.
struct DgpSpec {
  int n_units = 100;
  int n_periods = 50;
  int p_x = 2;
  int p_w = 2;
  int m = 2;  // unobserved factor count

  BreakSet breaks;  // true dates
  arma::vec beta;   // p_x
  arma::mat delta;  // (k+1) x p_w

  arma::vec gamma_mean;  // m, outcome loadings center; gamma_i = mean + noise
  double gamma_sd = 1.0;
  arma::mat gx_mean;  // m x p_x loading centers
  arma::mat gw_mean;  // m x p_w
  double loading_sd = 1.0;

  double factor_mean = 0.0;
  double factor_sd = 1.0;
  double factor_ar = 0.0;

  double eps_sd = 1.0;  // idiosyncratic error in y
  double eps_ar = 0.0;
  double u_sd = 1.0;  // regressor-specific noise
  double u_ar = 0.0;
  double hetero = 0.0;  // in [0,1]: unit error scale 1 + hetero*(U_i - 1/2)

  std::uint64_t seed = 1;

  void validate() const;

  // Full-rank loading centers, unit coefficients, no breaks. Callers adjust
  // fields afterwards.
  static DgpSpec basic(int n_units, int n_periods, int p_x, int p_w, int m);
};

struct TruthRecord {
  BreakSet breaks;
  arma::vec beta;
  arma::mat delta;
};

// Estimation code never sees TruthRecord; only experiment scoring does.
struct GeneratedPanel {
  PanelDataset data;
  TruthRecord truth;
};

GeneratedPanel generate(const DgpSpec& spec);

enum class ExperimentKind { size, power, hit_rate, khat, coverage };

ExperimentKind experiment_kind_from(const std::string& name);
std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::size;
  DgpSpec dgp;  // per-replication seed derived from dgp.seed and the index
  int reps = 1000;
  TestOptions test;             // trimming, bandwidth, table, levels
  std::string test_kind = "supf";  // size/power: supf | wdmax | seqf
  int k_test = 1;               // supf: k; wdmax: k_max
  double alpha = 0.05;
  int k_cap = 5;  // khat stage cap
  int threads = 1;
};

struct McReport {
  std::string kind;
  int reps = 0;
  int failures = 0;
  double rate = 0.0;     // rejection / exact hit / joint coverage / correct k
  double rate_se = 0.0;  // sqrt(p(1-p)/n) over completed replications
  std::map<std::string, double> extras;
  std::vector<double> per_seed;  // outcome per replication, NaN on failure
  std::vector<std::string> failure_samples;  // first few error messages
};

McReport run_experiment(const ExperimentConfig& cfg);

}  // namespace panelbreak

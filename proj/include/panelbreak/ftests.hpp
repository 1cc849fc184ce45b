#pragma once

#include <string>
#include <vector>

#include "panelbreak/critval.hpp"
#include "panelbreak/dp_search.hpp"
#include "panelbreak/hac.hpp"
#include "panelbreak/panel.hpp"
#include "panelbreak/types.hpp"

namespace panelbreak {

struct TestOptions {
  TrimmingSpec trim;
  HacSpec hac;
  bool breaking_constant = false;
  std::vector<double> levels = {0.10, 0.05, 0.01};
  const CriticalValueTable* table = nullptr;  // null: embedded table
  bool unit_weights = false;                  // max test only
  int max_iter = 10;
  int multi_start = 0;
  std::uint64_t seed = 0;
};

struct TestReport {
  std::string kind;  // "fstat", "supf", "wdmax", "seqf"
  int k = 0;         // fstat/supf: breaks under test; seqf: null count; wdmax: k_max
  double statistic = 0.0;
  std::vector<double> levels;
  std::vector<double> critical_values;  // aligned with levels
  // exact for known dates; interpolated from the tabulated limit law for
  // supf/seqf; unavailable (NaN) for the max test
  double p_value = 0.0;
  BreakSet breaks;  // dates the statistic was computed at (seqf: the null set)
  int dof_num = 0, dof_den = 0;
  int bandwidth = 0;
  std::string cv_source;

  // max-test detail
  std::vector<double> per_k_stats;           // supF(k), k = 1..k_max
  std::vector<BreakSet> per_k_breaks;        // argmin dates per k
  std::vector<std::vector<double>> weights;  // per level, aligned with per_k_stats
  std::vector<double> statistics_by_level;   // per level: max_k w_k supF(k)
  bool unit_weights = false;

  // seqf detail: maximizing insertion
  int insert_regime = 0;  // 1-based regime the new date falls in; 0 when n/a
  int insert_date = 0;
  int candidates_scanned = 0;
};

// Known break dates: exact F test with an F reference distribution. Dates
// bypass the trimming floor; estimability alone decides feasibility.
TestReport f_known(const PanelDataset& data, const BreakSet& breaks, const TestOptions& opts);

// k estimated by least squares, statistic evaluated at the estimated dates,
// critical values from the tabulated limit law.
TestReport sup_f(const PanelDataset& data, int k, const TestOptions& opts);

// Max over k = 1..k_max of weighted supF(k); level-matched weights by default,
// unit weights when opts.unit_weights is set.
TestReport wdmax_f(const PanelDataset& data, int k_max, const TestOptions& opts);

// k+1 versus k: best single insertion into any regime of the null break set,
// each candidate refit jointly. Critical values come from the order-statistic
// transform of the one-break limit law.
TestReport seq_f(const PanelDataset& data, const BreakSet& null_breaks, const TestOptions& opts);

// Same, with the null dates estimated at the given count first.
TestReport seq_f_at(const PanelDataset& data, int k_null, const TestOptions& opts);

struct KhatStage {
  int k_null = 0;
  TestReport test;
  double alpha_cv = 0.0;
  bool rejected = false;
  BreakSet breaks_after;
  std::string note;
};

struct KhatReport {
  int k_hat = 0;
  bool truncated = false;  // still rejecting when the cap was reached
  double alpha = 0.0;
  BreakSet breaks;  // accumulated insertion dates
  std::vector<KhatStage> stages;
};

// Sequential break count selection: test 0 vs 1, insert the maximizing date
// on rejection, repeat until acceptance or k_cap.
KhatReport estimate_num_breaks(const PanelDataset& data, int k_cap, double alpha,
                               const TestOptions& opts);

// Difference contrast: row block j maps to delta_{j+1} - delta_j.
arma::mat difference_contrast(int k, int p_w);

}  // namespace panelbreak

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "panelbreak/types.hpp"

namespace panelbreak {

struct CvProvenance {
  std::string source = "simulated";  // "embedded", "simulated", or a file path
  std::uint64_t seed = 0;
  int reps = 0;
  int grid = 0;
  std::string generated;  // ISO date of the generating run
};

struct SupLimitEntry {
  int p_w = 0;
  double epsilon = 0.0;
  int k = 0;
  std::vector<double> probs;      // ascending
  std::vector<double> quantiles;  // same length
  std::vector<double> se;         // sectioning standard errors (may be empty)
};

struct MaxTestEntry {
  int p_w = 0;
  double epsilon = 0.0;
  int k_max = 0;
  double level = 0.0;
  bool unit_weights = false;
  double value = 0.0;
  double se = 0.0;
};

class CriticalValueTable {
public:
  std::vector<SupLimitEntry> sup_entries;
  std::vector<MaxTestEntry> max_entries;
  CvProvenance provenance;

  bool has_sup(int p_w, double eps, int k) const;
  // Interpolated quantile of the k-break sup statistic's limit law.
  double sup_quantile(int p_w, double eps, int k, double prob) const;
  // Approximate CDF at x (inverse interpolation); clamped to the prob grid.
  double sup_prob(int p_w, double eps, int k, double x) const;
  double supf_cv(int p_w, double eps, int k, double alpha) const;
  // Order-statistic transform of the one-break quantile function.
  double seqf_cv(int p_w, double eps, int k_null, double alpha) const;
  double wdmax_cv(int p_w, double eps, int k_max, double alpha, bool unit_weights) const;
  // Level-matched weight c(alpha,1)/c(alpha,k).
  double wdmax_weight(int p_w, double eps, int k, double alpha) const;

  void merge(const CriticalValueTable& other);  // other's entries replace clashes

  void write_csv(std::ostream& out) const;
  static CriticalValueTable read_csv(std::istream& in, const std::string& origin);
  static CriticalValueTable read_csv_file(const std::string& path);

  static const CriticalValueTable& embedded();
};

struct CvSimRequest {
  int p_w = 1;
  double epsilon = 0.15;
  int k_max = 1;
  int reps = 100000;
  int grid = 2000;
  std::uint64_t seed = 20260815;
  int threads = 1;
  std::vector<double> levels = {0.10, 0.05, 0.01};  // max-test levels
};

CriticalValueTable simulate_critical_values(const CvSimRequest& req);

// One replication of the limit sup statistics for k = 1..k_max; exposed for
// cross-checks against direct enumeration on coarse grids.
std::vector<double> simulate_sup_limit_once(int p_w, double epsilon, int k_max, int grid,
                                            std::uint64_t seed, std::uint64_t rep);

}  // namespace panelbreak

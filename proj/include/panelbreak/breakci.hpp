#pragma once

#include <cstdint>
#include <vector>

#include "panelbreak/hac.hpp"
#include "panelbreak/panel.hpp"
#include "panelbreak/types.hpp"

namespace panelbreak {

// Monte Carlo bank of (max, argmax) pairs of the one-sided process
// B(u) - u/2 on [0, horizon]. The two-sided argmax limit for a break date
// splits into two independent one-sided problems: the left branch is the
// process itself, the right branch is the same process with its height scaled
// by h and its clock by c. One bank therefore serves every (h, c) exactly,
// with no parameter grid.
struct ArgmaxBankSpec {
  int n_pairs = 100000;
  double step = 0.05;
  double horizon = 100.0;  // argmax mass beyond this is negligible
  std::uint64_t seed = 0xb5ca8a7c16a9d3efULL;
  int threads = 1;
};

class ArgmaxBank {
public:
  static ArgmaxBank simulate(const ArgmaxBankSpec& spec);

  // Quantile of the signed two-sided argmax: -U_L when the left max wins
  // (M_L > h M_R), c U_R otherwise.
  double argmax_quantile(double h, double c, double prob) const;
  double argmax_cdf(double h, double c, double x) const;

  int n_pairs() const { return static_cast<int>(ml_.size()); }
  const ArgmaxBankSpec& spec() const { return spec_; }

private:
  std::vector<double> ml_, ul_, mr_, ur_;
  ArgmaxBankSpec spec_;
};

// Process-wide bank with default spec; built on first use.
const ArgmaxBank& shared_argmax_bank(int threads_hint = 1);

struct BreakInterval {
  int break_index = 0;  // 1-based position in the break set
  int date = 0;
  int lower = 0, upper = 0;  // clamped to [1, T]
  int half_width = 0;        // floor(c_alpha * scale)
  double xi = 0.0, phi1 = 0.0, phi2 = 0.0;
  double scale = 0.0;  // D'Phi_j D / (N (D'Omega_j D)^2)
  double c_alpha = 0.0;
};

struct ConfidenceOptions {
  double alpha = 0.05;
  HacSpec hac;
  bool breaking_constant = false;
  const ArgmaxBank* bank = nullptr;  // null: shared bank
  int threads = 1;
};

// Symmetric interval around each estimated date; the width is driven by the
// pre-break moment matrices and the (1 - alpha/2) percentile of the argmax
// law with the estimated asymmetry plugged in.
std::vector<BreakInterval> break_confidence(const PanelDataset& data, const BreakSet& breaks,
                                            const ConfidenceOptions& opts);

}  // namespace panelbreak

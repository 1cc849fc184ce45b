#pragma once

#include <armadillo>

#include "panelbreak/defactor.hpp"
#include "panelbreak/types.hpp"

namespace panelbreak {

struct FitResult {
  arma::vec beta;              // p_x, coefficients held fixed across regimes
  arma::mat delta;             // (k+1) x p_w, one row per regime
  arma::mat delta_increments;  // k x p_w, row j = delta[j+1] - delta[j]
  double ssr = 0.0;
  arma::mat residuals;   // T x N
  arma::cube checked_w;  // T x (k+1)p_w x N, breaking block after netting out x
  arma::mat gram_ww;     // sum_i checked_w_i' checked_w_i
  BreakSet breaks;
  int n_units = 0, n_periods = 0, p_x = 0, p_w = 0;

  int n_regimes() const { return static_cast<int>(breaks.size()) + 1; }
  arma::vec delta_stacked() const;  // (k+1)p_w, regime-major
};

// Pooled least squares on the defactored panel: regime coefficients first,
// stable coefficients recovered from the complementary normal equations.
FitResult fit(const DefactoredPanel& panel);

// Convenience: averages + projection + fit with the standard final layout.
FitResult fit_at(const PanelDataset& data, const BreakSet& breaks, bool breaking_constant);

}  // namespace panelbreak

#pragma once

#include <armadillo>
#include <string>
#include <vector>

#include "panelbreak/panel.hpp"
#include "panelbreak/types.hpp"

namespace panelbreak {

enum class col_mode { none, pooled, partitioned };

// Column selection for the projection basis. Partitioned blocks get one copy
// of their columns per regime, supported on that regime's rows only.
struct AverageLayout {
  col_mode x = col_mode::pooled;
  col_mode w = col_mode::partitioned;
  col_mode observed = col_mode::pooled;
  col_mode constant = col_mode::none;  // partitioned = regime intercepts
};

struct AverageBlock {
  arma::mat zbar;                        // T x q
  std::vector<std::string> col_labels;   // q
  BreakSet breaks;
  int q() const { return static_cast<int>(zbar.n_cols); }
};

struct RankDiagnostics {
  int rank = 0;
  int q = 0;
  double rcond_gram = 0.0;  // squared singular-value ratio of the basis
  bool full_rank = false;
  bool ill_conditioned = false;  // rcond_gram below the warning threshold
  std::vector<std::string> dependent_columns;
};

struct DefactoredPanel {
  arma::mat y;   // T x N, projected
  arma::cube x;  // T x p_x x N, projected
  arma::cube w;  // T x (k+1)p_w x N, regime-expanded then projected
  BreakSet breaks;
  int p_w_base = 0;
  RankDiagnostics diagnostics;

  int n_units() const { return static_cast<int>(y.n_cols); }
  int n_periods() const { return static_cast<int>(y.n_rows); }
  int p_x() const { return static_cast<int>(x.n_cols); }
  int n_regimes() const { return static_cast<int>(breaks.size()) + 1; }
};

// Cross-sectional averages of the regressor blocks (outcome excluded).
arma::mat average_x(const PanelDataset& data);  // T x p_x
arma::mat average_w(const PanelDataset& data);  // T x p_w

// Spread a T x p series into T x (k+1)p regime-partitioned columns.
arma::mat partition_columns(const arma::mat& series, const BreakSet& breaks);

AverageBlock build_averages(const PanelDataset& data, const BreakSet& breaks,
                            const AverageLayout& layout);

RankDiagnostics check_rank(const AverageBlock& avg);

// Orthonormal basis of span(zbar); throws on conditioning failure per policy.
arma::mat projection_basis(const AverageBlock& avg, RankDiagnostics* diag_out = nullptr);

// Residual after projecting the columns of a on the orthonormal basis.
inline arma::mat annihilate(const arma::mat& basis, const arma::mat& a) {
  if (basis.n_cols == 0) return a;
  return a - basis * (basis.t() * a);
}

DefactoredPanel project(const PanelDataset& data, const AverageBlock& avg, const BreakSet& breaks);

}  // namespace panelbreak

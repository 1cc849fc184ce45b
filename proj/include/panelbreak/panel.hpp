#pragma once

#include <armadillo>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "panelbreak/types.hpp"

namespace panelbreak {

// Balanced panel in long-to-wide form: time runs down the rows, units across
// slices. Observed common factors are shared by all units.
struct PanelDataset {
  arma::mat y;         // T x N
  arma::cube x;        // T x p_x x N, regressors with stable coefficients
  arma::cube w;        // T x p_w x N, regressors whose coefficients may break
  arma::mat observed;  // T x p_d observed common factors

  std::vector<std::string> unit_labels;    // N
  std::vector<std::string> period_labels;  // T
  std::vector<std::string> x_names, w_names, observed_names;

  int n_units() const { return static_cast<int>(y.n_cols); }
  int n_periods() const { return static_cast<int>(y.n_rows); }
  int p_x() const { return static_cast<int>(x.n_cols); }
  int p_w() const { return static_cast<int>(w.n_cols); }
  int p_observed() const { return static_cast<int>(observed.n_cols); }

  void validate() const;
};

struct PanelSchema {
  std::string unit_col;
  std::string period_col;
  std::string y_col;
  std::vector<std::string> x_cols;
  std::vector<std::string> w_cols;
  std::vector<std::string> observed_cols;
};

PanelDataset load_panel(std::istream& in, const PanelSchema& schema);
PanelDataset load_panel_file(const std::string& path, const PanelSchema& schema);
void write_panel(std::ostream& out, const PanelDataset& data, const PanelSchema& schema);

// Calls fn for every admissible break set of size k, in lexicographic order.
void enumerate_admissible(int n_periods, int k, const TrimmingSpec& trim,
                          const std::function<void(const BreakSet&)>& fn);

std::vector<BreakSet> collect_admissible(int n_periods, int k, const TrimmingSpec& trim);

std::size_t count_admissible(int n_periods, int k, const TrimmingSpec& trim);

}  // namespace panelbreak

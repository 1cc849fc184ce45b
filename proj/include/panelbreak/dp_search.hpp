#pragma once

#include <armadillo>
#include <cstdint>
#include <vector>

#include "panelbreak/estimator.hpp"
#include "panelbreak/panel.hpp"
#include "panelbreak/segments.hpp"
#include "panelbreak/types.hpp"

namespace panelbreak {

// Precomputed segment SSRs; entry (a,b) is +inf when the segment is shorter
// than the trimming floor or its regression is singular.
struct SegmentTable {
  arma::mat ssr;  // (T+1) x (T+1), 1-based [a][b]
  int n_periods = 0;
  int min_len = 0;
};

SegmentTable build_segment_table(const SegmentEngine& engine, int min_len);

struct PerKOptimum {
  BreakSet breaks;
  double ssr = 0.0;  // sum of segment SSRs under the search's defactoring
};

// Optimal partitions for every k' = 0..k. Ties resolve to the
// lexicographically smallest date vector (relative tolerance 1e-12).
std::vector<PerKOptimum> dp_minimize(const SegmentTable& table, int k);

struct SearchOptions {
  TrimmingSpec trim;
  bool breaking_constant = false;
  int max_iter = 10;
  int multi_start = 0;    // extra random initial break sets (stable-x models)
  std::uint64_t seed = 0; // drives multi_start draws only
};

struct SearchResult {
  BreakSet breaks;
  double ssr = 0.0;  // full-model SSR re-evaluated at `breaks`
  std::vector<PerKOptimum> per_k;
  bool converged = true;
  int iterations = 0;          // refinement passes after the initial search
  BreakSet previous_breaks;    // last iterate before stopping (diagnostics)
  FitResult fit;
};

SearchResult estimate_breaks(const PanelDataset& data, int k, const SearchOptions& opts);

// Basis series shared by the segment searches: breaking-regressor averages,
// stable-regressor averages when requested, observed factors, constant.
arma::mat search_basis_series(const PanelDataset& data, bool include_x, bool constant);

}  // namespace panelbreak

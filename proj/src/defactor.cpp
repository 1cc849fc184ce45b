#include "panelbreak/defactor.hpp"

#include <sstream>

namespace panelbreak {

arma::mat average_x(const PanelDataset& data) {
  arma::mat out(data.n_periods(), data.p_x(), arma::fill::zeros);
  for (int i = 0; i < data.n_units(); ++i) out += data.x.slice(i);
  return out / data.n_units();
}

arma::mat average_w(const PanelDataset& data) {
  arma::mat out(data.n_periods(), data.p_w(), arma::fill::zeros);
  for (int i = 0; i < data.n_units(); ++i) out += data.w.slice(i);
  return out / data.n_units();
}

arma::mat partition_columns(const arma::mat& series, const BreakSet& breaks) {
  const int T = static_cast<int>(series.n_rows);
  const int p = static_cast<int>(series.n_cols);
  const int R = static_cast<int>(breaks.size()) + 1;
  arma::mat out(T, static_cast<arma::uword>(R) * p, arma::fill::zeros);
  int j = 0;
  for (int t = 0; t < T; ++t) {
    while (j < static_cast<int>(breaks.size()) && t + 1 > breaks[j]) ++j;
    for (int c = 0; c < p; ++c) out(t, static_cast<arma::uword>(j) * p + c) = series(t, c);
  }
  return out;
}

namespace {

void append_block(arma::mat& z, std::vector<std::string>& labels, const arma::mat& block,
                  const std::string& stem, col_mode mode, const BreakSet& breaks) {
  if (mode == col_mode::none || block.n_cols == 0) return;
  const int p = static_cast<int>(block.n_cols);
  if (mode == col_mode::pooled) {
    z = arma::join_rows(z, block);
    for (int c = 0; c < p; ++c) labels.push_back(stem + "[" + std::to_string(c) + "]");
  } else {
    z = arma::join_rows(z, partition_columns(block, breaks));
    const int R = static_cast<int>(breaks.size()) + 1;
    for (int j = 0; j < R; ++j)
      for (int c = 0; c < p; ++c)
        labels.push_back(stem + "[r" + std::to_string(j + 1) + "][" + std::to_string(c) + "]");
  }
}

}  // namespace

AverageBlock build_averages(const PanelDataset& data, const BreakSet& breaks,
                            const AverageLayout& layout) {
  validate_breaks(breaks, data.n_periods());
  AverageBlock avg;
  avg.breaks = breaks;
  avg.zbar.set_size(data.n_periods(), 0);
  if (data.p_x() > 0)
    append_block(avg.zbar, avg.col_labels, average_x(data), "x_avg", layout.x, breaks);
  append_block(avg.zbar, avg.col_labels, average_w(data), "w_avg", layout.w, breaks);
  append_block(avg.zbar, avg.col_labels, data.observed, "factor", layout.observed, breaks);
  if (layout.constant != col_mode::none) {
    arma::mat ones(data.n_periods(), 1, arma::fill::ones);
    append_block(avg.zbar, avg.col_labels, ones, "const", layout.constant, breaks);
  }
  if (avg.q() == 0) fail_input("projection basis is empty: layout selects no columns");
  if (avg.q() >= data.n_periods())
    fail_infeasible("projection basis has " + std::to_string(avg.q()) +
                    " columns but only " + std::to_string(data.n_periods()) +
                    " periods; nothing would remain after defactoring");
  return avg;
}

RankDiagnostics check_rank(const AverageBlock& avg) {
  RankDiagnostics diag;
  diag.q = avg.q();
  arma::vec s = arma::svd(avg.zbar);
  const double smax = s.max();
  const double tol = std::max(avg.zbar.n_rows, avg.zbar.n_cols) * arma::datum::eps * smax;
  diag.rank = static_cast<int>(arma::sum(s > tol));
  diag.rcond_gram = smax > 0.0 ? (s.min() / smax) * (s.min() / smax) : 0.0;
  diag.full_rank = diag.rank == diag.q;
  diag.ill_conditioned = diag.rcond_gram < 1e-8;
  if (!diag.full_rank || diag.ill_conditioned) {
    // Pivoted QR flags the columns that add (almost) nothing to the span.
    arma::mat Q, R;
    arma::uvec P;
    if (arma::qr(Q, R, P, avg.zbar, "vector")) {
      const double rtol = 1e-7 * std::abs(R(0, 0));
      for (arma::uword i = 0; i < std::min(R.n_rows, R.n_cols); ++i)
        if (std::abs(R(i, i)) <= rtol) diag.dependent_columns.push_back(avg.col_labels[P(i)]);
      for (arma::uword i = R.n_rows; i < R.n_cols; ++i)
        diag.dependent_columns.push_back(avg.col_labels[P(i)]);
    }
  }
  return diag;
}

arma::mat projection_basis(const AverageBlock& avg, RankDiagnostics* diag_out) {
  RankDiagnostics diag = check_rank(avg);
  if (diag_out) *diag_out = diag;
  if (diag.rcond_gram < 1e-12) {
    std::ostringstream msg;
    msg << "cross-sectional average matrix is numerically singular (rcond "
        << diag.rcond_gram << "); dependent columns:";
    if (diag.dependent_columns.empty()) msg << " (none identified)";
    for (auto& c : diag.dependent_columns) msg << ' ' << c;
    fail_numeric(msg.str());
  }
  arma::mat Q, R;
  if (!arma::qr_econ(Q, R, avg.zbar)) fail_numeric("QR decomposition of the average matrix failed");
  return Q;
}

DefactoredPanel project(const PanelDataset& data, const AverageBlock& avg,
                        const BreakSet& breaks) {
  validate_breaks(breaks, data.n_periods());
  const int T = data.n_periods();
  const int N = data.n_units();
  const int pw = data.p_w();
  const int R = static_cast<int>(breaks.size()) + 1;

  DefactoredPanel out;
  arma::mat basis = projection_basis(avg, &out.diagnostics);
  out.breaks = breaks;
  out.p_w_base = pw;
  out.y.set_size(T, N);
  out.x.set_size(T, data.p_x(), N);
  out.w.set_size(T, static_cast<arma::uword>(R) * pw, N);

  for (int i = 0; i < N; ++i) {
    out.y.col(i) = annihilate(basis, data.y.col(i));
    if (data.p_x() > 0) out.x.slice(i) = annihilate(basis, data.x.slice(i));
    out.w.slice(i) = annihilate(basis, partition_columns(data.w.slice(i), breaks));
  }
  return out;
}

}  // namespace panelbreak

#include "panelbreak/estimator.hpp"

#include <algorithm>

namespace panelbreak {

arma::vec FitResult::delta_stacked() const {
  arma::vec out(static_cast<arma::uword>(delta.n_rows) * delta.n_cols);
  for (arma::uword j = 0; j < delta.n_rows; ++j)
    out.subvec(j * delta.n_cols, (j + 1) * delta.n_cols - 1) = delta.row(j).t();
  return out;
}

namespace {

// Smallest eigenvalue of the correlation-scaled Gram; guards collinearity.
void require_well_posed(const arma::mat& gram, const char* what) {
  arma::vec d = gram.diag();
  if (d.min() <= 0.0)
    fail_numeric(std::string(what) + ": a defactored regressor has no variation left");
  arma::vec s = 1.0 / arma::sqrt(d);
  arma::mat scaled = gram % (s * s.t());
  arma::vec eig = arma::eig_sym(scaled);
  if (eig.min() <= 1e-10)
    fail_numeric(std::string(what) +
                 ": defactored regressors are collinear (scaled Gram eigenvalue " +
                 std::to_string(eig.min()) + ")");
}

}  // namespace

FitResult fit(const DefactoredPanel& panel) {
  const int T = panel.n_periods();
  const int N = panel.n_units();
  const int px = panel.p_x();
  const int pw = panel.p_w_base;
  const int R = panel.n_regimes();
  const int dw = R * pw;

  const double dof = static_cast<double>(N) * (T - px - dw) - px - dw;
  if (dof <= 0)
    fail_infeasible("not enough observations: degrees of freedom " + std::to_string(dof));

  arma::mat a_xx(px, px, arma::fill::zeros), a_xw(px, dw, arma::fill::zeros);
  arma::mat a_ww(dw, dw, arma::fill::zeros);
  arma::vec a_xy(px, arma::fill::zeros), a_wy(dw, arma::fill::zeros);
  for (int i = 0; i < N; ++i) {
    const arma::mat& wi = panel.w.slice(i);
    a_ww += wi.t() * wi;
    a_wy += wi.t() * panel.y.col(i);
    if (px > 0) {
      const arma::mat& xi = panel.x.slice(i);
      a_xx += xi.t() * xi;
      a_xw += xi.t() * wi;
      a_xy += xi.t() * panel.y.col(i);
    }
  }

  FitResult out;
  out.breaks = panel.breaks;
  out.n_units = N;
  out.n_periods = T;
  out.p_x = px;
  out.p_w = pw;

  arma::mat coef_xw;  // a_xx^{-1} a_xw
  arma::vec coef_xy;
  if (px > 0) {
    require_well_posed(a_xx, "stable regressor block");
    coef_xw = arma::solve(a_xx, a_xw, arma::solve_opts::likely_sympd);
    coef_xy = arma::solve(a_xx, a_xy, arma::solve_opts::likely_sympd);
  }

  arma::mat gram = px > 0 ? arma::mat(a_ww - a_xw.t() * coef_xw) : a_ww;
  arma::vec rhs = px > 0 ? arma::vec(a_wy - a_xw.t() * coef_xy) : a_wy;
  // A regime short enough that the projection basis spans all of its rows
  // leaves a zero block at float-noise level: invisible after correlation
  // scaling, so compare each variable across regimes, where units agree.
  for (int c = 0; c < pw; ++c) {
    double top = 0.0;
    for (int j = 0; j < R; ++j) top = std::max(top, gram(j * pw + c, j * pw + c));
    for (int j = 0; j < R; ++j)
      if (gram(j * pw + c, j * pw + c) <= 1e-10 * top)
        fail_numeric("breaking regressor " + std::to_string(c + 1) +
                     " has no defactored variation left in regime " + std::to_string(j + 1));
  }
  require_well_posed(gram, "breaking regressor block");
  arma::vec delta = arma::solve(gram, rhs, arma::solve_opts::likely_sympd);

  out.gram_ww = gram;
  out.delta.set_size(R, pw);
  for (int j = 0; j < R; ++j)
    out.delta.row(j) = delta.subvec(static_cast<arma::uword>(j) * pw, (j + 1) * pw - 1).t();
  out.delta_increments.set_size(R - 1, pw);
  for (int j = 0; j + 1 < R; ++j)
    out.delta_increments.row(j) = out.delta.row(j + 1) - out.delta.row(j);

  if (px > 0)
    out.beta = coef_xy - coef_xw * delta;
  else
    out.beta.set_size(0);

  out.residuals.set_size(T, N);
  out.checked_w.set_size(T, dw, N);
  double ssr = 0.0;
  for (int i = 0; i < N; ++i) {
    arma::vec res = panel.y.col(i) - panel.w.slice(i) * delta;
    arma::mat wchk = panel.w.slice(i);
    if (px > 0) {
      res -= panel.x.slice(i) * out.beta;
      wchk -= panel.x.slice(i) * coef_xw;
    }
    out.residuals.col(i) = res;
    out.checked_w.slice(i) = wchk;
    ssr += arma::dot(res, res);
  }
  out.ssr = ssr;
  return out;
}

FitResult fit_at(const PanelDataset& data, const BreakSet& breaks, bool breaking_constant) {
  AverageLayout layout;
  layout.x = data.p_x() > 0 ? col_mode::pooled : col_mode::none;
  layout.w = col_mode::partitioned;
  layout.observed = data.p_observed() > 0 ? col_mode::pooled : col_mode::none;
  layout.constant = breaking_constant ? col_mode::partitioned : col_mode::none;
  AverageBlock avg = build_averages(data, breaks, layout);
  return fit(project(data, avg, breaks));
}

}  // namespace panelbreak

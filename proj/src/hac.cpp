#include "panelbreak/hac.hpp"

namespace panelbreak {

namespace {

// Bartlett-weighted long-run covariance of e_t * v_t over one index range.
// rows of v: T x p; lags truncated at the range length.
arma::mat bartlett_block(const arma::mat& resid, const arma::cube& v, int t0, int t1, int lag_cap,
                         double scale) {
  const int p = static_cast<int>(v.n_cols);
  const int N = static_cast<int>(v.n_slices);
  const int L = std::min(lag_cap, t1 - t0);
  arma::mat phi(p, p, arma::fill::zeros);
  for (int l = 0; l <= L; ++l) {
    arma::mat lam(p, p, arma::fill::zeros);
    for (int i = 0; i < N; ++i) {
      const arma::mat& vi = v.slice(i);
      for (int t = t0 + l; t <= t1; ++t)
        lam += (resid(t, i) * resid(t - l, i)) * (vi.row(t).t() * vi.row(t - l));
    }
    if (l == 0)
      phi += lam;
    else
      phi += (1.0 - static_cast<double>(l) / (L + 1)) * (lam + lam.t());
  }
  return phi * scale;
}

}  // namespace

CovarianceEstimate hac_covariance(const FitResult& fit, const HacSpec& spec) {
  const int T = fit.n_periods;
  const int N = fit.n_units;
  const int pw = fit.p_w;
  const int R = fit.n_regimes();
  const double nt = static_cast<double>(N) * T;

  CovarianceEstimate cov;
  cov.bandwidth = spec.resolve(T);
  if (cov.bandwidth < 0 || cov.bandwidth >= T)
    fail_input("HAC bandwidth must lie in [0, T-1], got " + std::to_string(cov.bandwidth));

  cov.omega = fit.gram_ww / nt;
  cov.phi = bartlett_block(fit.residuals, fit.checked_w, 0, T - 1, cov.bandwidth, 1.0 / nt);

  cov.min_eig_phi = arma::eig_sym(cov.phi).min();
  if (cov.min_eig_phi < -1e-10 * std::max(1.0, arma::trace(cov.phi)))
    fail_internal("long-run covariance lost positive semidefiniteness");

  arma::mat omega_inv = arma::inv_sympd(cov.omega);
  cov.vdelta = omega_inv * cov.phi * omega_inv;

  // Per-regime blocks: within regime j only that regime's p_w columns carry
  // the regressor, so restrict to the matching column block.
  int t0 = 0;
  for (int j = 0; j < R; ++j) {
    const int t1 = j < static_cast<int>(fit.breaks.size()) ? fit.breaks[j] - 1 : T - 1;
    const int len = t1 - t0 + 1;
    arma::cube block(len, pw, N);
    arma::mat resid(len, N);
    for (int i = 0; i < N; ++i) {
      block.slice(i) =
          fit.checked_w.slice(i).submat(t0, static_cast<arma::uword>(j) * pw, t1,
                                        (static_cast<arma::uword>(j) + 1) * pw - 1);
      resid.col(i) = fit.residuals.col(i).subvec(t0, t1);
    }
    const double scale = 1.0 / (static_cast<double>(N) * len);
    arma::mat om(pw, pw, arma::fill::zeros);
    for (int i = 0; i < N; ++i) om += block.slice(i).t() * block.slice(i);
    cov.omega_regime.push_back(om * scale);
    cov.phi_regime.push_back(
        bartlett_block(resid, block, 0, len - 1, std::min(cov.bandwidth, len - 1), scale));
    t0 = t1 + 1;
  }
  return cov;
}

}  // namespace panelbreak
